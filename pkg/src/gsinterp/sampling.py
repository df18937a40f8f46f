"""Vertex sampling masks and the statistics of Bernoulli subsampling.

Masks are boolean vectors (True = value known). They stand in for the
diagonal 0/1 selection matrix, but every multiplication by that matrix is
carried out as an elementwise select, never as a dense matrix product.

Randomness comes from the counter-based Philox generator keyed through
``numpy.random.SeedSequence``, so masks are reproducible across platforms
and trial streams can be derived independently as (master_seed, trial).
"""

import numpy as np


def derive_rng(*keys):
    """Philox generator keyed by an integer tuple such as (seed, trial).

    SeedSequence hashes the key tuple, so streams for different tuples are
    independent and any one tuple always yields the same stream.
    """
    for k in keys:
        if int(k) < 0:
            raise ValueError(f"seed components must be non-negative, got {k}")
    ss = np.random.SeedSequence([int(k) for k in keys])
    return np.random.Generator(np.random.Philox(ss))


def bernoulli_mask(n, p, seed_or_rng):
    """Boolean mask with independent Bernoulli(p) entries.

    ``seed_or_rng`` is either an integer master seed or an already-derived
    generator (so callers looping over trials can pass per-trial streams).
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"sampling rate p must be in (0, 1], got {p}")
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else derive_rng(seed_or_rng)
    return rng.random(n) < p


def subsample(f, mask):
    """Zero out signal values at vertices the mask marks as unknown."""
    x = np.asarray(f, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if x.shape != m.shape:
        raise ValueError(f"signal {x.shape} and mask {m.shape} lengths differ")
    return np.where(m, x, 0.0)


def empirical_subsample_stats(f, basis, p, trials, seed, chunk=2048):
    """Monte Carlo mean and spread of the subsampled spectrum.

    Draws ``trials`` fresh Bernoulli(p) masks (stream t derived from
    (seed, t)), transforms each subsampled signal, and returns

    - the componentwise mean of the subsampled spectra, and
    - the mean squared deviation of those spectra from p times the full
      spectrum (the trace of the deviation outer product).

    Trials are processed in chunks purely for speed; sums are accumulated
    in trial order so the result is independent of chunk size.
    """
    from .graph import gft  # local import to avoid a module cycle

    if trials < 1:
        raise ValueError("trials must be >= 1")
    x = np.asarray(f, dtype=np.float64)
    fhat = gft(basis, x)
    target = p * fhat
    n = x.shape[0]

    sum_spec = np.zeros(n)
    sum_sqdev = 0.0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        block = np.empty((m, n))
        for i in range(m):
            rng = derive_rng(seed, done + i)
            block[i] = np.where(rng.random(n) < p, x, 0.0)
        spectra = block @ basis.vectors  # row t is the GFT of trial t
        sum_spec += spectra.sum(axis=0)
        dev = spectra - target
        sum_sqdev += float((dev * dev).sum())
        done += m

    return sum_spec / trials, sum_sqdev / trials
