"""Synthetic spectrally sparse signals and reconstruction metrics."""

import math
from dataclasses import dataclass

import numpy as np

from .graph import gft, igft
from .sampling import derive_rng


@dataclass(frozen=True)
class SparseSpec:
    """k = number of retained GFT components; seed fixes the random draw."""

    k: int
    seed: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def make_k_sparse(basis, spec):
    """Random signal with exactly k nonzero GFT components.

    Vertex values are drawn iid uniform on (0, 1), projected to the GFT
    domain, and all but the k largest-magnitude components are zeroed
    (magnitude ties keep the lower frequency index); the result is the
    inverse transform. Deterministic per (basis, spec).
    """
    if spec.k > basis.n:
        raise ValueError(f"k={spec.k} exceeds graph size {basis.n}")
    rng = derive_rng(spec.seed)
    raw = rng.random(basis.n)
    fhat = gft(basis, raw)
    # Stable sort on (-|coef|, index): equal magnitudes keep lower index.
    order = np.argsort(-np.abs(fhat), kind="stable")
    keep = order[: spec.k]
    sparse = np.zeros_like(fhat)
    sparse[keep] = fhat[keep]
    return igft(basis, sparse)


def snr(reference, estimate):
    """Reconstruction signal-to-noise ratio ||f||^2 / ||f - f_est||^2.

    Returns (ratio, dB). A perfect reconstruction yields (inf, inf) so that
    aggregation code can skip and count it rather than trip on a division.
    A zero reference signal has no defined SNR and raises.
    """
    f = np.asarray(reference, dtype=np.float64)
    e = np.asarray(estimate, dtype=np.float64)
    if f.shape != e.shape:
        raise ValueError(f"shapes differ: {f.shape} vs {e.shape}")
    num = float(f @ f)
    if num == 0.0:
        raise ValueError("SNR is undefined for a zero reference signal")
    diff = f - e
    den = float(diff @ diff)
    if den == 0.0:
        return math.inf, math.inf
    ratio = num / den
    return ratio, 10.0 * math.log10(ratio)


def mse(reference, estimate):
    """Mean of squared componentwise differences."""
    f = np.asarray(reference, dtype=np.float64)
    e = np.asarray(estimate, dtype=np.float64)
    if f.shape != e.shape:
        raise ValueError(f"shapes differ: {f.shape} vs {e.shape}")
    diff = f - e
    return float(diff @ diff) / f.shape[0]
