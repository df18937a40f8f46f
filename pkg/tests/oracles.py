"""Independent reference computations the tests check the library against.

Each oracle takes a route disjoint from the implementation it validates:
characteristic-polynomial roots instead of a symmetric eigensolver, full
mask enumeration instead of Monte Carlo, dense matrix formulas instead of
elementwise updates, direct least squares instead of iteration.
"""

import itertools

import numpy as np


def charpoly_eigenvalues(a):
    """Eigenvalues via Faddeev-LeVerrier coefficients and polynomial roots.

    Exact-arithmetic recurrence for the characteristic polynomial, then
    numpy.roots (companion-matrix general eigenvalues, a different LAPACK
    path than the symmetric solver under test). Only sensible for tiny n.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    roots = np.roots(coeffs)
    assert np.abs(roots.imag).max() < 1e-8
    return np.sort(roots.real)


def enumerate_subsample_stats(f, vectors, p):
    """Exact mean spectrum and trace variance over all 2^n Bernoulli masks."""
    f = np.asarray(f, dtype=np.float64)
    n = f.shape[0]
    fhat = vectors.T @ f
    mean = np.zeros(n)
    trace_var = 0.0
    for bits in itertools.product([0, 1], repeat=n):
        mask = np.array(bits, dtype=bool)
        weight = p ** mask.sum() * (1 - p) ** (n - mask.sum())
        spec = vectors.T @ np.where(mask, f, 0.0)
        mean += weight * spec
        dev = spec - p * fhat
        trace_var += weight * float(dev @ dev)
    return mean, trace_var


def dense_update_step(f_k, f_s, mask, vectors, t, lam):
    """The recursion written as literal dense matrix algebra."""
    n = f_k.shape[0]
    s = np.diag(np.asarray(mask, dtype=np.float64))
    fhat = vectors.T @ f_k
    thresholded = np.where(np.abs(fhat) >= t, fhat, 0.0)
    g = vectors @ thresholded
    return (np.eye(n) - lam * s) @ g + lam * (s @ np.asarray(f_s, dtype=np.float64))


def support_least_squares(f_samples, mask, vectors, support):
    """Best signal on a fixed spectral support fitting the known samples."""
    a = vectors[mask][:, support]
    c, *_ = np.linalg.lstsq(a, f_samples[mask], rcond=None)
    return vectors[:, support] @ c


def lowband_least_squares(f_samples, mask, vectors, cutoff):
    """Best bandlimited signal fitting the known samples."""
    return support_least_squares(f_samples, mask, vectors, np.arange(cutoff))
