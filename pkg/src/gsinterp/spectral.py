"""Dense real symmetric linear algebra for the graph Fourier machinery.

Everything here works on plain float64 numpy arrays. Eigendecompositions
are delegated to LAPACK (tridiagonalization + implicit QR / divide and
conquer), which is the right tool at desk scale (n up to a couple of
thousand); on top of that this module pins down a deterministic sign
convention and verifies the decomposition actually reproduces its input.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

# Relative Frobenius tolerance a decomposition must meet before it is
# handed back to callers.
RECONSTRUCTION_TOL = 1e-8


def as_symmetric(m):
    """Validate and return ``m`` as a dense symmetric float64 matrix.

    Raises ValueError if ``m`` is not square, not finite, or not symmetric.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValueError("matrix must be at least 1x1")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if not np.array_equal(a, a.T):
        # Accept tiny asymmetries from upstream arithmetic, reject real ones.
        scale = max(float(np.abs(a).max()), 1.0)
        if float(np.abs(a - a.T).max()) > 1e-12 * scale:
            raise ValueError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
    return a


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues sorted ascending.

    ``eigenvectors`` is orthogonal with column i belonging to
    ``eigenvalues[i]``. Each column is sign-fixed so that its first
    component of non-negligible magnitude is positive, which makes the
    decomposition reproducible bit-for-bit on identical input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self):
        return self.eigenvalues.shape[0]


def _fix_signs(vectors):
    """Flip eigenvector columns so the first nonzero component is positive."""
    v = vectors.copy()
    n = v.shape[0]
    # Treat components below this relative floor as zero when picking the
    # sign anchor; exact zeros are rare, rounding noise is not.
    floors = 1e-12 * np.abs(v).max(axis=0)
    for j in range(v.shape[1]):
        col = v[:, j]
        idx = np.flatnonzero(np.abs(col) > floors[j])
        anchor = idx[0] if idx.size else 0
        if col[anchor] < 0:
            v[:, j] = -col
    return v


def sym_eigen(m):
    """Full eigendecomposition of a symmetric matrix.

    Returns an :class:`EigenDecomposition` with ascending eigenvalues and a
    deterministic sign convention. Raises :class:`NumericalError` if LAPACK
    fails to converge or the decomposition does not reconstruct the input
    to ``RECONSTRUCTION_TOL`` in relative Frobenius norm.
    """
    a = as_symmetric(m)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed to converge: {exc}") from exc
    v = _fix_signs(v)

    recon = (v * w) @ v.T
    denom = max(float(np.linalg.norm(a)), 1.0)
    residual = float(np.linalg.norm(recon - a)) / denom
    if residual > RECONSTRUCTION_TOL:
        raise NumericalError(
            f"eigendecomposition residual {residual:.3e} exceeds {RECONSTRUCTION_TOL:.0e}",
            residual=residual,
        )
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def matvec(m, v):
    """Dense symmetric matrix - vector product with dimension checks."""
    a = np.asarray(m, dtype=np.float64)
    x = np.asarray(v, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if x.ndim != 1 or x.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: matrix {a.shape}, vector {x.shape}")
    return a @ x
