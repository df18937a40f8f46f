"""Sparsity-promoting interpolation of graph signals.

The core reconstruction lives in :mod:`gsinterp.imatgi`; graph and GFT
machinery in :mod:`gsinterp.graph` and :mod:`gsinterp.spectral`; sampling
masks and their statistics in :mod:`gsinterp.sampling`; reference
interpolators in :mod:`gsinterp.baselines`; synthetic signal generation
and metrics in :mod:`gsinterp.signals`; the recommendation benchmark in
:mod:`gsinterp.recsys`; batch experiment drivers in
:mod:`gsinterp.experiments`; the CLI in :mod:`gsinterp.cli`.
"""

from .errors import DataError, NumericalError
from .graph import (
    GftBasis,
    Graph,
    gft,
    gft_basis,
    igft,
    make_graph,
    normalized_laplacian,
    random_geometric_graph,
)
from .imatgi import (
    ImatgiConfig,
    ImatgiTrace,
    hard_threshold,
    imatgi_reconstruct,
    imatgi_step,
    threshold_at,
)
from .sampling import bernoulli_mask, derive_rng, subsample
from .signals import SparseSpec, make_k_sparse, mse, snr
from .spectral import EigenDecomposition, matvec, sym_eigen

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "NumericalError",
    "GftBasis",
    "Graph",
    "gft",
    "gft_basis",
    "igft",
    "make_graph",
    "normalized_laplacian",
    "random_geometric_graph",
    "ImatgiConfig",
    "ImatgiTrace",
    "hard_threshold",
    "imatgi_reconstruct",
    "imatgi_step",
    "threshold_at",
    "bernoulli_mask",
    "derive_rng",
    "subsample",
    "SparseSpec",
    "make_k_sparse",
    "mse",
    "snr",
    "EigenDecomposition",
    "matvec",
    "sym_eigen",
    "__version__",
]
