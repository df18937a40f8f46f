"""Graphs, the symmetric normalized Laplacian, and the GFT transform pair.

A graph signal is an ordinary float64 vector indexed by vertex; the
frequency content of a signal is read off by projecting onto the
eigenvectors of the normalized Laplacian (the GFT basis). Laplacians are
kept dense: at the scales this library targets (n <= ~2000) the full
eigendecomposition dominates the cost anyway.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .sampling import derive_rng
from .spectral import EigenDecomposition, sym_eigen

# Allowed slack on the normalized-Laplacian spectral range [0, 2].
SPECTRUM_TOL = 1e-10


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph with no self-loops or duplicate edges.

    ``edges`` holds (u, v, weight) triples with u < v and weight > 0;
    ``degrees`` is the per-vertex weighted degree.
    """

    n: int
    edges: tuple
    degrees: np.ndarray = field(repr=False)

    @property
    def n_edges(self):
        return len(self.edges)

    def weight_matrix(self):
        """Dense symmetric adjacency (weight) matrix."""
        w = np.zeros((self.n, self.n))
        for u, v, wt in self.edges:
            w[u, v] = wt
            w[v, u] = wt
        return w


def make_graph(n, edges):
    """Validate an edge list and build a :class:`Graph`.

    Edges are canonicalized to u < v and sorted; duplicates (in either
    orientation), self-loops and non-positive or non-finite weights are
    rejected.
    """
    if n < 1:
        raise ValueError("graph needs at least one vertex")
    seen = {}
    for u, v, wt in edges:
        u, v = int(u), int(v)
        wt = float(wt)
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
        if not (math.isfinite(wt) and wt > 0):
            raise ValueError(f"edge ({u}, {v}) has invalid weight {wt}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen[key] = wt
    canon = tuple((u, v, seen[(u, v)]) for u, v in sorted(seen))
    degrees = np.zeros(n)
    for u, v, wt in canon:
        degrees[u] += wt
        degrees[v] += wt
    return Graph(n=n, edges=canon, degrees=degrees)


def normalized_laplacian(g):
    """Symmetric normalized Laplacian ``I - D^{-1/2} W D^{-1/2}``.

    Vertices of degree zero get an all-zero row and column (diagonal
    included), so each isolated vertex contributes one zero eigenvalue with
    its own indicator eigenvector and the matrix stays symmetric PSD.
    """
    w = g.weight_matrix()
    d = g.degrees
    pos = d > 0
    inv_sqrt = np.zeros_like(d)
    inv_sqrt[pos] = 1.0 / np.sqrt(d[pos])
    lap = -(inv_sqrt[:, None] * w * inv_sqrt[None, :])
    lap[np.diag_indices(g.n)] = np.where(pos, 1.0, 0.0)
    return lap


@dataclass(frozen=True)
class GftBasis:
    """GFT basis of a graph: Laplacian eigenpairs plus the vertex count.

    Eigenvalues play the role of graph frequencies (low eigenvalue =
    smooth component); eigenvector columns are the frequency basis.
    """

    decomposition: EigenDecomposition
    graph_n: int

    @property
    def frequencies(self):
        return self.decomposition.eigenvalues

    @property
    def vectors(self):
        return self.decomposition.eigenvectors

    @property
    def n(self):
        return self.graph_n


def gft_basis(g):
    """Eigendecompose the normalized Laplacian of ``g`` into a GFT basis."""
    decomp = sym_eigen(normalized_laplacian(g))
    w = decomp.eigenvalues
    if w[0] < -SPECTRUM_TOL or w[-1] > 2.0 + SPECTRUM_TOL:
        raise ValueError(
            f"normalized-Laplacian spectrum [{w[0]:.3e}, {w[-1]:.3e}] outside [0, 2]"
        )
    return GftBasis(decomposition=decomp, graph_n=g.n)


def _check_signal(basis, f):
    x = np.asarray(f, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != basis.n:
        raise ValueError(f"signal length {x.shape} does not match graph n={basis.n}")
    return x


def gft(basis, f):
    """Forward transform: spectrum = Uᵀ f."""
    return basis.vectors.T @ _check_signal(basis, f)


def igft(basis, fhat):
    """Inverse transform: f = U fhat. Exact inverse of :func:`gft`."""
    return basis.vectors @ _check_signal(basis, fhat)


@dataclass(frozen=True)
class GeometricGraphParams:
    """Connectivity settings for :func:`random_geometric_graph`.

    ``radius`` defaults to 1.2x the connectivity-threshold radius
    sqrt(ln n / (pi n)), which keeps the mean degree of large graphs in
    the low tens; edge weights are Gaussian in the point distance with
    bandwidth ``sigma`` defaulting to radius / 2.
    """

    radius: float | None = None
    sigma: float | None = None
    radius_scale: float = 1.2


def random_geometric_graph(n, seed, params=GeometricGraphParams()):
    """Random geometric graph on the unit square, connected by construction.

    Points are placed uniformly at random; pairs within ``radius`` are
    joined with weight exp(-d^2 / (2 sigma^2)). If that leaves several
    components, the closest inter-component point pair is joined (same
    weight kernel) until the graph is connected, so the result is always
    connected and fully determined by (n, seed, params).
    """
    if n < 2:
        raise ValueError("need at least two vertices")
    rng = derive_rng(seed)
    pts = rng.random((n, 2))

    radius = params.radius
    if radius is None:
        radius = params.radius_scale * math.sqrt(math.log(max(n, 3)) / (math.pi * n))
    sigma = params.sigma if params.sigma is not None else radius / 2.0

    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    # Repair edges between far-apart components would underflow the kernel
    # to an invalid zero weight; floor it instead.
    kernel = np.maximum(np.exp(-(dist**2) / (2.0 * sigma**2)), 1e-12)

    iu, ju = np.triu_indices(n, k=1)
    near = dist[iu, ju] <= radius
    edges = {(int(a), int(b)) for a, b in zip(iu[near], ju[near])}

    comp = _components(n, edges)
    while len(set(comp)) > 1:
        # Join the globally closest pair of vertices in different components;
        # ties broken lexicographically for determinism.
        cross = comp[iu] != comp[ju]
        cand = np.flatnonzero(cross)
        best = cand[np.argmin(dist[iu[cand], ju[cand]])]
        edges.add((int(iu[best]), int(ju[best])))
        comp = _components(n, edges)

    edge_list = [(u, v, float(kernel[u, v])) for u, v in sorted(edges)]
    return make_graph(n, edge_list)


def _components(n, edges):
    """Label vertices by connected component (array of component ids)."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    return np.array([find(i) for i in range(n)])


def write_edgelist(g, path):
    """Write a graph as tab-separated ``u v weight`` lines with an ``#n=`` header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#n={g.n}\n")
        for u, v, wt in g.edges:
            fh.write(f"{u}\t{v}\t{wt!r}\n")


def read_edgelist(path):
    """Read a graph written by :func:`write_edgelist`."""
    edges = []
    n = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("#n="):
                    n = int(line[3:])
                continue
            u, v, wt = line.split("\t")
            edges.append((int(u), int(v), float(wt)))
    if n is None:
        raise ValueError(f"{path}: missing '#n=<count>' header")
    return make_graph(n, edges)
