"""Neighbourhood graphs, preference permutations, edge probabilities and bond sampling."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError, cKDTree

log = logging.getLogger(__name__)

DEFAULT_PRUNE_QUANTILE = 0.95
DEFAULT_SMOOTHNESS = 0.1
KNN_FALLBACK = 6


class DegenerateGeometry(ValueError):
    """Raised when projected points admit no triangulation and no fallback is allowed."""


@dataclass(frozen=True)
class WeakAnnotation:
    point_index: int
    weak_label: int

    def __post_init__(self):
        if self.weak_label < 1:
            raise ValueError(f"weak labels start at 1, got {self.weak_label}")
        if self.point_index < 0:
            raise ValueError(f"negative point index {self.point_index}")


def annotation_arrays(annotations):
    """Split annotations into (indices, labels) arrays, checking index uniqueness."""
    idx = np.array([a.point_index for a in annotations], dtype=int)
    lab = np.array([a.weak_label for a in annotations], dtype=int)
    if len(np.unique(idx)) != len(idx):
        raise ValueError("a point is annotated more than once")
    return idx, lab


@dataclass
class PCAProjection:
    mean: np.ndarray
    components: np.ndarray  # (2, D)

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        _, _, vt = np.linalg.svd(X - mean, full_matrices=False)
        comps = np.zeros((2, X.shape[1]))
        comps[: min(2, len(vt))] = vt[:2]
        return cls(mean, comps)

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T


@dataclass
class AdjacencyGraph:
    """Undirected neighbour system over all points; edges are (i, j) with i < j."""

    n_nodes: int
    edges: np.ndarray
    weights: np.ndarray
    coords: np.ndarray = field(repr=False)
    projection: PCAProjection | None = field(default=None, repr=False)

    @property
    def n_edges(self):
        return len(self.edges)


@dataclass
class SamplingGraph:
    """Proposal-sampling graph over annotated points (local vertex ids 0..V-1)."""

    vertices: np.ndarray  # dataset index per vertex
    weak_labels: np.ndarray
    edges: np.ndarray
    probabilities: np.ndarray | None = None

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def same_label(self):
        return self.weak_labels[self.edges[:, 0]] == self.weak_labels[self.edges[:, 1]]


def _canonical_edges(pairs, n):
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=int)
    pairs = np.sort(pairs, axis=1)
    key = np.unique(pairs[:, 0] * n + pairs[:, 1])
    return np.column_stack([key // n, key % n])


def delaunay_edges(points2d, knn_fallback=KNN_FALLBACK):
    """Edges of the Delaunay triangulation of 2D points.

    Collinear or otherwise flat inputs fall back to a symmetric k-nearest-neighbour
    graph; pass ``knn_fallback=0`` to raise DegenerateGeometry instead.
    """
    P = np.asarray(points2d, dtype=float)
    n = len(P)
    if n < 2:
        return np.zeros((0, 2), dtype=int)
    try:
        if n < 3:
            raise QhullError("fewer than three points")
        simplices = Delaunay(P).simplices
    except QhullError as err:
        if not knn_fallback:
            raise DegenerateGeometry(str(err)) from err
        log.warning("degenerate triangulation (%d points); using %d-NN graph", n, knn_fallback)
        k = min(knn_fallback, n - 1)
        _, nbr = cKDTree(P).query(P, k=k + 1)
        nbr = np.asarray(nbr).reshape(n, -1)
        pairs = np.column_stack([np.repeat(np.arange(n), nbr.shape[1]), nbr.ravel()])
        return _canonical_edges(pairs, n)
    pairs = np.concatenate([simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]])
    return _canonical_edges(pairs, n)


def prune_long_edges(edges, coords, quantile):
    """Keep the ``floor(quantile * M)`` shortest edges (ties by original order)."""
    if len(edges) == 0 or quantile >= 1.0:
        return edges
    lengths = np.linalg.norm(coords[edges[:, 0]] - coords[edges[:, 1]], axis=1)
    keep = int(np.floor(quantile * len(edges)))
    order = np.argsort(lengths, kind="stable")[:keep]
    return edges[np.sort(order)]


def build_adjacency(x1, x2, prune_quantile=DEFAULT_PRUNE_QUANTILE, smoothness=DEFAULT_SMOOTHNESS,
                    knn_fallback=KNN_FALLBACK) -> AdjacencyGraph:
    """Delaunay neighbour system on the 2D PCA projection of stacked correspondences."""
    X = np.column_stack([np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)])
    if len(X) < 3:
        raise ValueError(f"need at least 3 points, got {len(X)}")
    proj = PCAProjection.fit(X)
    coords = proj.transform(X)
    edges = delaunay_edges(coords, knn_fallback)
    edges = prune_long_edges(edges, coords, prune_quantile)
    weights = np.full(len(edges), float(smoothness))
    return AdjacencyGraph(len(X), edges, weights, coords, proj)


def build_sampling_graph(coords, vertices, weak_labels, prune_quantile=DEFAULT_PRUNE_QUANTILE,
                         knn_fallback=KNN_FALLBACK) -> SamplingGraph:
    """Delaunay graph over annotated points in an already projected 2D space."""
    vertices = np.asarray(vertices, dtype=int)
    P = np.asarray(coords, dtype=float)[vertices]
    edges = delaunay_edges(P, knn_fallback)
    edges = prune_long_edges(edges, P, prune_quantile)
    return SamplingGraph(vertices, np.asarray(weak_labels, dtype=int), edges)


def preference_permutation(residuals, h):
    """Ids of the min(h, G) smallest residuals in ascending order, ties by lower id."""
    if h < 1:
        raise ValueError("h must be positive")
    r = np.asarray(residuals, dtype=float)
    return np.argsort(r, kind="stable")[: min(h, len(r))]


def top_h_membership(R, h):
    """Boolean (V, G) mask of each row's top-h set under the same tie rule as above."""
    R = np.asarray(R, dtype=float)
    V, G = R.shape
    if G <= h:
        return np.ones((V, G), dtype=bool)
    kth = np.partition(R, h - 1, axis=1)[:, h - 1 : h]
    below = R < kth
    need = h - below.sum(axis=1, keepdims=True)
    tied = R == kth
    return below | (tied & (np.cumsum(tied, axis=1) <= need))


def edge_probability(p_i, p_j, same_weak_label, lam, sigma, h):
    """Mix of preference overlap and the Bernoulli weak-label prior."""
    overlap = len(set(np.asarray(p_i).tolist()) & set(np.asarray(p_j).tolist()))
    prior = 1.0 - sigma if same_weak_label else sigma
    return lam * overlap / h + (1.0 - lam) * prior


def edge_probabilities(graph: SamplingGraph, membership, lam, sigma, h):
    """Vectorised edge probabilities; ``membership`` is a (V, G) top-h mask or None."""
    e = graph.edges
    prior = np.where(graph.same_label, 1.0 - sigma, sigma)
    if membership is None or membership.shape[1] == 0 or len(e) == 0:
        overlap = np.zeros(len(e))
    else:
        m = membership.astype(np.int32)
        overlap = np.einsum("ij,ij->i", m[e[:, 0]], m[e[:, 1]])
    w = lam * overlap / h + (1.0 - lam) * prior
    return np.clip(w, 0.0, 1.0)


def sample_bonds(n_vertices, edges, probabilities, labels, rng):
    """Close each same-label edge with its probability; return clusters of the bond graph.

    Clusters are index arrays over ``range(n_vertices)``; singletons included.
    """
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    labels = np.asarray(labels)
    if len(edges):
        draws = rng.random(len(edges))
        same = labels[edges[:, 0]] == labels[edges[:, 1]]
        closed = same & (draws < np.asarray(probabilities))
        e = edges[closed]
    else:
        e = edges
    A = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n_vertices, n_vertices))
    _, comp = connected_components(A, directed=False)
    order = np.argsort(comp, kind="stable")
    splits = np.flatnonzero(np.diff(comp[order])) + 1
    return np.split(order, splits) if n_vertices else []


class PreferenceTable:
    """Residual columns of the annotated points against every proposal ever generated."""

    def __init__(self, n_vertices):
        self.n_vertices = n_vertices
        self._cols = []
        self._matrix = None

    def __len__(self):
        return len(self._cols)

    def append(self, residuals):
        r = np.asarray(residuals, dtype=float)
        if r.shape != (self.n_vertices,):
            raise ValueError(f"expected {self.n_vertices} residuals, got {r.shape}")
        self._cols.append(r)
        self._matrix = None

    @property
    def matrix(self):
        if self._matrix is None:
            if self._cols:
                self._matrix = np.column_stack(self._cols)
            else:
                self._matrix = np.zeros((self.n_vertices, 0))
        return self._matrix

    def permutation(self, u, h):
        return preference_permutation(self.matrix[u], h)

    def membership(self, h):
        return top_h_membership(self.matrix, h)
