"""Immutable undirected simple graphs and the weighting schemes attached to them."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError

DEFAULT_EPSILON_FLOOR = 1e-6


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on nodes ``0..node_count-1``.

    Edges are stored once, as ``(u, w)`` with ``u < w``, sorted
    lexicographically. Incident edges of node ``v`` are
    ``incidence[indptr[v]:indptr[v + 1]]`` in ascending edge index, and
    ``neighbors`` holds the opposite endpoint for each of those slots.

    ``node_ids`` maps compact indices back to the identifiers found in the
    input, and ``multiplicity`` counts how many raw pairs were merged into
    each edge.
    """

    node_count: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    incidence: np.ndarray = field(repr=False)
    neighbors: np.ndarray = field(repr=False)
    multiplicity: np.ndarray = field(repr=False)
    node_ids: np.ndarray = field(repr=False)

    @classmethod
    def from_canonical(cls, node_count, edges, node_ids=None, multiplicity=None):
        """Build a graph from unique ``u < w`` pairs (any order)."""
        node_count = int(node_count)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must satisfy u < w")
            if edges.min() < 0 or edges.max() >= node_count:
                raise ValueError("edge endpoint out of range")
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
        if len(edges) > 1:
            same = np.all(edges[1:] == edges[:-1], axis=1)
            if same.any():
                raise ValueError("duplicate edges")
        if multiplicity is None:
            multiplicity = np.ones(len(edges), dtype=np.int64)
        else:
            multiplicity = np.asarray(multiplicity, dtype=np.int64)[order]
        if node_ids is None:
            node_ids = np.arange(node_count, dtype=np.int64)

        m = len(edges)
        ends = edges.ravel()  # u0, w0, u1, w1, ...
        eidx = np.repeat(np.arange(m, dtype=np.int64), 2)
        other = edges[:, ::-1].ravel()
        # stable sort keeps ascending edge index inside each node's block
        perm = np.argsort(ends, kind="stable")
        counts = np.bincount(ends, minlength=node_count)
        indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(
            node_count=node_count,
            edges=_frozen(edges, np.int64),
            indptr=_frozen(indptr, np.int64),
            incidence=_frozen(eidx[perm], np.int64),
            neighbors=_frozen(other[perm], np.int64),
            multiplicity=_frozen(multiplicity, np.int64),
            node_ids=_frozen(node_ids, np.int64),
        )

    @property
    def edge_count(self):
        return len(self.edges)

    @property
    def degrees(self):
        return np.diff(self.indptr)

    @property
    def relabel(self):
        """Mapping from original node identifier to compact index."""
        return {int(k): i for i, k in enumerate(self.node_ids)}

    def incident_edges(self, v):
        return incident_edges(self, v)

    def neighbor_sets(self):
        return [set(self.neighbors[self.indptr[v]:self.indptr[v + 1]].tolist())
                for v in range(self.node_count)]

    def edge_index(self):
        """Dictionary ``(u, w) -> edge index`` for canonical pairs."""
        return {(int(u), int(w)): k for k, (u, w) in enumerate(self.edges)}

    def __repr__(self):
        return f"Graph(node_count={self.node_count}, edge_count={self.edge_count})"


def build_graph(raw_edges, node_ids=None):
    """Build a simple graph from raw (possibly directed, repeated) pairs.

    Self-loops are dropped, but their node is kept. Pairs equal up to
    orientation are merged and counted in ``Graph.multiplicity``. Node
    identifiers are compacted to ``0..n-1`` in ascending order; extra
    identifiers in ``node_ids`` become isolated nodes.
    """
    raw = np.asarray(raw_edges, dtype=np.int64).reshape(-1, 2)
    if len(raw) and raw.min() < 0:
        raise ValueError("node identifiers must be non-negative")
    ids = raw.ravel()
    if node_ids is not None:
        ids = np.concatenate([ids, np.asarray(node_ids, dtype=np.int64)])
    uniq, compact = np.unique(ids, return_inverse=True)
    compact = compact[: raw.size].reshape(-1, 2)

    loops = compact[:, 0] == compact[:, 1]
    pairs = np.sort(compact[~loops], axis=1)
    if len(pairs):
        edges, mult = np.unique(pairs, axis=0, return_counts=True)
    else:
        edges, mult = np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.int64)
    return Graph.from_canonical(len(uniq), edges, node_ids=uniq, multiplicity=mult)


def incident_edges(g, v):
    """Indices of the edges containing node ``v``, ascending."""
    if not 0 <= v < g.node_count:
        raise IndexError(f"node {v} out of range for graph with {g.node_count} nodes")
    return g.incidence[g.indptr[v]:g.indptr[v + 1]]


@dataclass(frozen=True, eq=False)
class WeightScheme:
    """Edge weights ``gamma`` and node weights ``omega`` for one graph."""

    edge_weight: np.ndarray
    node_weight: np.ndarray
    mode: str = "custom"
    n_floored: int = 0
    is_virtual: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "edge_weight", _frozen(self.edge_weight, np.float64))
        object.__setattr__(self, "node_weight", _frozen(self.node_weight, np.float64))

    @property
    def fingerprint(self):
        h = hashlib.sha1()
        h.update(self.edge_weight.tobytes())
        h.update(b"|")
        h.update(self.node_weight.tobytes())
        return h.hexdigest()

    def scaled(self, c):
        return WeightScheme(self.edge_weight * c, self.node_weight * c, self.mode,
                            self.n_floored, self.is_virtual)

    def check_against(self, g, epsilon_floor=None):
        """Raise ContractError unless these weights fit graph ``g``."""
        if self.edge_weight.shape != (g.edge_count,):
            raise ContractError(
                f"{self.edge_weight.shape[0]} edge weights for {g.edge_count} edges")
        if self.node_weight.shape != (g.node_count,):
            raise ContractError(
                f"{self.node_weight.shape[0]} node weights for {g.node_count} nodes")
        if epsilon_floor is not None and g.edge_count:
            if self.edge_weight.min() < epsilon_floor:
                raise ContractError("edge weight below epsilon floor")
        if np.any(self.node_weight < 0):
            raise ContractError("negative node weight")
        return self


def unit_weights(g):
    """All edge and node weights equal to one (isolated nodes get zero)."""
    node = (g.degrees > 0).astype(np.float64)
    return WeightScheme(np.ones(g.edge_count), node, mode="unit")


@dataclass(frozen=True)
class Histogram:
    """Counts over ``len(counts)`` bins delimited by ``bin_edges``.

    ``values`` keeps the underlying per-item samples.
    """

    counts: np.ndarray
    bin_edges: np.ndarray
    values: np.ndarray

    def to_rows(self):
        return [(float(lo), float(hi), int(c))
                for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts)]


def equal_width_histogram(values, bins):
    values = np.asarray(values, dtype=np.float64)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if values.size == 0:
        return Histogram(np.empty(0, dtype=np.int64), np.empty(0), values)
    counts, edges = np.histogram(values, bins=bins)
    return Histogram(counts.astype(np.int64), edges, values)


def degree_distribution(g, weights=None, bins=None):
    """Node degree histogram.

    Without weights, degrees are edge counts and each integer degree gets
    its own unit-width bin. With weights, each node's degree is the sum of
    its incident edge weights, binned into ``bins`` equal-width bins
    (default 20).
    """
    if weights is None:
        values = g.degrees.astype(np.int64)
        if values.size == 0:
            return Histogram(np.empty(0, dtype=np.int64), np.empty(0), values)
        counts = np.bincount(values)
        edges = np.arange(len(counts) + 1) - 0.5
        return Histogram(counts, edges, values)
    weights.check_against(g)
    ends = g.edges.ravel()
    w2 = np.repeat(weights.edge_weight, 2)
    values = np.bincount(ends, weights=w2, minlength=g.node_count)
    return equal_width_histogram(values, bins or 20)
