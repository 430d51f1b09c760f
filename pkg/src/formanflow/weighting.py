"""Topological edge and node weighting schemes.

Edge weights come from hop-count path lengths capped at ``cap`` (six by
default, the small-world separation bound); node weights are the mean
weight of the incident edges.
"""

import logging

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import BudgetError, InputError
from .graph import DEFAULT_EPSILON_FLOOR, Graph, WeightScheme
from .validation import (
    check_graph,
    check_int,
    check_option,
    check_positive,
    chunked_map,
)

logger = logging.getLogger(__name__)

UNREACHABLE = -1
DEFAULT_CAP = 6
DEFAULT_EDGE_BUDGET = 2_000_000
WEIGHTING_MODES = ("detour", "augmented", "multiplicity", "unit")


def _adjacency_lists(g):
    nb = g.neighbors.tolist()
    ptr = g.indptr.tolist()
    return [nb[ptr[v]:ptr[v + 1]] for v in range(g.node_count)]


def bfs_capped(g, source, cap=DEFAULT_CAP):
    """Hop distances from ``source``; nodes farther than ``cap`` get ``UNREACHABLE``."""
    check_int(cap, "cap", 1)
    if not 0 <= source < g.node_count:
        raise IndexError(f"node {source} out of range")
    dist = np.full(g.node_count, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    indptr, nbrs = g.indptr, g.neighbors
    for depth in range(1, cap + 1):
        nxt = []
        for x in frontier:
            for y in nbrs[indptr[x]:indptr[x + 1]]:
                if dist[y] == UNREACHABLE:
                    dist[y] = depth
                    nxt.append(y)
        if not nxt:
            break
        frontier = nxt
    return dist


def _detour(adj, nbr_sets, u, w, cap):
    """Shortest u-w path length avoiding the edge (u, w), or 0 if > cap."""
    if nbr_sets[u] & nbr_sets[w]:
        return 2
    if cap < 3:
        return 0
    # bidirectional BFS, one full level at a time on the smaller frontier
    dist = ({u: 0}, {w: 0})
    frontier = ([u], [w])
    radius = [0, 0]
    while radius[0] + radius[1] < cap:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        mine, other = dist[side], dist[1 - side]
        src, dst = (u, w) if side == 0 else (w, u)
        depth = radius[side] + 1
        best = 0
        nxt = []
        for x in frontier[side]:
            for y in adj[x]:
                if x == src and y == dst:
                    continue
                d_other = other.get(y)
                if d_other is not None:
                    cand = depth + d_other
                    if best == 0 or cand < best:
                        best = cand
                if y not in mine:
                    mine[y] = depth
                    nxt.append(y)
        if best:
            return best if best <= cap else 0
        if not nxt:
            return 0
        radius[side] = depth
        if side == 0:
            frontier = (nxt, frontier[1])
        else:
            frontier = (frontier[0], nxt)
    return 0


def detour_lengths(g, cap=DEFAULT_CAP, n_jobs=1):
    """Length of the shortest alternative path for every edge (0 when none within ``cap``)."""
    check_int(cap, "cap", 2)
    adj = _adjacency_lists(g)
    nbr_sets = [set(a) for a in adj]
    edges = g.edges.tolist()

    def run(start, stop):
        return [_detour(adj, nbr_sets, u, w, cap) for u, w in edges[start:stop]]

    out = []
    for chunk in chunked_map(run, len(edges), n_jobs):
        out.extend(chunk)
    return np.asarray(out, dtype=np.int64)


def normalize_edge_weights(raw, epsilon_floor=DEFAULT_EPSILON_FLOOR):
    """Max-normalize raw edge weights into ``[epsilon_floor, 1]``.

    Returns ``(gamma, n_floored)`` where ``n_floored`` counts non-positive
    raw values that were replaced by the floor.
    """
    raw = np.asarray(raw, dtype=np.float64)
    positive = raw > 0
    gamma = np.zeros_like(raw)
    if positive.any():
        gamma[positive] = raw[positive] / raw[positive].max()
    gamma = np.maximum(gamma, epsilon_floor)
    return gamma, int((~positive).sum())


def node_weights(g, edge_w):
    """Mean incident edge weight per node; isolated nodes get 0."""
    edge_w = np.asarray(edge_w, dtype=np.float64)
    if edge_w.shape != (g.edge_count,):
        raise ValueError("one weight per edge expected")
    deg = g.degrees
    total = np.bincount(g.edges.ravel(), weights=np.repeat(edge_w, 2), minlength=g.node_count)
    out = np.zeros(g.node_count)
    nz = deg > 0
    out[nz] = total[nz] / deg[nz]
    return out


def normalize_scheme(edge_raw, node_raw=None, g=None, epsilon_floor=DEFAULT_EPSILON_FLOOR,
                     mode="custom"):
    """Turn raw positive weights into a normalized :class:`WeightScheme`.

    Edge weights are divided by their maximum and floored at
    ``epsilon_floor``; non-positive raw values become the floor and are
    counted in ``scheme.n_floored``. Raw node weights, if given, are divided
    by their maximum (zeros stay zero). Otherwise ``g`` is required and node
    weights are derived from the normalized edge weights.
    """
    edge_raw = np.asarray(edge_raw, dtype=np.float64)
    if edge_raw.size == 0:
        raise InputError("cannot normalize a scheme without edges")
    gamma, n_floored = normalize_edge_weights(edge_raw, epsilon_floor)
    if n_floored:
        logger.warning("%d non-positive edge weights raised to %g", n_floored, epsilon_floor)
    if node_raw is not None:
        node_raw = np.asarray(node_raw, dtype=np.float64)
        if np.any(node_raw < 0):
            raise InputError("negative node weight")
        mx = node_raw.max() if node_raw.size else 0.0
        omega = node_raw / mx if mx > 0 else np.zeros_like(node_raw)
        nz = omega > 0
        omega[nz] = np.maximum(omega[nz], epsilon_floor)
    elif g is not None:
        omega = node_weights(g, gamma)
    else:
        raise ValueError("either node_raw or g is required")
    return WeightScheme(gamma, omega, mode=mode, n_floored=n_floored)


def edge_weights_detour(g, cap=DEFAULT_CAP, epsilon_floor=DEFAULT_EPSILON_FLOOR, n_jobs=1):
    """``1 / l`` for the shortest detour ``l <= cap`` around each edge, normalized.

    Edges without such a detour (bridges, or only long cycles) get the floor.
    """
    lengths = detour_lengths(g, cap, n_jobs)
    raw = np.zeros(len(lengths))
    has = lengths > 0
    raw[has] = 1.0 / lengths[has]
    return normalize_edge_weights(raw, epsilon_floor)[0]


def edge_weights_augmented(g, cap=DEFAULT_CAP, epsilon_floor=DEFAULT_EPSILON_FLOOR,
                           edge_budget=DEFAULT_EDGE_BUDGET):
    """Densify ``g`` with virtual edges between nodes at hop distance ``2..cap``.

    Original edges get raw weight 1, a virtual edge between nodes at
    distance ``l`` gets ``1 / l``. Returns ``(augmented_graph, gamma,
    is_virtual)``; ``is_virtual`` is aligned with the augmented edge order.
    """
    check_int(cap, "cap", 1)
    orig = g.edge_index()
    pairs, raw = [], []
    total = 0
    for s in range(g.node_count):
        dist = bfs_capped(g, s, cap)
        t = np.nonzero(dist > 1)[0]
        t = t[t > s]
        if len(t):
            total += len(t)
            if total + g.edge_count > edge_budget:
                raise BudgetError(
                    f"augmentation exceeds edge budget of {edge_budget}; "
                    "lower --cap or use the detour weighting")
            pairs.append(np.column_stack([np.full(len(t), s), t]))
            raw.append(1.0 / dist[t])
    virt = np.concatenate(pairs) if pairs else np.empty((0, 2), dtype=np.int64)
    vraw = np.concatenate(raw) if raw else np.empty(0)
    all_edges = np.concatenate([g.edges, virt])
    mult = np.concatenate([g.multiplicity, np.zeros(len(virt), dtype=np.int64)])
    aug = Graph.from_canonical(g.node_count, all_edges, node_ids=g.node_ids, multiplicity=mult)
    is_virtual = np.array([tuple(e) not in orig for e in aug.edges.tolist()], dtype=bool)
    lookup = {tuple(e): r for e, r in zip(virt.tolist(), vraw.tolist())}
    full_raw = np.array([lookup.get(tuple(e), 1.0) for e in aug.edges.tolist()])
    gamma = normalize_edge_weights(full_raw, epsilon_floor)[0]
    return aug, gamma, is_virtual


def weight_graph(g, mode="detour", cap=DEFAULT_CAP, epsilon_floor=DEFAULT_EPSILON_FLOOR,
                 edge_budget=DEFAULT_EDGE_BUDGET, multiplicity=None, n_jobs=1):
    """Weight a graph with one of :data:`WEIGHTING_MODES`.

    Returns ``(graph, scheme)``; ``graph`` differs from ``g`` only in the
    augmented mode. ``multiplicity`` overrides ``g.multiplicity`` as the
    raw weights of the multiplicity mode.
    """
    check_option(mode, "weighting", WEIGHTING_MODES)
    if g.edge_count == 0:
        return g, WeightScheme(np.empty(0), np.zeros(g.node_count), mode=mode)
    if mode == "unit":
        gamma = np.ones(g.edge_count)
    elif mode == "detour":
        gamma = edge_weights_detour(g, cap, epsilon_floor, n_jobs)
    elif mode == "multiplicity":
        raw = g.multiplicity if multiplicity is None else multiplicity
        gamma = normalize_edge_weights(raw, epsilon_floor)[0]
    else:
        g, gamma, is_virtual = edge_weights_augmented(g, cap, epsilon_floor, edge_budget)
    return g, WeightScheme(gamma, node_weights(g, gamma), mode=mode,
                           is_virtual=is_virtual if mode == "augmented" else None)


class EdgeWeighter(TransformerMixin, BaseEstimator):
    """Attach a normalized weighting scheme to a graph.

    Parameters
    ----------
    mode : {"detour", "augmented", "multiplicity", "unit"}
        ``detour`` weights each edge by ``1 / l`` for the shortest
        alternative path of length ``l <= cap``. ``augmented`` adds virtual
        edges between all node pairs within ``cap`` hops. ``multiplicity``
        uses merged-duplicate counts; ``unit`` sets every weight to one.
    cap : int
        Path-length cap in hops.
    epsilon_floor : float
        Smallest admissible edge weight.
    edge_budget : int
        Maximum edge count of an augmented graph.
    n_jobs : int
        Worker threads for the per-edge detour searches.

    Attributes
    ----------
    graph_ : Graph
        The weighted graph (augmented in the augmented mode).
    weights_ : WeightScheme
    """

    def __init__(self, mode="detour", cap=DEFAULT_CAP, epsilon_floor=DEFAULT_EPSILON_FLOOR,
                 edge_budget=DEFAULT_EDGE_BUDGET, n_jobs=1):
        self.mode = mode
        self.cap = cap
        self.epsilon_floor = epsilon_floor
        self.edge_budget = edge_budget
        self.n_jobs = n_jobs

    def _validate_params(self):
        check_option(self.mode, "mode", WEIGHTING_MODES)
        check_int(self.cap, "cap", 2 if self.mode == "detour" else 1)
        check_positive(self.epsilon_floor, "epsilon_floor")
        check_int(self.edge_budget, "edge_budget", 1)
        check_int(self.n_jobs, "n_jobs", 1)

    def fit(self, g, y=None):
        self._validate_params()
        check_graph(g)
        self.graph_, self.weights_ = weight_graph(
            g, self.mode, self.cap, self.epsilon_floor, self.edge_budget, n_jobs=self.n_jobs)
        return self

    def transform(self, g):
        self._validate_params()
        return weight_graph(check_graph(g), self.mode, self.cap, self.epsilon_floor,
                            self.edge_budget, n_jobs=self.n_jobs)[1]

    def fit_transform(self, g, y=None):
        return self.fit(g).weights_
