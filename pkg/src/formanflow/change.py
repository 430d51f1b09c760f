"""Change detection between two consecutive snapshots.

Both snapshots are evolved independently by the Ricci flow. Each node then
gets a similarity score: the Pearson correlation between its evolved
incident-weight vectors in the two snapshots, taken over the union of its
incident edges (an edge missing from one snapshot contributes weight 0).
Nodes scoring below the threshold are flagged, together with every edge
touching them. Detection runs the flow with per-step max-normalization by
default so that the default step size (dt = 0.8) stays within floating-point range.
"""

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import BudgetError, ConfigError, FlowOverflowError
from .flow import FlowConfig, ricci_flow
from .validation import check_int, check_option, check_threshold

SCORER = "pearson-incident-v1"
DEFAULT_THRESHOLD = 0.9
DEFAULT_HEATMAP_BUDGET = 5000
HEATMAP_FORMATS = ("pgm", "pgm-ascii", "csv", "json")


@dataclass(frozen=True)
class UnionIndex:
    """Shared node order for two snapshots.

    ``index_a[i]`` is the union position of compact node ``i`` of the first
    snapshot; likewise ``index_b``.
    """

    union_ids: np.ndarray
    index_a: np.ndarray
    index_b: np.ndarray


def align(a, b):
    """Union node index of two snapshots keyed by original node ids."""
    if a.weights.mode != b.weights.mode:
        raise ConfigError(
            f"snapshots use different weightings: {a.weights.mode!r} vs {b.weights.mode!r}")
    ids_a, ids_b = a.graph.node_ids, b.graph.node_ids
    union = np.union1d(ids_a, ids_b)
    return UnionIndex(union, np.searchsorted(union, ids_a), np.searchsorted(union, ids_b))


@dataclass(frozen=True, eq=False)
class AlignedPair:
    """Evolved weights of two snapshots on a common edge list.

    ``edges`` are union-index pairs ``u < w`` present in either snapshot;
    ``weight_a`` / ``weight_b`` are the evolved weights there, 0 where the
    edge is absent.
    """

    union_ids: np.ndarray
    edges: np.ndarray
    weight_a: np.ndarray
    weight_b: np.ndarray
    present_a: np.ndarray
    present_b: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def node_count(self):
        return len(self.union_ids)

    def adjacency(self, which="a"):
        """Symmetric sparse evolved adjacency of one side."""
        w = self.weight_a if which == "a" else self.weight_b
        n = self.node_count
        u, v = self.edges[:, 0], self.edges[:, 1]
        m = sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([u, v]),
                                                        np.concatenate([v, u]))), shape=(n, n))
        return m.tocsr()

    def swapped(self):
        prov = dict(self.provenance)
        if "labels" in prov:
            prov["labels"] = list(reversed(prov["labels"]))
        return AlignedPair(self.union_ids, self.edges, self.weight_b, self.weight_a,
                           self.present_b, self.present_a, prov)


def _union_edges(n, ea, wa, eb, wb):
    ka = ea[:, 0] * n + ea[:, 1]
    kb = eb[:, 0] * n + eb[:, 1]
    keys = np.union1d(ka, kb)
    weight_a = np.zeros(len(keys))
    weight_b = np.zeros(len(keys))
    ia = np.searchsorted(keys, ka)
    ib = np.searchsorted(keys, kb)
    weight_a[ia] = wa
    weight_b[ib] = wb
    present_a = np.zeros(len(keys), dtype=bool)
    present_b = np.zeros(len(keys), dtype=bool)
    present_a[ia] = True
    present_b[ib] = True
    edges = np.column_stack([keys // n, keys % n]).astype(np.int64)
    return edges, weight_a, weight_b, present_a, present_b


def _to_union(graph, index):
    e = index[graph.edges]
    return np.sort(e, axis=1)


def pair_from_weights(a, b, final_a, final_b, provenance=None):
    """Embed two (already evolved) edge-weight vectors into an :class:`AlignedPair`."""
    idx = align(a, b)
    n = max(len(idx.union_ids), 1)
    ea, eb = _to_union(a.graph, idx.index_a), _to_union(b.graph, idx.index_b)
    edges, wa, wb, pa, pb = _union_edges(n, ea, np.asarray(final_a), eb, np.asarray(final_b))
    prov = {"labels": [a.label, b.label], "weighting": a.weights.mode, "scorer": SCORER}
    prov.update(provenance or {})
    return AlignedPair(idx.union_ids, edges, wa, wb, pa, pb, prov)


def detection_flow_config(**overrides):
    """Default flow settings for change detection (10 steps, dt 0.8, max-normalized)."""
    params = {"normalize": "max"}
    params.update(overrides)
    return FlowConfig(**params)


def evolve_pair(a, b, config=None, n_jobs=1):
    """Run the flow on both snapshots and align the final weights."""
    config = config or detection_flow_config()
    align(a, b)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fa = pool.submit(ricci_flow, a.graph, a.weights, config, n_jobs)
            fb = pool.submit(ricci_flow, b.graph, b.weights, config, n_jobs)
            ta, tb = fa.result(), fb.result()
    else:
        ta = ricci_flow(a.graph, a.weights, config)
        tb = ricci_flow(b.graph, b.weights, config)
    if not (ta.finite and tb.finite):
        raise FlowOverflowError(
            "flow weights overflowed; use normalize='max' or a smaller dt")
    prov = {"flow": config.to_dict(),
            "floor_events": [ta.total_floor_events, tb.total_floor_events]}
    return pair_from_weights(a, b, ta.final.edge_weight, tb.final.edge_weight, prov)


def similarity_scores(pair):
    """Per-node Pearson correlation of evolved incident weights.

    Conventions: a node with no incident edge in either snapshot scores 1;
    when either vector is constant the score is 1 if the vectors are equal
    and 0 otherwise.
    """
    n = pair.node_count
    e = pair.edges
    nodes = np.concatenate([e[:, 0], e[:, 1]])
    xa = np.concatenate([pair.weight_a, pair.weight_a])
    xb = np.concatenate([pair.weight_b, pair.weight_b])
    order = np.argsort(nodes, kind="stable")
    nodes, xa, xb = nodes[order], xa[order], xb[order]

    cnt = np.bincount(nodes, minlength=n)
    scores = np.ones(n)
    has = cnt > 0
    if not has.any():
        return scores
    mean_a = np.bincount(nodes, weights=xa, minlength=n)[nodes] / cnt[nodes]
    mean_b = np.bincount(nodes, weights=xb, minlength=n)[nodes] / cnt[nodes]
    da, db = xa - mean_a, xb - mean_b
    saa = np.bincount(nodes, weights=da * da, minlength=n)
    sbb = np.bincount(nodes, weights=db * db, minlength=n)
    sab = np.bincount(nodes, weights=da * db, minlength=n)

    starts = (np.cumsum(cnt) - cnt)[has]
    const_a = np.zeros(n, dtype=bool)
    const_b = np.zeros(n, dtype=bool)
    const_a[has] = np.maximum.reduceat(xa, starts) == np.minimum.reduceat(xa, starts)
    const_b[has] = np.maximum.reduceat(xb, starts) == np.minimum.reduceat(xb, starts)
    differ = np.bincount(nodes, weights=(xa != xb).astype(float), minlength=n) > 0

    degenerate = has & (const_a | const_b | ~differ)
    scores[degenerate] = np.where(differ[degenerate], 0.0, 1.0)
    regular = has & ~degenerate
    scores[regular] = sab[regular] / np.sqrt(saa[regular] * sbb[regular])
    return np.clip(scores, -1.0, 1.0)


@dataclass(eq=False)
class ChangeReport:
    """Scores, flags and heatmap for one snapshot pair at threshold ``threshold``.

    ``heatmap_edges`` / ``heatmap_values`` hold the nonzero-capable part of
    the heatmap: one entry per union edge, in union-index coordinates.
    """

    union_ids: np.ndarray
    node_similarity: np.ndarray
    threshold: float
    flagged_nodes: set
    flagged_edges: set
    heatmap_edges: np.ndarray
    heatmap_values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def heatmap(self, budget=DEFAULT_HEATMAP_BUDGET):
        """Dense symmetric change-intensity matrix over the union node order."""
        n = len(self.union_ids)
        if n > budget:
            raise BudgetError(
                f"{n} nodes exceed the dense heatmap budget of {budget}; use the CSV export")
        h = np.zeros((n, n))
        u, w = self.heatmap_edges[:, 0], self.heatmap_edges[:, 1]
        h[u, w] = self.heatmap_values
        h[w, u] = self.heatmap_values
        return h

    def sparse_heatmap(self):
        n = len(self.union_ids)
        u, w = self.heatmap_edges[:, 0], self.heatmap_edges[:, 1]
        v = self.heatmap_values
        return sparse.coo_matrix((np.concatenate([v, v]), (np.concatenate([u, w]),
                                                           np.concatenate([w, u]))),
                                 shape=(n, n)).tocsr()

    def to_dict(self):
        ids = self.union_ids.tolist()
        return {
            "labels": self.provenance.get("labels", []),
            "config": {k: v for k, v in self.provenance.items() if k != "labels"},
            "threshold": self.threshold,
            "node_scores": {str(i): float(s) for i, s in zip(ids, self.node_similarity.tolist())},
            "flagged_nodes": sorted(self.flagged_nodes),
            "flagged_edges": [list(e) for e in sorted(self.flagged_edges)],
        }


def detect(pair, threshold=DEFAULT_THRESHOLD, scores=None):
    """Flag nodes with similarity below ``threshold`` and build the heatmap."""
    t = check_threshold(threshold)
    s = similarity_scores(pair) if scores is None else scores
    ids = pair.union_ids
    flagged = s < t
    e = pair.edges
    edge_flag = flagged[e[:, 0]] | flagged[e[:, 1]]
    intensity = np.clip(1.0 - np.minimum(s[e[:, 0]], s[e[:, 1]]), 0.0, 1.0)
    return ChangeReport(
        union_ids=ids,
        node_similarity=s,
        threshold=t,
        flagged_nodes={int(x) for x in ids[flagged]},
        flagged_edges={(int(ids[u]), int(ids[w])) for u, w in e[edge_flag].tolist()},
        heatmap_edges=e,
        heatmap_values=intensity,
        provenance=dict(pair.provenance),
    )


def _pgm(h, binary=True):
    pix = np.rint(255.0 * h).astype(np.uint8)
    rows, cols = pix.shape
    if binary:
        return f"P5\n{cols} {rows}\n255\n".encode("ascii") + pix.tobytes()
    body = "\n".join(" ".join(str(int(x)) for x in row) for row in pix)
    return f"P2\n{cols} {rows}\n255\n{body}\n".encode("ascii")


def read_pgm(data):
    """Decode a P2 or P5 image produced by :func:`export_heatmap`."""
    magic, rest = data[:2], data[2:]
    if magic == b"P5":
        head = rest.split(maxsplit=3)
        cols, rows = int(head[0]), int(head[1])
        pix = np.frombuffer(head[3], dtype=np.uint8, count=rows * cols)
        return pix.reshape(rows, cols)
    if magic == b"P2":
        toks = rest.split()
        cols, rows = int(toks[0]), int(toks[1])
        return np.array([int(t) for t in toks[3:]], dtype=np.uint8).reshape(rows, cols)
    raise ValueError("not a PGM image")


def export_heatmap(report, format="pgm", budget=DEFAULT_HEATMAP_BUDGET):
    """Serialize a report: ``pgm`` (P5), ``pgm-ascii`` (P2), ``csv`` or ``json``.

    Returns bytes for PGM formats and text otherwise. CSV rows are
    ``u,w,intensity`` in original node ids, one per union edge.
    """
    check_option(format, "format", HEATMAP_FORMATS)
    if format in ("pgm", "pgm-ascii"):
        return _pgm(report.heatmap(budget), binary=format == "pgm")
    if format == "csv":
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["u", "w", "intensity"])
        ids = report.union_ids
        for (u, w), x in zip(report.heatmap_edges.tolist(), report.heatmap_values.tolist()):
            out.writerow([int(ids[u]), int(ids[w]), repr(x)])
        return buf.getvalue()
    return json.dumps(report.to_dict(), indent=2)


def read_heatmap_csv(text):
    """``{(u, w): intensity}`` from the CSV export."""
    rows = csv.reader(io.StringIO(text))
    next(rows)
    return {(int(u), int(w)): float(x) for u, w, x in rows}


class ChangeDetector(BaseEstimator):
    """Flow-based change detector for a pair of snapshots.

    Parameters
    ----------
    threshold : float
        Nodes whose similarity score falls below it are flagged.
    steps, dt, epsilon_floor, recompute_node_weights, variant, normalize
        Flow configuration applied to both snapshots.
    n_jobs : int

    Attributes
    ----------
    pair_ : AlignedPair
    node_similarity_ : ndarray of shape (n_union_nodes,)
    report_ : ChangeReport
    """

    def __init__(self, threshold=DEFAULT_THRESHOLD, steps=10, dt=0.8, epsilon_floor=1e-6,
                 recompute_node_weights=True, variant="ricci", normalize="max", n_jobs=1):
        self.threshold = threshold
        self.steps = steps
        self.dt = dt
        self.epsilon_floor = epsilon_floor
        self.recompute_node_weights = recompute_node_weights
        self.variant = variant
        self.normalize = normalize
        self.n_jobs = n_jobs

    def fit(self, a, b):
        check_threshold(self.threshold)
        check_int(self.n_jobs, "n_jobs", 1)
        cfg = FlowConfig(self.steps, self.dt, self.epsilon_floor,
                         self.recompute_node_weights, self.variant, self.normalize)
        self.pair_ = evolve_pair(a, b, cfg, self.n_jobs)
        self.node_similarity_ = similarity_scores(self.pair_)
        self.report_ = detect(self.pair_, self.threshold, self.node_similarity_)
        return self

    def score_samples(self):
        check_is_fitted(self, "node_similarity_")
        return self.node_similarity_

    def predict(self, threshold=None):
        """Boolean flag per union node; reuses the fitted scores."""
        check_is_fitted(self, "node_similarity_")
        t = check_threshold(self.threshold if threshold is None else threshold)
        return self.node_similarity_ < t

    def report(self, threshold=None):
        check_is_fitted(self, "pair_")
        t = self.threshold if threshold is None else threshold
        return detect(self.pair_, t, self.node_similarity_)
