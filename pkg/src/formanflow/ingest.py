"""Edge-list readers (SNAP, KONECT, weighted export) and snapshot loading."""

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, EmptyGraphError, InputError, ParseError
from .graph import DEFAULT_EPSILON_FLOOR, WeightScheme, build_graph
from .validation import check_int, check_option, check_positive
from .weighting import (
    DEFAULT_CAP,
    DEFAULT_EDGE_BUDGET,
    WEIGHTING_MODES,
    node_weights,
    normalize_scheme,
    weight_graph,
)

__all__ = [
    "RawEdges", "Snapshot", "WeightingConfig", "parse_snap_edgelist", "parse_konect",
    "parse_weighted_edgelist", "normalize_scheme", "load_snapshot", "snapshot_from_raw",
    "export_edgelist", "FORMATS",
]

FORMATS = ("snap", "konect", "weighted")


@dataclass
class RawEdges:
    pairs: np.ndarray
    weights: np.ndarray = None
    timestamps: np.ndarray = None
    comments: list = field(default_factory=list)
    header: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class WeightingConfig:
    mode: str = "detour"
    cap: int = DEFAULT_CAP
    epsilon_floor: float = DEFAULT_EPSILON_FLOOR
    edge_budget: int = DEFAULT_EDGE_BUDGET

    def __post_init__(self):
        check_option(self.mode, "weighting", WEIGHTING_MODES)
        check_int(self.cap, "cap", 2 if self.mode == "detour" else 1)
        check_positive(self.epsilon_floor, "epsilon_floor")
        check_int(self.edge_budget, "edge_budget", 1)

    def to_dict(self):
        return {"mode": self.mode, "cap": self.cap, "epsilon_floor": self.epsilon_floor,
                "edge_budget": self.edge_budget}


@dataclass(frozen=True, eq=False)
class Snapshot:
    """One network state: a graph with its weights at position ``time_index``."""

    label: str
    time_index: int
    graph: object
    weights: WeightScheme
    source_meta: dict = field(default_factory=dict)


def _lines(text):
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    return text.splitlines()


def _int_token(tok, lineno):
    try:
        value = int(tok)
    except ValueError:
        raise ParseError(f"expected an integer node id, got {tok!r}", lineno) from None
    return value


def parse_snap_edgelist(text):
    """Parse a SNAP edge list: ``#`` comments and ``FromNodeId ToNodeId`` lines."""
    pairs, comments = [], []
    for lineno, line in enumerate(_lines(text), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            comments.append(s[1:].strip())
            continue
        toks = s.split()
        if len(toks) != 2:
            raise ParseError(f"expected 2 columns, got {len(toks)}", lineno)
        u, w = _int_token(toks[0], lineno), _int_token(toks[1], lineno)
        if u < 0 or w < 0:
            raise ParseError("node ids must be non-negative", lineno)
        pairs.append((u, w))
    return RawEdges(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), comments=comments)


def _number(tok, lineno, what):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a numeric {what}, got {tok!r}", lineno) from None


def parse_konect(text):
    """Parse a KONECT ``out.*`` file: ``%`` comments, ``src dst [weight [timestamp]]``.

    Ids are 1-based in the file and returned 0-based.
    """
    pairs, weights, stamps, comments = [], [], [], []
    ncols = None
    for lineno, line in enumerate(_lines(text), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("%"):
            comments.append(s[1:].strip())
            continue
        toks = s.split()
        if not 2 <= len(toks) <= 4:
            raise ParseError(f"expected 2 to 4 columns, got {len(toks)}", lineno)
        if ncols is None:
            ncols = len(toks)
        elif len(toks) != ncols:
            raise ParseError(f"ragged columns: expected {ncols}, got {len(toks)}", lineno)
        u, w = _int_token(toks[0], lineno), _int_token(toks[1], lineno)
        if u < 1 or w < 1:
            raise ParseError("KONECT node ids are 1-based", lineno)
        pairs.append((u - 1, w - 1))
        if ncols >= 3:
            x = _number(toks[2], lineno, "weight")
            if x < 0:
                raise ParseError(f"negative weight {x}", lineno)
            weights.append(x)
        if ncols == 4:
            stamps.append(_number(toks[3], lineno, "timestamp"))
    m = len(pairs)
    return RawEdges(
        np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
        weights=np.asarray(weights) if ncols and ncols >= 3 else np.ones(m),
        timestamps=np.asarray(stamps) if ncols == 4 else None,
        comments=comments,
    )


def parse_weighted_edgelist(text):
    """Parse the canonical export: ``u w gamma`` lines under a ``#`` header.

    ``key=value`` tokens in header comments are collected in ``header``;
    a ``# isolated <ids...>`` line lists nodes without edges.
    """
    pairs, weights, comments, header = [], [], [], {}
    for lineno, line in enumerate(_lines(text), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            comments.append(body)
            if body.startswith("isolated "):
                header["isolated"] = body[len("isolated "):]
                continue
            for tok in body.split():
                key, sep, value = tok.partition("=")
                if sep:
                    header[key] = value
            continue
        toks = s.split()
        if len(toks) != 3:
            raise ParseError(f"expected 3 columns, got {len(toks)}", lineno)
        u, w = _int_token(toks[0], lineno), _int_token(toks[1], lineno)
        x = _number(toks[2], lineno, "weight")
        if not x > 0:
            raise ParseError(f"non-positive weight {x}", lineno)
        pairs.append((u, w))
        weights.append(x)
    return RawEdges(np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
                    weights=np.asarray(weights), comments=comments, header=header)


def aggregate_edge_values(g, pairs, values):
    """Sum per-pair ``values`` onto the canonical edges of ``g`` (self-loops ignored)."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    compact = np.searchsorted(g.node_ids, pairs)
    keep = compact[:, 0] != compact[:, 1]
    compact = np.sort(compact[keep], axis=1)
    n = max(g.node_count, 1)
    keys = g.edges[:, 0] * n + g.edges[:, 1]
    idx = np.searchsorted(keys, compact[:, 0] * n + compact[:, 1])
    return np.bincount(idx, weights=np.asarray(values, dtype=np.float64)[keep],
                       minlength=g.edge_count)


def _isolated_from_header(raw):
    iso = raw.header.get("isolated", "")
    return [int(t) for t in iso.split()] if iso else None


def snapshot_from_raw(raw, weighting=None, label="", time_index=0, source_meta=None,
                      fmt="snap", n_jobs=1):
    """Build and weight a :class:`Snapshot` from parsed edges."""
    weighting = weighting or WeightingConfig()
    g = build_graph(raw.pairs, node_ids=_isolated_from_header(raw))
    if g.edge_count == 0:
        raise EmptyGraphError()
    meta = dict(source_meta or {})
    meta.update(format=fmt, comments=raw.comments, raw_pairs=len(raw))
    if fmt == "weighted":
        gamma = aggregate_edge_values(g, raw.pairs, raw.weights)
        if np.any(g.multiplicity > 1):
            raise InputError("weighted edge list contains duplicate edges")
        mode = raw.header.get("weighting", "custom")
        weights = WeightScheme(gamma, node_weights(g, gamma), mode=mode)
        meta["weighting"] = {"mode": mode, "from_file": True}
    else:
        mult = None
        if weighting.mode == "multiplicity" and raw.weights is not None:
            mult = aggregate_edge_values(g, raw.pairs, raw.weights)
        g, weights = weight_graph(g, weighting.mode, weighting.cap, weighting.epsilon_floor,
                                  weighting.edge_budget, multiplicity=mult, n_jobs=n_jobs)
        meta["weighting"] = weighting.to_dict()
    return Snapshot(label, int(time_index), g, weights, meta)


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def load_snapshot(path, format="snap", weighting=None, label=None, time_index=0, n_jobs=1):
    """Read, build and weight one snapshot file.

    ``format`` is ``snap``, ``konect`` or ``weighted`` (the export format of
    :func:`export_edgelist`). Gzip-compressed files are read transparently.
    """
    if format not in FORMATS:
        raise ConfigError(f"unknown format {format!r}; expected one of {FORMATS}")
    path = os.fspath(path)
    if path.endswith(".gz"):
        import gzip
        with gzip.open(path, "rb") as fh:
            data = fh.read()
    else:
        with open(path, "rb") as fh:
            data = fh.read()
    parser = {"snap": parse_snap_edgelist, "konect": parse_konect,
              "weighted": parse_weighted_edgelist}[format]
    raw = parser(data)
    meta = {"path": path, "sha256": hashlib.sha256(data).hexdigest()}
    if label is None:
        label = os.path.basename(path)
    return snapshot_from_raw(raw, weighting, label, time_index, meta, format, n_jobs)


def export_edgelist(snapshot, dataset=None):
    """Canonical ``u w gamma`` text with original node ids and a ``#`` header."""
    g, w = snapshot.graph, snapshot.weights
    ids = g.node_ids
    name = "_".join(str(dataset or snapshot.label or "unnamed").split())
    lines = [f"# dataset={name} weighting={w.mode}"]
    iso = ids[g.degrees == 0]
    if len(iso):
        lines.append("# isolated " + " ".join(str(int(x)) for x in iso))
    for (u, v), x in zip(g.edges.tolist(), w.edge_weight.tolist()):
        lines.append(f"{int(ids[u])} {int(ids[v])} {x!r}")
    return "\n".join(lines) + "\n"


def check_series(snapshots, step=None):
    """Require strictly increasing ``time_index`` with a constant step."""
    idx = [s.time_index for s in snapshots]
    diffs = np.diff(idx)
    if np.any(diffs <= 0):
        raise InputError("snapshot time indices must be strictly increasing")
    if len(diffs) and (step is not None and np.any(diffs != step) or np.any(diffs != diffs[0])):
        raise InputError("snapshot time indices must be evenly spaced")
    return snapshots
