"""Seeded synthetic graph models written as SNAP edge lists."""

import numpy as np

from .exceptions import ConfigError
from .validation import check_int

MODELS = ("preferential-attachment", "ring-lattice-rewire", "erdos-renyi")


def _probability(p, name="p"):
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {p}")
    return float(p)


def preferential_attachment(n, m, seed=None):
    """Barabasi-Albert style growth from an ``(m+1)``-clique.

    Each new node links to ``m`` distinct existing nodes chosen with
    probability proportional to their degree.
    """
    n = check_int(n, "n", 1)
    m = check_int(m, "m", 1)
    if n <= m:
        raise ConfigError(f"n must exceed m (n={n}, m={m})")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    repeated = [v for e in edges for v in e]
    for v in range(m + 1, n):
        targets = set()
        while len(targets) < m:
            targets.add(repeated[rng.integers(len(repeated))])
        for t in sorted(targets):
            edges.append((t, v))
            repeated.extend((t, v))
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def ring_lattice_rewire(n, k, p, seed=None):
    """Watts-Strogatz ring lattice (``k`` even neighbours) with rewiring probability ``p``."""
    n = check_int(n, "n", 3)
    k = check_int(k, "k", 2)
    p = _probability(p)
    if k % 2 or k >= n:
        raise ConfigError(f"k must be even and smaller than n (n={n}, k={k})")
    rng = np.random.default_rng(seed)
    present = set()
    for j in range(1, k // 2 + 1):
        for u in range(n):
            w = (u + j) % n
            present.add((min(u, w), max(u, w)))
    for j in range(1, k // 2 + 1):
        for u in range(n):
            w = (u + j) % n
            if rng.random() >= p:
                continue
            key = (min(u, w), max(u, w))
            x = int(rng.integers(n))
            cand = (min(u, x), max(u, x))
            if x == u or cand in present:
                continue
            present.discard(key)
            present.add(cand)
    return np.asarray(sorted(present), dtype=np.int64).reshape(-1, 2)


def erdos_renyi(n, p, seed=None):
    """G(n, p): every pair is an edge independently with probability ``p``."""
    n = check_int(n, "n", 1)
    p = _probability(p)
    rng = np.random.default_rng(seed)
    chunks = []
    for i in range(n - 1):
        hit = np.nonzero(rng.random(n - i - 1) < p)[0]
        if len(hit):
            chunks.append(np.column_stack([np.full(len(hit), i), hit + i + 1]))
    return np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)


def generate(model, seed=None, **params):
    if model == "preferential-attachment":
        return preferential_attachment(params["n"], params["m"], seed)
    if model == "ring-lattice-rewire":
        return ring_lattice_rewire(params["n"], params["k"], params["p"], seed)
    if model == "erdos-renyi":
        return erdos_renyi(params["n"], params["p"], seed)
    raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")


def rewire_edges(edges, fraction, seed=None):
    """Move a ``fraction`` of edges to fresh random endpoints (for paired snapshots)."""
    fraction = _probability(fraction, "fraction")
    rng = np.random.default_rng(seed)
    edges = np.asarray(edges, dtype=np.int64)
    n = int(edges.max()) + 1 if len(edges) else 0
    present = {tuple(e) for e in edges.tolist()}
    out = []
    for u, w in edges.tolist():
        if rng.random() < fraction:
            x = int(rng.integers(n))
            cand = (min(u, x), max(u, x))
            if x != u and cand not in present:
                present.discard((u, w))
                present.add(cand)
                out.append(cand)
                continue
        out.append((u, w))
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def to_snap_text(edges, header=()):
    lines = [f"# {h}" for h in header]
    lines.append("# FromNodeId\tToNodeId")
    lines.extend(f"{u}\t{w}" for u, w in np.asarray(edges).tolist())
    return "\n".join(lines) + "\n"
