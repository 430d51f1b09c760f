"""Small builders shared by test modules."""

import numpy as np

from formanflow.ingest import RawEdges, WeightingConfig, snapshot_from_raw


def snapshot(pairs, mode="unit", label="s", time_index=0, isolated=None, cap=6):
    raw = RawEdges(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    if isolated:
        raw.header["isolated"] = " ".join(str(i) for i in isolated)
    return snapshot_from_raw(raw, WeightingConfig(mode=mode, cap=cap), label=label,
                             time_index=time_index)


def hub_pair():
    """A hub-and-spoke graph and a copy with part of the hub's edges rewired."""
    base = [(0, i) for i in range(1, 9)] + [(i, i + 1) for i in range(1, 8)] + [(8, 9), (9, 10),
                                                                                 (10, 11), (11, 1)]
    moved = [(0, i) for i in range(1, 5)] + [(10, i) for i in range(5, 9)]
    moved += [(i, i + 1) for i in range(1, 8)] + [(8, 9), (9, 10), (10, 11), (11, 1)]
    return base, moved
