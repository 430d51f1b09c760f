import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formanflow.exceptions import ContractError
from formanflow.graph import (
    Graph,
    WeightScheme,
    build_graph,
    degree_distribution,
    incident_edges,
)


def test_build_merges_duplicates_and_drops_loops():
    g = build_graph([(0, 1), (1, 0), (2, 2), (1, 3)])
    assert g.node_count == 4
    assert g.edges.tolist() == [[0, 1], [1, 3]]
    assert g.multiplicity.tolist() == [2, 1]
    assert incident_edges(g, 2).size == 0


def test_build_empty():
    g = build_graph([])
    assert g.node_count == 0 and g.edge_count == 0


def test_build_compacts_ids():
    g = build_graph([(5, 9)])
    assert g.node_count == 2
    assert g.relabel == {5: 0, 9: 1}
    assert g.edges.tolist() == [[0, 1]]


def test_build_rejects_negative_ids():
    with pytest.raises(ValueError):
        build_graph([(-1, 2)])


def test_extra_node_ids_become_isolated():
    g = build_graph([(1, 2)], node_ids=[7])
    assert g.node_ids.tolist() == [1, 2, 7]
    assert g.degrees.tolist() == [1, 1, 0]


def test_graph_arrays_are_read_only(triangle):
    with pytest.raises(ValueError):
        triangle.edges[0, 0] = 5


@pytest.mark.parametrize("edges,v,expected", [
    ([(0, 1), (0, 2), (0, 3)], 0, 3),
    ([(0, 1), (1, 2), (0, 2)], 1, 2),
])
def test_incident_edges_counts(edges, v, expected):
    g = build_graph(edges)
    assert len(incident_edges(g, v)) == expected == g.degrees[v]


def test_incident_edges_out_of_range(triangle):
    with pytest.raises(IndexError):
        incident_edges(triangle, 3)


def test_degree_distribution_unweighted_star():
    g = build_graph([(0, 1), (0, 2), (0, 3)])
    h = degree_distribution(g)
    assert h.values.tolist() == [3, 1, 1, 1]
    assert h.counts.tolist() == [0, 3, 0, 1]


def test_degree_distribution_weighted_single_edge(single_edge):
    w = WeightScheme([0.5], [0.5, 0.5])
    h = degree_distribution(single_edge, w)
    assert h.values.tolist() == [0.5, 0.5]
    assert h.counts.sum() == 2


def test_degree_distribution_empty():
    h = degree_distribution(build_graph([]))
    assert h.counts.size == 0 and h.bin_edges.size == 0


def test_weight_scheme_mismatch(triangle):
    with pytest.raises(ContractError):
        WeightScheme([1.0, 1.0], [1, 1, 1]).check_against(triangle)


def test_from_canonical_rejects_duplicates():
    with pytest.raises(ValueError):
        Graph.from_canonical(3, [(0, 1), (0, 1)])


edge_lists = st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=80)


@given(edge_lists)
def test_adjacency_consistency(raw):
    g = build_graph(raw)
    seen = np.zeros(g.edge_count, dtype=int)
    for v in range(g.node_count):
        for k in incident_edges(g, v):
            assert v in g.edges[k]
            seen[k] += 1
    assert np.all(seen == 2)
    assert np.all(g.edges[:, 0] < g.edges[:, 1])
    assert len({tuple(e) for e in g.edges.tolist()}) == g.edge_count
    assert g.multiplicity.sum() == sum(1 for a, b in raw if a != b)


@settings(max_examples=50)
@given(edge_lists, st.randoms(use_true_random=False))
def test_relabel_equivariance(raw, rnd):
    ids = sorted({x for e in raw for x in e})
    perm = dict(zip(ids, rnd.sample(range(100, 100 + 3 * len(ids) + 1), len(ids))))
    g = build_graph(raw)
    h = build_graph([(perm[a], perm[b]) for a, b in raw])
    assert g.edge_count == h.edge_count
    mapped = {frozenset((perm[int(g.node_ids[a])], perm[int(g.node_ids[b])]))
              for a, b in g.edges.tolist()}
    original = {frozenset((int(h.node_ids[a]), int(h.node_ids[b]))) for a, b in h.edges.tolist()}
    assert mapped == original
