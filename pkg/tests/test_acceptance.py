"""Acceptance gate: one recorded PASS/FAIL line per criterion.

Tolerances and runtime limits are pinned below; results are printed in the
``acceptance criteria`` section of the pytest terminal summary.
"""

import json
import os
import time

import numpy as np
import pytest
from click.testing import CliRunner
from scipy.stats import spearmanr

from formanflow.change import (
    detect,
    detection_flow_config,
    evolve_pair,
    export_heatmap,
    read_pgm,
    similarity_scores,
)
from formanflow.cli import cli
from formanflow.curvature import forman_ricci_all
from formanflow.flow import FlowConfig, ricci_flow, ricci_update
from formanflow.generators import preferential_attachment, rewire_edges, to_snap_text
from formanflow.graph import WeightScheme, build_graph, unit_weights
from formanflow.ingest import WeightingConfig, export_edgelist, load_snapshot
from formanflow.weighting import node_weights, weight_graph

from conftest import random_graph
from helpers import hub_pair, snapshot
from oracles import brute_force_scores, naive_forman_all, reference_flow

UNIT_TOL = 1e-12
HOMOGENEITY_RTOL = 1e-9
FLOW_TOL = 1e-12
THRESHOLD = 0.9
LIMIT_FAST = 5.0
LIMIT_SYNTHETIC = 10.0
LIMIT_PIPELINE = 60.0
EPS = 1e-6

DATA = os.path.join(os.path.dirname(__file__), "data")


def _graphs(seed, count, n_max, densities):
    rng = np.random.default_rng(seed)
    for i in range(count):
        n = int(rng.integers(2, n_max + 1))
        yield rng, random_graph(rng, n, densities[i % len(densities)])


def test_c01_unit_closed_form(acceptance):
    graphs = [g for _, g in _graphs(1, 200, 200, [0.01, 0.03, 0.08, 0.2, 0.5])]
    t0 = time.perf_counter()
    fields = [forman_ricci_all(g, unit_weights(g)) for g in graphs]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for g, f in zip(graphs, fields):
        d = g.degrees
        expected = 4.0 - d[g.edges[:, 0]] - d[g.edges[:, 1]]
        if g.edge_count:
            worst = max(worst, float(np.max(np.abs(f.edge_ric - expected))))
    ok = worst <= UNIT_TOL and elapsed < LIMIT_FAST
    acceptance("C1 unit-weight closed form", ok,
               f"max|err|={worst:.1e} tol={UNIT_TOL:g} time={elapsed:.2f}s<{LIMIT_FAST:g}s")
    assert ok


def test_c02_oracle_equivalence(acceptance):
    cases = []
    for rng, g in _graphs(2, 100, 50, [0.05, 0.15, 0.3, 0.6]):
        gamma = rng.uniform(EPS, 1.0, g.edge_count)
        cases.append((g, WeightScheme(gamma, node_weights(g, gamma))))
    t0 = time.perf_counter()
    batch = [forman_ricci_all(g, w).edge_ric for g, w in cases]
    elapsed = time.perf_counter() - t0
    mismatched = sum(
        r.tolist() != naive_forman_all(g.edges.tolist(), w.edge_weight.tolist(),
                                       w.node_weight.tolist())
        for (g, w), r in zip(cases, batch))
    ok = mismatched == 0 and elapsed < LIMIT_FAST
    acceptance("C2 batch equals naive oracle", ok,
               f"mismatched graphs={mismatched}/100 (exact) time={elapsed:.2f}s<{LIMIT_FAST:g}s")
    assert ok


def test_c03_analytic_fixtures(acceptance):
    def ric(pairs):
        g = build_graph(pairs)
        return forman_ricci_all(g, unit_weights(g))

    k3 = [(0, 1), (1, 2), (0, 2)]
    k4 = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    p3 = ric([(0, 1), (1, 2)])
    checks = {
        "edge": ric([(0, 1)]).edge_ric.tolist() == [2.0],
        "K3": ric(k3).edge_ric.tolist() == [0.0] * 3,
        "K4": ric(k4).edge_ric.tolist() == [-2.0] * 6,
        "P3": p3.edge_ric.tolist() == [1.0, 1.0] and p3.node_scal.tolist() == [1.0, 2.0, 1.0],
    }
    ok = all(checks.values())
    acceptance("C3 analytic fixtures", ok, " ".join(f"{k}={'ok' if v else 'bad'}"
                                                     for k, v in checks.items()))
    assert ok


def test_c04_homogeneity(acceptance):
    worst = 0.0
    for rng, g in _graphs(4, 20, 60, [0.05, 0.2]):
        if not g.edge_count:
            continue
        gamma = rng.uniform(EPS, 1.0, g.edge_count)
        w = WeightScheme(gamma, node_weights(g, gamma))
        base = forman_ricci_all(g, w).edge_ric
        nz = base != 0
        for c in (0.1, 0.5, 2.0):
            scaled = forman_ricci_all(g, w.scaled(c)).edge_ric
            rel = np.abs(scaled[nz] - c * base[nz]) / np.abs(c * base[nz])
            if rel.size:
                worst = max(worst, float(rel.max()))
            worst = max(worst, float(np.abs(scaled[~nz]).max(initial=0.0)))
    ok = worst <= HOMOGENEITY_RTOL
    acceptance("C4 homogeneity", ok, f"max rel err={worst:.1e} tol={HOMOGENEITY_RTOL:g}")
    assert ok


def _mean_curvature(g, mode):
    g, w = weight_graph(g, mode)
    return float(forman_ricci_all(g, w).edge_ric.mean())


def test_c05_negative_average_curvature(acceptance):
    t0 = time.perf_counter()
    g = build_graph(preferential_attachment(2000, 2, seed=2025))
    mean = _mean_curvature(g, "unit")
    elapsed = time.perf_counter() - t0
    ok = mean < 0 and elapsed < LIMIT_SYNTHETIC
    detail = f"PA(2000,2) mean={mean:.3f}<0 time={elapsed:.2f}s<{LIMIT_SYNTHETIC:g}s"
    path = os.environ.get("FORMANFLOW_GNUTELLA08")
    if path and os.path.exists(path):
        snap = load_snapshot(path, weighting=WeightingConfig(mode="unit"))
        m_unit = _mean_curvature(snap.graph, "unit")
        m_detour = _mean_curvature(snap.graph, "detour")
        ok = ok and m_unit < 0 and m_detour < 0
        detail += f"; gnutella08 unit={m_unit:.3f} detour={m_detour:.3f}"
    else:
        detail += "; gnutella08 not available (set FORMANFLOW_GNUTELLA08), skipped"
    acceptance("C5 negative average curvature", ok, detail)
    assert ok


def test_c06_flow_contracts(acceptance):
    k3 = build_graph([(0, 1), (1, 2), (0, 2)])
    ta = ricci_flow(k3, unit_weights(k3), FlowConfig(steps=10, dt=0.8))
    a = bool(np.all(ta.edge_weights == 1.0))

    edge = build_graph([(0, 1)])
    tb = ricci_flow(edge, unit_weights(edge), FlowConfig(steps=2, dt=0.1))
    err = max(abs(tb.edge_weights[1, 0] - 0.8), abs(tb.edge_weights[2, 0] - 0.672))
    b = err <= FLOW_TOL

    tc = ricci_flow(edge, unit_weights(edge), FlowConfig(steps=1, dt=0.8))
    c = tc.total_floor_events == 1

    violations = 0
    for rng, g in _graphs(6, 50, 40, [0.1, 0.3]):
        gamma = rng.uniform(EPS, 1.0, g.edge_count)
        w = WeightScheme(gamma, node_weights(g, gamma))
        r = forman_ricci_all(g, w).edge_ric
        raw = ricci_update(gamma, r, 0.8)
        violations += int(np.count_nonzero(raw[r > 0] >= gamma[r > 0]))
    d = violations == 0
    ok = a and b and c and d
    acceptance("C6 flow contracts", ok,
               f"(a) K3 fixed={a} (b) |err|={err:.1e} tol={FLOW_TOL:g} "
               f"(c) floor events={tc.total_floor_events} (d) sign violations={violations}")
    assert ok


def test_c07_change_detection(acceptance):
    base, moved = hub_pair()
    a, b = snapshot(base, mode="detour", label="a"), snapshot(moved, mode="detour", label="b")

    same = detect(evolve_pair(a, a), THRESHOLD)
    ok_a = not same.flagged_nodes and not same.flagged_edges

    ab = detect(evolve_pair(a, b), THRESHOLD)
    ba = detect(evolve_pair(b, a), THRESHOLD)
    ok_b = (np.array_equal(ab.node_similarity, ba.node_similarity)
            and ab.flagged_nodes == ba.flagged_nodes and ab.flagged_edges == ba.flagged_edges
            and np.array_equal(ab.heatmap(), ba.heatmap()))

    pair = evolve_pair(a, b)
    sets = [detect(pair, t).flagged_nodes for t in (0.5, 0.7, 0.9, 0.99)]
    ok_c = all(x <= y for x, y in zip(sets, sets[1:]))

    cfg = detection_flow_config()

    def evolved(s):
        e = s.graph.edges.tolist()
        h = reference_flow(e, s.graph.node_count, s.weights.edge_weight.tolist(),
                           cfg.steps, cfg.dt, cfg.epsilon_floor, normalize=True)
        ids = s.graph.node_ids
        return [(int(ids[u]), int(ids[w])) for u, w in e], h[-1]

    ea, wa = evolved(a)
    eb, wb = evolved(b)
    union = sorted(set(a.graph.node_ids.tolist()) | set(b.graph.node_ids.tolist()))
    oracle = brute_force_scores(union, ea, wa, eb, wb)
    expected = {v for v, s in oracle.items() if s < THRESHOLD}
    ok_d = ab.flagged_nodes == expected and bool(expected)

    ok = ok_a and ok_b and ok_c and ok_d
    acceptance("C7 change detection", ok,
               f"(a) identical flags={len(same.flagged_nodes)} (b) symmetric={ok_b} "
               f"(c) monotone sizes={[len(s) for s in sets]} "
               f"(d) flagged={sorted(ab.flagged_nodes)} oracle={sorted(expected)}")
    assert ok


@pytest.fixture(scope="module")
def desk_pair(tmp_path_factory):
    d = tmp_path_factory.mktemp("desk")
    e0 = preferential_attachment(5000, 2, seed=11)
    e1 = rewire_edges(e0, 0.05, seed=12)
    pa, pb = d / "t0.txt", d / "t1.txt"
    pa.write_text(to_snap_text(e0, ["synthetic t0"]))
    pb.write_text(to_snap_text(e1, ["synthetic t1"]))
    return d, str(pa), str(pb), len(e0)


def _run_diff(paths, out, threads):
    args = ["diff", paths[0], paths[1], "--weighting", "detour", "--cap", "6", "--steps", "10",
            "--dt", "0.8", "--threshold", str(THRESHOLD), "--threads", str(threads),
            "--out", str(out)]
    t0 = time.perf_counter()
    r = CliRunner().invoke(cli, args)
    return r, time.perf_counter() - t0


def test_c08_desk_scale_pipeline(acceptance, desk_pair):
    d, pa, pb, m = desk_pair
    r1, t1 = _run_diff((pa, pb), d / "one", 1)
    r4, _ = _run_diff((pa, pb), d / "four", 4)
    outputs = ("report.json", "heatmap.csv", "node_scores.csv")
    identical = all((d / "one" / f).read_bytes() == (d / "four" / f).read_bytes()
                    for f in outputs) if r1.exit_code == r4.exit_code == 0 else False
    flagged = len(json.loads((d / "one" / "report.json").read_text())["flagged_nodes"]) \
        if r1.exit_code == 0 else -1
    ok = r1.exit_code == 0 and t1 < LIMIT_PIPELINE and identical
    acceptance("C8 desk-scale pipeline", ok,
               f"edges={m} single-thread={t1:.1f}s<{LIMIT_PIPELINE:g}s "
               f"threads=4 bit-identical={identical} flagged nodes={flagged}")
    assert ok, r1.output


def _edge_map(s):
    ids = s.graph.node_ids
    return {(int(ids[u]), int(ids[w])): x
            for (u, w), x in zip(s.graph.edges.tolist(), s.weights.edge_weight.tolist())}


def test_c09_format_fidelity(acceptance, tmp_path):
    results = {}
    for name, fmt, mode in (("p2p_small.txt", "snap", "detour"),
                            ("out.contact_small", "konect", "multiplicity")):
        s = load_snapshot(os.path.join(DATA, name), format=fmt,
                          weighting=WeightingConfig(mode=mode))
        p = tmp_path / f"{name}.export"
        p.write_text(export_edgelist(s))
        back = load_snapshot(p, format="weighted")
        results[fmt] = (_edge_map(back) == _edge_map(s)
                        and np.array_equal(back.graph.node_ids, s.graph.node_ids))

    k3 = snapshot([(0, 1), (1, 2), (0, 2)])
    zero = read_pgm(export_heatmap(detect(evolve_pair(k3, k3), THRESHOLD)))
    p3 = snapshot([(0, 1), (1, 2)])
    full = read_pgm(export_heatmap(detect(evolve_pair(k3, p3, FlowConfig(steps=1, dt=0.8)),
                                          THRESHOLD)))
    pgm_ok = int(zero.max()) == 0 and int(full.max()) == 255
    ok = all(results.values()) and pgm_ok
    acceptance("C9 format fidelity", ok,
               f"snap round trip={results['snap']} konect round trip={results['konect']} "
               f"pgm zero max={int(zero.max())} change max={int(full.max())}")
    assert ok


def test_c10_degree_curvature_relationship(acceptance):
    unit_rho = []
    for _, g in _graphs(10, 20, 150, [0.03, 0.1]):
        if g.edge_count < 3:
            continue
        d = g.degrees
        s = d[g.edges[:, 0]] + d[g.edges[:, 1]]
        if np.all(s == s[0]):
            continue
        r = forman_ricci_all(g, unit_weights(g)).edge_ric
        unit_rho.append(spearmanr(s, r).statistic)
    worst_unit = max(abs(x + 1.0) for x in unit_rho)

    detour_rho = []
    for seed in (1, 2, 3):
        g = build_graph(preferential_attachment(1000, 2, seed=seed))
        g, w = weight_graph(g, "detour")
        d = g.degrees
        s = d[g.edges[:, 0]] + d[g.edges[:, 1]]
        detour_rho.append(float(spearmanr(s, forman_ricci_all(g, w).edge_ric).statistic))
    ok = worst_unit <= UNIT_TOL and all(x < 0 for x in detour_rho)
    acceptance("C10 degree-curvature correlation", ok,
               f"unit max|rho+1|={worst_unit:.1e} over {len(unit_rho)} graphs; "
               f"detour rho={[round(x, 3) for x in detour_rho]}")
    assert ok
