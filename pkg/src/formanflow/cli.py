"""Command line: ``formanflow <stats|curvature|flow|diff|gen> [flags] <inputs>``.

Every flag can also be set through an environment variable named
``FORMANFLOW_<SUBCOMMAND>_<FLAG>``, e.g. ``FORMANFLOW_DIFF_THRESHOLD=0.8``.

Exit codes: 0 success, 2 input error, 3 config error, 4 resource budget.
"""

import csv
import json
import logging
import os
import sys
from importlib.metadata import PackageNotFoundError, version

import click
import numpy as np

from . import change, curvature, flow, generators, ingest
from .exceptions import BudgetError, ConfigError, FlowOverflowError, InputError
from .graph import DEFAULT_EPSILON_FLOOR, degree_distribution

PROVENANCE_SCHEMA = "formanflow.provenance/1"
EXIT_INPUT, EXIT_CONFIG, EXIT_BUDGET = 2, 3, 4

logger = logging.getLogger("formanflow")


def _version():
    try:
        return version("formanflow")
    except PackageNotFoundError:
        return "unknown"


class _Group(click.Group):
    """Maps library errors onto the documented exit codes."""

    def main(self, args=None, prog_name=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args=args, prog_name=prog_name, standalone_mode=False, **extra)
        except click.UsageError as e:
            e.show()
            sys.exit(EXIT_CONFIG)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)
        except (InputError, OSError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_INPUT)
        except (ConfigError, FlowOverflowError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except BudgetError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_BUDGET)
        sys.exit(rv if isinstance(rv, int) else 0)


def _fmt(x):
    return repr(float(x))


def _write(path, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)


def _write_json(path, obj):
    _write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def _histogram_rows(h):
    return [(_fmt(lo), _fmt(hi), c) for lo, hi, c in h.to_rows()]


def _provenance(out, command, config, inputs):
    _write_json(os.path.join(out, "provenance.json"), {
        "schema": PROVENANCE_SCHEMA,
        "tool_version": _version(),
        "command": command,
        "config": config,
        "inputs": [{"path": s.source_meta.get("path"), "sha256": s.source_meta.get("sha256")}
                   for s in inputs],
    })


def _load(path, fmt, weighting, cap, epsilon_floor, edge_budget, threads, time_index=0):
    wcfg = ingest.WeightingConfig(weighting, cap, epsilon_floor, edge_budget)
    return ingest.load_snapshot(path, fmt, wcfg, time_index=time_index, n_jobs=threads)


def input_options(f):
    opts = [
        click.option("--format", "fmt", type=click.Choice(ingest.FORMATS), default="snap",
                     show_default=True, help="Input dialect."),
        click.option("--weighting", type=click.Choice(["detour", "augmented", "multiplicity",
                                                       "unit"]),
                     default="detour", show_default=True, help="Edge weighting scheme."),
        click.option("--cap", type=int, default=6, show_default=True,
                     help="Path-length cap in hops."),
        click.option("--epsilon-floor", type=float, default=DEFAULT_EPSILON_FLOOR,
                     show_default=True, help="Smallest admissible edge weight."),
        click.option("--edge-budget", type=int, default=2_000_000, show_default=True,
                     help="Edge limit for the augmented weighting."),
        click.option("--threads", type=int, default=1, show_default=True,
                     help="Worker threads; results do not depend on it."),
        click.option("--out", "out", type=click.Path(file_okay=False), default=".",
                     show_default=True, help="Output directory."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def flow_options(f, normalize_default="none"):
    """Flow flags; ``diff`` defaults to max-normalization, ``flow`` to none."""
    opts = [
        click.option("--steps", type=int, default=10, show_default=True,
                     help="Number of flow iterations K."),
        click.option("--dt", type=float, default=0.8, show_default=True, help="Step size."),
        click.option("--variant", type=click.Choice(flow.FLOW_VARIANTS), default="ricci",
                     show_default=True),
        click.option("--normalize", type=click.Choice(flow.NORMALIZATIONS),
                     default=normalize_default, show_default=True,
                     help="Per-step weight normalization."),
        click.option("--frozen-node-weights", is_flag=True,
                     help="Keep node weights fixed during the flow."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


@click.group(cls=_Group, context_settings={"auto_envvar_prefix": "FORMANFLOW",
                                           "help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
@click.version_option(_version(), prog_name="formanflow")
def cli(verbose):
    """Forman-Ricci curvature, Ricci flow and snapshot change detection."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.argument("input_path", type=click.Path(dir_okay=False))
@input_options
@click.option("--bins", type=int, default=20, show_default=True)
def stats(input_path, fmt, weighting, cap, epsilon_floor, edge_budget, threads, out, bins):
    """Degree and curvature distributions of one snapshot."""
    if bins < 1:
        raise ConfigError("--bins must be >= 1")
    snap = _load(input_path, fmt, weighting, cap, epsilon_floor, edge_budget, threads)
    os.makedirs(out, exist_ok=True)
    g, w = snap.graph, snap.weights
    field = curvature.forman_ricci_all(g, w, threads)
    header = ["bin_low", "bin_high", "count"]
    _write_csv(os.path.join(out, "degree_histogram.csv"), header,
               _histogram_rows(degree_distribution(g)))
    _write_csv(os.path.join(out, "weighted_degree_histogram.csv"), header,
               _histogram_rows(degree_distribution(g, w, bins)))
    _write_csv(os.path.join(out, "curvature_histogram.csv"), header,
               _histogram_rows(curvature.curvature_histogram(field, bins)))
    summary = {"nodes": g.node_count, "weighting": w.mode, **field.summary()}
    _write_json(os.path.join(out, "summary.json"), summary)
    _provenance(out, "stats", {"format": fmt, "weighting": weighting, "cap": cap,
                               "epsilon_floor": epsilon_floor, "edge_budget": edge_budget,
                               "threads": threads, "bins": bins}, [snap])
    click.echo(json.dumps(summary, sort_keys=True))


@cli.command("curvature")
@click.argument("input_path", type=click.Path(dir_okay=False))
@input_options
@click.option("--dense-map", is_flag=True, help="Also write the dense node-by-node map.")
@click.option("--dense-budget", type=int, default=curvature.DEFAULT_DENSE_BUDGET,
              show_default=True, help="Largest node count for the dense map.")
def curvature_cmd(input_path, fmt, weighting, cap, epsilon_floor, edge_budget, threads, out,
                  dense_map, dense_budget):
    """Per-edge Forman-Ricci and per-node scalar curvature."""
    snap = _load(input_path, fmt, weighting, cap, epsilon_floor, edge_budget, threads)
    g, w = snap.graph, snap.weights
    field = curvature.forman_ricci_all(g, w, threads)
    matrix = curvature.curvature_map_export(g, field, dense_budget) if dense_map else None
    os.makedirs(out, exist_ok=True)
    ids = g.node_ids
    _write_csv(os.path.join(out, "edge_curvature.csv"), ["u", "w", "gamma", "ricci"],
               [(int(ids[u]), int(ids[v]), _fmt(x), _fmt(r)) for (u, v), x, r in
                zip(g.edges.tolist(), w.edge_weight.tolist(), field.edge_ric.tolist())])
    _write_csv(os.path.join(out, "node_curvature.csv"), ["node", "omega", "scalar"],
               [(int(i), _fmt(o), _fmt(s)) for i, o, s in
                zip(ids.tolist(), w.node_weight.tolist(), field.node_scal.tolist())])
    if matrix is not None:
        np.savetxt(os.path.join(out, "curvature_map.csv"), matrix, delimiter=",", fmt="%.17g")
    _provenance(out, "curvature", {"format": fmt, "weighting": weighting, "cap": cap,
                                   "epsilon_floor": epsilon_floor, "threads": threads,
                                   "dense_map": dense_map, "dense_budget": dense_budget}, [snap])
    click.echo(f"{g.edge_count} edges written to {out}")


@cli.command("flow")
@click.argument("input_path", type=click.Path(dir_okay=False))
@input_options
@flow_options
def flow_cmd(input_path, fmt, weighting, cap, epsilon_floor, edge_budget, threads, out,
             steps, dt, variant, normalize, frozen_node_weights):
    """Evolve edge weights and export the trace."""
    cfg = flow.FlowConfig(steps, dt, epsilon_floor, not frozen_node_weights, variant, normalize)
    snap = _load(input_path, fmt, weighting, cap, epsilon_floor, edge_budget, threads)
    trace = flow.ricci_flow(snap.graph, snap.weights, cfg, threads)
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, "flow_trace.csv"), trace.to_csv())
    summary = trace.summary()
    summary["finite"] = trace.finite
    _write_json(os.path.join(out, "flow_summary.json"), summary)
    final = ingest.Snapshot(snap.label, snap.time_index, snap.graph, trace.final)
    if trace.finite:
        _write(os.path.join(out, "final_weights.txt"), ingest.export_edgelist(final))
    _provenance(out, "flow", {"format": fmt, "weighting": weighting, "cap": cap,
                              "threads": threads, **cfg.to_dict()}, [snap])
    click.echo(f"floor events: {trace.total_floor_events}")


def diff_flow_options(f):
    return flow_options(f, normalize_default="max")


@cli.command()
@click.argument("input_a", type=click.Path(dir_okay=False))
@click.argument("input_b", type=click.Path(dir_okay=False))
@input_options
@click.option("--threshold", type=float, default=change.DEFAULT_THRESHOLD, show_default=True,
              help="Correlation threshold t.")
@click.option("--formats", default=None,
              help="Comma-separated subset of json,csv,pgm,pgm-ascii "
                   "[default: json,csv plus pgm when within budget].")
@click.option("--heatmap-budget", type=int, default=change.DEFAULT_HEATMAP_BUDGET,
              show_default=True, help="Largest node count for a dense PGM heatmap.")
@diff_flow_options
def diff(input_a, input_b, fmt, weighting, cap, epsilon_floor, edge_budget, threads, out,
         threshold, formats, heatmap_budget, steps, dt, variant, normalize,
         frozen_node_weights):
    """Flag regions that changed between two consecutive snapshots."""
    cfg = flow.FlowConfig(steps, dt, epsilon_floor, not frozen_node_weights, variant, normalize)
    if not -1.0 <= threshold <= 1.0:
        raise ConfigError("--threshold must lie in [-1, 1]")
    if formats is None:
        wanted = ["json", "csv", "pgm"]
        strict = False
    else:
        wanted = [f.strip() for f in formats.split(",") if f.strip()]
        strict = True
        for f in wanted:
            if f not in change.HEATMAP_FORMATS:
                raise ConfigError(f"unknown output format {f!r}")
    a = _load(input_a, fmt, weighting, cap, epsilon_floor, edge_budget, threads, 0)
    b = _load(input_b, fmt, weighting, cap, epsilon_floor, edge_budget, threads, 1)
    pair = change.evolve_pair(a, b, cfg, threads)
    report = change.detect(pair, threshold)
    n = len(report.union_ids)
    if strict and any(f.startswith("pgm") for f in wanted) and n > heatmap_budget:
        raise BudgetError(f"{n} nodes exceed the heatmap budget of {heatmap_budget}; "
                          "use --formats json,csv")
    os.makedirs(out, exist_ok=True)
    for f in wanted:
        if f.startswith("pgm") and n > heatmap_budget:
            logger.warning("skipping PGM heatmap: %d nodes exceed budget %d", n, heatmap_budget)
            continue
        name = {"json": "report.json", "csv": "heatmap.csv", "pgm": "heatmap.pgm",
                "pgm-ascii": "heatmap_ascii.pgm"}[f]
        _write(os.path.join(out, name), change.export_heatmap(report, f, heatmap_budget))
    _write_csv(os.path.join(out, "node_scores.csv"), ["node", "similarity", "flagged"],
               [(int(i), _fmt(s), int(s < threshold)) for i, s in
                zip(report.union_ids.tolist(), report.node_similarity.tolist())])
    _provenance(out, "diff", {"format": fmt, "weighting": weighting, "cap": cap,
                              "threshold": threshold, "threads": threads,
                              "scorer": change.SCORER, **cfg.to_dict()}, [a, b])
    click.echo(f"flagged {len(report.flagged_nodes)} nodes, {len(report.flagged_edges)} edges")


@cli.command()
@click.argument("model", type=click.Choice(generators.MODELS))
@click.option("--n", "n", type=int, required=True, help="Number of nodes.")
@click.option("--m", "m", type=int, default=2, show_default=True,
              help="Links per new node (preferential-attachment).")
@click.option("--k", "k", type=int, default=4, show_default=True,
              help="Lattice degree (ring-lattice-rewire).")
@click.option("--p", "p", type=float, default=0.0, show_default=True,
              help="Edge or rewiring probability.")
@click.option("--seed", type=int, required=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default="-",
              show_default=True)
def gen(model, n, m, k, p, seed, output):
    """Write a seeded synthetic graph as a SNAP edge list."""
    edges = generators.generate(model, seed=seed, n=n, m=m, k=k, p=p)
    params = {"n": n, "m": m} if model == "preferential-attachment" else (
        {"n": n, "k": k, "p": p} if model == "ring-lattice-rewire" else {"n": n, "p": p})
    header = [f"formanflow gen {model} " + " ".join(f"{key}={v}" for key, v in params.items())
              + f" seed={seed}", f"Nodes: {n} Edges: {len(edges)}"]
    text = generators.to_snap_text(edges, header)
    if output == "-":
        click.echo(text, nl=False)
    else:
        _write(output, text)


def main(argv=None):
    cli.main(args=argv, prog_name="formanflow")


if __name__ == "__main__":
    main()
