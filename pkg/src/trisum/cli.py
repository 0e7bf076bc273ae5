"""Command-line front end: generators, pipeline, verifier, oracle, experiments."""

from __future__ import annotations

import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import analytic
from .errors import TrisumError
from .graph import Graph, gen_gnp, gen_random_regular, load_edge_list, write_edge_list
from .oracle import min_k_weighting, sweep_small_graphs
from .pipeline import run as run_pipeline
from .profiles import resolve_profile
from .weighting import conflicts, load_weighting, write_weighting

EXPERIMENT_COLUMNS = [
    "seed", "status", "stage", "resamples_partition", "resamples_wstage",
    "conflicts", "wall_ms",
]


def _fail(message: str, code: int = 2):
    sys.stderr.write(json.dumps({"error": message}) + "\n")
    sys.exit(code)


def _parse_gen(spec: str, seed: int) -> Graph:
    """gnp:n,p or reg:n,d."""
    try:
        kind, args = spec.split(":", 1)
        parts = args.split(",")
        if kind == "gnp":
            n, p = int(parts[0]), float(parts[1])
            return gen_gnp(n, p, seed)
        if kind == "reg":
            n, d = int(parts[0]), int(parts[1])
            return gen_random_regular(n, d, seed)
    except (ValueError, IndexError) as exc:
        raise click.BadParameter(f"bad generator spec {spec!r}: {exc}")
    raise click.BadParameter(f"unknown generator kind in {spec!r}")


def _load_graph(graph: str | None, gen: str | None, gen_seed: int) -> Graph:
    if (graph is None) == (gen is None):
        raise click.UsageError("provide exactly one of --graph and --gen")
    if graph is not None:
        return load_edge_list(graph)
    return _parse_gen(gen, gen_seed)


def _parse_overrides(pairs: tuple[str, ...]) -> dict:
    out: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.BadParameter(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        if key in ("m_levels", "modulus_m"):
            out[key] = int(value)
        elif key == "reserved_residues":
            out[key] = tuple(int(x) for x in value.split(","))
        else:
            out[key] = float(value)
    return out


@click.group()
def main():
    """Vertex-distinguishing 3-weightings: construction, oracle, verification."""


@main.command()
@click.option("--gen", required=True, help="Generator spec: gnp:n,p or reg:n,d")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
def gen(gen: str, seed: int, out: Path):
    """Generate a graph and write it as an edge list."""
    g = _parse_gen(gen, seed)
    write_edge_list(g, out)
    click.echo(f"wrote {g.vertex_count} vertices, {g.edge_count} edges to {out}")


@main.command()
@click.option("--graph", type=click.Path(exists=True), default=None)
@click.option("--gen", "gen_spec", default=None, help="Generator spec instead of a file")
@click.option("--gen-seed", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--profile", "profile_spec", default=None,
              help="Builtin name (desk, full-scale) or JSON file [default: desk]")
@click.option("--set", "overrides", multiple=True,
              help="Profile override key=value; repeatable")
@click.option("--out", required=True, help="Output prefix for .weights.txt / .outcome.json")
def weight(graph, gen_spec, gen_seed, seed, profile_spec, overrides, out):
    """Run the full construction; write the weighting only on verified success."""
    try:
        g = _load_graph(graph, gen_spec, gen_seed)
        profile = resolve_profile(profile_spec, _parse_overrides(overrides))
        outcome = run_pipeline(g, profile, seed)
    except (TrisumError, OSError, ValueError) as exc:
        _fail(str(exc))
    Path(f"{out}.outcome.json").write_text(
        json.dumps(outcome.to_dict(), indent=2, default=str) + "\n"
    )
    if outcome.success:
        write_weighting(g, outcome.weighting, f"{out}.weights.txt")
        click.echo(f"success: weighting written to {out}.weights.txt")
    else:
        _fail(f"stage {outcome.stage}: {outcome.reason}")


@main.command()
@click.option("--graph", required=True, type=click.Path(exists=True))
@click.option("--weights", required=True, type=click.Path(exists=True))
def verify(graph, weights):
    """Check a (graph, weighting) pair for adjacent equal sums."""
    try:
        g = load_edge_list(graph)
        w = load_weighting(g, weights)
    except TrisumError as exc:
        _fail(str(exc))
    bad = conflicts(g, w)
    report = {
        "edges": g.edge_count,
        "max_weight": int(w.weights.max()) if g.edge_count else 0,
        "conflict_edges": bad.tolist(),
        "ok": not bad.size,
    }
    click.echo(json.dumps(report, indent=2))
    sys.exit(0 if not bad.size else 1)


@main.command()
@click.option("--graph", type=click.Path(exists=True), default=None)
@click.option("--k-max", type=int, default=3, show_default=True)
@click.option("--sweep", is_flag=True, default=False, help="Sweep all small graphs")
@click.option("--n-max", type=int, default=5, show_default=True)
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="CSV report path for --sweep")
def oracle(graph, k_max, sweep, n_max, k, out):
    """Exact minimum-k search, or a sweep over all small connected graphs."""
    if sweep:
        report = sweep_small_graphs(n_max, k)
        if out is not None:
            with open(out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["graph_id", "n", "m", "min_k"])
                for row in report.rows:
                    writer.writerow([row.graph_id, row.n, row.m,
                                     row.min_k if row.min_k is not None else ""])
        click.echo(json.dumps({
            "checked": report.total_checked,
            "counterexamples": [r.graph_id for r in report.counterexamples],
        }))
        sys.exit(0 if not report.counterexamples else 1)
    if graph is None:
        raise click.UsageError("provide --graph or --sweep")
    g = load_edge_list(graph)
    result = min_k_weighting(g, k_max)
    click.echo(json.dumps({
        "min_k": result.min_k,
        "nodes_explored": result.nodes_explored,
    }))


@main.command()
@click.option("--grid", type=int, default=9, show_default=True,
              help="Number of r-table points")
def constants(grid):
    """Print the analytic constants report as JSON."""
    click.echo(json.dumps(analytic.constants_report(grid), indent=2))


def _experiment_task(args: tuple) -> dict:
    graph_path, gen_spec, gen_seed, profile_dict, seed = args
    from .profiles import profile_from_dict

    if graph_path is not None:
        g = load_edge_list(graph_path)
    else:
        g = _parse_gen(gen_spec, gen_seed)
    profile = profile_from_dict(profile_dict)
    outcome = run_pipeline(g, profile, seed)
    n_conflicts = ""
    if outcome.success:
        n_conflicts = 0
    return {
        "seed": seed,
        "status": outcome.status,
        "stage": outcome.stage or "",
        "resamples_partition": outcome.stats.get("resamples_partition", 0),
        "resamples_wstage": outcome.stats.get("resamples_wstage", 0),
        "conflicts": n_conflicts,
        "wall_ms": round(outcome.stats.get("wall_ms", 0.0), 3),
    }


@main.command()
@click.option("--graph", type=click.Path(exists=True), default=None)
@click.option("--gen", "gen_spec", default=None)
@click.option("--gen-seed", type=int, default=0, show_default=True)
@click.option("--seeds", default="0,1,2,3,4,5,6,7,8,9",
              show_default=True, help="Comma-separated distinct run seeds")
@click.option("--profile", "profile_spec", default=None)
@click.option("--set", "overrides", multiple=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--jobs", type=int, default=1, show_default=True)
def experiment(graph, gen_spec, gen_seed, seeds, profile_spec, overrides, out, jobs):
    """Fan the pipeline out over seeds and aggregate results into CSV."""
    seed_list = [int(s) for s in seeds.split(",") if s.strip() != ""]
    if len(set(seed_list)) != len(seed_list):
        raise click.BadParameter("seeds must be distinct")
    if (graph is None) == (gen_spec is None):
        raise click.UsageError("provide exactly one of --graph and --gen")
    try:
        profile = resolve_profile(profile_spec, _parse_overrides(overrides))
    except (OSError, ValueError) as exc:
        _fail(str(exc))
    tasks = [
        (graph, gen_spec, gen_seed, profile.to_dict(), seed) for seed in seed_list
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_experiment_task, tasks))
    else:
        rows = [_experiment_task(t) for t in tasks]
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=EXPERIMENT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    successes = sum(1 for r in rows if r["status"] == "success")
    click.echo(json.dumps({
        "runs": len(rows),
        "successes": successes,
        "success_rate": successes / len(rows) if rows else 0.0,
        "csv": str(out),
    }))


if __name__ == "__main__":
    main()
