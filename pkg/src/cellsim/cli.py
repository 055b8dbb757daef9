"""Command line entry points: ``dse``, ``sim`` and ``workload`` (also grouped under ``cellsim``)."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from cellsim import dse as dse_mod
from cellsim.actions import ActionCosts
from cellsim.fabric import NonTermination
from cellsim.graph_store import OutOfMemory
from cellsim.harness import Mode, RunConfig, emit_reports, load_schedule, run
from cellsim.workloads import (
    SamplerConfig,
    WorkloadError,
    generate,
    load_increments,
    read_edges,
    schedule_stats,
    write_edges,
)

EXIT_MISMATCH = 2
EXIT_NONTERMINATION = 3
EXIT_CONFIG = 4

_SUFFIX = {"k": 1024, "m": 1024**2, "g": 1024**3}


def _parse_size(text: str) -> int:
    text = text.strip().lower().removesuffix("ib").removesuffix("b")
    if text and text[-1] in _SUFFIX:
        return int(text[:-1]) * _SUFFIX[text[-1]]
    return int(text)


def _parse_grid(_ctx, _param, value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise click.BadParameter(f"expected WxH, got {value!r}") from None


def _split_list(value: str | None) -> list[str]:
    return [v for v in (value or "").split(",") if v.strip()]


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose: int):
    """Message-driven compute-cell chip simulator."""
    logging.basicConfig(level=logging.WARNING - 10 * verbose, format="%(levelname)s %(name)s: %(message)s")


# -- dse ---------------------------------------------------------------------


@click.group()
def dse():
    """Chip design-space exploration."""


@dse.command("sweep")
@click.option("--area-mm2", type=float, default=306.0, show_default=True)
@click.option("--density-mtx-mm2", type=float, default=91.0, show_default=True, help="million transistors per mm^2")
@click.option("--shape", type=click.Choice([s.value for s in dse_mod.CellShape]), default="square", show_default=True)
@click.option(
    "--mem-sizes",
    default=",".join(str(1024 << i) for i in range(11)),
    show_default=True,
    help="comma-separated bytes per cell (K/M suffixes allowed)",
)
@click.option("--model", "overrides", multiple=True, metavar="KEY=VALUE", help="override a transistor-model coefficient")
@click.option("--out", type=click.Path(dir_okay=False), help="CSV path (default stdout)")
def dse_sweep(area_mm2, density_mtx_mm2, shape, mem_sizes, overrides, out):
    try:
        sizes = [_parse_size(s) for s in _split_list(mem_sizes)]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--mem-sizes")
    kv = {}
    for item in overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected key=value, got {item!r}", param_hint="--model")
        kv[key.strip()] = val.strip()
    try:
        model = dse_mod.TransistorModel().replace(**kv)
        proc = dse_mod.ProcessParams(density_mtx_mm2 * 1e6, area_mm2)
        if out:
            with open(out, "w", newline="") as fh:
                dse_mod.sweep(sizes, dse_mod.CellShape(shape), proc, model, fh)
        else:
            dse_mod.sweep(sizes, dse_mod.CellShape(shape), proc, model, sys.stdout)
    except (KeyError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


# -- sim ---------------------------------------------------------------------


@click.group()
def sim():
    """Cycle-level simulation runs."""


@sim.command("run")
@click.option("--grid", default="32x32", show_default=True, callback=_parse_grid)
@click.option("--mode", type=click.Choice([m.value for m in Mode]), default="both", show_default=True)
@click.option("--root", type=int, default=0, show_default=True)
@click.option("--increments", "increment_files", required=True, help="comma-separated TSV files, one per increment")
@click.option("--increment-index", type=click.Path(exists=True, dir_okay=False), help="split a single TSV by these counts")
@click.option("--id-base", type=int, default=0, show_default=True)
@click.option("--undirected/--directed", default=True, show_default=True)
@click.option("--chunk-cap", type=int, default=8, show_default=True)
@click.option("--fifo-depth", type=int, default=4, show_default=True)
@click.option("--mem-per-cell", default="64K", show_default=True)
@click.option("--predicate-cycles", type=int, default=1, show_default=True)
@click.option("--work-cycles", type=int, default=1, show_default=True)
@click.option("--ghost-policy", type=click.Choice(["neighbors", "local"]), default="neighbors", show_default=True)
@click.option("--max-cycles", type=int, default=10_000_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-verify", is_flag=True, help="skip the oracle BFS check")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="run_out", show_default=True)
def sim_run(grid, mode, root, increment_files, increment_index, id_base, undirected, chunk_cap, fifo_depth,
            mem_per_cell, predicate_cycles, work_cycles, ghost_policy, max_cycles, seed, no_verify, out_dir):
    try:
        cfg = RunConfig(
            grid=grid,
            mem_per_cell=_parse_size(mem_per_cell),
            chunk_cap=chunk_cap,
            fifo_depth=fifo_depth,
            costs=ActionCosts(predicate_cycles, work_cycles),
            root=root,
            mode=mode,
            max_cycles=max_cycles,
            seed=seed,
            ghost_policy=ghost_policy,
            verify=not no_verify,
            increments=tuple(_split_list(increment_files)),
            increment_index=increment_index,
            id_base=id_base,
            undirected=undirected,
        )
        result = run(cfg, load_schedule(cfg))
    except NonTermination as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NONTERMINATION)
    except (OutOfMemory, WorkloadError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    paths = emit_reports(result, out_dir)
    for r in result.reports:
        click.echo(f"increment {r.increment:>3} {r.mode:<8} cycles={r.cycles} actions={r.actions_created}")
    click.echo(f"reports written to {paths['increments'].parent}")
    if result.mismatches:
        click.echo(f"error: {len(result.mismatches)} level mismatches against the oracle BFS", err=True)
        sys.exit(EXIT_MISMATCH)


# -- workload ----------------------------------------------------------------


@click.group()
def workload():
    """Increment schedules: generation and statistics."""


@workload.command("gen")
@click.option("--kind", type=click.Choice(["edge", "snowball"]), required=True)
@click.option("--base", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--increments", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--start", type=int, default=None, help="snowball start vertex (default: first edge's source)")
@click.option("--id-base", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="workload_out", show_default=True)
def workload_gen(kind, base, increments, seed, start, id_base, out_dir):
    """Write one TSV per increment plus stats.csv into --out."""
    try:
        edges = read_edges(base, id_base)
        schedule = generate(SamplerConfig(kind, edges, increments, seed, start))
    except (WorkloadError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width = len(str(len(schedule)))
    for k, batch in enumerate(schedule.increments, 1):
        with open(out / f"increment_{k:0{width}d}.tsv", "w") as fh:
            write_edges(batch, fh, id_base)
    with open(out / "stats.csv", "w", newline="") as fh:
        schedule_stats(schedule).write_csv(fh)
    click.echo(f"{len(schedule)} increments, {schedule.total_edges} edges written to {out}")


@workload.command("stats")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--increment-index", type=click.Path(exists=True, dir_okay=False))
@click.option("--id-base", type=int, default=0, show_default=True)
def workload_stats(files, increment_index, id_base):
    """Per-increment edge counts of an ordered list of increment files."""
    try:
        schedule = load_increments(list(files), id_base, index_path=increment_index)
    except WorkloadError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    schedule_stats(schedule).write_csv(sys.stdout)


main.add_command(dse)
main.add_command(sim)
main.add_command(workload)
