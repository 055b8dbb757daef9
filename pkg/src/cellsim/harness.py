"""Experiment driver: batched Dynamic-BFS, from-scratch Static-BFS, oracle checks and reports."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from cellsim.actions import ActionCosts
from cellsim.fabric import Chip, CycleStats, write_trace
from cellsim.graph_store import SENTINEL_UNREACHED
from cellsim.operon import Opcode, Operon
from cellsim.workloads import EdgeRecord, IncrementSchedule, SamplerConfig, generate, load_increments

log = logging.getLogger(__name__)

REPORT_HEADER = (
    "increment",
    "mode",
    "cycles",
    "actions_created",
    "actions_executed",
    "operons_delivered",
    "levels_checksum",
)


class Mode(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"
    BOTH = "both"


@dataclass
class RunConfig:
    grid: tuple[int, int] = (32, 32)
    mem_per_cell: int = 64 * 1024
    chunk_cap: int = 8
    fifo_depth: int = 4
    costs: ActionCosts = field(default_factory=ActionCosts)
    root: int = 0
    mode: Mode = Mode.DYNAMIC
    max_cycles: int = 10_000_000
    seed: int = 0
    ghost_policy: str = "neighbors"
    verify: bool = True
    pause_cycles: int = 1
    # workload source: edge files, or a generator config
    increments: tuple[str, ...] = ()
    increment_index: Optional[str] = None
    id_base: int = 0
    undirected: bool = True
    sampler: Optional[SamplerConfig] = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        w, h = self.grid
        if w < 1 or h < 1:
            raise ValueError("grid dimensions must be >= 1")
        if self.root < 0:
            raise ValueError("root must be a non-negative vertex id")

    def make_chip(self) -> Chip:
        w, h = self.grid
        return Chip(w, h, self.fifo_depth, self.mem_per_cell, self.chunk_cap, self.costs, self.ghost_policy)

    def summary(self) -> dict:
        return {
            "grid": f"{self.grid[0]}x{self.grid[1]}",
            "mem_per_cell": self.mem_per_cell,
            "chunk_cap": self.chunk_cap,
            "fifo_depth": self.fifo_depth,
            "predicate_cycles": self.costs.predicate_cycles,
            "work_cycles": self.costs.work_cycles,
            "root": self.root,
            "mode": self.mode.value,
            "max_cycles": self.max_cycles,
            "seed": self.seed,
            "ghost_policy": self.ghost_policy,
            "increments": list(self.increments),
            "increment_index": self.increment_index,
            "id_base": self.id_base,
            "undirected": self.undirected,
            "sampler": None if self.sampler is None else self.sampler.kind.value,
        }


def load_schedule(cfg: RunConfig) -> IncrementSchedule:
    if cfg.sampler is not None:
        return generate(cfg.sampler)
    return load_increments(cfg.increments, cfg.id_base, cfg.undirected, cfg.increment_index)


@dataclass(frozen=True)
class Mismatch:
    vertex: int
    simulated: Optional[int]
    expected: Optional[int]


@dataclass
class IncrementReport:
    increment: int
    mode: str
    cycles: int
    actions_created: int
    actions_executed: int
    operons_delivered: int
    levels_checksum: str
    mismatches: list[Mismatch] = field(default_factory=list, repr=False)

    def row(self) -> tuple:
        return (
            self.increment,
            self.mode,
            self.cycles,
            self.actions_created,
            self.actions_executed,
            self.operons_delivered,
            self.levels_checksum,
        )


@dataclass
class RunResult:
    config: RunConfig
    reports: list[IncrementReport] = field(default_factory=list)
    trace: list[CycleStats] = field(default_factory=list)
    levels: dict[int, int] = field(default_factory=dict)
    boundaries: list[int] = field(default_factory=list)
    chip: Optional[Chip] = field(default=None, repr=False)

    @property
    def mismatches(self) -> list[tuple[int, str, Mismatch]]:
        return [(r.increment, r.mode, m) for r in self.reports for m in r.mismatches]

    def totals(self, mode: str = "dynamic") -> dict[str, int]:
        rows = [r for r in self.reports if r.mode == mode]
        return {
            "cycles": sum(r.cycles for r in rows),
            "actions_created": sum(r.actions_created for r in rows),
            "actions_executed": sum(r.actions_executed for r in rows),
            "operons_delivered": sum(r.operons_delivered for r in rows),
        }


# -- verification -----------------------------------------------------------


def oracle_bfs(edges: Iterable[EdgeRecord | tuple], root: int) -> dict[int, int]:
    """Hop distance from ``root`` for every vertex touched by ``edges``."""
    adj: dict[int, list[int]] = {root: []}
    for e in edges:
        u, v = e[0], e[1]
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, [])
    level = {v: SENTINEL_UNREACHED for v in adj}
    level[root] = 0
    q = deque([root])
    while q:
        u = q.popleft()
        nxt = level[u] + 1
        for v in adj[u]:
            if level[v] == SENTINEL_UNREACHED:
                level[v] = nxt
                q.append(v)
    return level


def compare_levels(simulated: dict[int, int], expected: dict[int, int]) -> list[Mismatch]:
    out = []
    for v in sorted(set(simulated) | set(expected)):
        s, e = simulated.get(v), expected.get(v)
        if s != e:
            out.append(Mismatch(v, s, e))
    return out


def levels_checksum(levels: dict[int, int]) -> str:
    h = hashlib.sha256()
    for v in sorted(levels):
        lv = levels[v]
        h.update(f"{v}:{'-' if lv == SENTINEL_UNREACHED else lv}\n".encode())
    return h.hexdigest()[:16]


# -- runs -------------------------------------------------------------------


class _Counters:
    def __init__(self, chip: Chip):
        self.chip = chip
        self.snap = (chip.cycle, sum(chip.actions_created), sum(chip.actions_executed), chip.operons_delivered)

    def delta(self) -> tuple[int, int, int, int]:
        c = self.chip
        now = (c.cycle, sum(c.actions_created), sum(c.actions_executed), c.operons_delivered)
        return tuple(a - b for a, b in zip(now, self.snap))


def _seed(chip: Chip, root: int) -> None:
    addr = chip.store.resolve(root, create=True)
    chip.inject(Operon(addr, Opcode.SEED, 0), addr.cc)


def _chip_levels(chip: Chip, root: int) -> dict[int, int]:
    levels = chip.store.levels()
    levels.setdefault(root, SENTINEL_UNREACHED)
    return levels


def run_dynamic(cfg: RunConfig, schedule: Optional[IncrementSchedule] = None) -> RunResult:
    """Apply each increment as a batch of insert-edge actions and run to quiescence.

    Graph and levels persist between increments.  After each increment the
    chip idles for ``cfg.pause_cycles`` cycles, which shows up in the trace
    as the pause between batches.
    """
    schedule = schedule if schedule is not None else load_schedule(cfg)
    chip = cfg.make_chip()
    store = chip.store
    result = RunResult(cfg)
    accumulated: list[EdgeRecord] = []
    for k in range(len(schedule)):
        counters = _Counters(chip)
        if k == 0:
            _seed(chip, cfg.root)
        batch = list(schedule.directed_batch(k))
        for e in batch:
            src = store.resolve(e.src, create=True)
            chip.enqueue(chip.make_action(Opcode.INSERT_EDGE, src, (e.dst, e.weight)))
        chip.run_until_quiescent(cfg.max_cycles)
        cycles, created, executed, delivered = counters.delta()
        accumulated.extend(batch)
        levels = _chip_levels(chip, cfg.root)
        report = IncrementReport(k + 1, Mode.DYNAMIC.value, cycles, created, executed, delivered, levels_checksum(levels))
        if cfg.verify:
            report.mismatches = compare_levels(levels, oracle_bfs(accumulated, cfg.root))
            if report.mismatches:
                log.error("increment %d: %d level mismatches", k + 1, len(report.mismatches))
        result.reports.append(report)
        for _ in range(cfg.pause_cycles):
            chip.step()
        result.boundaries.append(chip.cycle)
    result.trace = chip.trace
    result.levels = _chip_levels(chip, cfg.root)
    result.chip = chip
    return result


def run_static(
    cfg: RunConfig, after_increment: int, schedule: Optional[IncrementSchedule] = None
) -> tuple[IncrementReport, list[CycleStats]]:
    """From-scratch BFS over the graph accumulated through ``after_increment``."""
    schedule = schedule if schedule is not None else load_schedule(cfg)
    if not 0 <= after_increment <= len(schedule):
        raise ValueError(f"after_increment must be in 0..{len(schedule)}")
    edges = schedule.accumulated(after_increment)
    chip = cfg.make_chip()
    store = chip.store
    store.resolve(cfg.root, create=True)
    for e in edges:
        src = store.resolve(e.src, create=True)
        store.insert_edge_local(src, store.resolve(e.dst, create=True), e.weight)
    counters = _Counters(chip)
    _seed(chip, cfg.root)
    chip.run_until_quiescent(cfg.max_cycles)
    cycles, created, executed, delivered = counters.delta()
    levels = _chip_levels(chip, cfg.root)
    report = IncrementReport(
        after_increment, Mode.STATIC.value, cycles, created, executed, delivered, levels_checksum(levels)
    )
    if cfg.verify:
        report.mismatches = compare_levels(levels, oracle_bfs(edges, cfg.root))
    return report, chip.trace


def run(cfg: RunConfig, schedule: Optional[IncrementSchedule] = None) -> RunResult:
    schedule = schedule if schedule is not None else load_schedule(cfg)
    if cfg.mode is Mode.DYNAMIC:
        return run_dynamic(cfg, schedule)
    if cfg.mode is Mode.BOTH:
        result = run_dynamic(cfg, schedule)
        paired = []
        for rep in result.reports:
            paired.append(rep)
            paired.append(run_static(cfg, rep.increment, schedule)[0])
        result.reports = paired
        return result
    result = RunResult(cfg)
    for k in range(1, len(schedule) + 1):
        rep, trace = run_static(cfg, k, schedule)
        result.reports.append(rep)
        offset = result.trace[-1].cycle if result.trace else 0
        result.trace.extend(dataclasses.replace(s, cycle=s.cycle + offset) for s in trace)
        result.boundaries.append(offset + rep.cycles)
    return result


# -- reports ----------------------------------------------------------------


def write_reports_csv(reports: Sequence[IncrementReport], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in reports:
        w.writerow(r.row())


def emit_reports(result: RunResult, out_dir: str | Path) -> dict[str, Path]:
    """Write ``increments.csv``, ``trace.csv`` and ``summary.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    paths = {
        "increments": out_dir / "increments.csv",
        "trace": out_dir / "trace.csv",
        "summary": out_dir / "summary.json",
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(paths["increments"], "w", newline="") as fh:
            write_reports_csv(result.reports, fh)
        with open(paths["trace"], "w", newline="") as fh:
            write_trace(result.trace, fh)
        summary = {
            "config": result.config.summary(),
            "increments": len({r.increment for r in result.reports}),
            "totals": {m.value: result.totals(m.value) for m in (Mode.DYNAMIC, Mode.STATIC)},
            "trace_cycles": len(result.trace),
            "increment_boundaries": result.boundaries,
            "mismatches": len(result.mismatches),
            "final_levels_checksum": levels_checksum(result.levels) if result.levels else None,
        }
        with open(paths["summary"], "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing reports to {out_dir}: {exc}") from exc
    return paths
