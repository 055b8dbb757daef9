"""Edge-list ingestion and increment schedules for batched dynamic runs.

Input files are tab-separated edge lists, one edge per line::

    src <TAB> dst [<TAB> weight]

Lines starting with ``#`` and blank lines are ignored.  Vertex ids are
shifted by an explicit ``id_base`` so 1-based files come out 0-based.
Undirectedness is a property of the schedule: records are stored as read,
and :meth:`IncrementSchedule.directed_batch` expands them when the
simulator consumes them.
"""

from __future__ import annotations

import csv
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, TextIO

STATS_HEADER = ("increment", "edges", "cumulative_edges", "distinct_vertices")


class WorkloadError(ValueError):
    pass


class EdgeRecord(NamedTuple):
    src: int
    dst: int
    weight: float = 1.0


@dataclass
class IncrementSchedule:
    increments: list[list[EdgeRecord]]
    vertex_count_hint: Optional[int] = None
    undirected: bool = False

    def __len__(self) -> int:
        return len(self.increments)

    @property
    def batch_sizes(self) -> list[int]:
        return [len(b) for b in self.increments]

    @property
    def total_edges(self) -> int:
        return sum(self.batch_sizes)

    def directed_batch(self, k: int) -> Iterator[EdgeRecord]:
        for e in self.increments[k]:
            yield e
            if self.undirected and e.src != e.dst:
                yield EdgeRecord(e.dst, e.src, e.weight)

    def accumulated(self, k: int) -> list[EdgeRecord]:
        """Directed edges of increments ``0 .. k-1``."""
        out = []
        for i in range(k):
            out.extend(self.directed_batch(i))
        return out


class SamplerKind(str, Enum):
    EDGE = "edge"
    SNOWBALL = "snowball"


@dataclass
class SamplerConfig:
    kind: SamplerKind
    base_graph: list[EdgeRecord]
    increments: int = 10
    seed: int = 0
    start_vertex: Optional[int] = None
    undirected: bool = True

    def __post_init__(self):
        self.kind = SamplerKind(self.kind)
        if self.increments < 1:
            raise ValueError("increments must be >= 1")


# -- ingestion --------------------------------------------------------------


def read_edges(path: str | Path, id_base: int = 0) -> list[EdgeRecord]:
    path = Path(path)
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise WorkloadError(f"{path}:{lineno}: expected 2 or 3 columns, got {len(parts)}")
            try:
                src = int(parts[0]) - id_base
                dst = int(parts[1]) - id_base
                weight = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise WorkloadError(f"{path}:{lineno}: malformed edge {line!r}") from None
            if src < 0 or dst < 0:
                raise WorkloadError(f"{path}:{lineno}: vertex id below id base {id_base}")
            edges.append(EdgeRecord(src, dst, weight))
    if not edges:
        raise WorkloadError(f"{path}: no edges")
    return edges


def read_increment_index(path: str | Path) -> list[int]:
    counts = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                n = int(line)
            except ValueError:
                raise WorkloadError(f"{path}:{lineno}: malformed edge count {line!r}") from None
            if n < 0:
                raise WorkloadError(f"{path}:{lineno}: negative edge count")
            counts.append(n)
    return counts


def load_increments(
    paths: Sequence[str | Path],
    id_base: int = 0,
    undirected: bool = False,
    index_path: Optional[str | Path] = None,
) -> IncrementSchedule:
    """One batch per file, in the given order.

    With ``index_path`` a single edge file is split by the per-batch edge
    counts listed in the index file.
    """
    if not paths:
        raise WorkloadError("no increment files given")
    if index_path is not None:
        if len(paths) != 1:
            raise WorkloadError("an increment index needs exactly one edge file")
        edges = read_edges(paths[0], id_base)
        counts = read_increment_index(index_path)
        if sum(counts) != len(edges):
            raise WorkloadError(
                f"{index_path}: counts sum to {sum(counts)} but {paths[0]} has {len(edges)} edges"
            )
        batches, pos = [], 0
        for n in counts:
            batches.append(edges[pos : pos + n])
            pos += n
    else:
        batches = [read_edges(p, id_base) for p in paths]
    hint = 1 + max((max(e.src, e.dst) for b in batches for e in b), default=-1)
    return IncrementSchedule(batches, hint, undirected)


def write_edges(edges: Iterable[EdgeRecord], out: TextIO, id_base: int = 0) -> None:
    for e in edges:
        if e.weight == 1.0:
            out.write(f"{e.src + id_base}\t{e.dst + id_base}\n")
        else:
            out.write(f"{e.src + id_base}\t{e.dst + id_base}\t{e.weight:g}\n")


# -- generators -------------------------------------------------------------


def _split_even(items: list, k: int) -> list[list]:
    q, r = divmod(len(items), k)
    out, pos = [], 0
    for i in range(k):
        n = q + (1 if i < r else 0)
        out.append(items[pos : pos + n])
        pos += n
    return out


def _hint(edges: Sequence[EdgeRecord]) -> int:
    return 1 + max(max(e.src, e.dst) for e in edges)


def gen_edge_sampled(cfg: SamplerConfig) -> IncrementSchedule:
    """Base-graph edges in a seeded uniform random order, split evenly."""
    if cfg.kind is not SamplerKind.EDGE:
        raise ValueError("edge sampler needs kind=EDGE")
    if not cfg.base_graph:
        raise WorkloadError("base graph is empty")
    edges = list(cfg.base_graph)
    random.Random(cfg.seed).shuffle(edges)
    return IncrementSchedule(_split_even(edges, cfg.increments), _hint(edges), cfg.undirected)


def snowball_order(base: Sequence[EdgeRecord], start: int, rng: random.Random) -> list[int]:
    """Vertex discovery order of a randomised breadth-first expansion.

    Edges are followed in both directions.  Vertices not reachable from
    ``start`` are appended by restarting from the first undiscovered
    vertex in base-graph order.
    """
    adj: dict[int, list[int]] = {}
    for e in base:
        adj.setdefault(e.src, []).append(e.dst)
        adj.setdefault(e.dst, []).append(e.src)
    seen: set[int] = set()
    order: list[int] = []

    def expand(s: int) -> None:
        seen.add(s)
        order.append(s)
        frontier = deque([s])
        while frontier:
            u = frontier.popleft()
            nbrs = adj[u][:]
            rng.shuffle(nbrs)
            for v in nbrs:
                if v not in seen:
                    seen.add(v)
                    order.append(v)
                    frontier.append(v)

    expand(start)
    for e in base:
        for v in (e.src, e.dst):
            if v not in seen:
                expand(v)
    return order


def gen_snowball(cfg: SamplerConfig) -> IncrementSchedule:
    """Edges in the order a snowball expansion from the start vertex finds them.

    Vertices are ranked by discovery; an edge is emitted once both of its
    endpoints are discovered, so edges are sorted by the rank of their later
    endpoint.  Batch ``k`` holds the edges whose later endpoint falls in the
    ``k``-th equal share of the discovery order, which makes batches grow as
    the discovered region densifies.
    """
    if cfg.kind is not SamplerKind.SNOWBALL:
        raise ValueError("snowball sampler needs kind=SNOWBALL")
    base = cfg.base_graph
    if not base:
        raise WorkloadError("base graph is empty")
    start = base[0].src if cfg.start_vertex is None else cfg.start_vertex
    if not any(e.src == start or e.dst == start for e in base):
        raise WorkloadError(f"start vertex {start} not in base graph")
    order = snowball_order(base, start, random.Random(cfg.seed))
    rank = {v: i for i, v in enumerate(order)}
    keyed = sorted(
        range(len(base)),
        key=lambda i: (max(rank[base[i].src], rank[base[i].dst]), min(rank[base[i].src], rank[base[i].dst]), i),
    )
    groups = _split_even(order, cfg.increments)
    group_of = {}
    for g, verts in enumerate(groups):
        for v in verts:
            group_of[v] = g
    batches: list[list[EdgeRecord]] = [[] for _ in range(cfg.increments)]
    for i in keyed:
        e = base[i]
        later = e.src if rank[e.src] > rank[e.dst] else e.dst
        batches[group_of[later]].append(e)
    return IncrementSchedule(batches, _hint(base), cfg.undirected)


def generate(cfg: SamplerConfig) -> IncrementSchedule:
    if cfg.kind is SamplerKind.EDGE:
        return gen_edge_sampled(cfg)
    return gen_snowball(cfg)


# -- stats ------------------------------------------------------------------


@dataclass(frozen=True)
class IncrementStat:
    increment: int
    edges: int
    cumulative_edges: int
    distinct_vertices: int


@dataclass
class ScheduleStats:
    rows: list[IncrementStat] = field(default_factory=list)

    @property
    def total_edges(self) -> int:
        return self.rows[-1].cumulative_edges if self.rows else 0

    @property
    def distinct_vertices(self) -> int:
        return self.rows[-1].distinct_vertices if self.rows else 0

    def write_csv(self, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(STATS_HEADER)
        for r in self.rows:
            w.writerow((r.increment, r.edges, r.cumulative_edges, r.distinct_vertices))


def schedule_stats(schedule: IncrementSchedule) -> ScheduleStats:
    """Per-increment edge counts, running totals and distinct vertices seen so far."""
    stats = ScheduleStats()
    seen: set[int] = set()
    total = 0
    for k, batch in enumerate(schedule.increments, 1):
        total += len(batch)
        for e in batch:
            seen.add(e.src)
            seen.add(e.dst)
        stats.rows.append(IncrementStat(k, len(batch), total, len(seen)))
    return stats
