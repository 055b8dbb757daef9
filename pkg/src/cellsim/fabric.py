"""Cycle-level mesh of compute cells.

Every cycle runs two phases:

* transport: each router looks at the head of its four input FIFOs and its
  local staging buffer (in that port order, lower index wins an output
  link) and forwards at most one operon per output link.  Routing is X then
  Y.  A forward needs space in the downstream input FIFO as it stood at the
  start of the cycle; an operon whose next hop is its destination cell is
  ejected straight into that cell's action queue.
* execute: every cell with an action in flight, or with a queued action,
  runs one cycle of it (see :mod:`cellsim.actions`).  Diffuse emissions to
  remote cells go through the staging buffer; a full buffer stalls the
  cell without losing the emission.

Cells are iterated row-major.  Action queues are unbounded.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Optional, TextIO

from cellsim.actions import DONE, RUNNING, STALLED, ActionCosts, ActionInstance, advance
from cellsim.graph_store import GraphStore, ObjectAddress
from cellsim.operon import Opcode, Operon

TRACE_HEADER = ("cycle", "active_cells", "operons_in_flight", "actions_enqueued_total")


class Direction(IntEnum):
    N = 0  # toward y = 0
    E = 1
    S = 2
    W = 3


OPPOSITE = (Direction.S, Direction.W, Direction.N, Direction.E)
STAGING = 4  # port index of the local injection buffer


class AlreadyDelivered(ValueError):
    pass


class NonTermination(RuntimeError):
    """The cycle guard was exceeded before the chip went quiescent."""

    def __init__(self, message: str, dump: str):
        super().__init__(f"{message}\n{dump}")
        self.dump = dump


def route_next_hop(current: tuple[int, int], dst: tuple[int, int]) -> Direction:
    """Dimension-ordered (X then Y) next hop."""
    cx, cy = current
    dx, dy = dst
    if cx != dx:
        return Direction.E if dx > cx else Direction.W
    if cy != dy:
        return Direction.S if dy > cy else Direction.N
    raise AlreadyDelivered(f"operon already at {dst}")


@dataclass(frozen=True)
class CycleStats:
    cycle: int
    active_cells: int
    operons_in_flight: int
    actions_enqueued_total: int

    def row(self) -> tuple:
        return (self.cycle, self.active_cells, self.operons_in_flight, self.actions_enqueued_total)


def write_trace(trace: Iterable[CycleStats], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for s in trace:
        w.writerow(s.row())


class Chip:
    def __init__(
        self,
        width: int,
        height: int,
        fifo_depth: int = 4,
        mem_per_cell: int = 64 * 1024,
        chunk_cap: int = 8,
        costs: Optional[ActionCosts] = None,
        ghost_policy: str = "neighbors",
        record_deliveries: bool = False,
    ):
        if width < 1 or height < 1:
            raise ValueError("grid dimensions must be >= 1")
        if fifo_depth < 1:
            raise ValueError("fifo_depth must be >= 1")
        self.width = width
        self.height = height
        self.fifo_depth = fifo_depth
        self.costs = costs or ActionCosts()
        self.store = GraphStore(width, height, mem_per_cell, chunk_cap, ghost_policy)
        n = width * height
        self.n_cells = n
        self.coords = [(i % width, i // width) for i in range(n)]
        # neighbour cell index per direction, -1 at borders
        self.neighbor = []
        for x, y in self.coords:
            self.neighbor.append((
                (y - 1) * width + x if y > 0 else -1,
                y * width + x + 1 if x < width - 1 else -1,
                (y + 1) * width + x if y < height - 1 else -1,
                y * width + x - 1 if x > 0 else -1,
            ))
        self.ports: list[list[deque]] = [[deque() for _ in range(5)] for _ in range(n)]
        self.queues: list[deque] = [deque() for _ in range(n)]
        self.inflight: list[Optional[ActionInstance]] = [None] * n
        self._router_active: set[int] = set()
        self._exec_active: set[int] = set()
        self._cur = -1

        self.cycle = 0
        self.trace: list[CycleStats] = []
        self.record_deliveries = record_deliveries
        self.deliveries: list[tuple[Operon, int]] = []

        self.actions_created = [0] * n
        self.actions_executed = [0] * n
        self.cycles_active = [0] * n
        self.operons_created = 0
        self.operons_delivered = 0
        self.operons_in_flight = 0
        self.queued = 0

    # -- helpers ----------------------------------------------------------

    def index(self, cc: tuple[int, int]) -> int:
        x, y = cc
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ValueError(f"cell {cc} outside {self.width}x{self.height} grid")
        return y * self.width + x

    def _deliver(self, op: Operon, cell: int) -> None:
        self.queues[cell].append(ActionInstance(op.opcode, op.dst_object, op.operand, self.costs.predicate_cycles))
        self.queued += 1
        self._exec_active.add(cell)
        self.operons_delivered += 1
        if self.record_deliveries:
            self.deliveries.append((op, self.cycle))

    def enqueue(self, inst: ActionInstance) -> None:
        """Place an action directly on the queue of the cell owning its target."""
        cell = self.index(inst.target.cc)
        self.queues[cell].append(inst)
        self.queued += 1
        self._exec_active.add(cell)

    def make_action(self, opcode: Opcode, target: ObjectAddress, operand) -> ActionInstance:
        return ActionInstance(opcode, target, operand, self.costs.predicate_cycles)

    # -- operations -------------------------------------------------------

    def inject(self, operon: Operon, at: tuple[int, int]) -> bool:
        """Hand an operon to the router of cell ``at``.

        Returns False (backpressure) when the staging buffer is full.  An
        operon injected at its destination is queued immediately.
        """
        cell = self.index(at)
        dst = self.index(operon.dst_cc)
        operon.injected_at = self.cycle
        if cell == dst:
            self.operons_created += 1
            self._deliver(operon, cell)
            return True
        staging = self.ports[cell][STAGING]
        if len(staging) >= self.fifo_depth:
            return False
        self.operons_created += 1
        staging.append(operon)
        self.operons_in_flight += 1
        self._router_active.add(cell)
        return True

    def _transport(self) -> None:
        ports = self.ports
        coords = self.coords
        neighbor = self.neighbor
        depth = self.fifo_depth
        moves = []
        for c in sorted(self._router_active):
            x, y = coords[c]
            cports = ports[c]
            taken = 0
            for p in range(5):
                q = cports[p]
                if not q:
                    continue
                op = q[0]
                dx, dy = op.dst_object.cc
                if dx != x:
                    d = 1 if dx > x else 3
                else:
                    d = 2 if dy > y else 0
                bit = 1 << d
                if taken & bit:
                    continue
                n = neighbor[c][d]
                if dx == coords[n][0] and dy == coords[n][1]:
                    moves.append((c, p, n, -1))
                else:
                    in_port = OPPOSITE[d]
                    if len(ports[n][in_port]) >= depth:
                        continue
                    moves.append((c, p, n, in_port))
                taken |= bit
        for c, p, n, in_port in moves:
            op = ports[c][p].popleft()
            if in_port < 0:
                self.operons_in_flight -= 1
                self._deliver(op, n)
            else:
                ports[n][in_port].append(op)
                self._router_active.add(n)
        for c, _p, _n, _i in moves:
            if c in self._router_active and not any(ports[c]):
                self._router_active.discard(c)

    def _execute(self) -> int:
        store = self.store
        costs = self.costs
        active = 0
        finished = []
        for c in sorted(self._exec_active):
            inst = self.inflight[c]
            if inst is None:
                inst = self.queues[c].popleft()
                self.queued -= 1
                self.actions_executed[c] += 1
                self.inflight[c] = inst
            self._cur = c
            status = advance(inst, store, costs, self._emit, self._germinate)
            if status != STALLED:
                active += 1
                self.cycles_active[c] += 1
            if status == DONE:
                self.inflight[c] = None
                if not self.queues[c]:
                    finished.append(c)
        for c in finished:
            self._exec_active.discard(c)
        return active

    def _emit(self, op: Operon) -> bool:
        c = self._cur
        dst = self.index(op.dst_cc)
        if dst == c:
            self.operons_created += 1
            self.actions_created[c] += 1
            op.injected_at = self.cycle
            self._deliver(op, c)
            return True
        staging = self.ports[c][STAGING]
        if len(staging) >= self.fifo_depth:
            return False
        op.injected_at = self.cycle
        staging.append(op)
        self.operons_created += 1
        self.operons_in_flight += 1
        self.actions_created[c] += 1
        self._router_active.add(c)
        return True

    def _germinate(self, inst: ActionInstance) -> None:
        c = self._cur
        self.actions_created[c] += 1
        self.queues[c].append(inst)
        self.queued += 1

    def step(self) -> CycleStats:
        self.cycle += 1
        if self._router_active:
            self._transport()
        active = self._execute() if self._exec_active else 0
        stats = CycleStats(self.cycle, active, self.operons_in_flight, self.queued)
        self.trace.append(stats)
        return stats

    def is_quiescent(self) -> bool:
        return not self._router_active and not self._exec_active

    def run_until_quiescent(self, max_cycles: int = 10_000_000) -> int:
        if max_cycles <= 0:
            raise ValueError("max_cycles must be positive")
        start = self.cycle
        while not self.is_quiescent():
            if self.cycle - start >= max_cycles:
                raise NonTermination(
                    f"chip not quiescent after {max_cycles} cycles", self.dump_state()
                )
            self.step()
        return self.cycle - start

    # -- introspection ----------------------------------------------------

    def cell_busy(self, cc: tuple[int, int]) -> bool:
        c = self.index(cc)
        return self.inflight[c] is not None or bool(self.queues[c])

    def dump_state(self, limit: int = 32) -> str:
        lines = [
            f"cycle={self.cycle} in_flight={self.operons_in_flight} queued={self.queued} "
            f"created={self.operons_created} delivered={self.operons_delivered}"
        ]
        shown = 0
        for c in range(self.n_cells):
            fifo = [len(q) for q in self.ports[c]]
            if any(fifo) or self.queues[c] or self.inflight[c] is not None:
                lines.append(
                    f"  cell {self.coords[c]}: fifos(N,E,S,W,stage)={fifo} "
                    f"queue={len(self.queues[c])} inflight={self.inflight[c]!r}"
                )
                shown += 1
                if shown >= limit:
                    lines.append("  ...")
                    break
        return "\n".join(lines)

    def totals(self) -> dict[str, int]:
        return {
            "actions_created": sum(self.actions_created),
            "actions_executed": sum(self.actions_executed),
            "operons_delivered": self.operons_delivered,
        }
