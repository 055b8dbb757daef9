"""Action execution model and the BFS / edge-insertion actions.

An action runs in up to three phases on the cell that owns its target
object: a predicate that may terminate it, a work phase that mutates the
object, and a diffuse phase that emits one operon per cycle.  Costs are
counted in cell cycles; :func:`advance` consumes exactly one.

Phase plans per opcode:

=============  ==========================================================
BFS, SEED      predicate (level test), work (set level), diffuse (all edges)
BFS_NEW_EDGE   predicate (source reached?), diffuse (the new edge only)
INSERT_EDGE    predicate (always true), work (insert edge, germinate)
=============  ==========================================================
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Optional

from cellsim.graph_store import SENTINEL_UNREACHED, GraphStore, ObjectAddress, VertexObject
from cellsim.operon import Opcode, Operon


class Phase(IntEnum):
    PREDICATE = 0
    WORK = 1
    DIFFUSE = 2


# advance() results
RUNNING = 0
DONE = 1
STALLED = 2


@dataclass(frozen=True)
class ActionCosts:
    predicate_cycles: int = 1
    work_cycles: int = 1

    def __post_init__(self):
        if self.predicate_cycles < 1 or self.work_cycles < 1:
            raise ValueError("phase costs must be >= 1 cycle")


class ActionInstance:
    __slots__ = ("opcode", "target", "operand", "phase", "remaining", "cursor", "cursor_idx", "emit_level")

    def __init__(self, opcode: Opcode, target: ObjectAddress, operand, predicate_cycles: int = 1):
        self.opcode = opcode
        self.target = target
        self.operand = operand
        self.phase = Phase.PREDICATE
        self.remaining = predicate_cycles
        self.cursor: Optional[VertexObject] = None
        self.cursor_idx = 0
        self.emit_level = 0

    def __repr__(self):
        return (
            f"ActionInstance({self.opcode.name}, {self.target}, {self.operand!r}, "
            f"{self.phase.name}, remaining={self.remaining})"
        )


# -- BFS building blocks ----------------------------------------------------


def bfs_predicate(vertex: VertexObject, proposed_level: int) -> bool:
    return proposed_level < vertex.level


def bfs_work(vertex: VertexObject, proposed_level: int) -> VertexObject:
    vertex.level = proposed_level
    return vertex


def bfs_diffuse(store: GraphStore, root_addr: ObjectAddress, new_level: int) -> list[Operon]:
    """Every operon a full diffuse of the vertex emits, in chain order."""
    out = []
    for addr in store.chain(root_addr):
        for dst, _w in store.get(addr).edges:
            out.append(Operon(dst, Opcode.BFS, new_level + 1))
    return out


def insert_edge_action(
    store: GraphStore, target: ObjectAddress, dst_vertex_id: int, weight: float = 1, predicate_cycles: int = 1
) -> ActionInstance:
    """Insert ``target -> dst_vertex_id`` and return the germinated BFS action.

    The destination root is resolved by placement (and created if absent).
    """
    dst_root = store.resolve(dst_vertex_id, create=True)
    obj_addr, idx = store.insert_edge_local(target, dst_root, weight)
    return ActionInstance(Opcode.BFS_NEW_EDGE, target, (obj_addr, idx), predicate_cycles)


def germinated_bfs(store: GraphStore, vertex_addr: ObjectAddress, edge_pos: tuple[ObjectAddress, int]) -> Optional[Operon]:
    """The single operon a germinated BFS sends along the new edge, if any."""
    level = store.get(vertex_addr).level
    if level == SENTINEL_UNREACHED:
        return None
    obj_addr, idx = edge_pos
    dst, _w = store.get(obj_addr).edges[idx]
    return Operon(dst, Opcode.BFS, level + 1)


def static_bfs_seed(store: GraphStore, root_vertex_id: int) -> Operon:
    """Level-0 seed operon addressed to the BFS root."""
    return Operon(store.resolve(root_vertex_id), Opcode.SEED, 0)


# -- cycle-level state machine ----------------------------------------------


def advance(
    inst: ActionInstance,
    store: GraphStore,
    costs: ActionCosts,
    emit: Callable[[Operon], bool],
    germinate: Callable[[ActionInstance], None],
) -> int:
    """Run one cycle of ``inst``.  Returns RUNNING, DONE or STALLED.

    ``emit`` returns False when the outgoing staging buffer is full; the
    cursor then stays put and the cycle counts as a stall.
    """
    if inst.phase == Phase.PREDICATE:
        inst.remaining -= 1
        if inst.remaining:
            return RUNNING
        root = store.get(inst.target)
        op = inst.opcode
        if op == Opcode.BFS or op == Opcode.SEED:
            if not bfs_predicate(root, inst.operand):
                return DONE
        elif op == Opcode.BFS_NEW_EDGE:
            if root.level == SENTINEL_UNREACHED:
                return DONE
            obj_addr, idx = inst.operand
            inst.emit_level = root.level + 1
            inst.cursor = store.get(obj_addr)
            inst.cursor_idx = idx
            inst.phase = Phase.DIFFUSE
            return RUNNING
        inst.phase = Phase.WORK
        inst.remaining = costs.work_cycles
        return RUNNING

    if inst.phase == Phase.WORK:
        inst.remaining -= 1
        if inst.remaining:
            return RUNNING
        if inst.opcode == Opcode.INSERT_EDGE:
            dst_vid, weight = inst.operand
            germinate(insert_edge_action(store, inst.target, dst_vid, weight, costs.predicate_cycles))
            return DONE
        root = bfs_work(store.get(inst.target), inst.operand)
        if not root.edges:
            return DONE
        inst.emit_level = root.level + 1
        inst.cursor = root
        inst.cursor_idx = 0
        inst.phase = Phase.DIFFUSE
        return RUNNING

    obj = inst.cursor
    dst, _w = obj.edges[inst.cursor_idx]
    if not emit(Operon(dst, Opcode.BFS, inst.emit_level)):
        return STALLED
    if inst.opcode == Opcode.BFS_NEW_EDGE:
        return DONE
    inst.cursor_idx += 1
    if inst.cursor_idx == len(obj.edges):
        if obj.next is None:
            return DONE
        inst.cursor = store.get(obj.next)
        inst.cursor_idx = 0
    return RUNNING
