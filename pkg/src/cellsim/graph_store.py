"""In-fabric graph storage.

Each vertex lives as a chain of vertex objects: a root object, which is the
address the program uses for the vertex, followed by zero or more ghost
objects.  Every object holds a bounded chunk of edges; when the tail of the
chain is full a new ghost is allocated and linked behind it.  Objects are
bump-allocated out of each cell's byte budget and never freed.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

SENTINEL_UNREACHED = 2**32 - 1

DEFAULT_CHUNK_CAP = 8
OBJECT_HEADER_BYTES = 16  # vertex id, level, next pointer, flags
EDGE_BYTES = 8  # packed object address + weight


class OutOfMemory(RuntimeError):
    pass


class UnknownVertex(KeyError):
    pass


class ObjectAddress(NamedTuple):
    cc: tuple[int, int]
    slot: int


class VertexObject:
    __slots__ = ("vertex_id", "level", "edges", "next", "is_root", "tail")

    def __init__(self, vertex_id: Optional[int], is_root: bool):
        self.vertex_id = vertex_id
        self.level = SENTINEL_UNREACHED
        self.edges: list[tuple[ObjectAddress, float]] = []
        self.next: Optional[ObjectAddress] = None
        self.is_root = is_root
        # last object of the chain; only maintained on roots
        self.tail: Optional[ObjectAddress] = None

    def __repr__(self):
        kind = "root" if self.is_root else "ghost"
        return f"<{kind} v={self.vertex_id} level={self.level} edges={len(self.edges)} next={self.next}>"


def place_vertex(vertex_id: int, width: int, height: int) -> tuple[int, int]:
    """Row-major placement: linear index ``vertex_id mod (W*H)``."""
    idx = vertex_id % (width * height)
    return idx % width, idx // width


class GraphStore:
    """Vertex objects of every cell on a ``width x height`` chip.

    ``ghost_policy`` is ``"neighbors"`` (local first, then round-robin over the
    mesh neighbours when the local cell is out of memory) or ``"local"``.
    """

    def __init__(
        self,
        width: int,
        height: int,
        mem_per_cell: int = 64 * 1024,
        chunk_cap: int = DEFAULT_CHUNK_CAP,
        ghost_policy: str = "neighbors",
    ):
        if chunk_cap < 1:
            raise ValueError("chunk_cap must be >= 1")
        if ghost_policy not in ("neighbors", "local"):
            raise ValueError(f"unknown ghost policy {ghost_policy!r}")
        self.width = width
        self.height = height
        self.mem_per_cell = mem_per_cell
        self.chunk_cap = chunk_cap
        self.ghost_policy = ghost_policy
        self.object_bytes = OBJECT_HEADER_BYTES + chunk_cap * EDGE_BYTES
        n = width * height
        self.objects: list[list[VertexObject]] = [[] for _ in range(n)]
        self.used_bytes = [0] * n
        self.directory: list[dict[int, ObjectAddress]] = [{} for _ in range(n)]
        self._rr = [0] * n

    # -- allocation -------------------------------------------------------

    def _index(self, cc: tuple[int, int]) -> int:
        return cc[1] * self.width + cc[0]

    def has_room(self, cc: tuple[int, int]) -> bool:
        return self.used_bytes[self._index(cc)] + self.object_bytes <= self.mem_per_cell

    def _allocate(self, cc: tuple[int, int], obj: VertexObject) -> ObjectAddress:
        i = self._index(cc)
        if self.used_bytes[i] + self.object_bytes > self.mem_per_cell:
            raise OutOfMemory(
                f"cell {cc} out of memory ({self.used_bytes[i]}/{self.mem_per_cell} bytes used)"
            )
        self.used_bytes[i] += self.object_bytes
        self.objects[i].append(obj)
        return ObjectAddress(cc, len(self.objects[i]) - 1)

    def _neighbors(self, cc: tuple[int, int]) -> list[tuple[int, int]]:
        x, y = cc
        out = []
        for nx, ny in ((x, y - 1), (x + 1, y), (x, y + 1), (x - 1, y)):
            if 0 <= nx < self.width and 0 <= ny < self.height:
                out.append((nx, ny))
        return out

    def _ghost_cell(self, root_cc: tuple[int, int]) -> tuple[int, int]:
        if self.has_room(root_cc) or self.ghost_policy == "local":
            return root_cc
        nbrs = self._neighbors(root_cc)
        i = self._index(root_cc)
        for k in range(len(nbrs)):
            cand = nbrs[(self._rr[i] + k) % len(nbrs)]
            if self.has_room(cand):
                self._rr[i] = (self._rr[i] + k + 1) % len(nbrs)
                return cand
        raise OutOfMemory(f"cell {root_cc} and all its neighbours are out of memory")

    # -- public API -------------------------------------------------------

    def get(self, addr: ObjectAddress) -> VertexObject:
        return self.objects[self._index(addr.cc)][addr.slot]

    def create_root(self, cc: tuple[int, int], vertex_id: int) -> ObjectAddress:
        directory = self.directory[self._index(cc)]
        if vertex_id in directory:
            raise ValueError(f"vertex {vertex_id} already has a root on cell {cc}")
        obj = VertexObject(vertex_id, is_root=True)
        addr = self._allocate(cc, obj)
        obj.tail = addr
        directory[vertex_id] = addr
        return addr

    def resolve(self, vertex_id: int, create: bool = False) -> ObjectAddress:
        cc = place_vertex(vertex_id, self.width, self.height)
        addr = self.directory[self._index(cc)].get(vertex_id)
        if addr is None:
            if not create:
                raise UnknownVertex(vertex_id)
            addr = self.create_root(cc, vertex_id)
        return addr

    def insert_edge_local(
        self, root_addr: ObjectAddress, dst_root: ObjectAddress, weight: float = 1
    ) -> tuple[ObjectAddress, int]:
        """Append an edge to the vertex rooted at ``root_addr``.

        Returns the address of the object that received the edge and the
        edge's index inside that object's chunk.
        """
        root = self.get(root_addr)
        if not root.is_root:
            raise ValueError(f"{root_addr} is not a root object")
        # every object but the last is full, so the first with room is the tail
        tail_addr = root.tail
        tail = self.get(tail_addr)
        if len(tail.edges) >= self.chunk_cap:
            ghost = VertexObject(root.vertex_id, is_root=False)
            ghost_addr = self._allocate(self._ghost_cell(root_addr.cc), ghost)
            tail.next = ghost_addr
            root.tail = tail_addr = ghost_addr
            tail = ghost
        tail.edges.append((dst_root, weight))
        return tail_addr, len(tail.edges) - 1

    def chain(self, root_addr: ObjectAddress) -> list[ObjectAddress]:
        """Addresses of every object in the vertex's chain, root first."""
        out = [root_addr]
        nxt = self.get(root_addr).next
        while nxt is not None:
            out.append(nxt)
            nxt = self.get(nxt).next
        return out

    def edge_count(self, root_addr: ObjectAddress) -> int:
        return sum(len(self.get(a).edges) for a in self.chain(root_addr))

    def vertices(self) -> dict[int, ObjectAddress]:
        out = {}
        for d in self.directory:
            out.update(d)
        return out

    def levels(self) -> dict[int, int]:
        return {v: self.get(a).level for v, a in self.vertices().items()}

    def reset_levels(self) -> None:
        for objs in self.objects:
            for o in objs:
                if o.is_root:
                    o.level = SENTINEL_UNREACHED
