"""Transistor-budget model of a single compute cell and the chip it tiles.

A cell is split into four transistor pools: SRAM bitcells, SRAM periphery
(decoders, drivers, sense amps, output registers), the execution unit, and
the network interface (link FIFOs plus router logic).  Given a process
density and a die area, the whole-chip figures follow: how many cells fit
on a square grid, the mesh diameter, and total on-chip memory.

Only the anchor values (8T bitcells, 4 banks of 64-bit I/O, 256-bit flits,
~100K fixed execution transistors, 91 Mtx/mm2, 306 mm2) are fixed; every
other coefficient lives on :class:`TransistorModel` and can be overridden.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, TextIO

CSV_HEADER = (
    "mem_per_cell_bytes",
    "sram_tx",
    "periph_tx",
    "exec_tx",
    "net_tx",
    "total_tx",
    "cell_count",
    "grid_w",
    "grid_h",
    "diameter",
    "total_memory_bytes",
    "feasible",
)


class InfeasibleDesign(ValueError):
    """Raised when not even one cell fits in the die budget, or the
    memory configuration cannot be realised."""


class CellShape(Enum):
    SQUARE = "square"
    TRIANGLE = "triangle"
    HEXAGON = "hexagon"


_CHANNELS = {CellShape.SQUARE: 4, CellShape.TRIANGLE: 3, CellShape.HEXAGON: 6}


def channels_for_shape(shape: CellShape) -> int:
    """Number of neighbour links a cell of this shape forms in its tessellation."""
    return _CHANNELS[shape]


@dataclass(frozen=True)
class ProcessParams:
    transistor_density: float = 91e6  # transistors / mm^2
    die_area: float = 306.0  # mm^2

    def __post_init__(self):
        if self.transistor_density <= 0 or self.die_area <= 0:
            raise ValueError("density and die area must be strictly positive")

    @property
    def budget(self) -> int:
        return math.floor(self.die_area * self.transistor_density)


@dataclass(frozen=True)
class MemoryConfig:
    bytes_per_cell: int
    banks: int = 4
    word_bits: int = 64
    bitcell_transistors: int = 8

    def __post_init__(self):
        if self.banks < 1:
            raise ValueError("banks must be >= 1")
        if self.bytes_per_cell <= 0:
            raise ValueError("bytes_per_cell must be positive")
        if self.bytes_per_cell % self.banks:
            raise ValueError(
                f"{self.bytes_per_cell} bytes cannot be split evenly over {self.banks} banks"
            )

    @property
    def words_per_bank(self) -> int:
        bank_bits = self.bytes_per_cell // self.banks * 8
        if bank_bits % self.word_bits:
            raise ValueError(
                f"bank of {bank_bits} bits is not a whole number of {self.word_bits}-bit words"
            )
        return bank_bits // self.word_bits


@dataclass(frozen=True)
class TransistorModel:
    exec_fixed: int = 100_000
    exec_per_addr_bit: int = 2_000
    periph_per_addr_bit_per_bank: int = 1_500
    periph_fixed_per_bank: int = 20_000
    fifo_per_bit: int = 24
    router_fixed_per_link: int = 10_000
    flit_bits: int = 256
    fifo_depth: int = 4

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def replace(self, **overrides) -> "TransistorModel":
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown model coefficient(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **{k: int(v) for k, v in overrides.items()})


@dataclass(frozen=True)
class DesignPoint:
    mem_per_cell: int
    sram_tx: int
    periph_tx: int
    exec_tx: int
    net_tx: int
    total_tx: int
    cell_count: int
    grid_w: int
    grid_h: int
    diameter: int
    total_memory: int
    feasible: bool = True

    def row(self) -> tuple:
        return (
            self.mem_per_cell,
            self.sram_tx,
            self.periph_tx,
            self.exec_tx,
            self.net_tx,
            self.total_tx,
            self.cell_count,
            self.grid_w,
            self.grid_h,
            self.diameter,
            self.total_memory,
            str(self.feasible).lower(),
        )


def _ceil_log2(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


def sram_transistors(mem: MemoryConfig) -> int:
    return mem.bytes_per_cell * 8 * mem.bitcell_transistors


def periphery_address_bits(mem: MemoryConfig) -> int:
    words = mem.words_per_bank
    if words == 0:
        raise ValueError("zero-capacity bank")
    return _ceil_log2(words)


def periphery_transistors(mem: MemoryConfig, model: TransistorModel) -> int:
    addr_bits = periphery_address_bits(mem)
    return mem.banks * (model.periph_fixed_per_bank + addr_bits * model.periph_per_addr_bit_per_bank)


def execution_transistors(addr_bits: int, model: TransistorModel) -> int:
    """Fixed execution-unit cost plus address-register width scaling.

    ``addr_bits`` is the byte-address width of the cell's memory.
    """
    if addr_bits < 0:
        raise ValueError("addr_bits must be >= 0")
    return model.exec_fixed + addr_bits * model.exec_per_addr_bit


def network_transistors(channels: int, model: TransistorModel) -> int:
    if channels < 1:
        raise ValueError("a cell needs at least one channel")
    per_link = model.fifo_depth * model.flit_bits * model.fifo_per_bit + model.router_fixed_per_link
    return channels * per_link


def design_point(
    mem_per_cell: int,
    shape: CellShape = CellShape.SQUARE,
    proc: Optional[ProcessParams] = None,
    model: Optional[TransistorModel] = None,
    mem: Optional[MemoryConfig] = None,
) -> DesignPoint:
    """Largest square grid of identical cells that fits the die budget.

    Raises :class:`InfeasibleDesign` if a single cell exceeds the budget or
    the memory size cannot be banked as configured.
    """
    proc = proc or ProcessParams()
    model = model or TransistorModel()
    if mem_per_cell <= 0:
        raise InfeasibleDesign("mem_per_cell must be positive")
    try:
        if mem is None:
            mem = MemoryConfig(bytes_per_cell=mem_per_cell)
        else:
            mem = dataclasses.replace(mem, bytes_per_cell=mem_per_cell)
        if mem.word_bits * mem.banks != model.flit_bits:
            raise ValueError(
                f"banks x word_bits = {mem.banks * mem.word_bits} does not match flit_bits {model.flit_bits}"
            )
        sram = sram_transistors(mem)
        periph = periphery_transistors(mem, model)
    except ValueError as exc:
        raise InfeasibleDesign(str(exc)) from exc
    exe = execution_transistors(_ceil_log2(mem_per_cell), model)
    net = network_transistors(channels_for_shape(shape), model)
    total = sram + periph + exe + net

    budget = proc.budget
    if budget < total:
        raise InfeasibleDesign(
            f"infeasible design point: one cell needs {total} transistors, budget is {budget}"
        )
    g = math.isqrt(budget // total)
    return DesignPoint(
        mem_per_cell=mem_per_cell,
        sram_tx=sram,
        periph_tx=periph,
        exec_tx=exe,
        net_tx=net,
        total_tx=total,
        cell_count=g * g,
        grid_w=g,
        grid_h=g,
        diameter=2 * (g - 1),
        total_memory=g * g * mem_per_cell,
    )


def _infeasible_row(mem_per_cell: int) -> DesignPoint:
    return DesignPoint(mem_per_cell, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, feasible=False)


def sweep(
    mem_sizes: Iterable[int],
    shape: CellShape = CellShape.SQUARE,
    proc: Optional[ProcessParams] = None,
    model: Optional[TransistorModel] = None,
    out: Optional[TextIO] = None,
) -> list[DesignPoint]:
    """Evaluate one design point per memory size, in input order.

    Infeasible sizes come back as ``feasible=False`` rows instead of raising.
    When ``out`` is given the table is also written there as CSV.
    """
    sizes = list(mem_sizes)
    if not sizes:
        raise ValueError("sweep needs at least one memory size")
    points = []
    for size in sizes:
        try:
            points.append(design_point(size, shape, proc, model))
        except InfeasibleDesign:
            points.append(_infeasible_row(size))
    if out is not None:
        write_csv(points, out)
    return points


def write_csv(points: Iterable[DesignPoint], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in points:
        writer.writerow(p.row())


def to_csv(points: Iterable[DesignPoint]) -> str:
    buf = io.StringIO()
    write_csv(points, buf)
    return buf.getvalue()
