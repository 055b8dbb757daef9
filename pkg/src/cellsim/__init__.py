"""Cycle-level simulator of a message-driven mesh of compute cells for
batched dynamic graph processing, plus a chip transistor-budget model."""

from cellsim.dse import (
    CellShape,
    DesignPoint,
    InfeasibleDesign,
    MemoryConfig,
    ProcessParams,
    TransistorModel,
    design_point,
    sweep,
)
from cellsim.fabric import Chip, CycleStats, NonTermination
from cellsim.graph_store import SENTINEL_UNREACHED, ObjectAddress, OutOfMemory
from cellsim.harness import RunConfig, oracle_bfs, run_dynamic, run_static
from cellsim.workloads import IncrementSchedule, SamplerConfig

__all__ = [
    "CellShape",
    "Chip",
    "CycleStats",
    "DesignPoint",
    "IncrementSchedule",
    "InfeasibleDesign",
    "MemoryConfig",
    "NonTermination",
    "ObjectAddress",
    "OutOfMemory",
    "ProcessParams",
    "RunConfig",
    "SENTINEL_UNREACHED",
    "SamplerConfig",
    "TransistorModel",
    "design_point",
    "oracle_bfs",
    "run_dynamic",
    "run_static",
    "sweep",
]
