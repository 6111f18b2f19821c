"""Simulation and verification of fault-tolerant holonomic quantum gates."""

from .evolve import ConvergenceError, propagate, reduce
from .holonomy import analyze_plan, gate_distance, geometric_part, wilczek_zee_transport
from .paths import T_D, ControlSegment, GatePlan, SmoothSchedule, path_cnot, path_rz, path_x_benchmark, path_xs
from .pauli import PauliString, SubsystemCode, bacon_shor_9, trivial_code

__all__ = [
    "T_D",
    "ConvergenceError",
    "ControlSegment",
    "GatePlan",
    "PauliString",
    "SmoothSchedule",
    "SubsystemCode",
    "analyze_plan",
    "bacon_shor_9",
    "gate_distance",
    "geometric_part",
    "path_cnot",
    "path_rz",
    "path_x_benchmark",
    "path_xs",
    "propagate",
    "reduce",
    "trivial_code",
    "wilczek_zee_transport",
]
