"""Reachability-based synthesis of deadbeat state feedback on quantized boxes."""

__version__ = "0.1.0"

from .errors import DeadbeatError
from .grid import Grid, InputSet, build_input_set
from .reach import ReachLayers, certify_n_step, compute_layers, coverage
from .simulate import ClosedLoopRun, Outcome, certify_basin, run_closed_loop
from .synth import OUTSIDE, UNREACHABLE, FeedbackTable, lookup, synthesize
from .systems import REGISTRY, SystemModel, Trajectory, get_system, resolve_system

__all__ = [
    "DeadbeatError", "Grid", "InputSet", "build_input_set",
    "ReachLayers", "certify_n_step", "compute_layers", "coverage",
    "ClosedLoopRun", "Outcome", "certify_basin", "run_closed_loop",
    "OUTSIDE", "UNREACHABLE", "FeedbackTable", "lookup", "synthesize",
    "REGISTRY", "SystemModel", "Trajectory", "get_system", "resolve_system",
    "__version__",
]
