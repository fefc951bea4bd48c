"""Simulation and diagnostics for fractional-order inertial optimization flows.

The package integrates ``x'' + (alpha/t) x' + D^theta[.] = 0`` for test
objectives, evaluates the Mittag-Leffler function and discrete fractional
operators, fits decay rates, and drives experiments from config files.
"""

from . import diagnostics, dynamics, frackernel, objectives
from .dynamics import (
    FlowConfig,
    ScalarFdeConfig,
    Trajectory,
    picard_volterra_solve,
    reconstruct_accel,
    simulate,
    simulate_scalar_fde,
)
from .errors import (
    ContractionError,
    DimensionMismatchError,
    DivergenceError,
    FraflowError,
    MittagLefflerError,
    PreconditionError,
    ToleranceNotMetError,
)
from .frackernel import UniformGrid, mittag_leffler
from .objectives import Objective, build_objective

__version__ = "0.1.0"

__all__ = [
    "ContractionError",
    "DimensionMismatchError",
    "DivergenceError",
    "FlowConfig",
    "FraflowError",
    "MittagLefflerError",
    "Objective",
    "PreconditionError",
    "ScalarFdeConfig",
    "ToleranceNotMetError",
    "Trajectory",
    "UniformGrid",
    "build_objective",
    "diagnostics",
    "dynamics",
    "frackernel",
    "mittag_leffler",
    "objectives",
    "picard_volterra_solve",
    "reconstruct_accel",
    "simulate",
    "simulate_scalar_fde",
]
