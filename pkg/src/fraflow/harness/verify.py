"""Built-in oracle suite behind ``fraflow verify``.

Each check measures one number and compares it with a fixed threshold.  A
check that raises is reported as a failure with the exception text.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import binom, erfc

from ..dynamics import (
    FlowConfig,
    ScalarFdeConfig,
    picard_volterra_solve,
    simulate,
    simulate_scalar_fde,
)
from ..errors import FraflowError
from ..frackernel import (
    SampleHistory,
    UniformGrid,
    caputo_l1,
    caputo_monomial_oracle,
    gamma,
    gl_derivative,
    gl_weights,
    mittag_leffler,
    mittag_leffler_array,
    newton_leibniz_check,
)
from ..objectives import make_quadratic


@dataclass
class CheckResult:
    name: str
    measured: float
    threshold: float
    passed: bool
    seconds: float = 0.0
    error: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        text = f"{status}  {self.name:<28} measured={self.measured:.3e}  threshold={self.threshold:.1e}"
        text += f"  ({self.seconds:.2f} s)"
        if self.error:
            text += f"  error: {self.error}"
        return text


def _monomial_caputo():
    grid = UniformGrid(0.0, 1e-3, 1000)
    worst = 0.0
    for p in (1, 2, 3):
        hist = SampleHistory.from_function(lambda s: s**p, grid)
        for theta in (0.25, 0.5, 0.75):
            exact = caputo_monomial_oracle(p, theta, 1.0)
            worst = max(worst, abs(caputo_l1(hist, theta)[0] / exact - 1.0))
    return worst


def _ml_exp():
    return abs(mittag_leffler(1.0, 1.0, 1.0) - math.e)


def _ml_cos():
    return abs(mittag_leffler(2.0, 1.0, -1.0) - math.cos(1.0))


def _ml_exp_cancellation():
    return abs(mittag_leffler(1.0, 1.0, -20.0) / math.exp(-20.0) - 1.0)


def _ml_erfc():
    # E_{1/2}(-x) = exp(x^2) erfc(x)
    return max(
        abs(mittag_leffler(0.5, 1.0, -x) / (math.exp(x * x) * erfc(x)) - 1.0) for x in (0.5, 3.0)
    )


def _ml_beta_two():
    z = 2.5
    return abs(mittag_leffler(1.0, 2.0, z) - math.expm1(z) / z)


def _fde_vs_ml():
    grid = UniformGrid.from_horizon(0.0, 5.0, 1e-3)
    V = simulate_scalar_fde(ScalarFdeConfig(1.0, 0.7, 1.0, grid))
    t = grid.times()
    exact = mittag_leffler_array(0.7, 1.0, -(t**0.7))
    return float(np.max(np.abs(V[1:] / exact[1:] - 1.0)))


def _comparison_principle():
    grid = UniformGrid.from_horizon(0.0, 5.0, 1e-3)
    worst = -math.inf
    for theta in (0.5, 0.9):
        fast = simulate_scalar_fde(ScalarFdeConfig(2.0, theta, 1.0, grid))
        slow = simulate_scalar_fde(ScalarFdeConfig(1.0, theta, 1.0, grid))
        worst = max(worst, float(np.max(fast - slow)))
    # measured: largest V_fast - V_slow, must not be positive
    return max(worst, 0.0)


def _newton_leibniz():
    grid = UniformGrid(0.0, 1e-3, 1000)
    return newton_leibniz_check(SampleHistory.from_function(lambda s: s**2, grid), 0.5)


def _gl_weights():
    n = 50
    worst = 0.0
    for theta in (0.3, 0.7):
        ref = (-1.0) ** np.arange(n + 1) * binom(theta, np.arange(n + 1))
        worst = max(worst, float(np.max(np.abs(gl_weights(theta, n) - ref))))
    return worst


def _gl_monomial():
    grid = UniformGrid(0.0, 1e-3, 1000)
    hist = SampleHistory.from_function(lambda s: s**2, grid)
    return max(
        abs(gl_derivative(hist, th)[0] / caputo_monomial_oracle(2, th, 1.0) - 1.0)
        for th in (0.3, 0.7)
    )


def _picard_vs_stepper():
    obj = make_quadratic(np.eye(1))
    worst = 0.0
    for t_end in (1.1, 5.0):
        grid = UniformGrid.from_horizon(1.0, t_end, 1e-3)
        cfg = FlowConfig(3.0, 0.7, "value_memory", grid, [1.0], [1.0])
        traj = picard_volterra_solve(cfg, obj, grid.n_steps, max_iters=200, tol=1e-10)
        d = traj.iterate_differences
        if not all(b < a for a, b in zip(d[1:], d[2:])):
            return math.inf
        worst = max(worst, float(np.max(np.abs(traj.states - simulate(cfg, obj).states))))
    return worst


def _equilibrium():
    obj = make_quadratic(np.diag([1.0, 3.0]), np.array([1.0, -2.0]))
    grid = UniformGrid.from_horizon(1.0, 10.0, 1e-2)
    worst = 0.0
    for mode in ("grad_memory", "value_memory"):
        for theta in (0.5, 0.8, 1.0):
            cfg = FlowConfig(3.0, theta, mode, grid, obj.minimizer, np.zeros(2))
            worst = max(worst, float(np.max(np.abs(simulate(cfg, obj).states - obj.minimizer))))
    cfg = FlowConfig(3.0, 1.0, "classical", grid, obj.minimizer, np.zeros(2))
    return max(worst, float(np.max(np.abs(simulate(cfg, obj).states - obj.minimizer))))


def _scalar_exponential():
    grid = UniformGrid.from_horizon(0.0, 5.0, 1e-3)
    V = simulate_scalar_fde(ScalarFdeConfig(1.0, 1.0, 1.0, grid))
    return abs(V[-1] - math.exp(-5.0))


def _gamma_kernel():
    xs = np.concatenate([np.linspace(0.05, 30.0, 400), -np.linspace(0.05, 9.95, 100) + 0.013])
    return max(abs(gamma(x) / math.gamma(x) - 1.0) for x in xs)


CHECKS: list[tuple[str, Callable[[], float], float]] = [
    ("gamma_lanczos", _gamma_kernel, 1e-12),
    ("monomial_caputo_l1", _monomial_caputo, 1e-2),
    ("gl_weights", _gl_weights, 1e-12),
    ("gl_monomial", _gl_monomial, 1e-2),
    ("ml_exp", _ml_exp, 1e-10),
    ("ml_cos", _ml_cos, 1e-8),
    ("ml_exp_cancellation", _ml_exp_cancellation, 1e-6),
    ("ml_erfc", _ml_erfc, 1e-10),
    ("ml_beta_two", _ml_beta_two, 1e-12),
    ("scalar_fde_theta_one", _scalar_exponential, 1e-4),
    ("scalar_fde_vs_ml", _fde_vs_ml, 1e-2),
    ("comparison_principle", _comparison_principle, 0.0),
    ("newton_leibniz", _newton_leibniz, 5e-3),
    ("equilibrium_invariance", _equilibrium, 1e-10),
    ("picard_vs_stepper", _picard_vs_stepper, 1e-3),
]


def run_checks(checks=None) -> list[CheckResult]:
    results = []
    for name, fn, threshold in checks or CHECKS:
        start = time.perf_counter()
        try:
            measured = float(fn())
            passed = measured <= threshold
            err = ""
        except (FraflowError, ArithmeticError, ValueError) as exc:
            measured, passed, err = math.inf, False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, measured, threshold, passed,
                                   time.perf_counter() - start, err))
    return results
