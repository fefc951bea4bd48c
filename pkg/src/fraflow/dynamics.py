"""Time integration of the fractional inertial flow.

The flow is ``x'' + (alpha/t) x' + G(t) = 0`` on ``t >= t0 > 0`` where the
force ``G`` depends on ``mode``:

``classical``
    ``G = grad f(x)`` (the vanishing-damping Nesterov flow).
``grad_memory``
    ``G`` is the Caputo derivative of the gradient path ``s -> grad f(x(s))``,
    taken componentwise.
``value_memory``
    ``G`` is the Caputo derivative of the scalar path ``s -> f(x(s))``, added
    to every component.

All three are stepped with the same damping-implicit, force-explicit scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (
    ContractionError,
    DimensionMismatchError,
    DivergenceError,
    PreconditionError,
    ToleranceNotMetError,
)
from .frackernel import FracScheme, SampleHistory, UniformGrid, gamma
from .frackernel.operators import l1_coefficients, rl_integral_path
from .objectives import Objective

MODES = ("grad_memory", "value_memory", "classical")
SCHEMES = ("l1", "gl")
DIVERGENCE_BOUND = 1e12


@dataclass(frozen=True)
class FlowConfig:
    alpha: float
    theta: float
    mode: str
    grid: UniformGrid
    x0: np.ndarray
    v0: np.ndarray
    scheme: str = "l1"

    def __post_init__(self):
        if self.mode not in MODES:
            raise PreconditionError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise PreconditionError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.alpha > 0:
            raise PreconditionError("damping alpha must be positive")
        if self.mode == "classical" and self.theta != 1.0:
            raise PreconditionError("classical mode requires theta = 1")
        if not (0.0 < self.theta <= 1.0):
            raise PreconditionError(f"theta must lie in (0, 1], got {self.theta}")
        if not self.grid.t0 > 0:
            raise PreconditionError("the alpha/t damping needs t0 > 0")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        v0 = np.atleast_1d(np.asarray(self.v0, dtype=float))
        if x0.shape != v0.shape or x0.ndim != 1:
            raise DimensionMismatchError("x0 and v0 must be vectors of equal length")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "v0", v0)

    @property
    def dim(self):
        return self.x0.shape[0]

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class Trajectory:
    """Output of a run.  ``history`` holds gradients (``grad_memory``,
    ``classical``) or values (``value_memory``) at every populated node."""

    grid: UniformGrid
    states: np.ndarray
    velocities: np.ndarray
    history: SampleHistory
    frac_term: np.ndarray
    mode: str = "classical"
    diverged: bool = False
    residual: Optional[float] = None
    iterate_differences: list = field(default_factory=list)

    def __len__(self):
        return self.states.shape[0]

    @property
    def times(self):
        return self.grid.times(len(self))

    @property
    def grad_history(self):
        return self.history

    def truncated(self, n_nodes):
        return Trajectory(
            grid=self.grid,
            states=self.states[:n_nodes],
            velocities=self.velocities[:n_nodes],
            history=SampleHistory(self.history.values[:n_nodes], self.grid),
            frac_term=self.frac_term[:n_nodes],
            mode=self.mode,
            diverged=self.diverged,
        )


@dataclass(frozen=True)
class ScalarFdeConfig:
    gamma: float
    theta: float
    v0_value: float
    grid: UniformGrid

    def __post_init__(self):
        if self.gamma < 0:
            raise PreconditionError("gamma must be non-negative")
        if not (0.0 < self.theta <= 1.0):
            raise PreconditionError(f"theta must lie in (0, 1], got {self.theta}")


def simulate(config: FlowConfig, obj: Objective) -> Trajectory:
    """Integrate the flow on ``config.grid``.

    Steps ``v_{k+1} = (v_k - dt G_k) / (1 + dt alpha / t_k)`` then
    ``x_{k+1} = x_k + dt v_{k+1}``; the history entry for node ``k+1`` is
    recorded from the updated state.

    Raises
    ------
    DivergenceError
        When a state component is non-finite or exceeds ``1e12``.  The
        exception carries the trajectory up to the last valid node.
    """
    if obj.dim != config.dim:
        raise DimensionMismatchError(
            f"objective has dimension {obj.dim}, initial data has {config.dim}"
        )
    grid = config.grid
    n, dt, alpha = grid.n_steps, grid.dt, config.alpha
    d = config.dim
    mode = config.mode
    hdim = 1 if mode == "value_memory" else d

    x = np.empty((n + 1, d))
    v = np.empty((n + 1, d))
    hist = np.empty((n + 1, hdim))
    force = np.zeros((n + 1, d))
    x[0], v[0] = config.x0, config.v0

    def record(k):
        if mode == "value_memory":
            hist[k, 0] = obj.eval(x[k])
        else:
            hist[k] = obj.grad(x[k])

    record(0)
    scheme = None
    if mode != "classical":
        scheme = FracScheme(config.theta, dt, n, config.scheme)
        # l1 consumes increments, gl consumes offsets from the initial value
        work = np.zeros((n + 1, hdim))

    def frac_force(k):
        if mode == "classical":
            return hist[k]
        if config.scheme == "l1":
            if k > 0:
                work[k - 1] = hist[k] - hist[k - 1]
        else:
            work[k] = hist[k] - hist[0]
        g = scheme.derivative(work, k)
        return np.broadcast_to(g, (d,)) if mode == "value_memory" else g

    t = grid.times()
    for k in range(n):
        force[k] = frac_force(k)
        v[k + 1] = (v[k] - dt * force[k]) / (1.0 + dt * alpha / t[k])
        x[k + 1] = x[k] + dt * v[k + 1]
        if not np.all(np.isfinite(x[k + 1])) or np.max(np.abs(x[k + 1])) > DIVERGENCE_BOUND:
            partial = Trajectory(
                grid, x[: k + 1], v[: k + 1], SampleHistory(hist[: k + 1], grid),
                force[: k + 1], mode=mode, diverged=True,
            )
            raise DivergenceError(
                f"state left the finite region at t = {t[k + 1]:.6g}", k, partial
            )
        record(k + 1)
    force[n] = frac_force(n)
    return Trajectory(grid, x, v, SampleHistory(hist, grid), force, mode=mode)


def simulate_scalar_fde(config: ScalarFdeConfig) -> np.ndarray:
    """Solve ``D^theta V = -gamma V`` (Caputo) with the implicit L1 step.

    Unconditionally stable; returns ``V`` at every grid node.
    """
    grid = config.grid
    n, dt, th, gam = grid.n_steps, grid.dt, config.theta, config.gamma
    V = np.empty(n + 1)
    V[0] = config.v0_value
    if th == 1.0:
        # backward Euler
        for k in range(n):
            V[k + 1] = V[k] / (1.0 + dt * gam)
        return V
    c = dt ** (-th) / gamma(2.0 - th)
    b = l1_coefficients(th, n)
    dV = np.empty(n)
    for k in range(n):
        # sum_{j<k} b_{k-j} (V_{j+1} - V_j), memory of all earlier increments
        mem = b[k:0:-1] @ dV[:k] if k else 0.0
        V[k + 1] = c * (V[k] - mem) / (c + gam)
        dV[k] = V[k + 1] - V[k]
    return V


def _cumtrapz(y, dt):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]), axis=0)
    return out


def picard_volterra_solve(
    config: FlowConfig,
    obj: Objective,
    horizon_nodes: int,
    max_iters: int = 100,
    tol: float = 1e-10,
) -> Trajectory:
    """Fixed-point (Picard) solution of the ``value_memory`` flow in integral form.

    With ``w = x'`` and ``J = I^{1-theta}[f(x) - f(x0)]``, the damping is folded
    in by the integrating factor ``t^alpha``::

        w(t) = (t0/t)^alpha v0 - J(t) + t^{-alpha} int_{t0}^t alpha s^{alpha-1} J(s) ds
        x(t) = x0 + int_{t0}^t w(s) ds

    Each sweep maps the current ``x`` iterate to a new one; iteration stops
    once the sup-norm change falls below ``tol``.

    Raises
    ------
    ContractionError
        The change grew for three consecutive sweeps or became non-finite.
    ToleranceNotMetError
        ``max_iters`` sweeps ran without reaching ``tol``; carries the last iterate.
    """
    if config.mode != "value_memory":
        raise PreconditionError("the Volterra reference solver covers value_memory only")
    if obj.dim != config.dim:
        raise DimensionMismatchError("objective and initial data dimensions differ")
    grid = UniformGrid(config.grid.t0, config.grid.dt, horizon_nodes)
    dt, th, alpha = grid.dt, config.theta, config.alpha
    t = grid.times()
    x0, v0 = config.x0, config.v0

    weight = (config.grid.t0 / t) ** alpha
    free = x0 + _cumtrapz(weight[:, None] * v0, dt)
    x = free.copy()
    diffs = []
    growth = 0
    for it in range(max_iters):
        with np.errstate(over="ignore", invalid="ignore"):
            # a blown-up iterate is reported as non-contraction below
            g = np.array([obj.eval(xi) for xi in x]) - obj.eval(x0)
            J = g if th == 1.0 else rl_integral_path(g, 1.0 - th, dt)
            folded = _cumtrapz(alpha * t ** (alpha - 1.0) * J, dt) / t**alpha
            w = weight[:, None] * v0 + (folded - J)[:, None]
            x_new = x0 + _cumtrapz(w, dt)
            delta = float(np.max(np.abs(x_new - x)))
        diffs.append(delta)
        x = x_new
        if not math.isfinite(delta):
            raise ContractionError("Picard iterates left the finite range", diffs)
        if len(diffs) >= 2 and diffs[-1] > diffs[-2]:
            growth += 1
            if growth >= 3:
                raise ContractionError("Picard iteration is not contracting", diffs)
        else:
            growth = 0
        if delta < tol:
            break
    else:
        raise ToleranceNotMetError(
            f"no convergence to {tol:g} in {max_iters} sweeps", last_iterate=x, differences=diffs
        )
    fvals = np.array([obj.eval(xi) for xi in x])
    dJ = np.gradient(J, dt)
    force = np.repeat(dJ[:, None], config.dim, axis=1)
    return Trajectory(
        grid, x, w, SampleHistory(fvals, grid), force, mode="value_memory",
        residual=diffs[-1], iterate_differences=diffs,
    )


def reconstruct_accel(traj: Trajectory) -> np.ndarray:
    """Acceleration from velocities: central differences, one-sided at the ends."""
    if len(traj) < 3:
        raise PreconditionError("need at least three nodes")
    return np.gradient(traj.velocities, traj.grid.dt, axis=0, edge_order=1)
