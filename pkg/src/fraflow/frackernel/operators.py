"""Discrete fractional operators on uniform grids.

All operators evaluate at the latest node of a :class:`SampleHistory` and
take the lower terminal at the first grid node ``t0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import PreconditionError
from .gamma import gamma


@dataclass(frozen=True)
class UniformGrid:
    t0: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise PreconditionError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) < 1:
            raise PreconditionError(f"n_steps must be >= 1, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_horizon(cls, t0, t_end, dt):
        n = int(round((t_end - t0) / dt))
        return cls(float(t0), float(dt), n)

    @property
    def n_nodes(self):
        return self.n_steps + 1

    @property
    def t_end(self):
        return self.t0 + self.n_steps * self.dt

    def times(self, n_nodes=None):
        n = self.n_nodes if n_nodes is None else n_nodes
        return self.t0 + self.dt * np.arange(n)


@dataclass(frozen=True)
class SampleHistory:
    """Samples ``x(t_k)`` on the first ``len(values)`` nodes of ``grid``.

    ``values`` is stored as a read-only ``(n_nodes, dim)`` array; 1-D input is
    treated as a scalar series.
    """

    values: np.ndarray
    grid: UniformGrid

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise PreconditionError("history values must be a sequence of vectors")
        if v.shape[0] > self.grid.n_nodes:
            raise PreconditionError("history is longer than its grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, fn, grid, n_nodes=None):
        t = grid.times(n_nodes)
        return cls(np.asarray([np.atleast_1d(fn(s)) for s in t], dtype=float), grid)

    def __len__(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def t_last(self):
        return self.grid.t0 + (len(self) - 1) * self.grid.dt


def _check_order(theta, upper=1.0):
    if not (0.0 < theta <= upper):
        raise PreconditionError(f"order must lie in (0, {upper}], got {theta}")


# -- weight tables ---------------------------------------------------------
# Cached per (theta, n); the arrays are read-only so sharing them is safe.


@lru_cache(maxsize=128)
def _gl_weights_cached(theta, n):
    w = np.empty(n + 1)
    w[0] = 1.0
    for j in range(1, n + 1):
        w[j] = w[j - 1] * (1.0 - (theta + 1.0) / j)
    w.setflags(write=False)
    return w


def gl_weights(theta: float, n: int) -> np.ndarray:
    """Grünwald–Letnikov weights ``(-1)^j binom(theta, j)`` for ``j = 0..n``."""
    if n < 0:
        raise PreconditionError("n must be non-negative")
    return _gl_weights_cached(float(theta), int(n))


@lru_cache(maxsize=128)
def l1_coefficients(theta, n):
    """``b_k = (k+1)^(1-theta) - k^(1-theta)`` for ``k = 0..n-1``."""
    k = np.arange(n, dtype=float)
    b = (k + 1.0) ** (1.0 - theta) - k ** (1.0 - theta)
    b.setflags(write=False)
    return b


@lru_cache(maxsize=128)
def product_trapezoid_weights(theta, n):
    """Weights ``a_j`` with ``I^theta x(t_n) ~ dt^theta / Gamma(theta+2) * sum a_j x_j``.

    Exact for piecewise-linear ``x`` on the grid.
    """
    if n == 0:
        a = np.zeros(1)
    else:
        m = n - np.arange(n + 1, dtype=float)  # distance to the evaluation node
        p = theta + 1.0
        a = (m + 1.0) ** p - 2.0 * m**p + np.abs(m - 1.0) ** p
        a[0] = (n - 1.0) ** p - (n - 1.0 - theta) * n**theta
        a[n] = 1.0
    a.setflags(write=False)
    return a


# -- operators ----------------------------------------------------------------


def gl_derivative(history: SampleHistory, theta: float) -> np.ndarray:
    """Grünwald–Letnikov derivative at the latest node, Caputo-compatible.

    The initial value is subtracted before the weights are applied, so for
    smooth inputs this approximates the Caputo derivative (first order in dt).
    """
    _check_order(theta)
    n_nodes = len(history)
    if n_nodes == 0:
        raise PreconditionError("empty history")
    n = n_nodes - 1
    x = history.values
    w = gl_weights(theta, n)
    shifted = x[::-1] - x[0]
    return history.grid.dt ** (-theta) * (w @ shifted)


def caputo_l1(history: SampleHistory, theta: float) -> np.ndarray:
    """L1 approximation of the Caputo derivative at the latest node.

    Order ``2 - theta`` for smooth inputs.  ``theta == 1`` degenerates to the
    backward difference.
    """
    _check_order(theta)
    n_nodes = len(history)
    if n_nodes < 2:
        raise PreconditionError("caputo_l1 needs at least two nodes")
    dt = history.grid.dt
    if theta == 1.0:
        return (history.values[-1] - history.values[-2]) / dt
    n = n_nodes - 1
    b = l1_coefficients(float(theta), n)
    dx = np.diff(history.values, axis=0)  # dx[j] = x_{j+1} - x_j
    # term k pairs b_k with x_{n-k} - x_{n-k-1} = dx[n-1-k]
    return dt ** (-theta) / gamma(2.0 - theta) * (b @ dx[::-1])


def rl_integral(history: SampleHistory, theta: float) -> np.ndarray:
    """Riemann–Liouville integral of order ``theta > 0`` at the latest node."""
    if not theta > 0:
        raise PreconditionError(f"integral order must be positive, got {theta}")
    n_nodes = len(history)
    if n_nodes == 0:
        raise PreconditionError("empty history")
    n = n_nodes - 1
    a = product_trapezoid_weights(float(theta), n)
    scale = history.grid.dt**theta / gamma(theta + 2.0)
    return scale * (a @ history.values)


def rl_caputo_bridge(history: SampleHistory, theta: float) -> np.ndarray:
    """Riemann–Liouville derivative via the Caputo value plus the initial-value term."""
    if not (0.0 < theta < 1.0):
        raise PreconditionError(f"bridge needs 0 < theta < 1, got {theta}")
    tau = history.t_last - history.grid.t0
    if len(history) < 2 or tau <= 0:
        raise PreconditionError("correction term is singular at t = t0")
    correction = history.values[0] * tau ** (-theta) / gamma(1.0 - theta)
    return caputo_l1(history, theta) + correction


def caputo_monomial_oracle(p: float, theta: float, tau: float) -> float:
    """Exact Caputo derivative of ``(t - t0)^p`` at elapsed time ``tau``."""
    if p < 1 or tau < 0:
        raise PreconditionError("need p >= 1 and tau >= 0")
    return gamma(p + 1.0) / gamma(p + 1.0 - theta) * tau ** (p - theta)


def newton_leibniz_check(history: SampleHistory, theta: float) -> float:
    """Residual of ``I^theta [D^theta x](t) = x(t) - x(t0)`` at the final node.

    The Caputo derivative is evaluated with the L1 scheme at every node
    (second-order differences when ``theta == 1``) and then integrated with
    the product-trapezoid rule.
    """
    _check_order(theta)
    n_nodes = len(history)
    if n_nodes < 2:
        raise PreconditionError("need at least two nodes")
    x = history.values
    if theta == 1.0 and n_nodes >= 3:
        # a backward difference sits half a step off the node and would leave
        # an O(dt) residual; use second-order differences instead
        deriv = np.gradient(x, history.grid.dt, axis=0, edge_order=2)
    else:
        deriv = caputo_l1_path(x, theta, history.grid.dt)
        # the Caputo derivative at t0 is defined by continuity
        deriv[0] = deriv[1] if n_nodes < 3 else 2.0 * deriv[1] - deriv[2]
    integral = rl_integral(SampleHistory(deriv, history.grid), theta)
    return float(np.linalg.norm(integral - (x[-1] - x[0])))


def _columns(values):
    v = np.asarray(values, dtype=float)
    if v.ndim not in (1, 2) or v.shape[0] == 0:
        raise PreconditionError("expected a non-empty 1-D or 2-D sample array")
    return v, (v[:, None] if v.ndim == 1 else v)


def caputo_l1_path(values, theta: float, dt: float) -> np.ndarray:
    """L1 Caputo derivative at every node of a sampled path.

    ``values`` has time along axis 0.  Node 0 gets 0 (the scheme has no
    information there); callers that need a value at ``t0`` extrapolate.
    """
    _check_order(theta)
    v, cols = _columns(values)
    out = np.zeros_like(cols)
    n = cols.shape[0] - 1
    if n >= 1:
        dx = np.diff(cols, axis=0)
        if theta == 1.0:
            out[1:] = dx / dt
        else:
            b = l1_coefficients(float(theta), n)
            scale = dt ** (-theta) / gamma(2.0 - theta)
            for i in range(cols.shape[1]):
                out[1:, i] = scale * np.convolve(dx[:, i], b)[:n]
    return out.reshape(v.shape)


def rl_integral_path(values, theta: float, dt: float) -> np.ndarray:
    """Product-trapezoid ``I^theta`` at every node of a sampled path.

    Interior weights depend only on the lag, so each column is one
    convolution instead of a dot product per node.
    """
    if not theta > 0:
        raise PreconditionError(f"integral order must be positive, got {theta}")
    v, cols = _columns(values)
    out = np.zeros_like(cols)
    n = cols.shape[0] - 1
    if n == 0:
        return out.reshape(v.shape)
    p = theta + 1.0
    m = np.arange(n + 1, dtype=float)
    lag = (m + 1.0) ** p - 2.0 * m**p + np.abs(m - 1.0) ** p
    lag[0] = 0.0  # the endpoint j = k has weight 1, added separately
    k = m[1:]
    first = (k - 1.0) ** p - (k - 1.0 - theta) * k**theta
    scale = dt**theta / gamma(theta + 2.0)
    for i in range(cols.shape[1]):
        g = cols[:, i]
        inner = g.copy()
        inner[0] = 0.0
        conv = np.convolve(inner, lag)[: n + 1]
        out[1:, i] = scale * (first * g[0] + conv[1:] + g[1:])
    return out.reshape(v.shape)


class FracScheme:
    """Incremental fractional derivative over a growing history.

    Precomputes the weight table for ``n_max`` nodes so that
    :meth:`derivative` costs one dot product per call.
    """

    def __init__(self, theta, dt, n_max, kind="l1"):
        _check_order(theta)
        if kind not in ("l1", "gl"):
            raise PreconditionError(f"unknown scheme {kind!r}")
        self.theta = float(theta)
        self.dt = float(dt)
        self.n_max = int(n_max)
        self.kind = kind
        if kind == "l1":
            self._scale = dt ** (-theta) / gamma(2.0 - theta)
            # reversed so a contiguous tail slice lines up with oldest-first data
            self._rev = np.ascontiguousarray(l1_coefficients(self.theta, self.n_max)[::-1])
        else:
            self._scale = dt ** (-theta)
            self._rev = np.ascontiguousarray(gl_weights(self.theta, self.n_max)[::-1])

    def derivative(self, values, k):
        """Derivative at node ``k`` given ``values[0..k]`` (oldest first).

        For ``l1`` pass the increments ``values[j] = x_{j+1} - x_j``; for ``gl``
        pass ``x_j - x_0``.
        """
        if k == 0:
            return np.zeros(values.shape[1:])
        if self.kind == "l1":
            if self.theta == 1.0:
                return values[k - 1] / self.dt
            return self._scale * (self._rev[self.n_max - k :] @ values[:k])
        return self._scale * (self._rev[self.n_max - k :] @ values[: k + 1])
