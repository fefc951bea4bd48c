"""Test objectives with regularity metadata and gradient self-checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import DimensionMismatchError, PreconditionError

CONVEX = "convex"
STRONGLY_CONVEX = "strongly_convex"
NONCONVEX = "nonconvex"


@dataclass(frozen=True)
class Objective:
    """A differentiable function on R^dim plus what is known about it.

    ``strong_eta`` plays the role of both the strong-convexity modulus and the
    PL constant; ``loja_phi`` is set only where it is known in closed form.
    """

    name: str
    dim: int
    eval: Callable[[np.ndarray], float] = field(repr=False)
    grad: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    minimizer: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    lipschitz_L: Optional[float] = None
    strong_eta: Optional[float] = None
    loja_phi: Optional[float] = None
    convexity_class: str = NONCONVEX
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.strong_eta is not None:
            if not (self.strong_eta > 0 and self.convexity_class == STRONGLY_CONVEX):
                raise PreconditionError("strong_eta requires a strongly convex objective")
        if self.loja_phi is not None and not (0.0 < self.loja_phi < 1.0):
            raise PreconditionError("Lojasiewicz exponent must lie in (0, 1)")
        if self.minimizer is not None:
            m = np.asarray(self.minimizer, dtype=float)
            m.setflags(write=False)
            object.__setattr__(self, "minimizer", m)

    def __call__(self, x):
        return self.eval(x)

    def check_dim(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"{self.name} expects vectors of length {self.dim}, got shape {x.shape}"
            )
        return x


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    probe_count: int
    worst_point: np.ndarray
    max_abs_err: float = 0.0


def make_quadratic(A, b=None, *, name="quadratic") -> Objective:
    """``f(x) = 0.5 x^T A x - b^T x`` for symmetric positive-semidefinite ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise PreconditionError("A must be a symmetric square matrix")
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(n)
    eig = np.linalg.eigvalsh(A)
    lam_min, lam_max = float(eig[0]), float(eig[-1])
    tol = 1e-12 * max(1.0, abs(lam_max))
    if lam_min < -tol:
        raise PreconditionError("A must be positive semidefinite")
    A.setflags(write=False)
    b.setflags(write=False)

    def f(x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ A @ x - b @ x)

    def g(x):
        return A @ np.asarray(x, dtype=float) - b

    xstar, *_ = np.linalg.lstsq(A, b, rcond=None)
    solvable = np.linalg.norm(A @ xstar - b) <= 1e-10 * max(1.0, np.linalg.norm(b))
    strongly = lam_min > tol
    return Objective(
        name=name,
        dim=n,
        eval=f,
        grad=g,
        minimizer=xstar if solvable else None,
        f_star=f(xstar) if solvable else None,
        lipschitz_L=max(lam_max, 0.0),
        strong_eta=lam_min if strongly else None,
        loja_phi=0.5 if solvable else None,
        convexity_class=STRONGLY_CONVEX if strongly else CONVEX,
        params={"A": A, "b": b},
    )


def make_power_well(q: float) -> Objective:
    """``f(x) = |x|^q`` in one dimension; Lojasiewicz exponent ``1/q``."""
    q = float(q)
    if q < 2:
        raise PreconditionError("power well needs q >= 2 for a Lipschitz gradient near 0")

    def f(x):
        return float(np.abs(np.asarray(x, dtype=float)).sum() ** q)

    def g(x):
        x = np.asarray(x, dtype=float)
        return q * np.abs(x) ** (q - 1.0) * np.sign(x)

    quadratic = q == 2.0
    return Objective(
        name=f"power_well(q={q:g})",
        dim=1,
        eval=f,
        grad=g,
        minimizer=np.zeros(1),
        f_star=0.0,
        lipschitz_L=2.0 if quadratic else None,
        strong_eta=2.0 if quadratic else None,
        loja_phi=1.0 / q,
        convexity_class=STRONGLY_CONVEX if quadratic else CONVEX,
        params={"q": q},
    )


def make_log_sum_exp(scale: float, points) -> Objective:
    """Smooth max ``scale * log sum_i exp(<a_i, x>/scale)``; convex, not strongly."""
    if not scale > 0:
        raise PreconditionError("scale must be positive")
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[0] < 1:
        raise PreconditionError("need at least one point")
    P.setflags(write=False)

    def f(x):
        return float(scale * logsumexp(P @ np.asarray(x, dtype=float) / scale))

    def g(x):
        return softmax(P @ np.asarray(x, dtype=float) / scale) @ P

    return Objective(
        name="log_sum_exp",
        dim=P.shape[1],
        eval=f,
        grad=g,
        lipschitz_L=float(np.max(np.sum(P**2, axis=1)) / scale),
        convexity_class=CONVEX,
        params={"scale": scale, "points": P},
    )


def make_rosenbrock() -> Objective:
    def f(x):
        x0, x1 = np.asarray(x, dtype=float)
        return float((1.0 - x0) ** 2 + 100.0 * (x1 - x0**2) ** 2)

    def g(x):
        x0, x1 = np.asarray(x, dtype=float)
        return np.array(
            [-2.0 * (1.0 - x0) - 400.0 * x0 * (x1 - x0**2), 200.0 * (x1 - x0**2)]
        )

    return Objective(
        name="rosenbrock",
        dim=2,
        eval=f,
        grad=g,
        minimizer=np.ones(2),
        f_star=0.0,
        convexity_class=NONCONVEX,
    )


def default_probes(obj: Objective, count=32, seed=0, radius=1.0):
    """Deterministic probe points scattered around the minimizer (or origin)."""
    rng = np.random.default_rng(seed)
    center = obj.minimizer if obj.minimizer is not None else np.zeros(obj.dim)
    return [center + radius * rng.uniform(-1.0, 1.0, obj.dim) for _ in range(count)]


def gradient_check(obj: Objective, probes, h=1e-5, zero_tol=1e-8) -> GradCheckReport:
    """Compare ``obj.grad`` with central differences at each probe.

    Components whose analytic gradient is below ``zero_tol`` in magnitude are
    compared in absolute terms, since a relative error is undefined there.
    """
    if not h > 0:
        raise PreconditionError("h must be positive")
    worst, worst_abs, worst_point = 0.0, 0.0, None
    probes = [obj.check_dim(p) for p in probes]
    for x in probes:
        g = obj.grad(x)
        for i in range(obj.dim):
            e = np.zeros(obj.dim)
            e[i] = h
            fd = (obj.eval(x + e) - obj.eval(x - e)) / (2.0 * h)
            diff = abs(fd - g[i])
            worst_abs = max(worst_abs, diff)
            err = diff / abs(g[i]) if abs(g[i]) > zero_tol else diff
            if err > worst or worst_point is None:
                worst, worst_point = err, x.copy()
    if worst_point is None:
        worst_point = np.zeros(obj.dim)
    return GradCheckReport(worst, len(probes), worst_point, worst_abs)


def pl_constant_estimate(obj: Objective, samples) -> float:
    """Smallest ``||grad f||^2 / (2 (f - f*))`` over the samples."""
    if obj.f_star is None:
        raise PreconditionError("PL estimate needs a known f_star")
    ratios = []
    for x in samples:
        x = obj.check_dim(x)
        gap = obj.eval(x) - obj.f_star
        if gap <= 0:
            continue
        g = obj.grad(x)
        ratios.append(float(g @ g) / (2.0 * gap))
    if not ratios:
        raise PreconditionError("every sample sits at the minimum")
    return min(ratios)


def strong_convexity_violation(obj: Objective, pairs, eta=None) -> float:
    """Largest violation of ``f(y) >= f(x) + <g(x), y-x> + eta/2 |y-x|^2`` over pairs."""
    if eta is None:
        eta = obj.strong_eta or 0.0
    worst = -math.inf
    for x, y in pairs:
        d = y - x
        rhs = obj.eval(x) + obj.grad(x) @ d + 0.5 * eta * (d @ d)
        worst = max(worst, rhs - obj.eval(y))
    return worst


CATALOG = {
    "quadratic": make_quadratic,
    "power_well": make_power_well,
    "log_sum_exp": make_log_sum_exp,
    "rosenbrock": make_rosenbrock,
}


def build_objective(name: str, **params) -> Objective:
    """Construct a catalog objective by name, as used by the CLI."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise PreconditionError(
            f"unknown objective {name!r}; choose from {sorted(CATALOG)}"
        ) from None
    return factory(**params)
