"""Lanczos approximation of the Gamma function.

Uses the g=7, n=9 coefficient set, which is good to about 1e-15 relative
on the positive axis.  Arguments below 0.5 go through the reflection
formula, so negative non-integer arguments are supported as well.
"""

import math

_G = 7.0
_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _is_pole(x):
    return x <= 0.0 and x == math.floor(x)


def _sinpi(x):
    # sin(pi x) with the argument reduced exactly first; keeps relative
    # accuracy next to the integers, where pi * x alone would not
    n = round(x)
    r = x - n
    s = math.sin(math.pi * r)
    return -s if n % 2 else s


def _lanczos_log(x):
    # log Gamma(x) for x >= 0.5
    z = x - 1.0
    acc = _COEF[0]
    for i in range(1, len(_COEF)):
        acc += _COEF[i] / (z + i)
    t = z + _G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def gamma(x: float) -> float:
    """Gamma function.  Raises ``ValueError`` at the poles 0, -1, -2, ..."""
    x = float(x)
    if _is_pole(x):
        raise ValueError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (_sinpi(x) * gamma(1.0 - x))
    if x > 171.7:
        return math.inf
    if x == math.floor(x) and x <= 23.0:
        return float(math.factorial(int(x) - 1))
    z = x - 1.0
    acc = _COEF[0]
    for i in range(1, len(_COEF)):
        acc += _COEF[i] / (z + i)
    t = z + _G + 0.5
    # split the power so t**(z+0.5) does not overflow before exp(-t) cancels it
    half = t ** (0.5 * (z + 0.5))
    return math.sqrt(2.0 * math.pi) * half * (half * math.exp(-t)) * acc


def log_abs_gamma(x: float) -> tuple[float, float]:
    """Return ``(log|Gamma(x)|, sign(Gamma(x)))``."""
    x = float(x)
    if _is_pole(x):
        raise ValueError(f"gamma has a pole at {x}")
    if x >= 0.5:
        return _lanczos_log(x), 1.0
    s = _sinpi(x)
    lg, _ = log_abs_gamma(1.0 - x)
    return math.log(math.pi) - math.log(abs(s)) - lg, math.copysign(1.0, s)


def rgamma(x: float) -> float:
    """Reciprocal Gamma, entire: returns 0 at the poles."""
    x = float(x)
    if _is_pole(x):
        return 0.0
    lg, sign = log_abs_gamma(x)
    if lg > 700.0:
        return 0.0
    if x >= 0.5 and x <= 170.0:
        return 1.0 / gamma(x)
    return sign * math.exp(-lg)
