"""Fractional operators, the Mittag-Leffler function and their analytic oracles."""

from .gamma import gamma, log_abs_gamma, rgamma
from .mittag_leffler import MLParams, mittag_leffler, mittag_leffler_array
from .operators import (
    FracScheme,
    SampleHistory,
    UniformGrid,
    caputo_l1,
    caputo_l1_path,
    caputo_monomial_oracle,
    gl_derivative,
    gl_weights,
    l1_coefficients,
    newton_leibniz_check,
    product_trapezoid_weights,
    rl_caputo_bridge,
    rl_integral,
    rl_integral_path,
)

__all__ = [
    "FracScheme",
    "MLParams",
    "SampleHistory",
    "UniformGrid",
    "caputo_l1",
    "caputo_l1_path",
    "caputo_monomial_oracle",
    "gamma",
    "gl_derivative",
    "gl_weights",
    "l1_coefficients",
    "log_abs_gamma",
    "mittag_leffler",
    "mittag_leffler_array",
    "newton_leibniz_check",
    "product_trapezoid_weights",
    "rgamma",
    "rl_caputo_bridge",
    "rl_integral",
    "rl_integral_path",
]
