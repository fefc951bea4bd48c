import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fraflow.frackernel import gamma, log_abs_gamma, rgamma


@pytest.mark.parametrize("n", range(1, 24))
def test_integers_are_exact_factorials(n):
    assert gamma(n) == math.factorial(n - 1)


def test_half_integer():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)


@given(st.floats(min_value=0.01, max_value=170.0))
def test_matches_math_gamma_positive(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=2e-13)


@given(st.floats(min_value=-30.0, max_value=-0.01).filter(lambda x: abs(x - round(x)) > 1e-6))
def test_matches_math_gamma_negative(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-11)


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_poles_raise(x):
    with pytest.raises(ValueError):
        gamma(x)


def test_overflow_is_inf():
    assert gamma(172.0) == math.inf


def test_rgamma_zero_at_poles():
    assert rgamma(-3.0) == 0.0
    assert rgamma(0.0) == 0.0
    assert rgamma(4.0) == pytest.approx(1 / 6)


@pytest.mark.parametrize("x", [0.3, 5.5, 120.0, 400.0, -2.5])
def test_log_abs_gamma(x):
    lg, sign = log_abs_gamma(x)
    assert lg == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-12)
    assert sign == (1.0 if x > 0 or math.floor(x) % 2 == 0 else -1.0)


def test_recurrence():
    xs = np.linspace(0.1, 20, 57)
    for x in xs:
        assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-13)
