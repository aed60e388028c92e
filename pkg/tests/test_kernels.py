import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gamma

from amhd.kernels import (
    CSV_COLUMNS,
    KernelQuery,
    decay_constant,
    decay_identity_residual,
    expected_exponent,
    fit_exponent,
    gaussian_kernel,
    kernel_norms,
    kernel_value,
    lebesgue_norm,
    scaling_check,
    write_csv,
)


def _l2_oracle(beta, m, sigma, t):
    """Plancherel: ||K||_2^2 = 2 pi int |xi|^(2p) exp(-2 t |xi|^(2 beta)) dxi."""
    p = m + sigma
    a = (2 * p + 1) / (2 * beta)
    return math.sqrt(4 * math.pi * gamma(a) / (2 * beta * (2 * t) ** a))


@pytest.mark.parametrize("x", [0.0, 1.0, 3.0])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_gaussian_case(x, t):
    assert kernel_value(KernelQuery(1.0, t), x) == pytest.approx(float(gaussian_kernel(x, t)), abs=1e-8)


@pytest.mark.parametrize("beta", [1.0, 1.25, 1.5, 2.0])
def test_value_at_origin(beta):
    assert kernel_value(KernelQuery(beta, 1.0), 0.0) == pytest.approx(2 * gamma(1 + 1 / (2 * beta)), rel=1e-12)
    assert kernel_value(KernelQuery(beta, 1.0, m=1), 0.0) == 0.0


def test_parity():
    q = KernelQuery(1.5, 0.7, m=1, sigma=0.5)
    assert kernel_value(q, -1.3) == pytest.approx(-kernel_value(q, 1.3), abs=1e-12)
    q = KernelQuery(1.5, 0.7, m=2)
    assert kernel_value(q, -1.3) == pytest.approx(kernel_value(q, 1.3), abs=1e-12)


def test_derivative_of_gaussian():
    # d/dx of sqrt(pi/t) exp(-x^2/4t) = -x/(2t) g
    t, x = 0.8, 1.1
    want = -x / (2 * t) * float(gaussian_kernel(x, t))
    assert kernel_value(KernelQuery(1.0, t, m=1), x) == pytest.approx(want, abs=1e-9)


def test_scaling_identity():
    assert scaling_check(KernelQuery(1.5, 2.0, m=1, sigma=0.5), [0.0, 0.5, 1.0, 2.5, 5.0]) <= 1e-8
    assert scaling_check(KernelQuery(1.5, 1.0), [0.3, 1.7]) == 0.0


@pytest.mark.parametrize("beta, m, sigma", [(1.0, 0, 0.0), (1.25, 1, 0.5), (1.5, 2, 0.0), (2.0, 1, 0.0)])
def test_l2_norm_matches_plancherel(beta, m, sigma):
    kn = kernel_norms(beta, m, sigma, 0.5)
    assert kn[2.0] == pytest.approx(_l2_oracle(beta, m, sigma, 0.5), rel=1e-8)


def test_gaussian_norms_closed_form():
    t = 0.5
    kn = kernel_norms(1.0, 0, 0.0, t)
    assert kn[1.0] == pytest.approx(2 * math.pi, rel=1e-6)
    assert kn[math.inf] == pytest.approx(math.sqrt(math.pi / t), rel=1e-9)
    d = kernel_norms(1.0, 1, 0.0, t)
    # max of |x|/(2t) g at x = sqrt(2t)
    want = math.sqrt(math.pi / t) * math.sqrt(2 * t) / (2 * t) * math.exp(-0.5)
    assert d[math.inf] == pytest.approx(want, rel=1e-8)
    assert d[1.0] == pytest.approx(2 * math.sqrt(math.pi / t), rel=1e-6)


@pytest.mark.parametrize("beta", [1.25, 1.5])
def test_l1_norm_of_g_is_time_independent(beta):
    a = lebesgue_norm(KernelQuery(beta, 0.25))
    b = lebesgue_norm(KernelQuery(beta, 4.0))
    assert a == pytest.approx(b, rel=1e-6)


@given(st.sampled_from([1.0, 1.25, 1.5, 2.0]), st.integers(0, 2), st.sampled_from([0.0, 0.5]), st.floats(0.1, 10.0))
def test_norm_interpolation(beta, m, sigma, t):
    # ||K||_2^2 <= ||K||_1 ||K||_inf
    kn = kernel_norms(beta, m, sigma, t)
    assert kn[2.0] ** 2 <= kn[1.0] * kn[math.inf] * (1 + 1e-8)


@pytest.mark.parametrize("beta, m, sigma, r", [(1.5, 1, 0.0, 2.0), (1.25, 0, 0.5, math.inf), (2.0, 2, 0.0, 1.0)])
def test_fitted_exponent(beta, m, sigma, r):
    ts = 2.0 ** np.arange(-4, 5)
    norms = [kernel_norms(beta, m, sigma, t)[r] for t in ts]
    want = expected_exponent(beta, m, sigma, r)
    assert fit_exponent(ts, norms) == pytest.approx(want, rel=1e-2)


def test_expected_exponent_values():
    assert expected_exponent(1.0, 0, 0.0, 1.0) == 0.0
    assert expected_exponent(2.0, 1, 0.0, math.inf) == pytest.approx(-0.5)
    assert expected_exponent(1.5, 0, 0.5, 2.0) == pytest.approx(-0.5 / 3 - 0.5 / 3)


@pytest.mark.parametrize("beta", [1.0, 1.5, 2.0])
def test_decay_identity(beta):
    for x in (0.0, 0.7, 2.0, 5.0):
        assert decay_identity_residual(beta, x) <= 1e-8


def test_decay_constant_bounds_samples():
    c = decay_constant(1.5)
    xs = [0.0, 1.0, 4.0, 10.0]
    for x in xs:
        assert abs(kernel_value(KernelQuery(1.5, 1.0), x)) * (1 + x * x) <= c * (1 + 1e-9)


def test_invalid_queries():
    with pytest.raises(ValueError):
        KernelQuery(0.9, 1.0)
    with pytest.raises(ValueError):
        KernelQuery(1.5, 0.0)
    with pytest.raises(ValueError):
        KernelQuery(1.5, 1.0, m=-1)
    with pytest.raises(ValueError):
        lebesgue_norm(KernelQuery(1.5, 1.0, r=3.0))


def test_csv_layout():
    buf = io.StringIO()
    write_csv([kernel_norms(1.25, 0, 0.0, 1.0)], buf)
    lines = buf.getvalue().splitlines()
    assert tuple(lines[0].split(",")) == CSV_COLUMNS
    assert [line.split(",")[4] for line in lines[1:]] == ["1.0", "2.0", "inf"]
