"""Pointwise density checks: coefficients, Taylor family, dual map."""

import numpy as np
import pytest
import sympy
from numpy.testing import assert_allclose

from bornfield.energy import (
    SingularGradientError,
    TaylorEnergy,
    coefficient,
    dual_density,
    dual_density_sq,
    dual_to_grad,
    f_exact,
    grad_to_dual,
    taylor_coefficients,
)


def test_leading_coefficients():
    assert coefficient(0) == 0.0
    assert coefficient(1) == 0.5
    assert coefficient(2) == pytest.approx(1.0 / 8.0, rel=0, abs=0)
    assert coefficient(4) == pytest.approx(5.0 / 128.0, rel=0, abs=0)


def test_coefficients_match_symbolic_series():
    # independent oracle: series expansion of 1 - sqrt(1-x)
    x = sympy.symbols("x")
    series = sympy.series(1 - sympy.sqrt(1 - x), x, 0, 9).removeO()
    expected = [float(series.coeff(x, k)) for k in range(1, 9)]
    got = taylor_coefficients(8)
    assert_allclose(got, expected, rtol=1e-15)


def test_coefficients_positive_and_decreasing():
    c = taylor_coefficients(128)
    assert np.all(c > 0)
    assert np.all(np.diff(c) < 0)
    # recurrence stays finite far beyond where factorials overflow
    assert np.isfinite(c[-1]) and c[-1] > 0


def test_f_exact_values():
    assert f_exact(0.0) == 0.0
    assert f_exact(1.0) == 1.0
    assert np.isinf(f_exact(1.5))
    with pytest.raises(ValueError):
        f_exact(-0.1)


def test_f_exact_matches_naive_form():
    x = np.linspace(0.0, 1.0, 1001)
    assert_allclose(f_exact(x), 1.0 - np.sqrt(1.0 - x), rtol=0, atol=1e-15)


def test_f_exact_small_argument_series():
    # for tiny x the value must follow x/2 + x^2/8 without cancellation
    for x in (1e-12, 1e-10, 1e-9):
        assert f_exact(x) == pytest.approx(x / 2 + x * x / 8, rel=1e-12)


def test_taylor_low_order_value():
    te = TaylorEnergy(2)
    assert te.value(1.0) == pytest.approx(0.625, rel=0, abs=0)  # 1/2 + 1/8
    assert te.value(0.0) == 0.0


def test_taylor_high_order_near_one():
    te = TaylorEnergy(64)
    assert abs(te.value(0.99) - f_exact(0.99)) < 2e-2
    assert f_exact(0.99) == pytest.approx(0.9, abs=1e-12)


def test_taylor_requires_order_two():
    with pytest.raises(ValueError):
        TaylorEnergy(1)


def test_monotone_convergence_in_k():
    xs = np.linspace(0.05, 1.0, 20)
    prev = TaylorEnergy(2).value(xs)
    for order in (4, 8, 16, 32, 64):
        cur = TaylorEnergy(order).value(xs)
        assert np.all(cur >= prev)
        assert np.all(cur <= f_exact(xs) + 1e-15)
        prev = cur
    # strict increase where the increments are above machine precision
    xs = np.linspace(0.8, 1.0, 9)
    for order in (2, 4, 8, 16, 32):
        assert np.all(TaylorEnergy(2 * order).value(xs) > TaylorEnergy(order).value(xs))


def test_divergence_beyond_one():
    # partial sums blow up for x > 1: the family recovers the +inf extension
    assert TaylorEnergy(128).value(1.1) > 100.0
    assert TaylorEnergy(256).value(1.1) > 2.0 * TaylorEnergy(128).value(1.1)
    assert TaylorEnergy(128).value(2.0) > 1e30


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(7)
    xs = rng.uniform(0.0, 2.0, size=40)
    step = 1e-6
    for order in (2, 8, 32):
        te = TaylorEnergy(order)
        fd = (te.value(xs + step) - te.value(np.maximum(xs - step, 0.0))) / (
            step + np.minimum(xs, step)
        )
        assert_allclose(te.derivative(xs), fd, rtol=1e-8, atol=1e-10)


def test_pointwise_legendre_identity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = rng.uniform(-0.57, 0.57, size=3)
        v = grad_to_dual(p)
        lhs = dual_density(v) + f_exact(float(np.dot(p, p)))
        rhs = -float(np.dot(v, p))
        assert abs(lhs - rhs) < 1e-12


def test_dual_map_reference_point():
    p = np.array([0.6, 0.0, 0.0])
    v = grad_to_dual(p)
    assert np.linalg.norm(v) == pytest.approx(0.75, rel=1e-15)
    assert dual_density(v) == pytest.approx(0.25, rel=1e-12)  # 1/0.8 - 1
    assert_allclose(dual_to_grad(v), p, rtol=1e-14)


def test_dual_map_diverges_at_lightcone():
    mags = [grad_to_dual(np.array([m, 0, 0])) for m in (0.9, 0.99, 0.999)]
    norms = [np.linalg.norm(v) for v in mags]
    assert norms[0] < norms[1] < norms[2]
    assert norms[2] > 20.0
    with pytest.raises(SingularGradientError):
        grad_to_dual(np.array([1.0, 0.0, 0.0]))


def test_dual_density_stable_for_tiny_fields():
    assert dual_density_sq(1e-200) == pytest.approx(0.5e-200, rel=1e-15)
    assert dual_density(np.zeros(3)) == 0.0
