"""Single-charge oracle: quadratures against closed forms and scalings."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import gamma

from bornfield.born import BornSolution, born_energy, born_gradient, born_potential, trial_value
from bornfield.charges import ChargeConfiguration, PointCharge

FOUR_PI = 4.0 * math.pi

# lemniscatic closed form for u(0; a=1), computed from an independent route
U0_CLOSED_FORM = gamma(0.25) ** 2 / (4.0 * math.sqrt(math.pi))


def test_potential_at_origin_matches_gamma_constant():
    assert U0_CLOSED_FORM == pytest.approx(1.8540746773, abs=1e-9)
    assert born_potential(0.0, 1.0) == pytest.approx(U0_CLOSED_FORM, abs=1e-8)


def test_gradient_closed_form():
    assert born_gradient(1.0, 1.0) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-15)
    # flux law r^2 w / sqrt(1 - w^2) = a, exactly
    for r in (0.3, 1.0, 4.7):
        w = born_gradient(r, 2.5)
        assert r * r * w / math.sqrt(1.0 - w * w) == pytest.approx(2.5, rel=1e-12)


def test_gradient_limits():
    assert born_gradient(0.0, 1.0) == 1.0  # lightcone value
    assert born_gradient(0.0, -3.0) == pytest.approx(-1.0)
    r = 100.0
    assert born_gradient(r, 1.0) == pytest.approx(1.0 / r**2, rel=1e-8)  # Coulomb tail


def test_potential_tail():
    r = 100.0
    assert born_potential(r, 1.0) * r == pytest.approx(1.0, abs=2e-8)


def test_potential_scaling_law():
    # u_a(r) = sqrt(a) u_1(r / sqrt(a)) for a > 0
    for a in (0.25, 1.0, 4.0, 16.0):
        for r in (0.0, 0.5, 2.0, 7.0):
            expected = math.sqrt(a) * born_potential(r / math.sqrt(a), 1.0)
            assert born_potential(r, a) == pytest.approx(expected, abs=1e-9)


def test_potential_odd_in_amplitude():
    r = np.array([0.0, 0.4, 2.2])
    assert_allclose(born_potential(r, -1.0), -born_potential(r, 1.0), rtol=0, atol=1e-12)


def test_quadrature_consistency_with_gradient():
    # d/dr of the potential equals minus the gradient
    for r in (0.1, 0.7, 1.3, 4.0, 10.0):
        step = 1e-5
        fd = (born_potential(r + step, 1.0) - born_potential(r - step, 1.0)) / (2 * step)
        assert fd == pytest.approx(-born_gradient(r, 1.0), rel=1e-6)


def test_energy_reference_value():
    e1 = born_energy(1.0)
    assert e1 == pytest.approx(1.2360497849, abs=1e-9)
    assert e1 == pytest.approx(2.0 / 3.0 * born_potential(0.0, 1.0), abs=1e-8)


def test_energy_even_in_amplitude():
    assert born_energy(-1.0) == pytest.approx(born_energy(1.0), rel=1e-12)


def test_energy_amplitude_scaling():
    # quadrature must reproduce the |a|^{3/2} substitution scaling
    assert born_energy(4.0) == pytest.approx(8.0 * born_energy(1.0), rel=1e-10)
    assert born_energy(1e-6) < 1e-8  # a -> 0 limit


def test_energy_unit_prefactor():
    # electrostatic prefactor alpha / beta^4 at fixed dimensionless amplitude
    assert born_energy(1.0, beta=2.0, alpha=3.0) == pytest.approx(
        3.0 / 16.0 * born_energy(1.0), rel=1e-12
    )


def test_born_solution_off_center():
    sol = BornSolution(1.0, center=(1.0, 0.0, 0.0))
    pts = np.array([[1.0, 0.0, 1.0], [2.0, 0.0, 0.0]])
    vals = sol.potential(pts)
    assert vals[0] == pytest.approx(born_potential(1.0, 1.0), rel=1e-12)
    assert vals[1] == pytest.approx(born_potential(1.0, 1.0), rel=1e-12)


def test_trial_value_reference():
    cfg = ChargeConfiguration((PointCharge((0, 0, 0), 1.0),))
    v = trial_value(cfg, 1.0)
    assert v == pytest.approx(FOUR_PI / 3.0 - FOUR_PI, rel=1e-15)
    assert v == pytest.approx(-8.377580409572781, rel=1e-12)


def test_trial_value_stationary_at_unit_radius():
    # d/dr (4 pi r^3/3 - 4 pi r) = 0 at r = 1 for unit mean amplitude
    cfg = ChargeConfiguration((PointCharge((0, 0, 0), 1.0),))
    v0 = trial_value(cfg, 1.0)
    assert trial_value(cfg, 0.95) > v0
    assert trial_value(cfg, 0.999999) == pytest.approx(v0, abs=1e-8)


def test_trial_value_small_radius_approaches_zero_from_below():
    cfg = ChargeConfiguration((PointCharge((0, 0, 0), 1.0),))
    vals = [trial_value(cfg, r) for r in (1e-2, 1e-4, 1e-6)]
    assert all(v < 0 for v in vals)
    assert abs(vals[-1]) < abs(vals[0]) < 0.13


def test_trial_value_radius_bound():
    cfg = ChargeConfiguration((PointCharge((0, 0, -1), 1.0), PointCharge((0, 0, 1), 1.0)))
    trial_value(cfg, 1.0)  # half the separation: allowed
    with pytest.raises(ValueError):
        trial_value(cfg, 1.5)
    with pytest.raises(ValueError):
        trial_value(cfg, 0.0)


def test_rejects_zero_amplitude():
    with pytest.raises(ValueError):
        born_gradient(1.0, 0.0)
    with pytest.raises(ValueError):
        born_potential(1.0, 0.0)
