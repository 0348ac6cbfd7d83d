"""Shared helpers: reference configurations and the smoothed trial cone."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from bornfield.charges import ChargeConfiguration, PointCharge
from bornfield.discretization import Grid, ScalarField

FOUR_PI = 4.0 * math.pi


def charge_config(*charges) -> ChargeConfiguration:
    return ChargeConfiguration(tuple(PointCharge(tuple(p), a) for p, a in charges))


@pytest.fixture
def unit_charge():
    return charge_config(((0.0, 0.0, 0.0), 1.0))


@pytest.fixture
def dipole():
    return charge_config(((0.0, 0.0, 1.0), 1.0), ((0.0, 0.0, -1.0), -1.0))


def smoothed_cone_profile(d, r, sigma):
    """Cap profile max(0, r - l(d)) with l(d) = sqrt(d^2+s^2) - s.

    l is a smoothed |d|: l(0) = 0, slope d/sqrt(d^2+s^2) < 1 everywhere, so
    the sampled field stays strictly inside the causal set; sigma -> 0
    recovers the exact cone r - d.
    """
    return np.maximum(0.0, r - (np.sqrt(d * d + sigma * sigma) - sigma))


def smoothed_cone_field(
    grid: Grid, config: ChargeConfiguration, r: float, sigma: float, scale: float = 1.0
) -> ScalarField:
    x, y, z = grid.node_coords()
    vals = np.zeros_like(x)
    for c in config.charges:
        d = np.sqrt(
            (x - c.position[0]) ** 2 + (y - c.position[1]) ** 2 + (z - c.position[2]) ** 2
        )
        vals += scale * math.copysign(1.0, c.amplitude) * smoothed_cone_profile(d, r, sigma)
    return ScalarField(grid, vals)


def smoothed_cone_energy(
    config: ChargeConfiguration,
    r: float,
    sigma: float,
    scale: float = 1.0,
    trace_eps: float | None = None,
) -> float:
    """Radial quadrature oracle for the energy of the smoothed cone.

    Per charge: integral of f(|grad|^2) over the support ball minus
    4 pi |a_n| * (tip value).  With ``trace_eps`` the tip value is the
    bump-weighted average over that width, matching the discrete source
    pairing; otherwise it is the exact tip value scale * r.  Supports must
    not overlap.
    """

    def integrand(d):
        slope2 = scale**2 * d * d / (d * d + sigma * sigma)
        return FOUR_PI * d * d * (1.0 - math.sqrt(1.0 - slope2))

    # support radius: where r - l(d) hits zero
    d_max = math.sqrt(r * r + 2.0 * r * sigma)
    bulk, err = quad(integrand, 0.0, d_max, epsabs=1e-12, epsrel=1e-12, limit=200)
    assert err < 1e-8
    if trace_eps is None:
        tip = scale * r
    else:

        def bump(d):
            t = (d / trace_eps) ** 2
            return math.exp(-1.0 / (1.0 - t)) * d * d if t < 1.0 else 0.0

        w_norm, _ = quad(bump, 0.0, trace_eps, limit=200)
        avg, _ = quad(
            lambda d: bump(d) * scale * smoothed_cone_profile(d, r, sigma),
            0.0,
            trace_eps,
            limit=200,
        )
        tip = avg / w_norm
    total = 0.0
    for c in config.charges:
        total += bulk - FOUR_PI * abs(c.amplitude) * tip
    return total
