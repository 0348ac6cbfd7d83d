"""Exact radial single-charge solution (the built-in ground truth).

For one source of amplitude a the flux through spheres fixes the radial
displacement magnitude to |a|/r^2, i.e.

    w(r) / sqrt(1 - w(r)^2) = a / r^2        with w = -u'(r),

which solves to  w(r) = a / sqrt(r^4 + a^2).  The potential follows by one
quadrature, u(r) = integral_r^inf a / sqrt(t^4 + a^2) dt, finite down to
r = 0 where the gradient magnitude reaches 1 (the lightcone value).  With
the substitution t -> 1/t the tail becomes the smooth integral
a * integral_0^{1/r} dt / sqrt(1 + a^2 t^4), which is what is evaluated
here (adaptive Gauss-Kronrod, absolute tolerance 1e-12).

Also provided: the closed-form value of the spherical-cap trial function,
N * (|B_r| - 4 pi r * mean|a|), an upper bound for the continuum minimum
used by the continuation diagnostics.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .charges import FOUR_PI, ChargeConfiguration

__all__ = [
    "BornSolution",
    "born_gradient",
    "born_potential",
    "born_energy",
    "trial_value",
]

_QUAD_KW = dict(epsabs=1e-12, epsrel=1e-12, limit=200)


def born_gradient(r, a: float):
    """Radial gradient magnitude (signed by a): a / sqrt(r^4 + a^2).

    Satisfies the flux law r^2 w / sqrt(1 - w^2) = a exactly; tends to the
    lightcone value sign(a) at r = 0 and to the Coulomb tail a / r^2 at
    infinity.  Accepts scalars or arrays; r = 0 returns the limit value.
    """
    if a == 0.0:
        raise ValueError("amplitude must be nonzero")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ValueError("radius must be nonnegative")
    out = a / np.sqrt(r**4 + a * a)
    return out if out.ndim else float(out)


def born_potential(r, a: float):
    """u(r) = integral_r^inf a / sqrt(t^4 + a^2) dt by adaptive quadrature."""
    if a == 0.0:
        raise ValueError("amplitude must be nonzero")
    scalar = np.isscalar(r) or np.ndim(r) == 0
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(rs < 0.0):
        raise ValueError("radius must be nonnegative")
    out = np.array([_born_potential_one(float(ri), a) for ri in rs])
    return float(out[0]) if scalar else out


def _born_potential_one(r: float, a: float) -> float:
    # After t -> 1/t the tail integral is a * int_0^{1/r} dt/sqrt(1 + a^2 t^4).
    split = math.sqrt(abs(a))  # curvature scale of the integrand
    if r == 0.0:
        head, err1 = quad(lambda t: a / math.sqrt(t**4 + a * a), 0.0, split, **_QUAD_KW)
        tail, err2 = quad(lambda t: a / math.sqrt(1.0 + a * a * t**4), 0.0, 1.0 / split, **_QUAD_KW)
        _check_quad(err1 + err2)
        return head + tail
    if r <= split:
        head, err1 = quad(lambda t: a / math.sqrt(t**4 + a * a), r, split, **_QUAD_KW)
        tail, err2 = quad(lambda t: a / math.sqrt(1.0 + a * a * t**4), 0.0, 1.0 / split, **_QUAD_KW)
        _check_quad(err1 + err2)
        return head + tail
    val, err = quad(lambda t: a / math.sqrt(1.0 + a * a * t**4), 0.0, 1.0 / r, **_QUAD_KW)
    _check_quad(err)
    return val


def _check_quad(err: float) -> None:
    assert err < 1e-9, f"quadrature error estimate {err} exceeds the oracle budget"


def born_energy(a: float, beta: float = 1.0, alpha: float = 1.0) -> float:
    """Field energy of the single-charge solution.

    (alpha / beta^4) * integral_0^inf (sqrt(1 + a^2/r^4) - 1) r^2 dr, the
    radial reduction of the displacement-field energy; the integrand is
    evaluated as a^2 / (sqrt(r^4 + a^2) + r^2), which is exact algebra and
    well behaved at both ends.  Dimensionless callers use beta = alpha = 1.
    """
    if a == 0.0:
        return 0.0
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    a2 = a * a
    split = math.sqrt(abs(a))
    head, err1 = quad(lambda r: a2 / (math.sqrt(r**4 + a2) + r * r), 0.0, split, **_QUAD_KW)
    # r -> 1/r maps the tail onto a smooth bounded integrand.
    tail, err2 = quad(
        lambda t: a2 / (math.sqrt(1.0 + a2 * t**4) + 1.0), 0.0, 1.0 / split, **_QUAD_KW
    )
    _check_quad(err1 + err2)
    return alpha / beta**4 * (head + tail)


class BornSolution:
    """Single-charge solution centered anywhere, sampled as needed."""

    def __init__(self, amplitude: float, center=(0.0, 0.0, 0.0)):
        if amplitude == 0.0:
            raise ValueError("amplitude must be nonzero")
        self.amplitude = float(amplitude)
        self.center = np.asarray(center, dtype=float)

    def potential(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(pts - self.center, axis=1)
        return born_potential(r, self.amplitude)

    def gradient_magnitude(self, r) -> np.ndarray:
        return np.abs(born_gradient(r, self.amplitude))


def trial_value(config: ChargeConfiguration, r: float) -> float:
    """Closed-form energy of the spherical-cap trial field.

    N * (4 pi r^3 / 3 - 4 pi r * mean|a|); valid for 0 < r <= half the
    minimum pairwise distance (any r > 0 when N <= 1).  Upper bound for the
    continuum minimum, used by the monotone-family diagnostics.
    """
    n = len(config)
    if n == 0:
        return 0.0
    rmax = config.separation_radius
    if not (0.0 < r <= rmax):
        raise ValueError(f"trial radius {r} outside (0, {rmax}]")
    ball = FOUR_PI * r**3 / 3.0
    return n * (ball - FOUR_PI * r * config.mean_abs_amplitude)
