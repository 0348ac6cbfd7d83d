"""Maximal-slice reading of a solution.

The potential doubles as the height function S of an almost-everywhere
spacelike hypersurface over flat space; each source carries the integral
mean curvature mu_n = (4 pi / 3) a_n, and the slice loses volume relative to
the flat one:

    volume deficit = integral (sqrt(1 - |grad S|^2) - 1) d^3 s <= 0,

which is exactly minus the source-free part of the energy.  Node-cells whose
averaged gradient square exceeds 1 (sampling noise near defects) are clamped
to the continuous extension, where the integrand equals -1; the clamp count
is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charges import FOUR_PI, ChargeConfiguration
from .discretization import ScalarField, gradient, iter_tet_sq

__all__ = ["MaximalSliceView", "volume_deficit", "curvatures_report", "slice_view"]


def volume_deficit(u: ScalarField) -> tuple[float, int]:
    """(deficit, clamped_tets): tet sum of sqrt(1-|grad u|^2) - 1, always <= 0.

    Tets pushed past the causal bound by sampling noise are clamped to the
    continuous extension of the integrand (value -1) and counted.
    """
    clamped = 0
    total = 0.0
    for q in iter_tet_sq(gradient(u)):
        clamped += int(np.sum(q > 1.0))
        total += float(np.sum(np.sqrt(np.maximum(1.0 - q, 0.0)) - 1.0))
    return u.grid.h**3 / 6.0 * total, clamped


def curvatures_report(config: ChargeConfiguration) -> list[float]:
    """Integral mean curvatures mu_n = (4 pi / 3) a_n, one per source."""
    return [FOUR_PI / 3.0 * c.amplitude for c in config.charges]


@dataclass
class MaximalSliceView:
    height: ScalarField
    curvatures: list[float]
    volume_deficit: float
    clamped_tets: int

    def __post_init__(self):
        if self.volume_deficit > 0.0:
            raise ValueError(f"volume deficit must be <= 0, got {self.volume_deficit}")


def slice_view(u: ScalarField, config: ChargeConfiguration) -> dict:
    """Report payload: deficits, clamp count and per-charge curvatures."""
    deficit, clamped = volume_deficit(u)
    return {
        "volume_deficit": deficit,
        "clamped_tets": clamped,
        "curvatures": curvatures_report(config),
        "height_min": float(u.values.min()),
        "height_max": float(u.values.max()),
    }


def view(u: ScalarField, config: ChargeConfiguration) -> MaximalSliceView:
    deficit, clamped = volume_deficit(u)
    return MaximalSliceView(
        height=u,
        curvatures=curvatures_report(config),
        volume_deficit=min(deficit, 0.0),
        clamped_tets=clamped,
    )
