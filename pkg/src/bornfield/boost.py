"""Lorentz boosts of the solution graph.

Reading (u(s), s) as a Minkowski four-vector, a boost with velocity e
(|e| < 1) maps the graph of a decaying solution to the graph of the solution
with asymptotically linear behavior u - e.s -> 0 and the same amplitudes at
the transported source points.  Writing xi for the coordinate along e and t
for the height, the map is the textbook one-dimensional boost

    t' = gamma (t + |e| xi),        xi' = gamma (xi + |e| t),

transverse coordinates unchanged.  Resampling the image graph on a grid
requires inverting s0 -> s' per target node; since the displacement is along
e and the map xi -> gamma(xi + |e| u) is strictly monotone for spacelike
graphs, this is a scalar root find, done here by vectorized bisection to
1e-12 * R.  Target nodes whose preimage leaves the source box are filled
from the linear-plus-monopole-tail model and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charges import ChargeConfiguration, PointCharge, normalize
from .discretization import Grid, ScalarField, VectorField, build_mollified_source
from .solver import SolveReport, SolverConfig, solve

__all__ = ["Boost", "BoostResult", "boost_graph", "solve_with_linear_asymptotics", "velocity_addition"]


@dataclass(frozen=True)
class Boost:
    """Boost velocity e with |e| < 1; gamma = 1/sqrt(1-|e|^2)."""

    e: tuple[float, float, float]

    def __post_init__(self):
        e = tuple(float(c) for c in self.e)
        if len(e) != 3 or not all(math.isfinite(c) for c in e):
            raise ValueError(f"boost velocity must be a finite 3-vector, got {self.e}")
        if sum(c * c for c in e) >= 1.0:
            raise ValueError(
                f"boost velocity must satisfy |e| < 1, got |e| = {math.sqrt(sum(c*c for c in e)):.17g}"
            )
        object.__setattr__(self, "e", e)

    @property
    def speed(self) -> float:
        return math.sqrt(sum(c * c for c in self.e))

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.speed**2)

    @property
    def direction(self) -> np.ndarray:
        v = self.speed
        if v == 0.0:
            return np.array([1.0, 0.0, 0.0])
        return np.asarray(self.e) / v


def velocity_addition(v1: float, v2: float) -> float:
    """Relativistic addition of collinear speeds."""
    return (v1 + v2) / (1.0 + v1 * v2)


@dataclass
class BoostResult:
    field: ScalarField
    config: ChargeConfiguration
    extrapolated: np.ndarray  # bool per target node

    @property
    def extrapolated_fraction(self) -> float:
        return float(np.mean(self.extrapolated))


def _tail_model(points: np.ndarray, config: ChargeConfiguration) -> np.ndarray:
    out = np.zeros(len(points))
    for c in config.charges:
        r = np.linalg.norm(points - np.asarray(c.position), axis=1)
        out += c.amplitude / np.maximum(r, 1e-300)
    return out


def boost_graph(
    u: ScalarField,
    boost: Boost,
    config: ChargeConfiguration,
    source=None,
    target_grid: Grid | None = None,
) -> BoostResult:
    """Resample the boosted graph of ``u`` on ``target_grid``.

    ``source`` (a MollifiedSource on u's grid) provides the trace values
    u(s_n) that fix the transported charge locations; it is built with the
    default width when omitted.  A zero boost is the exact identity.
    """
    grid = u.grid
    target = target_grid or grid
    v = boost.speed
    gamma = boost.gamma
    ehat = boost.direction

    if v == 0.0:
        return BoostResult(
            ScalarField(target, u.values.copy() if target is grid else _resample(u, target)),
            config,
            np.zeros((target.n,) * 3, dtype=bool),
        )

    if source is None and len(config) > 0:
        source = build_mollified_source(config, grid, 3.0 * grid.h)
    traces = source.point_values(u) if (source is not None and len(config) > 0) else np.zeros(0)

    # transported charges: xi and t boost along e, transverse part fixed
    moved = []
    for c, t_val in zip(config.charges, traces):
        s = np.asarray(c.position)
        xi = float(np.dot(s, ehat))
        perp = s - xi * ehat
        xi_p = gamma * (xi + v * float(t_val))
        moved.append(PointCharge(tuple(perp + xi_p * ehat), c.amplitude))
    moved_config = normalize(ChargeConfiguration(tuple(moved), config.units))

    x, y, z = target.node_coords()
    pts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    xi_p = pts @ ehat
    perp = pts - xi_p[:, None] * ehat[None, :]

    umax = float(np.max(np.abs(u.values))) + 1.0
    lo = xi_p / gamma - v * umax
    hi = xi_p / gamma + v * umax
    used_model = np.zeros(len(pts), dtype=bool)

    def height(xi):
        s0 = perp + xi[:, None] * ehat[None, :]
        vals, inside = u.interpolate(s0)
        if not inside.all():
            vals = np.where(inside, vals, _tail_model(s0, config))
        return vals, inside

    # g(xi) = gamma (xi + v u(xi)) - xi' is strictly increasing; bisect.
    tol = 1e-12 * target.radius
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        vals, _ = height(mid)
        gval = gamma * (mid + v * vals) - xi_p
        takes = gval <= 0.0
        lo = np.where(takes, mid, lo)
        hi = np.where(takes, hi, mid)
        if float(np.max(hi - lo)) <= tol:
            break
    xi0 = 0.5 * (lo + hi)
    vals, inside = height(xi0)
    used_model = ~inside
    t_prime = gamma * (vals + v * xi0)
    field = ScalarField(target, t_prime.reshape((target.n,) * 3))
    return BoostResult(field, moved_config, used_model.reshape((target.n,) * 3))


def _resample(u: ScalarField, target: Grid) -> np.ndarray:
    x, y, z = target.node_coords()
    pts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    vals, _ = u.interpolate(pts)
    return vals.reshape((target.n,) * 3)


def solve_with_linear_asymptotics(
    config: ChargeConfiguration,
    grid: Grid,
    e,
    cfg: SolverConfig | None = None,
) -> tuple[ScalarField, VectorField, SolveReport]:
    """Direct solve of the asymptotically linear problem u - e.s -> 0.

    Boundary data is e.s plus the monopole tail; the usual feasibility and
    residual guarantees apply.  Cross-validated against boost_graph of the
    decaying solve by the test suite.
    """
    e = np.asarray(e, dtype=float)
    Boost(tuple(e))  # validates |e| < 1 with the Corollary's wording
    return solve(config, grid, cfg, e=e)
