"""Convex-duality certification of a computed solution.

The dual functional is the displacement-field energy
G(V) = integral sqrt(1+|V|^2) - 1, minimized over fields satisfying the
divergence law div V = 4 pi sum a_n delta.  At the optimum the primal and
dual values cancel, F(u) = -G(U); on a truncated box with boundary data phi
the dual objective acquires the boundary pairing + integral phi V.n, whose
exact discrete form here is -h^3 * sum over boundary nodes of phi * div V.
With the matched quadrature weights of :mod:`bornfield.discretization`,
weak duality then holds on the grid up to the solver residual:

    F(u) + G(U) + pairing >= -(max|u|) * ||div U - rho||_1.

The superposed Coulomb field V_h = sum a_n (s-s_n)/|s-s_n|^3 satisfies the
divergence law and is therefore an admissible competitor: a correct solution
must come out no worse, G(U) <= G(V_h) + tol.  The certificate also checks
the stationarity identity F(u) = integral (1 - 1/sqrt(1-|grad u|^2)) (plus
boundary flux), the strict no-struts inequalities |u(s_n) - u(s_m)| <
|s_n - s_m|, the weak maximum principle and the near-charge lightcone
steepening.  Failures are flags, never exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .charges import FOUR_PI, ChargeConfiguration
from .discretization import (
    Grid,
    MollifiedSource,
    ScalarField,
    VectorField,
    boundary_flux,
    boundary_pairing,
    divergence,
    dual_field,
    feasibility_margin,
    functional_value,
    gradient,
    iter_tet_sq,
)
from .energy import dual_density_sq

__all__ = [
    "Certificate",
    "dual_energy_G",
    "dual_objective",
    "harmonic_field",
    "check_identity",
    "certify",
]

GAP_FLOOR = 1e-8  # weak-duality slack, relative to 1 + |F|
GAP_CEILING = 5e-2  # discretization allowance for the gap at default resolution
IDENTITY_TOL = 1e-3
LIGHTCONE_THRESHOLD = 0.95
COMPARISON_TOL = 1e-2


def dual_energy_G(v: VectorField) -> float:
    """Plain dual integral: tet-quadrature sum of g(|V|_T); always >= 0."""
    total = sum(float(np.sum(dual_density_sq(q))) for q in iter_tet_sq(v))
    return v.grid.h**3 / 6.0 * total


def dual_objective(v: VectorField, u_boundary: np.ndarray) -> float:
    """Box dual objective: plain integral plus the exact boundary pairing."""
    return dual_energy_G(v) - boundary_pairing(u_boundary, v)


def harmonic_field(config: ChargeConfiguration, grid: Grid) -> VectorField:
    """Superposed Coulomb field sampled analytically at face centers.

    Its discrete divergence vanishes to O(h^2) away from the sources and its
    boundary flux reproduces 4 pi sum a_n; it is the reference competitor of
    the dual principle.
    """
    ax = grid.axis()
    mid = 0.5 * (ax[:-1] + ax[1:])
    comps = []
    for axis in range(3):
        coords = [ax, ax, ax]
        coords[axis] = mid
        shape = tuple(len(c) for c in coords)
        comp = np.zeros(shape)
        for c in config.charges:
            dx = coords[0] - c.position[0]
            dy = coords[1] - c.position[1]
            dz = coords[2] - c.position[2]
            d2 = dx[:, None, None] ** 2 + dy[None, :, None] ** 2 + dz[None, None, :] ** 2
            if float(d2.min()) <= (1e-9 * grid.h) ** 2:
                raise AssertionError(
                    f"face center coincides with the charge at {c.position}; "
                    "grid margins should preclude this"
                )
            diff = (dx, dy, dz)[axis]
            reshape = [None, None, None]
            reshape[axis] = slice(None)
            comp += c.amplitude * diff[tuple(reshape)] / d2**1.5
        comps.append(comp)
    return VectorField(grid, *comps)


def check_identity(u: ScalarField, source: MollifiedSource) -> float:
    """Relative residual of the stationarity identity.

    |F(u) - sum(1 - 1/sqrt(1-|grad u|^2)) h^3 - boundary pairing| / (1+|F|).
    This is the discrete form of substituting psi = u into the weak
    equation (the boundary pairing restores the flux a truncated box loses
    relative to the whole-space identity): it vanishes exactly at discrete
    stationarity and is O(1) on generic feasible fields, which is what
    makes it a tamper/consistency check.
    """
    margin = feasibility_margin(u)
    if margin >= 1.0:
        from .energy import SingularGradientError

        raise SingularGradientError(
            f"identity check undefined: |grad u| reaches {margin:.17g} >= 1"
        )
    f_val = functional_value(u, source)
    id_sum = sum(
        float(np.sum(1.0 - 1.0 / np.sqrt(1.0 - q))) for q in iter_tet_sq(gradient(u))
    ) * u.grid.h**3 / 6.0
    pairing = boundary_pairing(u.values, dual_field(u))
    return abs(f_val - id_sum - pairing) / (1.0 + abs(f_val))


def _near_charge_face_max(v: VectorField, position, radius: float) -> float:
    """Largest |component| over faces within ``radius`` of a point."""
    ax = v.grid.axis()
    mid = 0.5 * (ax[:-1] + ax[1:])
    best = 0.0
    for axis, comp in enumerate(v.components()):
        coords = [ax, ax, ax]
        coords[axis] = mid
        sel = []
        for d in range(3):
            idx = np.nonzero(np.abs(coords[d] - position[d]) <= radius)[0]
            if idx.size == 0:
                sel = None
                break
            sel.append(idx)
        if sel is None:
            continue
        sub = comp[np.ix_(*sel)]
        d2 = (
            (coords[0][sel[0]] - position[0])[:, None, None] ** 2
            + (coords[1][sel[1]] - position[1])[None, :, None] ** 2
            + (coords[2][sel[2]] - position[2])[None, None, :] ** 2
        )
        inside = d2 <= radius**2
        if inside.any():
            best = max(best, float(np.max(np.abs(sub[inside]))))
    return best


@dataclass
class Certificate:
    """All certified quantities and their pass/fail flags."""

    f_value: float
    g_plain: float
    g_boundary_term: float
    g_value: float
    gap: float
    gap_rel: float
    weak_duality_ok: bool
    gap_small_ok: bool
    identity_residual: float
    identity_ok: bool
    constraint_residual: float
    constraint_ok: bool
    g_harmonic: float
    comparison: float
    competitor_ok: bool
    flux: float
    flux_harmonic: float
    flux_expected: float
    flux_ok: bool
    strut_margins: list = dc_field(default_factory=list)
    no_struts_ok: bool = True
    max_principle_ok: bool = True
    max_location: list | None = None
    min_location: list | None = None
    lightcone_proximity: list = dc_field(default_factory=list)
    lightcone_ok: bool = True
    near_radius: float = 0.0
    critical_proxy_volume: float = 0.0

    def to_dict(self) -> dict:
        return {
            "f_value": self.f_value,
            "g_plain": self.g_plain,
            "g_boundary_term": self.g_boundary_term,
            "g_value": self.g_value,
            "gap": self.gap,
            "gap_rel": self.gap_rel,
            "weak_duality_ok": self.weak_duality_ok,
            "gap_small_ok": self.gap_small_ok,
            "identity_residual": self.identity_residual,
            "identity_ok": self.identity_ok,
            "constraint_residual": self.constraint_residual,
            "constraint_ok": self.constraint_ok,
            "g_harmonic": self.g_harmonic,
            "comparison": self.comparison,
            "competitor_ok": self.competitor_ok,
            "flux": self.flux,
            "flux_harmonic": self.flux_harmonic,
            "flux_expected": self.flux_expected,
            "flux_ok": self.flux_ok,
            "strut_margins": self.strut_margins,
            "no_struts_ok": self.no_struts_ok,
            "max_principle_ok": self.max_principle_ok,
            "max_location": self.max_location,
            "min_location": self.min_location,
            "lightcone_proximity": self.lightcone_proximity,
            "lightcone_ok": self.lightcone_ok,
            "near_radius": self.near_radius,
            "critical_proxy_volume": self.critical_proxy_volume,
        }


def certify(
    u: ScalarField,
    U: VectorField,
    source: MollifiedSource,
    *,
    gap_floor: float = GAP_FLOOR,
    gap_ceiling: float = GAP_CEILING,
    identity_tol: float = IDENTITY_TOL,
    lightcone_threshold: float = LIGHTCONE_THRESHOLD,
    comparison_tol: float = COMPARISON_TOL,
) -> Certificate:
    """Assemble the duality certificate for a (claimed) solution pair.

    The displacement field is taken as given, so hand-built competitors can
    be certified too; every check degrades to a failed flag rather than an
    exception.
    """
    grid = u.grid
    config = source.config
    h = grid.h
    eps = source.eps
    near_radius = 2.0 * eps

    f_value = functional_value(u, source)
    g_plain = dual_energy_G(U)
    bt = -boundary_pairing(u.values, U)
    g_value = g_plain + bt
    gap = f_value + g_value if math.isfinite(f_value) else math.inf
    scale = 1.0 + (abs(f_value) if math.isfinite(f_value) else 0.0)
    gap_rel = gap / scale if math.isfinite(gap) else math.inf

    weak_duality_ok = math.isfinite(gap) and gap >= -gap_floor * scale
    gap_small_ok = math.isfinite(gap) and gap <= gap_ceiling * scale

    feasible = math.isfinite(f_value) and feasibility_margin(u) < 1.0
    if feasible:
        identity_residual = check_identity(u, source)
    else:
        identity_residual = math.inf
    identity_ok = identity_residual <= identity_tol

    resid = (divergence(U) - source.density)[1:-1, 1:-1, 1:-1]
    constraint_residual = h**3 * float(np.sum(np.abs(resid)))
    amp_scale = 1.0 + FOUR_PI * float(np.sum(np.abs(config.amplitudes)))
    constraint_ok = constraint_residual <= 1e-6 * amp_scale

    if len(config) > 0:
        vh = harmonic_field(config, grid)
        g_harm = dual_energy_G(vh) - boundary_pairing(u.values, vh)
        flux_h = boundary_flux(vh)
    else:
        g_harm = 0.0
        flux_h = 0.0
    comparison = g_harm - g_value
    competitor_ok = comparison >= -comparison_tol * (1.0 + abs(g_value))

    flux = boundary_flux(U)
    flux_expected = FOUR_PI * config.total_amplitude
    flux_tol = max(1e-6, 2.0 * h**2) * amp_scale
    flux_ok = abs(flux - flux_expected) <= flux_tol and abs(flux_h - flux_expected) <= flux_tol

    traces = source.point_values(u)
    positions = config.positions
    margins = []
    struts_ok = True
    for i in range(len(config)):
        for j in range(i + 1, len(config)):
            dist = float(np.linalg.norm(positions[i] - positions[j]))
            margin = dist - abs(float(traces[i] - traces[j]))
            margins.append([i, j, margin])
            struts_ok = struts_ok and margin > 0.0

    max_principle_ok = True
    max_loc = None
    min_loc = None
    if len(config) > 0 and feasible:
        ax = grid.axis()
        amps = config.amplitudes
        imax = np.unravel_index(int(np.argmax(u.values)), u.values.shape)
        imin = np.unravel_index(int(np.argmin(u.values)), u.values.shape)
        smax = np.array([ax[i] for i in imax])
        smin = np.array([ax[i] for i in imin])
        max_loc = [float(c) for c in smax]
        min_loc = [float(c) for c in smin]
        if np.any(amps > 0):
            dpos = np.linalg.norm(positions[amps > 0] - smax, axis=1)
            max_principle_ok &= bool(dpos.min() <= near_radius)
        if np.any(amps < 0):
            dneg = np.linalg.norm(positions[amps < 0] - smin, axis=1)
            max_principle_ok &= bool(dneg.min() <= near_radius)

    lightcone = []
    lightcone_ok = True
    if len(config) > 0 and feasible:
        grad_field = gradient(u)
        for c in config.charges:
            prox = _near_charge_face_max(grad_field, c.position, near_radius)
            lightcone.append(prox)
            lightcone_ok = lightcone_ok and prox >= lightcone_threshold

    critical_volume = (
        h**3
        / 6.0
        * sum(float(np.sum(q > lightcone_threshold**2)) for q in iter_tet_sq(gradient(u)))
    )

    return Certificate(
        f_value=f_value,
        g_plain=g_plain,
        g_boundary_term=bt,
        g_value=g_value,
        gap=gap,
        gap_rel=gap_rel,
        weak_duality_ok=weak_duality_ok,
        gap_small_ok=gap_small_ok,
        identity_residual=identity_residual,
        identity_ok=identity_ok,
        constraint_residual=constraint_residual,
        constraint_ok=constraint_ok,
        g_harmonic=g_harm,
        comparison=comparison,
        competitor_ok=competitor_ok,
        flux=flux,
        flux_harmonic=flux_h,
        flux_expected=flux_expected,
        flux_ok=flux_ok,
        strut_margins=margins,
        no_struts_ok=struts_ok,
        max_principle_ok=max_principle_ok,
        max_location=max_loc,
        min_location=min_loc,
        lightcone_proximity=lightcone,
        lightcone_ok=lightcone_ok,
        near_radius=near_radius,
        critical_proxy_volume=critical_volume,
    )
