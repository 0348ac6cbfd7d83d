"""Grid operators, mollified sources, discrete energies and residuals."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bornfield.born import born_potential, trial_value
from bornfield.charges import ChargeConfiguration, PointCharge
from bornfield.discretization import (
    Grid,
    ScalarField,
    VectorField,
    boundary_flux,
    build_hessian_context,
    build_mollified_source,
    cell_gradient_sq,
    divergence,
    dual_field,
    feasibility_margin,
    functional_gradient,
    functional_value,
    gradient,
    hessian_vector_product,
    read_vtk,
    weak_residual,
    write_vtk,
)
from bornfield.energy import SingularGradientError

from conftest import charge_config, smoothed_cone_energy, smoothed_cone_field

FOUR_PI = 4.0 * math.pi
I = (slice(1, -1),) * 3


def random_interior_field(grid, rng, amplitude=1.0):
    vals = np.zeros((grid.n,) * 3)
    vals[I] = amplitude * rng.standard_normal((grid.n - 2,) * 3)
    return ScalarField(grid, vals)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(10, 1.0)  # even
    with pytest.raises(ValueError):
        Grid(3, 1.0)  # too small
    g = Grid(9, 2.0)
    assert g.h == pytest.approx(0.5)
    assert g.axis()[4] == 0.0  # origin node


def test_gradient_of_constant_vanishes():
    g = Grid(9, 2.0)
    u = ScalarField(g, np.full((9, 9, 9), 3.7))
    assert gradient(u).max_component() == 0.0


def test_gradient_exact_on_linear_fields():
    g = Grid(9, 2.0)
    u = ScalarField.from_function(g, lambda x, y, z: 0.3 * x)
    gv = gradient(u)
    assert_allclose(gv.x, 0.3, rtol=1e-13)
    assert_allclose(gv.y, 0.0, atol=1e-14)
    assert_allclose(gv.z, 0.0, atol=1e-14)


def test_divergence_exact_on_quadratics():
    g = Grid(9, 2.0)
    u = ScalarField.from_function(g, lambda x, y, z: x * x + y * y + z * z)
    div = divergence(gradient(u))
    assert_allclose(div[I], 6.0, rtol=1e-12)


def test_summation_by_parts_adjointness():
    g = Grid(9, 2.0)
    rng = np.random.default_rng(0)
    u = random_interior_field(g, rng)
    psi = random_interior_field(g, rng)
    gu, gp = gradient(u), gradient(psi)
    lhs = sum(float(np.sum(a * b)) for a, b in zip(gu.components(), gp.components()))
    rhs = -float(np.sum(u.values * divergence(gradient(psi))))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_discrete_gauss_law():
    g = Grid(9, 2.0)
    rng = np.random.default_rng(1)
    v = VectorField(
        g,
        rng.standard_normal((8, 9, 9)),
        rng.standard_normal((9, 8, 9)),
        rng.standard_normal((9, 9, 8)),
    )
    interior_div = float(np.sum(divergence(v)[I])) * g.h**3
    assert interior_div == pytest.approx(boundary_flux(v), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# Mollified sources


def test_mollifier_conservation_single_charge():
    g = Grid(17, 2.0)
    src = build_mollified_source(charge_config(((0, 0, 0), 1.0)), g, 3 * g.h)
    total = float(np.sum(src.density)) * g.h**3
    assert total == pytest.approx(FOUR_PI, rel=1e-12)


def test_mollifier_opposite_charges_cancel():
    g = Grid(17, 2.0)
    cfg = charge_config(((0, 0, -0.5), 1.0), ((0, 0, 0.5), -1.0))
    src = build_mollified_source(cfg, g, 2 * g.h)
    assert abs(float(np.sum(src.density)) * g.h**3) < 1e-12


def test_mollifier_width_change_preserves_totals():
    g = Grid(33, 2.0)
    cfg = charge_config(((0, 0, 0), 2.5))
    for eps in (4 * g.h, 2 * g.h):
        src = build_mollified_source(cfg, g, eps)
        assert float(np.sum(src.density)) * g.h**3 == pytest.approx(FOUR_PI * 2.5, rel=1e-12)


def test_mollifier_support_radius():
    g = Grid(33, 2.0)
    eps = 3 * g.h
    src = build_mollified_source(charge_config(((0, 0, 0), 1.0)), g, eps)
    x, y, z = g.node_coords()
    r = np.sqrt(x * x + y * y + z * z)
    assert np.all(src.density[r > eps] == 0.0)


def test_mollifier_preconditions():
    g = Grid(17, 2.0)
    with pytest.raises(ValueError):
        build_mollified_source(charge_config(((0, 0, 0), 1.0)), g, 1.5 * g.h)
    with pytest.raises(ValueError):
        build_mollified_source(charge_config(((0, 0, 1.9), 1.0)), g, 2 * g.h)


def test_point_values_recover_smooth_fields():
    g = Grid(33, 2.0)
    src = build_mollified_source(charge_config(((0, 0, 0), 1.0)), g, 2 * g.h)
    u = ScalarField.from_function(g, lambda x, y, z: 1.0 + 0.1 * x)
    # bump is even around the charge: linear parts average out
    assert src.point_values(u)[0] == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# Energies


def test_functional_zero_field(unit_charge):
    g = Grid(17, 2.0)
    src = build_mollified_source(unit_charge, g, 3 * g.h)
    u = ScalarField.zeros(g)
    assert functional_value(u, src) == 0.0
    assert functional_value(u, src, order=8) == 0.0


def test_functional_monotone_in_order(unit_charge):
    g = Grid(17, 2.0)
    src = build_mollified_source(unit_charge, g, 3 * g.h)
    rng = np.random.default_rng(5)
    u = random_interior_field(g, rng, amplitude=0.02)
    vals = [functional_value(u, src, order=k) for k in (2, 4, 8, 16)]
    exact = functional_value(u, src)
    assert vals[0] < vals[1] < vals[2] < vals[3] <= exact


def test_functional_infeasible_is_inf(unit_charge):
    g = Grid(17, 2.0)
    src = build_mollified_source(unit_charge, g, 3 * g.h)
    u = ScalarField.from_function(g, lambda x, y, z: 2.0 * x)  # slope 2
    assert math.isinf(functional_value(u, src))
    assert np.isfinite(functional_value(u, src, order=8))
    with pytest.raises(SingularGradientError):
        functional_gradient(u, src)


def test_functional_convex_in_nodal_values(unit_charge):
    g = Grid(17, 2.0)
    src = build_mollified_source(unit_charge, g, 3 * g.h)
    rng = np.random.default_rng(9)
    for k in (2, 8):
        u1 = random_interior_field(g, rng, 0.05)
        u2 = random_interior_field(g, rng, 0.05)
        lam = rng.uniform(0.2, 0.8)
        mix = ScalarField(g, lam * u1.values + (1 - lam) * u2.values)
        lhs = functional_value(mix, src, order=k)
        rhs = lam * functional_value(u1, src, order=k) + (1 - lam) * functional_value(
            u2, src, order=k
        )
        assert lhs <= rhs + 1e-10


@pytest.mark.parametrize("order", [2, 8, 32])
def test_gradient_matches_finite_differences(order, unit_charge):
    # 9^3 random feasible fields, norm-relative error <= 1e-6
    g = Grid(9, 2.0)
    src = build_mollified_source(unit_charge, g, 2 * g.h)
    rng = np.random.default_rng(order)
    u = random_interior_field(g, rng, 0.05)
    _, grad = functional_gradient(u, src, order=order)
    step = 3e-6
    fd = np.zeros_like(grad)
    for idx in np.ndindex((7, 7, 7)):
        ix = tuple(i + 1 for i in idx)
        up = u.copy()
        up.values[ix] += step
        um = u.copy()
        um.values[ix] -= step
        fd[ix] = (
            functional_value(up, src, order=order) - functional_value(um, src, order=order)
        ) / (2 * step)
    scale = np.max(np.abs(fd))
    assert np.max(np.abs(grad - fd)) / scale < 1e-6


def test_exact_gradient_matches_finite_differences(unit_charge):
    g = Grid(9, 2.0)
    src = build_mollified_source(unit_charge, g, 2 * g.h)
    rng = np.random.default_rng(77)
    u = random_interior_field(g, rng, 0.03)
    assert feasibility_margin(u) < 0.9
    _, grad = functional_gradient(u, src)
    step = 3e-6
    err = 0.0
    scale = np.max(np.abs(grad))
    for idx in [(2, 3, 4), (4, 4, 4), (1, 6, 2), (5, 2, 6)]:
        up = u.copy()
        up.values[idx] += step
        um = u.copy()
        um.values[idx] -= step
        fd = (functional_value(up, src) - functional_value(um, src)) / (2 * step)
        err = max(err, abs(fd - grad[idx]))
    assert err / scale < 1e-6


def test_hessian_product_matches_gradient_differences(unit_charge):
    g = Grid(9, 2.0)
    src = build_mollified_source(unit_charge, g, 2 * g.h)
    rng = np.random.default_rng(13)
    u = random_interior_field(g, rng, 0.03)
    v = np.zeros((9, 9, 9))
    v[I] = rng.standard_normal((7, 7, 7))
    ctx = build_hessian_context(u)
    hv = hessian_vector_product(ctx, v)
    t = 1e-7
    _, gp = functional_gradient(ScalarField(g, u.values + t * v), src)
    _, gm = functional_gradient(ScalarField(g, u.values - t * v), src)
    fd = (gp - gm) / (2 * t)
    assert np.max(np.abs(hv - fd)) / np.max(np.abs(fd)) < 1e-6


# ---------------------------------------------------------------------------
# Weak residual


def test_residual_zero_for_zero_problem():
    g = Grid(17, 2.0)
    src = build_mollified_source(charge_config(((0, 0, 0), 1.0)), g, 2 * g.h)
    src.density[:] = 0.0  # zero source, keep grid plumbing
    u = ScalarField.zeros(g)
    r, norm = weak_residual(u, src)
    assert norm == 0.0


def test_residual_zero_for_linear_fields():
    g = Grid(17, 2.0)
    cfg = ChargeConfiguration(())
    src = build_mollified_source(charge_config(((0, 0, 0), 1.0)), g, 2 * g.h)
    src.density[:] = 0.0
    u = ScalarField.from_function(g, lambda x, y, z: 0.5 * x + 0.2 * y - 0.1 * z)
    r, norm = weak_residual(u, src)
    assert np.max(np.abs(r)) < 1e-12


def test_residual_is_energy_gradient(unit_charge):
    g = Grid(17, 2.0)
    src = build_mollified_source(unit_charge, g, 3 * g.h)
    rng = np.random.default_rng(3)
    u = random_interior_field(g, rng, 0.03)
    _, grad = functional_gradient(u, src)
    r, _ = weak_residual(u, src)
    assert_allclose(r, grad[I] / g.h**3, rtol=1e-12, atol=1e-13)


def test_residual_rejects_singular_gradient(unit_charge):
    g = Grid(17, 2.0)
    src = build_mollified_source(unit_charge, g, 3 * g.h)
    u = ScalarField.from_function(g, lambda x, y, z: np.maximum(0.0, x))
    with pytest.raises(SingularGradientError) as err:
        weak_residual(u, src)
    assert err.value.location is not None


def _smeared_charge_potential(radii, amp, eps):
    """Exact radial solution for the bump-smeared charge (flux-law oracle).

    Enclosed amplitude Q(r) follows the mollifier profile, the radial
    gradient is Q/sqrt(r^4+Q^2), and outside the bump the potential equals
    the point-charge one exactly (shell theorem).
    """
    from scipy.integrate import quad

    def bump(d):
        t = (d / eps) ** 2
        return math.exp(-1.0 / (1.0 - t)) * d * d if t < 1.0 else 0.0

    w_norm, _ = quad(bump, 0.0, eps, limit=200)

    def enclosed(r):
        if r >= eps:
            return amp
        val, _ = quad(bump, 0.0, r, limit=200)
        return amp * val / w_norm

    def slope(r):
        q = enclosed(r)
        return q / math.sqrt(r**4 + q * q) if r > 0 else 0.0

    u_eps = born_potential(eps, amp)
    out = np.empty_like(radii)
    for i, r in enumerate(radii):
        if r >= eps:
            out[i] = born_potential(float(r), amp)
        else:
            inner, _ = quad(slope, float(r), eps, limit=200)
            out[i] = u_eps + inner
    return out


def test_smeared_born_residual_refines_at_second_order():
    # manufactured smooth solution vs the discrete mollified operator;
    # eps is held fixed so both grids discretize the same continuum problem
    amp, eps = 1.0, 1.0
    norms = []
    far_norms = []
    for n in (33, 65):
        g = Grid(n, 4.0)
        src = build_mollified_source(charge_config(((0, 0, 0), amp)), g, eps)
        x, y, z = g.node_coords()
        r2 = x * x + y * y + z * z
        uniq, inv = np.unique(np.round(r2, 10), return_inverse=True)
        uvals = _smeared_charge_potential(np.sqrt(uniq), amp, eps)[inv].reshape(r2.shape)
        u = ScalarField(g, uvals)
        resid, norm = weak_residual(u, src)
        norms.append(norm)
        far = np.sqrt(r2)[I] >= 1.5 * eps
        far_norms.append(g.h**3 * float(np.sum(np.abs(resid[far]))))
    assert far_norms[1] < far_norms[0] / 2.5  # O(h^2) would give 4
    assert norms[1] < norms[0]


# ---------------------------------------------------------------------------
# Trial cone


def test_smoothed_cone_energy_approaches_closed_form(dipole):
    # radial oracle -> N (|B_r| - 4 pi r mean|a|) as the smoothing vanishes
    target = trial_value(dipole, 1.0)
    assert target == pytest.approx(2 * (FOUR_PI / 3 - FOUR_PI), rel=1e-12)
    errs = [abs(smoothed_cone_energy(dipole, 1.0, s) - target) for s in (0.2, 0.1, 0.05)]
    # first-order in the smoothing width
    assert 0.35 < errs[1] / errs[0] < 0.65
    assert 0.35 < errs[2] / errs[1] < 0.65
    assert errs[2] < 0.7


def test_grid_cone_energy_matches_radial_oracle(dipole):
    # scale < 1 keeps the sampled rim inside the causal set (per-tet bound);
    # radius < 1 keeps the smoothed supports disjoint on the dipole
    g = Grid(49, 4.0)
    radius, sigma, scale = 0.7, 0.3, 0.9
    eps = 3 * g.h
    src = build_mollified_source(dipole, g, eps)
    cone = smoothed_cone_field(g, dipole, radius, sigma, scale)
    assert feasibility_margin(cone) < 1.0
    oracle = smoothed_cone_energy(dipole, radius, sigma, scale, trace_eps=eps)
    value = functional_value(cone, src)
    assert value == pytest.approx(oracle, rel=0.06)


# ---------------------------------------------------------------------------
# Exports


def test_vtk_roundtrip(tmp_path, unit_charge):
    g = Grid(9, 2.0)
    rng = np.random.default_rng(2)
    u = rng.standard_normal((9, 9, 9))
    path = tmp_path / "u.vtk"
    write_vtk(path, g, {"u": u, "extra": u * 2.0})
    g2, scalars = read_vtk(path)
    assert g2 == g
    assert_allclose(scalars["u"], u, rtol=0, atol=0)  # 17 digits round-trip exactly
    assert_allclose(scalars["extra"], 2 * u, rtol=0, atol=0)


def test_csv_slices(tmp_path):
    from bornfield.discretization import export_axis_csv, export_plane_csv

    g = Grid(9, 2.0)
    u = ScalarField.from_function(g, lambda x, y, z: x + 10 * y)
    export_axis_csv(tmp_path / "ax.csv", u, axis=0)
    lines = (tmp_path / "ax.csv").read_text().strip().splitlines()
    assert len(lines) == 10 and lines[0] == "coord,u"
    first = lines[1].split(",")
    assert float(first[0]) == -2.0 and float(first[1]) == -2.0
    export_plane_csv(tmp_path / "pl.csv", u)
    assert len((tmp_path / "pl.csv").read_text().strip().splitlines()) == 82


def test_trilinear_interpolation_exact_on_linear():
    g = Grid(9, 2.0)
    u = ScalarField.from_function(g, lambda x, y, z: 1.0 + 0.3 * x - 0.2 * y + 0.1 * z)
    rng = np.random.default_rng(4)
    pts = rng.uniform(-2, 2, size=(50, 3))
    vals, inside = u.interpolate(pts)
    expected = 1.0 + 0.3 * pts[:, 0] - 0.2 * pts[:, 1] + 0.1 * pts[:, 2]
    assert inside.all()
    assert_allclose(vals, expected, rtol=1e-12)
