"""Uniform staggered-grid discretization of the variational problem.

Layout
------
The box [-R, R]^3 carries n nodes per axis (n odd, so a node sits at the
origin), spacing h = 2R/(n-1).  Scalar fields (the potential u) live on
nodes; vector fields (displacement U, comparison field V_h) carry one normal
component per link between adjacent nodes ("faces" of the node-centered
cells).  The face gradient and the node divergence are exact adjoints under
the discrete pairing, so the discrete Euler-Lagrange residual below is
*exactly* the gradient of the discrete energy with respect to nodal values.

Quadrature
----------
Each grid cube splits into the six lattice-path tetrahedra (the Kuhn
decomposition); a tetrahedron combines one x-, one y- and one z-face along
its path, giving a full squared gradient q_T per tet from the existing
staggered data.  The energy is (h^3/6) * sum over tets of density(q_T).
This quadrature is what makes the discrete problem honor the continuum
structure exactly rather than to leading order:

* globally linear fields are exact stationary points (their residual
  vanishes identically, and Dirichlet data e.s reproduces e.s);
* the tets tile the box exactly, so constant integrands integrate exactly
  (volume bookkeeping in the geometry view);
* the Fenchel-Young inequality holds per tet as a genuine 3-vector
  inequality with equality at the pointwise dual map, which gives the
  duality certificate a discretely exact weak-duality bound.

Per-node face-averaged gradient magnitudes remain available as diagnostics
(field exports, lightcone proximity).

Point sources are mollified by compactly supported smooth bumps
rho(d) ~ exp(-1/(1-(d/eps)^2)), each renormalized so its discrete integral
is exactly 4 pi a_n.  Field values "at" a charge are defined as the
bump-weighted average of u, consistently with the source term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .charges import FOUR_PI, ChargeConfiguration
from .energy import (
    SingularGradientError,
    TaylorEnergy,
    f_exact,
    f_exact_prime,
    f_exact_second,
)

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "MollifiedSource",
    "build_mollified_source",
    "gradient",
    "divergence",
    "cell_gradient_sq",
    "cell_magnitude_sq",
    "iter_tet_sq",
    "max_tet_gradient",
    "functional_value",
    "functional_gradient",
    "HessianContext",
    "build_hessian_context",
    "hessian_vector_product",
    "weak_residual",
    "dual_field",
    "max_face_gradient",
    "feasibility_margin",
    "boundary_flux",
    "boundary_pairing",
    "boundary_mask",
    "surface_flux_quadrature",
    "write_vtk",
    "read_vtk",
    "export_axis_csv",
    "export_plane_csv",
]

INTERIOR = (slice(1, -1),) * 3


@dataclass(frozen=True)
class Grid:
    """Uniform node-centered grid on [-R, R]^3 with an origin node."""

    n: int
    radius: float

    def __post_init__(self):
        if self.n < 5 or self.n % 2 == 0:
            raise ValueError(f"grid needs an odd node count >= 5, got n={self.n}")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"grid radius must be positive and finite, got {self.radius}")

    @property
    def h(self) -> float:
        return 2.0 * self.radius / (self.n - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.n)

    def node_coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ax = self.axis()
        return np.meshgrid(ax, ax, ax, indexing="ij")

    def check_margin(self, positions: np.ndarray, margin: float) -> None:
        """Require every position at least ``margin`` inside the box."""
        if len(positions) == 0:
            return
        worst = float(np.max(np.abs(positions)))
        if worst > self.radius - margin:
            raise ValueError(
                f"charge at distance {worst:.17g} from center violates the "
                f"required boundary margin {margin:.17g} on a box of radius {self.radius:.17g}"
            )


@dataclass
class ScalarField:
    """Node-sampled scalar field (the potential / height function)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        expected = (self.grid.n,) * 3
        if self.values.shape != expected:
            raise ValueError(f"scalar field shape {self.values.shape} != {expected}")

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros((grid.n,) * 3))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        x, y, z = grid.node_coords()
        return cls(grid, np.asarray(fn(x, y, z), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def interpolate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Trilinear interpolation at (M, 3) points.

        Returns (values, inside) where ``inside`` marks points within the
        box; outside points are evaluated at the clamped location.
        """
        g = self.grid
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = (pts + g.radius) / g.h
        inside = np.all((pts >= -g.radius) & (pts <= g.radius), axis=1)
        t = np.clip(t, 0.0, g.n - 1.0)
        i0 = np.minimum(t.astype(int), g.n - 2)
        f = t - i0
        v = self.values
        ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
        fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
        out = np.zeros(len(pts))
        for dx in (0, 1):
            wx = fx if dx else 1.0 - fx
            for dy in (0, 1):
                wy = fy if dy else 1.0 - fy
                for dz in (0, 1):
                    wz = fz if dz else 1.0 - fz
                    out += wx * wy * wz * v[ix + dx, iy + dy, iz + dz]
        return out, inside


@dataclass
class VectorField:
    """Face-staggered vector field: one normal component per link."""

    grid: Grid
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        shapes = ((n - 1, n, n), (n, n - 1, n), (n, n, n - 1))
        for comp, expected in zip((self.x, self.y, self.z), shapes):
            if comp.shape != expected:
                raise ValueError(f"vector component shape {comp.shape} != {expected}")

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        n = grid.n
        return cls(
            grid,
            np.zeros((n - 1, n, n)),
            np.zeros((n, n - 1, n)),
            np.zeros((n, n, n - 1)),
        )

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.x, self.y, self.z

    def max_component(self) -> float:
        return max(
            float(np.max(np.abs(c))) if c.size else 0.0 for c in self.components()
        )

    def face_centers(self, axis: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinates of the face centers for one component."""
        ax = self.grid.axis()
        mid = 0.5 * (ax[:-1] + ax[1:])
        coords = [ax, ax, ax]
        coords[axis] = mid
        return np.meshgrid(*coords, indexing="ij")


def _face_diffs(values: np.ndarray, h: float):
    gx = np.diff(values, axis=0) / h
    gy = np.diff(values, axis=1) / h
    gz = np.diff(values, axis=2) / h
    return gx, gy, gz


def gradient(u: ScalarField) -> VectorField:
    """Staggered central-difference gradient (exact on linear fields)."""
    gx, gy, gz = _face_diffs(u.values, u.grid.h)
    return VectorField(u.grid, gx, gy, gz)


def divergence(v: VectorField) -> np.ndarray:
    """Node divergence, one-sided at the box boundary (missing faces = 0).

    At interior nodes this is the standard central form; together with
    :func:`gradient` it satisfies the exact summation-by-parts identity
    sum_faces V . grad(u) h^3 = - sum_nodes u div(V) h^3.
    """
    n = v.grid.n
    div = np.zeros((n, n, n))
    div[:-1, :, :] += v.x
    div[1:, :, :] -= v.x
    div[:, :-1, :] += v.y
    div[:, 1:, :] -= v.y
    div[:, :, :-1] += v.z
    div[:, :, 1:] -= v.z
    div /= v.grid.h
    return div


def _accumulate_cell(gx2, gy2, gz2, n):
    q = np.zeros((n, n, n))
    q[:-1, :, :] += gx2
    q[1:, :, :] += gx2
    q[:, :-1, :] += gy2
    q[:, 1:, :] += gy2
    q[:, :, :-1] += gz2
    q[:, :, 1:] += gz2
    q *= 0.5
    return q


def cell_gradient_sq(u: ScalarField) -> np.ndarray:
    """Per-node |grad u|^2: half-weighted squares of the adjacent faces."""
    gx, gy, gz = _face_diffs(u.values, u.grid.h)
    return _accumulate_cell(gx * gx, gy * gy, gz * gz, u.grid.n)


def cell_magnitude_sq(v: VectorField) -> np.ndarray:
    """Per-node |V|^2 with the same face weights as cell_gradient_sq."""
    return _accumulate_cell(v.x * v.x, v.y * v.y, v.z * v.z, v.grid.n)


def iter_tet_sq(v: VectorField):
    """Yield the six per-tet squared magnitudes of a link field.

    Integrals of pointwise densities over the box are
    h^3/6 * sum over the six families of fn(q_T); used by the energy, the
    dual integral and the volume bookkeeping so they share one quadrature.
    """
    m = v.grid.n - 1
    for slot in range(6):
        yield _tet_sq(v.x, v.y, v.z, slot, m)


# ---------------------------------------------------------------------------
# Mollified point sources


@dataclass
class MollifiedSource:
    """Smooth compactly supported replacement of the Dirac sources.

    ``density`` integrates (discretely, with weight h^3) to exactly
    4 pi sum(a_n).  ``bumps`` holds, per charge, the index window and the
    unit-mass weights used both for the source term and for field traces.
    """

    config: ChargeConfiguration
    grid: Grid
    eps: float
    density: np.ndarray
    bumps: list[tuple[tuple[slice, slice, slice], np.ndarray]] = field(repr=False, default_factory=list)

    def point_values(self, u: ScalarField) -> np.ndarray:
        """Bump-weighted average of u at each charge (the mollified trace)."""
        h3 = self.grid.h**3
        return np.array(
            [float(np.sum(u.values[sl] * w)) * h3 for sl, w in self.bumps]
        )

    def source_term(self, u: ScalarField) -> float:
        """The discrete pairing 4 pi sum_n a_n <u>_n."""
        if not self.bumps:
            return 0.0
        amps = self.config.amplitudes
        return float(np.dot(FOUR_PI * amps, self.point_values(u)))


def build_mollified_source(
    config: ChargeConfiguration, grid: Grid, eps: float
) -> MollifiedSource:
    """Sample and renormalize one bump per charge.

    Requires eps >= 2h (so each bump covers enough nodes) and every charge
    at least eps + 2h inside the box.
    """
    h = grid.h
    if eps < 2.0 * h - 1e-12 * h:
        raise ValueError(f"mollifier width eps={eps:.17g} must be >= 2h = {2*h:.17g}")
    grid.check_margin(config.positions, eps + 2.0 * h)
    ax = grid.axis()
    n = grid.n
    density = np.zeros((n, n, n))
    bumps = []
    for charge in config.charges:
        s = np.asarray(charge.position)
        lo = np.searchsorted(ax, s - eps, side="left")
        hi = np.searchsorted(ax, s + eps, side="right")
        sl = tuple(slice(int(l), int(u)) for l, u in zip(lo, hi))
        xs = [ax[sl[d]] - s[d] for d in range(3)]
        d2 = (
            xs[0][:, None, None] ** 2
            + xs[1][None, :, None] ** 2
            + xs[2][None, None, :] ** 2
        )
        t = d2 / eps**2
        with np.errstate(divide="ignore", over="ignore"):
            w = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
        mass = float(w.sum()) * h**3
        if mass <= 0.0:
            raise ValueError("mollifier support contains no grid nodes; enlarge eps")
        w /= mass  # unit discrete mass per bump
        bumps.append((sl, w))
        density[sl] += FOUR_PI * charge.amplitude * w
    return MollifiedSource(config, grid, eps, density, bumps)


# ---------------------------------------------------------------------------
# Discrete energy, gradient, residual (lattice-tetrahedron quadrature)

EXACT = None  # sentinel: functional mode for the exact density

# lattice-path tetrahedra of a cube: axis visit orders
_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def _taylor(order: int | None) -> TaylorEnergy | None:
    return None if order is None else TaylorEnergy(order)


def _slot_offsets(perm):
    """Per-axis cube offset of the link each tet of ``perm`` uses.

    The tet walks the cube along perm; the axis-a link sits at the partial
    offset accumulated before stepping along a (its own component is 0).
    """
    offsets = [None, None, None]
    acc = [0, 0, 0]
    for axis in perm:
        offsets[axis] = tuple(acc)
        acc[axis] += 1
    return offsets


_SLOT_OFFSETS = tuple(_slot_offsets(p) for p in _PERMS)


def _slot_slice(axis, offset, m):
    return tuple(
        slice(offset[d], offset[d] + m) if d != axis else slice(0, m) for d in range(3)
    )


def _tet_sq(gx, gy, gz, slot, m):
    """Squared gradient of one tet family: sum of its three link squares."""
    offs = _SLOT_OFFSETS[slot]
    qx = gx[_slot_slice(0, offs[0], m)]
    qy = gy[_slot_slice(1, offs[1], m)]
    qz = gz[_slot_slice(2, offs[2], m)]
    return qx * qx + qy * qy + qz * qz


def max_face_gradient(u: ScalarField) -> float:
    """Largest |grad u| over faces (single-component bound)."""
    return gradient(u).max_component()


def max_tet_gradient(u: ScalarField) -> float:
    """Largest |grad u| over tets; the exact density is finite iff <= 1."""
    gx, gy, gz = _face_diffs(u.values, u.grid.h)
    m = u.grid.n - 1
    worst = 0.0
    for slot in range(6):
        worst = max(worst, float(_tet_sq(gx, gy, gz, slot, m).max()))
    return math.sqrt(worst)


def feasibility_margin(u: ScalarField) -> float:
    """max over tets of |grad u| (dominates every single face component)."""
    return max_tet_gradient(u)


def functional_value(
    u: ScalarField,
    source: MollifiedSource,
    order: int | None = EXACT,
    taylor: TaylorEnergy | None = None,
) -> float:
    """Discrete energy F(u): tet-summed density minus the source pairing.

    ``order=None`` evaluates the exact density and returns +inf when any
    tet leaves the causal set (mirroring the +inf extension of the
    pointwise density); an integer order evaluates the Taylor member,
    finite for every field.
    """
    g = u.grid
    m = g.n - 1
    gx, gy, gz = _face_diffs(u.values, g.h)
    te = taylor if taylor is not None else _taylor(order)
    total = 0.0
    for slot in range(6):
        q = _tet_sq(gx, gy, gz, slot, m)
        if te is None:
            if float(q.max()) > 1.0:
                return math.inf
            total += float(np.sum(f_exact(q)))
        else:
            total += float(np.sum(te.value(q)))
    return g.h**3 / 6.0 * total - source.source_term(u)


def _assemble_flux(gx, gy, gz, sigma_fn, m):
    """Link fluxes U_l = -(1/6) sum over tet slots of sigma_T * g_l.

    ``sigma_fn(q)`` maps the tet gradient square to twice the density
    derivative; the slot average reproduces -grad u / sqrt(1 - |grad u|^2)
    to second order at link midpoints.
    """
    shapes = (gx.shape, gy.shape, gz.shape)
    sums = [np.zeros(s) for s in shapes]
    for slot in range(6):
        q = _tet_sq(gx, gy, gz, slot, m)
        sigma = sigma_fn(q)
        offs = _SLOT_OFFSETS[slot]
        for axis in range(3):
            sums[axis][_slot_slice(axis, offs[axis], m)] += sigma
    ux = -sums[0] * gx / 6.0
    uy = -sums[1] * gy / 6.0
    uz = -sums[2] * gz / 6.0
    return ux, uy, uz


def functional_gradient(
    u: ScalarField,
    source: MollifiedSource,
    order: int | None = EXACT,
    taylor: TaylorEnergy | None = None,
):
    """Energy and its exact gradient with respect to interior nodal values.

    Returns (value, grad) with grad a full (n,n,n) array that is zero on the
    boundary ring and equals h^3 * (div U - rho) inside, U being the
    density-weighted link flux.  This is the analytic derivative of
    :func:`functional_value`; the test suite checks it against central
    finite differences.
    """
    g = u.grid
    h, h3 = g.h, g.h**3
    m = g.n - 1
    gx, gy, gz = _face_diffs(u.values, h)
    te = taylor if taylor is not None else _taylor(order)
    total = 0.0
    shapes = (gx.shape, gy.shape, gz.shape)
    sums = [np.zeros(s) for s in shapes]
    for slot in range(6):
        q = _tet_sq(gx, gy, gz, slot, m)
        if te is None:
            if float(q.max()) > 1.0:
                raise SingularGradientError(
                    "gradient of the exact energy at an infeasible field"
                )
            total += float(np.sum(f_exact(q)))
            sigma = 2.0 * f_exact_prime(q)
        else:
            total += float(np.sum(te.value(q)))
            sigma = 2.0 * te.derivative(q)
        offs = _SLOT_OFFSETS[slot]
        for axis in range(3):
            sums[axis][_slot_slice(axis, offs[axis], m)] += sigma
    flux = VectorField(g, -sums[0] * gx / 6.0, -sums[1] * gy / 6.0, -sums[2] * gz / 6.0)
    grad = divergence(flux) - source.density
    grad[0, :, :] = grad[-1, :, :] = 0.0
    grad[:, 0, :] = grad[:, -1, :] = 0.0
    grad[:, :, 0] = grad[:, :, -1] = 0.0
    grad *= h3
    value = h3 / 6.0 * total - source.source_term(u)
    return value, grad


@dataclass
class HessianContext:
    """Frozen state for repeated Hessian-vector products at one iterate.

    CG performs many products per Newton step; the per-tet density
    derivatives and the link gradients only depend on the iterate, so they
    are computed once.
    """

    grid: Grid
    gx: np.ndarray
    gy: np.ndarray
    gz: np.ndarray
    sigma: list  # per slot: 2 f'(q_T)
    curv: list  # per slot: 4 f''(q_T)


def build_hessian_context(
    u: ScalarField,
    order: int | None = EXACT,
    taylor: TaylorEnergy | None = None,
) -> HessianContext:
    g = u.grid
    m = g.n - 1
    gx, gy, gz = _face_diffs(u.values, g.h)
    te = taylor if taylor is not None else _taylor(order)
    sigma = []
    curv = []
    for slot in range(6):
        q = _tet_sq(gx, gy, gz, slot, m)
        if te is None:
            sigma.append(2.0 * f_exact_prime(q))
            curv.append(4.0 * f_exact_second(q))
        else:
            sigma.append(2.0 * te.derivative(q))
            curv.append(4.0 * te.second_derivative(q))
    return HessianContext(grid=g, gx=gx, gy=gy, gz=gz, sigma=sigma, curv=curv)


def hessian_vector_product(ctx: HessianContext, v: np.ndarray) -> np.ndarray:
    """Action of the energy Hessian on an interior perturbation v.

    v is a full array with zero boundary; the result follows the same
    convention.  Used by the Newton stages and the exact-density polish.
    """
    g = ctx.grid
    h, h3 = g.h, g.h**3
    m = g.n - 1
    dvx, dvy, dvz = _face_diffs(v, h)
    gcomp = (ctx.gx, ctx.gy, ctx.gz)
    dcomp = (dvx, dvy, dvz)
    sums = [np.zeros(c.shape) for c in gcomp]
    for slot in range(6):
        offs = _SLOT_OFFSETS[slot]
        sl = [_slot_slice(axis, offs[axis], m) for axis in range(3)]
        # dq_T = 2 sum_a g_a dv_a on the tet's links
        dq = sum(gcomp[a][sl[a]] * dcomp[a][sl[a]] for a in range(3))
        for axis in range(3):
            sums[axis][sl[axis]] += (
                ctx.sigma[slot] * dcomp[axis][sl[axis]]
                + ctx.curv[slot] * dq * gcomp[axis][sl[axis]]
            )
    flux = VectorField(g, -sums[0] / 6.0, -sums[1] / 6.0, -sums[2] / 6.0)
    hv = divergence(flux)
    hv[0, :, :] = hv[-1, :, :] = 0.0
    hv[:, 0, :] = hv[:, -1, :] = 0.0
    hv[:, :, 0] = hv[:, :, -1] = 0.0
    hv *= h3
    return hv


def _check_causal(u: ScalarField):
    g = u.grid
    gx, gy, gz = _face_diffs(u.values, g.h)
    m = g.n - 1
    for slot in range(6):
        q = _tet_sq(gx, gy, gz, slot, m)
        qmax = float(q.max())
        if qmax >= 1.0:
            loc = np.unravel_index(int(np.argmax(q)), q.shape)
            raise SingularGradientError(
                f"|grad u| reaches {math.sqrt(qmax):.17g} >= 1 in the tet at cube {loc}",
                location=loc,
            )
    return gx, gy, gz


def weak_residual(u: ScalarField, source: MollifiedSource):
    """Euler-Lagrange mismatch -div(grad u / sqrt(1-|grad u|^2)) - rho.

    Returns (residual, norm): the residual on interior nodes (equal to the
    gradient of the exact energy divided by h^3) and its h^3-weighted l1
    norm.  Raises SingularGradientError, carrying the location, whenever the
    gradient reaches the causal bound.
    """
    g = u.grid
    gx, gy, gz = _check_causal(u)
    ux, uy, uz = _assemble_flux(gx, gy, gz, lambda q: 2.0 * f_exact_prime(q), g.n - 1)
    div = divergence(VectorField(g, ux, uy, uz))
    residual = (div - source.density)[INTERIOR]
    norm = g.h**3 * float(np.sum(np.abs(residual)))
    return residual, norm


def dual_field(u: ScalarField) -> VectorField:
    """Displacement field U = -grad u / sqrt(1 - |grad u|^2) on faces.

    Each link averages the dual coefficients of the six tets sharing it,
    which makes div U - rho coincide exactly with the weak residual.
    """
    gx, gy, gz = _check_causal(u)
    ux, uy, uz = _assemble_flux(gx, gy, gz, lambda q: 2.0 * f_exact_prime(q), u.grid.n - 1)
    return VectorField(u.grid, ux, uy, uz)


# ---------------------------------------------------------------------------
# Boundary bookkeeping


def boundary_flux(v: VectorField) -> float:
    """Outward flux through the box boundary (telescope of the interior div).

    Equals h^3 * sum of div(v) over interior nodes exactly.
    """
    h2 = v.grid.h**2
    inner = slice(1, -1)
    fx = np.sum(v.x[-1, inner, inner]) - np.sum(v.x[0, inner, inner])
    fy = np.sum(v.y[inner, -1, inner]) - np.sum(v.y[inner, 0, inner])
    fz = np.sum(v.z[inner, inner, -1]) - np.sum(v.z[inner, inner, 0])
    return h2 * float(fx + fy + fz)


def boundary_pairing(u_values: np.ndarray, v: VectorField) -> float:
    """Exact discrete boundary pairing h^3 * sum_boundary u * div(v).

    This is the term by which the box energy identities differ from their
    whole-space counterparts; the duality certificate adds its negative to
    the plain dual integral.
    """
    div = divergence(v)
    n = v.grid.n
    mask = np.zeros((n, n, n), dtype=bool)
    mask[0, :, :] = mask[-1, :, :] = True
    mask[:, 0, :] = mask[:, -1, :] = True
    mask[:, :, 0] = mask[:, :, -1] = True
    return v.grid.h**3 * float(np.sum(u_values[mask] * div[mask]))


def surface_flux_quadrature(u_values: np.ndarray, v: VectorField) -> float:
    """Midpoint-rule surface integral of u V.n over the box boundary.

    Independent quadrature (face-averaged u on the outermost face layer);
    used by the stationarity identity check so that it stays an honest
    discretization signal.
    """
    h2 = v.grid.h**2
    total = 0.0
    ub = 0.5 * (u_values[-1, :, :] + u_values[-2, :, :])
    total += float(np.sum(ub * v.x[-1, :, :]))
    ub = 0.5 * (u_values[0, :, :] + u_values[1, :, :])
    total -= float(np.sum(ub * v.x[0, :, :]))
    ub = 0.5 * (u_values[:, -1, :] + u_values[:, -2, :])
    total += float(np.sum(ub * v.y[:, -1, :]))
    ub = 0.5 * (u_values[:, 0, :] + u_values[:, 1, :])
    total -= float(np.sum(ub * v.y[:, 0, :]))
    ub = 0.5 * (u_values[:, :, -1] + u_values[:, :, -2])
    total += float(np.sum(ub * v.z[:, :, -1]))
    ub = 0.5 * (u_values[:, :, 0] + u_values[:, :, 1])
    total -= float(np.sum(ub * v.z[:, :, 0]))
    return h2 * total


def boundary_mask(grid: Grid) -> np.ndarray:
    n = grid.n
    mask = np.zeros((n, n, n), dtype=bool)
    mask[0, :, :] = mask[-1, :, :] = True
    mask[:, 0, :] = mask[:, -1, :] = True
    mask[:, :, 0] = mask[:, :, -1] = True
    return mask


# ---------------------------------------------------------------------------
# File exports (legacy structured-points VTK, CSV slices)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_vtk(path, grid: Grid, scalars: dict[str, np.ndarray], title: str = "bornfield") -> None:
    """Legacy ASCII structured-points file with one or more node scalars."""
    n = grid.n
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {n} {n} {n}",
        f"ORIGIN {_fmt(-grid.radius)} {_fmt(-grid.radius)} {_fmt(-grid.radius)}",
        f"SPACING {_fmt(grid.h)} {_fmt(grid.h)} {_fmt(grid.h)}",
        f"POINT_DATA {n**3}",
    ]
    for name, values in scalars.items():
        if values.shape != (n, n, n):
            raise ValueError(f"scalar {name!r} has shape {values.shape}, expected {(n,)*3}")
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        flat = np.transpose(values, (2, 1, 0)).ravel()  # x fastest, per VTK
        lines.extend(_fmt(val) for val in flat)
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk(path) -> tuple[Grid, dict[str, np.ndarray]]:
    """Read back files produced by :func:`write_vtk`."""
    tokens = Path(path).read_text().split("\n")
    dims = None
    origin = None
    spacing = None
    scalars: dict[str, np.ndarray] = {}
    i = 0
    while i < len(tokens):
        line = tokens[i].strip()
        if line.startswith("DIMENSIONS"):
            dims = tuple(int(t) for t in line.split()[1:4])
        elif line.startswith("ORIGIN"):
            origin = tuple(float(t) for t in line.split()[1:4])
        elif line.startswith("SPACING"):
            spacing = tuple(float(t) for t in line.split()[1:4])
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            count = dims[0] * dims[1] * dims[2]
            data = np.array([float(t) for t in tokens[i + 2 : i + 2 + count]])
            arr = data.reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0)
            scalars[name] = arr
            i += 1 + count
        i += 1
    if dims is None or origin is None or spacing is None:
        raise ValueError(f"{path} is not a structured-points file this tool wrote")
    if not (dims[0] == dims[1] == dims[2]):
        raise ValueError(f"expected a cubic grid, got dimensions {dims}")
    n = dims[0]
    radius = spacing[0] * (n - 1) / 2.0
    if abs(-radius - origin[0]) > 1e-9 * max(1.0, radius):
        raise ValueError(f"{path}: origin {origin} does not match a centered box")
    return Grid(n, radius), scalars


def export_axis_csv(path, u: ScalarField, axis: int = 0) -> None:
    """CSV of u along a coordinate axis through the origin."""
    g = u.grid
    c = g.n // 2
    ax = g.axis()
    idx = [c, c, c]
    rows = ["coord,u"]
    for i in range(g.n):
        idx[axis] = i
        rows.append(f"{_fmt(ax[i])},{_fmt(u.values[tuple(idx)])}")
    Path(path).write_text("\n".join(rows) + "\n")


def export_plane_csv(path, u: ScalarField, axis: int = 2, index: int | None = None) -> None:
    """CSV of a coordinate plane (default: the z = 0 midplane)."""
    g = u.grid
    if index is None:
        index = g.n // 2
    ax = g.axis()
    sl = [slice(None)] * 3
    sl[axis] = index
    plane = u.values[tuple(sl)]
    names = [n for i, n in enumerate("xyz") if i != axis]
    rows = [f"{names[0]},{names[1]},u"]
    for i in range(g.n):
        for j in range(g.n):
            rows.append(f"{_fmt(ax[i])},{_fmt(ax[j])},{_fmt(plane[i, j])}")
    Path(path).write_text("\n".join(rows) + "\n")
