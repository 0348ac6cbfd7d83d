"""Graduated minimization of the discrete energy.

The exact density is nonsmooth at the causal bound, so the minimizer is
approached through the monotone Taylor family: each member is a globally
smooth convex functional, minimized by a limited-memory quasi-Newton stage
warm-started from the previous order.  Stage minima increase along the
schedule and stay below the spherical-cap trial bound; the schedule stops
early once consecutive minima agree to 1e-9 relative.  A final polish then
minimizes the exact-density energy inside the feasible set
max |grad u| <= 1 - delta with a damped Newton-CG iteration whose line
search rejects any step that leaves the causal set, driving the
Euler-Lagrange residual low enough for the duality certificate.

Boundary modes: homogeneous ("zero"), the superposed far-field tail
sum a_n/|s - s_n| ("tail", default; truncation error O(1/R^3)), arbitrary
Dirichlet data subject to the strict Lipschitz bound |phi(s)-phi(s')| <
|s-s'|, and the tail shifted by a linear profile e.s for the asymptotically
linear problems.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.fft import dstn, idstn
from scipy.optimize import minimize as scipy_minimize
from scipy.sparse.linalg import LinearOperator, cg as sparse_cg

from . import duality, geometry
from .born import trial_value
from .charges import FOUR_PI, ChargeConfiguration, normalize
from .discretization import (
    EXACT,
    INTERIOR,
    Grid,
    MollifiedSource,
    ScalarField,
    VectorField,
    boundary_mask,
    build_hessian_context,
    build_mollified_source,
    dual_field,
    feasibility_margin,
    functional_gradient,
    functional_value,
    hessian_vector_product,
    max_face_gradient,
    weak_residual,
)
from .energy import TaylorEnergy

__all__ = [
    "SolverConfig",
    "StageRecord",
    "PolishRecord",
    "SolveReport",
    "LipschitzViolation",
    "minimize_stage",
    "solve",
    "solve_dirichlet",
]

DEFAULT_SCHEDULE = (2, 4, 8, 16, 32, 64, 128)


class LipschitzViolation(ValueError):
    """Dirichlet data violating |phi(s) - phi(s')| < |s - s'|."""

    def __init__(self, s, phi_s, t, phi_t):
        self.pair = ((tuple(s), float(phi_s)), (tuple(t), float(phi_t)))
        gap = abs(float(phi_s) - float(phi_t))
        dist = float(np.linalg.norm(np.asarray(s, float) - np.asarray(t, float)))
        super().__init__(
            "boundary data violates the strict Lipschitz bound: "
            f"|phi({tuple(s)}) - phi({tuple(t)})| = {gap:.17g} >= |s - s'| = {dist:.17g}"
        )


@dataclass(frozen=True)
class SolverConfig:
    """Continuation schedule, tolerances and feasibility margin."""

    k_schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    tol: float = 1e-8  # relative gradient-norm tolerance per stage
    max_iterations: int = 600  # per stage
    delta: float = 1e-6  # feasibility margin, output satisfies <= 1 - delta/2
    boundary: str = "tail"  # zero | tail | dirichlet
    eps: float | None = None  # mollifier width; None -> 3h
    schedule_stop: float = 1e-9  # early termination between consecutive stages
    polish_max_iterations: int = 60
    polish_tol: float | None = None  # None -> min(tol, 1e-9) / 4
    stage_newton: int = 12  # Newton refinements per stage (preconditioned, cheap)
    coarse_init: bool = True  # warm-start large grids from a half-resolution solve
    seed: int = 0

    def __post_init__(self):
        ks = tuple(self.k_schedule)
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])) or ks[0] < 2:
            raise ValueError(
                f"K schedule must be strictly increasing and start at >= 2, got {ks}"
            )
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"feasibility margin delta must be in (0,1), got {self.delta}")
        object.__setattr__(self, "k_schedule", ks)

    @property
    def effective_polish_tol(self) -> float:
        return self.polish_tol if self.polish_tol is not None else min(self.tol, 1e-9) / 4.0


@dataclass
class StageRecord:
    order: int
    value: float
    grad_norm: float
    grad_norm_rel: float
    iterations: int
    converged: bool


@dataclass
class PolishRecord:
    value: float
    grad_norm: float
    grad_norm_rel: float
    newton_iterations: int
    converged: bool
    stalled: bool


@dataclass
class SolveReport:
    """Everything a run produces besides the fields themselves."""

    grid_n: int
    grid_radius: float
    grid_h: float
    eps: float
    boundary_mode: str
    units_kind: str
    units_beta: float
    units_alpha: float
    positions: list
    amplitudes: list
    stages: list = dc_field(default_factory=list)
    schedule_converged: bool = False
    polish: PolishRecord | None = None
    final_value: float = math.nan
    residual_norm: float = math.nan
    residual_norm_rel: float = math.nan
    max_face_gradient: float = math.nan
    delta: float = math.nan
    feasibility_ok: bool = False
    traces: list = dc_field(default_factory=list)
    trial_radius: float | None = None
    trial_bound: float | None = None
    trial_bound_ok: bool = True
    monotone_ok: bool = True
    certificate: dict = dc_field(default_factory=dict)
    geometry: dict = dc_field(default_factory=dict)
    field_energy: float | None = None
    boost_velocity: list | None = None
    tail_estimate: float = 0.0
    warnings: list = dc_field(default_factory=list)
    wall_time: float = 0.0
    tool_version: str = ""

    @property
    def all_flags_pass(self) -> bool:
        flags = [self.feasibility_ok, self.trial_bound_ok, self.monotone_ok]
        flags += [bool(v) for k, v in self.certificate.items() if k.endswith("_ok")]
        return all(flags)

    def to_json_dict(self) -> dict:
        """Deterministic payload: excludes wall time and other volatiles."""
        return {
            "tool_version": self.tool_version,
            "config": {
                "units": {
                    "kind": self.units_kind,
                    "beta": self.units_beta,
                    "alpha": self.units_alpha,
                },
                "positions": self.positions,
                "amplitudes": self.amplitudes,
            },
            "grid": {
                "n": self.grid_n,
                "radius": self.grid_radius,
                "h": self.grid_h,
                "eps": self.eps,
                "boundary": self.boundary_mode,
            },
            "stages": [
                {
                    "order": s.order,
                    "value": s.value,
                    "grad_norm": s.grad_norm,
                    "grad_norm_rel": s.grad_norm_rel,
                    "iterations": s.iterations,
                    "converged": s.converged,
                }
                for s in self.stages
            ],
            "schedule_converged": self.schedule_converged,
            "polish": None
            if self.polish is None
            else {
                "value": self.polish.value,
                "grad_norm": self.polish.grad_norm,
                "grad_norm_rel": self.polish.grad_norm_rel,
                "newton_iterations": self.polish.newton_iterations,
                "converged": self.polish.converged,
                "stalled": self.polish.stalled,
            },
            "solution": {
                "final_value": self.final_value,
                "residual_norm": self.residual_norm,
                "residual_norm_rel": self.residual_norm_rel,
                "max_face_gradient": self.max_face_gradient,
                "delta": self.delta,
                "feasibility_ok": self.feasibility_ok,
                "traces": self.traces,
                "trial_radius": self.trial_radius,
                "trial_bound": self.trial_bound,
                "trial_bound_ok": self.trial_bound_ok,
                "monotone_ok": self.monotone_ok,
                "field_energy": self.field_energy,
                "boost_velocity": self.boost_velocity,
                "tail_estimate": self.tail_estimate,
            },
            "certificate": self.certificate,
            "geometry": self.geometry,
            "warnings": list(self.warnings),
            "all_flags_pass": self.all_flags_pass,
        }

    def to_text(self) -> str:
        """Flat key-value report, wall time included."""
        lines = []

        def emit(prefix, obj):
            if isinstance(obj, dict):
                for k, v in obj.items():
                    emit(f"{prefix}.{k}" if prefix else k, v)
            elif isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], dict):
                for i, item in enumerate(obj):
                    emit(f"{prefix}[{i}]", item)
            else:
                lines.append(f"{prefix} = {_fmt_value(obj)}")

        emit("", self.to_json_dict())
        lines.append(f"wall_time_seconds = {self.wall_time:.3f}")
        return "\n".join(lines) + "\n"


def _fmt_value(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    return str(v)


# ---------------------------------------------------------------------------
# Boundary data


def tail_values(grid: Grid, config: ChargeConfiguration, where: np.ndarray | None = None) -> np.ndarray:
    """Superposed monopole tail sum a_n / |s - s_n| on grid nodes."""
    x, y, z = grid.node_coords()
    out = np.zeros_like(x)
    for c in config.charges:
        r = np.sqrt((x - c.position[0]) ** 2 + (y - c.position[1]) ** 2 + (z - c.position[2]) ** 2)
        out += c.amplitude / np.maximum(r, 1e-300)
    return out


def boundary_values(
    grid: Grid,
    config: ChargeConfiguration,
    mode: str,
    e: np.ndarray | None = None,
    phi: np.ndarray | None = None,
) -> np.ndarray:
    """Full array whose boundary ring carries the Dirichlet data."""
    mask = boundary_mask(grid)
    out = np.zeros((grid.n,) * 3)
    if mode == "zero":
        return out
    if mode == "dirichlet":
        if phi is None:
            raise ValueError("dirichlet mode needs boundary samples")
        out[mask] = phi[mask]
        return out
    if mode in ("tail", "linear_tail"):
        vals = tail_values(grid, config)
        if mode == "linear_tail":
            x, y, z = grid.node_coords()
            vals = vals + e[0] * x + e[1] * y + e[2] * z
        out[mask] = vals[mask]
        return out
    raise ValueError(f"unknown boundary mode {mode!r}")


def initial_field(
    grid: Grid,
    config: ChargeConfiguration,
    bvals: np.ndarray,
    e: np.ndarray | None = None,
    kind: str = "default",
) -> ScalarField:
    """Feasible warm start sharing the prescribed boundary ring.

    "default" uses the smoothed monopole sum a_n / sqrt(r^2 + a_n^2)
    (gradient bounded by ~0.39/|a_n| per charge, Coulomb tail at infinity);
    "zero" and "tail" provide the two deliberately different starts used by
    the uniqueness probe.
    """
    x, y, z = grid.node_coords()
    vals = np.zeros_like(x)
    if kind == "default":
        for c in config.charges:
            r2 = (x - c.position[0]) ** 2 + (y - c.position[1]) ** 2 + (z - c.position[2]) ** 2
            vals += c.amplitude / np.sqrt(r2 + c.amplitude**2)
    elif kind == "tail":
        for c in config.charges:
            r = np.sqrt(
                (x - c.position[0]) ** 2 + (y - c.position[1]) ** 2 + (z - c.position[2]) ** 2
            )
            clamp = max(math.sqrt(abs(c.amplitude)), 3.0 * grid.h)
            vals += c.amplitude / np.maximum(r, clamp)
    elif kind != "zero":
        raise ValueError(f"unknown initialization {kind!r}")
    if e is not None:
        vals += e[0] * x + e[1] * y + e[2] * z
    mask = boundary_mask(grid)
    vals[mask] = bvals[mask]
    return ScalarField(grid, vals)


# ---------------------------------------------------------------------------
# Stage minimization (smooth Taylor members)


def _grad_l1(grad: np.ndarray) -> float:
    return float(np.sum(np.abs(grad)))


_PRECONDITIONER_CACHE: dict[tuple[int, float], LinearOperator] = {}


def _poisson_preconditioner(grid: Grid) -> LinearOperator:
    """Exact inverse of h^3 (-Laplacian) with zero Dirichlet data, via DST-I.

    The Hessian is h^3 times a divergence-form operator whose coefficient is
    ~1 in the far field and grows only in the small near-charge region, so
    the constant-coefficient solve flattens the mesh-dependence of the CG
    iteration count.
    """
    key = (grid.n, grid.radius)
    cached = _PRECONDITIONER_CACHE.get(key)
    if cached is not None:
        return cached
    m = grid.n - 2
    k = np.arange(1, m + 1)
    lam1d = (2.0 - 2.0 * np.cos(np.pi * k / (grid.n - 1))) / grid.h**2
    denom = (
        lam1d[:, None, None] + lam1d[None, :, None] + lam1d[None, None, :]
    ) * grid.h**3

    def apply(vec):
        t = dstn(vec.reshape((m, m, m)), type=1)
        t /= denom
        return idstn(t, type=1).ravel()

    op = LinearOperator((m**3, m**3), matvec=apply)
    if len(_PRECONDITIONER_CACHE) > 4:
        _PRECONDITIONER_CACHE.clear()
    _PRECONDITIONER_CACHE[key] = op
    return op


def _newton_step(
    u: ScalarField,
    source: MollifiedSource,
    grad: np.ndarray,
    taylor: TaylorEnergy | None,
    gnorm_rel: float,
):
    """One inexact Newton direction from a preconditioned CG solve."""
    grid = u.grid
    ctx = build_hessian_context(u, EXACT if taylor is None else None, taylor=taylor)
    inner_shape = tuple(s - 2 for s in u.values.shape)
    m = (grid.n - 2) ** 3
    buf = np.zeros((grid.n,) * 3)

    def matvec(vec):
        buf[INTERIOR] = vec.reshape(inner_shape)
        return hessian_vector_product(ctx, buf)[INTERIOR].ravel()

    op = LinearOperator((m, m), matvec=matvec)
    rhs = -grad[INTERIOR].ravel()
    rtol = max(min(0.1, math.sqrt(max(gnorm_rel, 0.0))), 1e-10)
    step, info = sparse_cg(
        op, rhs, rtol=rtol, atol=0.0, maxiter=250, M=_poisson_preconditioner(grid)
    )
    if info < 0 or not np.all(np.isfinite(step)):
        step = rhs
    direction = np.zeros((grid.n,) * 3)
    direction[INTERIOR] = step.reshape(inner_shape)
    return direction


def _newton_refine(
    u: ScalarField,
    source: MollifiedSource,
    taylor: TaylorEnergy | None,
    target_rel: float,
    max_newton: int,
    feasible_bound: float | None = None,
):
    """Shared damped-Newton loop for the smooth stages and the exact polish.

    With ``feasible_bound`` set, trial points beyond the bound (or with
    infinite energy) are rejected by the backtracking line search.
    """
    mode = EXACT if taylor is None else None
    f, grad = functional_gradient(u, source, mode, taylor=taylor)
    gnorm = _grad_l1(grad)
    newton_iters = 0
    stalled = False
    for _ in range(max_newton):
        scale = 1.0 + abs(f)
        if gnorm <= target_rel * scale:
            break
        newton_iters += 1
        direction = _newton_step(u, source, grad, taylor, gnorm / scale)
        slope = float(np.sum(grad * direction))
        if slope >= 0.0:
            direction = -grad
            slope = -float(np.sum(grad * grad))
        t = 1.0
        accepted = False
        for _ in range(50):
            trial = ScalarField(u.grid, u.values + t * direction)
            ok = True
            if feasible_bound is not None and feasibility_margin(trial) > feasible_bound:
                ok = False
            if ok:
                f_trial = functional_value(trial, source, mode, taylor=taylor)
                if math.isfinite(f_trial) and f_trial <= f + 1e-4 * t * slope:
                    u = trial
                    f, grad = functional_gradient(u, source, mode, taylor=taylor)
                    gnorm = _grad_l1(grad)
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            stalled = True
            break
    return u, f, grad, gnorm, newton_iters, stalled


def minimize_stage(
    u0: ScalarField,
    source: MollifiedSource,
    order: int,
    cfg: SolverConfig,
) -> tuple[ScalarField, StageRecord]:
    """Minimize the order-K Taylor energy over interior nodes, warm-started.

    Boundary values of u0 are held fixed.  A quasi-Newton sweep (L-BFGS-B
    with backtracking) does the bulk descent; a few inexact Newton steps
    then push the h^3-weighted l1 residual below the stage tolerance so the
    reported minima carry the strict monotonicity of the family.  Running
    out of iterations is reported, not raised.
    """
    te = TaylorEnergy(order)
    grid = u0.grid
    full = u0.values.copy()
    shape = tuple(s - 2 for s in full.shape)

    def fun(x):
        full[INTERIOR] = x.reshape(shape)
        f, grad = functional_gradient(ScalarField(grid, full), source, taylor=te)
        return f, grad[INTERIOR].ravel()

    u = u0
    sweep_iters = 0
    u, f, _, gnorm, newton_iters, stalled = _newton_refine(
        u, source, te, cfg.tol, cfg.stage_newton
    )
    if stalled and gnorm > cfg.tol * (1.0 + abs(f)):
        # rescue sweep for starts outside the Newton basin, then refine again
        res = scipy_minimize(
            fun,
            u.values[INTERIOR].ravel().copy(),
            jac=True,
            method="L-BFGS-B",
            options=dict(maxiter=cfg.max_iterations, maxcor=12, ftol=1e-14, gtol=0.0),
        )
        full[INTERIOR] = res.x.reshape(shape)
        u = ScalarField(grid, full.copy())
        sweep_iters = int(res.nit)
        u, f, _, gnorm, more, _ = _newton_refine(u, source, te, cfg.tol, cfg.stage_newton)
        newton_iters += more
    rel = gnorm / (1.0 + abs(f))
    record = StageRecord(
        order=order,
        value=f,
        grad_norm=gnorm,
        grad_norm_rel=rel,
        iterations=sweep_iters + newton_iters,
        converged=bool(rel <= cfg.tol),
    )
    return u, record


# ---------------------------------------------------------------------------
# Exact-density polish (feasible Newton-CG)


def _pull_feasible(u: ScalarField, base: ScalarField, bound: float) -> ScalarField:
    """Largest t with base + t (u - base) inside the feasible margin."""
    if feasibility_margin(u) <= bound:
        return u
    lo, hi = 0.0, 1.0
    dv = u.values - base.values
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        trial = ScalarField(u.grid, base.values + mid * dv)
        if feasibility_margin(trial) <= bound:
            lo = mid
        else:
            hi = mid
    return ScalarField(u.grid, base.values + lo * dv)


def polish(
    u: ScalarField,
    source: MollifiedSource,
    cfg: SolverConfig,
    base: ScalarField | None = None,
) -> tuple[ScalarField, PolishRecord]:
    """Damped Newton-CG on the exact-density energy, staying feasible.

    Steps that would make the energy infinite or push the gradient past
    1 - delta are rejected by the backtracking line search; an infeasible
    warm start is first pulled back toward ``base`` (a feasible field with
    the same boundary ring).
    """
    grid = u.grid
    bound = 1.0 - cfg.delta
    if base is None:
        base = ScalarField(grid, u.values * 0.0)
    u = _pull_feasible(u, base, bound)
    ptol = cfg.effective_polish_tol
    u, f, _, gnorm, newton_iters, stalled = _newton_refine(
        u, source, None, ptol, cfg.polish_max_iterations, feasible_bound=bound
    )
    rel = gnorm / (1.0 + abs(f))
    record = PolishRecord(
        value=f,
        grad_norm=gnorm,
        grad_norm_rel=rel,
        newton_iterations=newton_iters,
        converged=bool(rel <= ptol),
        stalled=stalled,
    )
    return u, record


# ---------------------------------------------------------------------------
# Full pipeline


def _zero_source(config: ChargeConfiguration, grid: Grid, eps: float) -> MollifiedSource:
    return MollifiedSource(config, grid, eps, np.zeros((grid.n,) * 3), [])


def _solve_field(
    config: ChargeConfiguration,
    grid: Grid,
    cfg: SolverConfig,
    mode: str,
    e: np.ndarray | None,
    phi: np.ndarray | None,
    init: str,
    warnings: list[str],
):
    """Stages + polish on one grid, recursing to half resolution for a start."""
    eps = cfg.eps if cfg.eps is not None else 3.0 * grid.h
    if len(config) == 0:
        source = _zero_source(config, grid, eps)
    else:
        grid.check_margin(config.positions, 4.0 * grid.h)
        source = build_mollified_source(config, grid, eps)
    bvals = boundary_values(grid, config, mode, e=e, phi=phi)
    u = initial_field(grid, config, bvals, e=e, kind=init)
    base = initial_field(grid, config, bvals, e=e, kind="default")

    coarse_n = (grid.n - 1) // 2 + 1
    if (
        cfg.coarse_init
        and init == "default"
        and grid.n >= 65
        and (grid.n - 1) % 2 == 0
        and coarse_n % 2 == 1
        and coarse_n >= 17
    ):
        try:
            import dataclasses

            coarse_cfg = dataclasses.replace(
                cfg, eps=None, tol=max(cfg.tol, 1e-7), polish_max_iterations=8
            )
            coarse_phi = None if phi is None else phi[::2, ::2, ::2]
            uc, *_ = _solve_field(
                config, Grid(coarse_n, grid.radius), coarse_cfg, mode, e, coarse_phi,
                init, warnings,
            )
            x, y, z = grid.node_coords()
            pts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
            vals, _ = uc.interpolate(pts)
            vals = vals.reshape((grid.n,) * 3)
            mask = boundary_mask(grid)
            vals[mask] = bvals[mask]
            u = ScalarField(grid, vals)
        except ValueError as exc:
            warnings.append(f"half-resolution warm start skipped: {exc}")

    stages: list[StageRecord] = []
    schedule_converged = False
    for order in cfg.k_schedule:
        u, record = minimize_stage(u, source, order, cfg)
        stages.append(record)
        if len(stages) >= 2:
            prev = stages[-2].value
            if abs(record.value - prev) <= cfg.schedule_stop * (1.0 + abs(prev)):
                schedule_converged = True
                break
    u, polish_rec = polish(u, source, cfg, base=base)
    return u, source, eps, stages, schedule_converged, polish_rec


def solve(
    config: ChargeConfiguration,
    grid: Grid,
    cfg: SolverConfig | None = None,
    *,
    phi: np.ndarray | None = None,
    e: np.ndarray | None = None,
    init: str = "default",
    boundary_mode: str | None = None,
) -> tuple[ScalarField, VectorField, SolveReport]:
    """Run schedule + polish and assemble the certified report.

    The returned displacement field is the dual map of the solution
    gradient; the report carries the duality certificate, the geometric
    view and all diagnostic flags.
    """
    from . import __version__

    t_start = time.perf_counter()
    cfg = cfg or SolverConfig()
    config = normalize(config)
    mode = boundary_mode or cfg.boundary
    warnings: list[str] = []
    if len(config) == 0:
        warnings.append("no sources after normalization: solving the trivial problem")
    if e is not None:
        e = np.asarray(e, dtype=float)
        emag = float(np.linalg.norm(e))
        if emag >= 1.0:
            raise ValueError(f"asymptotic gradient must satisfy |e| < 1, got |e| = {emag:.17g}")
        if emag >= 1.0 - cfg.delta:
            raise ValueError(
                f"|e| = {emag:.17g} collides with the feasibility margin delta = {cfg.delta:.17g}; "
                "lower delta or |e|"
            )
        if emag > 0.99:
            warnings.append(
                f"|e| = {emag:.17g} is close to 1: expect large truncation error at this box size"
            )
        if mode != "linear_tail":
            mode = "linear_tail"
    u, source, eps, stages, schedule_converged, polish_rec = _solve_field(
        config, grid, cfg, mode, e, phi, init, warnings
    )
    U = dual_field(u)
    _, res_norm = weak_residual(u, source)
    f_final = polish_rec.value

    mono_ok = all(
        b.value >= a.value - 1e-10 * (1.0 + abs(f_final))
        for a, b in zip(stages, stages[1:])
    )
    trial_r = None
    trial_b = None
    trial_ok = True
    if len(config) >= 1:
        trial_r = 1.0 if len(config) == 1 else config.separation_radius
        trial_b = trial_value(config, trial_r)
        trial_ok = all(s.value <= trial_b + 1e-10 * (1.0 + abs(trial_b)) for s in stages)

    maxg = max_face_gradient(u)
    feas_ok = maxg <= 1.0 - cfg.delta / 2.0
    cert = duality.certify(u, U, source)
    geo = geometry.slice_view(u, config)

    units = config.units
    energy = None
    if units.kind in ("dimensionless", "electrostatic"):
        energy = units.alpha * cert.g_plain / (FOUR_PI * units.beta**4)

    report = SolveReport(
        grid_n=grid.n,
        grid_radius=grid.radius,
        grid_h=grid.h,
        eps=eps,
        boundary_mode=mode,
        units_kind=units.kind,
        units_beta=units.beta,
        units_alpha=units.alpha,
        positions=[list(c.position) for c in config.charges],
        amplitudes=[c.amplitude for c in config.charges],
        stages=stages,
        schedule_converged=schedule_converged,
        polish=polish_rec,
        final_value=f_final,
        residual_norm=res_norm,
        residual_norm_rel=res_norm / (1.0 + abs(f_final)),
        max_face_gradient=maxg,
        delta=cfg.delta,
        feasibility_ok=feas_ok,
        traces=[float(t) for t in source.point_values(u)],
        trial_radius=trial_r,
        trial_bound=trial_b,
        trial_bound_ok=trial_ok,
        monotone_ok=mono_ok,
        certificate=cert.to_dict(),
        geometry=geo,
        field_energy=energy,
        boost_velocity=None if e is None else [float(c) for c in e],
        tail_estimate=2.0 * math.pi * config.total_amplitude**2 / grid.radius,
        warnings=warnings,
        wall_time=time.perf_counter() - t_start,
        tool_version=__version__,
    )
    return u, U, report


def check_lipschitz(grid: Grid, phi: np.ndarray, seed: int = 0, samples: int = 20000) -> None:
    """Validate the strict Lipschitz bound on boundary data.

    Checks all node pairs along each box edge plus ``samples`` random
    cross-face pairs; raises :class:`LipschitzViolation` naming the first
    offending pair.
    """
    ax = grid.axis()
    n = grid.n
    lo, hi = 0, n - 1

    def check_line(coords, values):
        d = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)
        gap = np.abs(values[:, None] - values[None, :])
        bad = gap >= d - 1e-15 * np.maximum(d, 1.0)
        np.fill_diagonal(bad, False)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise LipschitzViolation(coords[i], values[i], coords[j], values[j])

    # all pairs on each of the 12 box edges
    for fixed_axes in ((1, 2), (0, 2), (0, 1)):
        free = ({0, 1, 2} - set(fixed_axes)).pop()
        for ca in (lo, hi):
            for cb in (lo, hi):
                idx = [None, None, None]
                idx[fixed_axes[0]] = ca
                idx[fixed_axes[1]] = cb
                coords = np.zeros((n, 3))
                sel = [None, None, None]
                for d in range(3):
                    if d == free:
                        coords[:, d] = ax
                        sel[d] = np.arange(n)
                    else:
                        coords[:, d] = ax[idx[d]]
                        sel[d] = np.full(n, idx[d])
                values = phi[sel[0], sel[1], sel[2]]
                check_line(coords, values)

    # random cross-face pairs
    mask = boundary_mask(grid)
    nodes = np.argwhere(mask)
    coords = ax[nodes]
    values = phi[mask]
    rng = np.random.default_rng(seed)
    ii = rng.integers(0, len(nodes), size=samples)
    jj = rng.integers(0, len(nodes), size=samples)
    d = np.linalg.norm(coords[ii] - coords[jj], axis=1)
    gap = np.abs(values[ii] - values[jj])
    bad = (d > 0) & (gap >= d - 1e-15 * np.maximum(d, 1.0))
    if bad.any():
        k = int(np.argmax(bad))
        raise LipschitzViolation(coords[ii[k]], values[ii[k]], coords[jj[k]], values[jj[k]])


def solve_dirichlet(
    config: ChargeConfiguration,
    grid: Grid,
    phi: np.ndarray,
    cfg: SolverConfig | None = None,
) -> tuple[ScalarField, VectorField, SolveReport]:
    """Dirichlet-mode solve: user boundary data under the strict bound."""
    cfg = cfg or SolverConfig()
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (grid.n,) * 3:
        raise ValueError(f"boundary samples must be a full ({grid.n},)*3 array")
    check_lipschitz(grid, phi, seed=cfg.seed)
    return solve(config, grid, cfg, phi=phi, boundary_mode="dirichlet")
