"""Command-line entry point.

Subcommands: ``solve`` (schedule + polish + certificate, writes u.vtk,
U.vtk, report.json, report.txt and a reproducibility manifest), ``oracle``
(single-charge reference tables), ``verify`` (re-certifies stored outputs)
and ``boost`` (Lorentz-boosts stored outputs).  Exit codes: 0 all
certificate flags pass, 1 usage or input error, 2 certification failure
(outputs are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boost import Boost, boost_graph
from .born import born_gradient, born_potential
from .charges import ChargeConfiguration, read_config_file, write_config_file
from .discretization import (
    Grid,
    ScalarField,
    build_mollified_source,
    cell_gradient_sq,
    cell_magnitude_sq,
    dual_field,
    export_axis_csv,
    export_plane_csv,
    read_vtk,
    weak_residual,
    write_vtk,
)
from .duality import certify
from .solver import (
    DEFAULT_SCHEDULE,
    LipschitzViolation,
    SolverConfig,
    solve,
    solve_dirichlet,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERT_FAIL = 2


def _parse_vector(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected ex,ey,ez, got {text!r}")
    return tuple(float(p) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bornfield", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve and certify a charge configuration")
    ps.add_argument("--config", help="charge configuration file")
    ps.add_argument("--from-manifest", help="re-run a stored manifest.json")
    ps.add_argument("--n", type=int, default=97, help="nodes per axis (odd)")
    ps.add_argument("--radius", type=float, default=8.0, help="half-width of the box")
    ps.add_argument("--eps", type=float, default=None, help="mollifier width (default 3h)")
    ps.add_argument("--kmax", type=int, default=128, help="largest Taylor order in the schedule")
    ps.add_argument("--tol", type=float, default=1e-8, help="relative gradient tolerance")
    ps.add_argument(
        "--boundary",
        nargs="+",
        default=["tail"],
        metavar=("MODE", "FILE"),
        help="zero | tail | dirichlet FILE (boundary node CSV)",
    )
    ps.add_argument("--boost", type=_parse_vector, default=None, metavar="EX,EY,EZ",
                    help="solve with asymptotically linear data e.s")
    ps.add_argument(
        "--units",
        nargs="+",
        default=None,
        metavar=("KIND", "PARAMS"),
        help="dimensionless | electrostatic BETA ALPHA | geometric (overrides the file header)",
    )
    ps.add_argument("--out", required=True, help="output directory")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--slices", action="store_true", help="also write axis/plane CSV slices")

    po = sub.add_parser("oracle", help="tabulate the exact single-charge solution")
    po.add_argument("--a", type=float, required=True, help="amplitude (nonzero)")
    po.add_argument("--rmin", type=float, default=0.01)
    po.add_argument("--rmax", type=float, default=100.0)
    po.add_argument("--points", type=int, default=200)
    po.add_argument("--out", default=None, help="CSV path (default: stdout)")

    pv = sub.add_parser("verify", help="re-run certification on stored outputs")
    pv.add_argument("--dir", required=True, help="directory written by solve")

    pb = sub.add_parser("boost", help="Lorentz-boost stored outputs")
    pb.add_argument("--dir", required=True, help="directory written by solve")
    pb.add_argument("--boost", type=_parse_vector, required=True, metavar="EX,EY,EZ")
    pb.add_argument("--out", required=True, help="output directory")
    return p


def _units_from_tokens(tokens):
    from .charges import UnitSystem

    kind = tokens[0]
    if kind == "dimensionless" and len(tokens) == 1:
        return UnitSystem.dimensionless()
    if kind == "electrostatic" and len(tokens) == 3:
        return UnitSystem.electrostatic(float(tokens[1]), float(tokens[2]))
    if kind == "geometric" and len(tokens) == 1:
        return UnitSystem.geometric()
    raise ValueError(f"bad --units {' '.join(tokens)!r}")


def _load_config(args) -> ChargeConfiguration:
    config = read_config_file(args.config)
    if args.units:
        units = _units_from_tokens(args.units)
        # reinterpret the file's raw values under the requested units
        from .charges import to_dimensionless

        raw = [(c.position, config.units.raw_from_amplitude(c.amplitude)) for c in config.charges]
        config = to_dimensionless(raw, units)
    return config


def _read_dirichlet_csv(path, grid: Grid) -> np.ndarray:
    """Boundary node samples x,y,z,phi; every boundary node must be covered."""
    from .discretization import boundary_mask

    text = Path(path).read_text().strip().splitlines()
    phi = np.zeros((grid.n,) * 3)
    seen = np.zeros((grid.n,) * 3, dtype=bool)
    ax = grid.axis()
    for line in text:
        line = line.strip()
        if not line or line.lower().startswith(("x,", "#")):
            continue
        x, y, z, val = (float(t) for t in line.split(","))
        idx = tuple(int(round((c + grid.radius) / grid.h)) for c in (x, y, z))
        if not all(0 <= i < grid.n for i in idx):
            raise ValueError(f"boundary sample {x, y, z} outside the grid")
        if max(abs(ax[i] - c) for i, c in zip(idx, (x, y, z))) > 0.25 * grid.h:
            raise ValueError(f"boundary sample {x, y, z} does not sit on a grid node")
        phi[idx] = val
        seen[idx] = True
    mask = boundary_mask(grid)
    if not seen[mask].all():
        missing = int(np.sum(mask & ~seen))
        raise ValueError(f"{missing} boundary nodes without samples in {path}")
    return phi


def _manifest(args, config: ChargeConfiguration, grid: Grid, cfg: SolverConfig, boundary) -> dict:
    return {
        "tool_version": __version__,
        "command": "solve",
        "config_path": str(args.config) if args.config else None,
        "charges": {
            "units": {
                "kind": config.units.kind,
                "beta": config.units.beta,
                "alpha": config.units.alpha,
            },
            "positions": [list(c.position) for c in config.charges],
            "amplitudes": [c.amplitude for c in config.charges],
        },
        "grid": {"n": grid.n, "radius": grid.radius},
        "solver": {
            "k_schedule": list(cfg.k_schedule),
            "tol": cfg.tol,
            "delta": cfg.delta,
            "eps": cfg.eps,
            "max_iterations": cfg.max_iterations,
            "seed": cfg.seed,
        },
        "boundary": boundary,
        "boost": list(args.boost) if getattr(args, "boost", None) else None,
        "out": str(args.out),
    }


def _config_from_manifest(m) -> ChargeConfiguration:
    from .charges import PointCharge, UnitSystem

    u = m["charges"]["units"]
    units = UnitSystem(u["kind"], beta=u["beta"], alpha=u["alpha"])
    charges = tuple(
        PointCharge(tuple(p), a)
        for p, a in zip(m["charges"]["positions"], m["charges"]["amplitudes"])
    )
    return ChargeConfiguration(charges, units)


def _write_outputs(outdir: Path, u, U, report, manifest, slices=False):
    outdir.mkdir(parents=True, exist_ok=True)
    grid = u.grid
    gradmag = np.sqrt(cell_gradient_sq(u))
    write_vtk(outdir / "u.vtk", grid, {"u": u.values, "grad_magnitude": gradmag})
    write_vtk(outdir / "U.vtk", grid, {"U_magnitude": np.sqrt(cell_magnitude_sq(U))})
    (outdir / "report.json").write_text(json.dumps(report.to_json_dict(), indent=1) + "\n")
    (outdir / "report.txt").write_text(report.to_text())
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    if slices:
        for axis, name in enumerate("xyz"):
            export_axis_csv(outdir / f"u_axis_{name}.csv", u, axis=axis)
        export_plane_csv(outdir / "u_plane_z0.csv", u)


def cmd_solve(args) -> int:
    if args.from_manifest:
        m = json.loads(Path(args.from_manifest).read_text())
        config = _config_from_manifest(m)
        grid = Grid(m["grid"]["n"], m["grid"]["radius"])
        s = m["solver"]
        cfg = SolverConfig(
            k_schedule=tuple(s["k_schedule"]),
            tol=s["tol"],
            delta=s["delta"],
            eps=s["eps"],
            max_iterations=s["max_iterations"],
            seed=s["seed"],
        )
        boundary = m["boundary"]
        args.config = m.get("config_path")
        args.boost = tuple(m["boost"]) if m.get("boost") else None
        args.out = args.out or m["out"]
    else:
        if not args.config:
            raise ValueError("solve needs --config (or --from-manifest)")
        if not Path(args.config).exists():
            raise FileNotFoundError(f"no such config file: {args.config}")
        config = _load_config(args)
        if args.n % 2 == 0:
            raise ValueError(f"--n must be odd so a node sits at the origin, got {args.n}")
        grid = Grid(args.n, args.radius)
        schedule = tuple(k for k in DEFAULT_SCHEDULE if k <= args.kmax)
        if not schedule:
            raise ValueError(f"--kmax {args.kmax} leaves an empty schedule")
        cfg = SolverConfig(k_schedule=schedule, tol=args.tol, eps=args.eps, seed=args.seed)
        boundary = list(args.boundary)
        m = None

    mode = boundary[0]
    if mode not in ("zero", "tail", "dirichlet"):
        raise ValueError(f"unknown boundary mode {mode!r}")
    outdir = Path(args.out)
    manifest = _manifest(args, config, grid, cfg, boundary)
    if args.boost is not None:
        from .boost import solve_with_linear_asymptotics

        u, U, report = solve_with_linear_asymptotics(config, grid, args.boost, cfg)
    elif mode == "dirichlet":
        if len(boundary) != 2:
            raise ValueError("dirichlet boundary needs a sample file: --boundary dirichlet FILE")
        phi = _read_dirichlet_csv(boundary[1], grid)
        u, U, report = solve_dirichlet(config, grid, phi, cfg)
    else:
        u, U, report = solve(config, grid, cfg, boundary_mode=mode)
    _write_outputs(outdir, u, U, report, manifest, slices=args.slices)
    ok = report.all_flags_pass
    print(f"solve: F = {report.final_value:.17g}, gap = {report.certificate.get('gap'):.17g}, "
          f"flags {'pass' if ok else 'FAIL'} -> {outdir}")
    return EXIT_OK if ok else EXIT_CERT_FAIL


def cmd_oracle(args) -> int:
    if args.a == 0.0:
        raise ValueError("oracle amplitude must be nonzero")
    if not (0.0 < args.rmin < args.rmax) or args.points < 2:
        raise ValueError("need 0 < rmin < rmax and at least two points")
    r = np.geomspace(args.rmin, args.rmax, args.points)
    u = born_potential(r, args.a)
    w = np.abs(born_gradient(r, args.a))
    lines = ["r,u,grad_magnitude"]
    lines += [f"{ri:.17g},{ui:.17g},{wi:.17g}" for ri, ui, wi in zip(r, u, w)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_run(directory: Path):
    manifest = json.loads((directory / "manifest.json").read_text())
    grid, scalars = read_vtk(directory / "u.vtk")
    u = ScalarField(grid, scalars["u"])
    config = _config_from_manifest(manifest)
    eps = manifest["solver"]["eps"] or 3.0 * grid.h
    return manifest, grid, u, config, eps


def cmd_verify(args) -> int:
    directory = Path(args.dir)
    manifest, grid, u, config, eps = _load_run(directory)
    stored = json.loads((directory / "report.json").read_text())
    source = build_mollified_source(config, grid, eps) if len(config) else None
    if source is None:
        from .solver import _zero_source

        source = _zero_source(config, grid, eps)
    U = dual_field(u)
    cert = certify(u, U, source)
    _, res_norm = weak_residual(u, source)
    failures = []
    for key, val in cert.to_dict().items():
        if key.endswith("_ok") and not val:
            failures.append(key)
    stored_res = stored["solution"]["residual_norm"]
    if abs(res_norm - stored_res) > 1e-6 * (1.0 + abs(stored_res)):
        failures.append(f"residual_norm mismatch: stored {stored_res:.17g}, recomputed {res_norm:.17g}")
    _, u_scalars = read_vtk(directory / "U.vtk")
    recomputed_mag = np.sqrt(cell_magnitude_sq(U))
    if not np.allclose(u_scalars["U_magnitude"], recomputed_mag, rtol=1e-12, atol=1e-12):
        failures.append("U.vtk does not match the displacement field recomputed from u.vtk")
    if failures:
        print("verify: FAIL")
        for f in failures:
            print(f"  - {f}")
        return EXIT_CERT_FAIL
    print(f"verify: pass (gap = {cert.gap:.17g}, residual = {res_norm:.17g})")
    return EXIT_OK


def cmd_boost(args) -> int:
    directory = Path(args.dir)
    manifest, grid, u, config, eps = _load_run(directory)
    boost = Boost(args.boost)  # rejects |e| >= 1, quoting the bound
    source = build_mollified_source(config, grid, eps) if len(config) else None
    result = boost_graph(u, boost, config, source=source)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_vtk(outdir / "u_boosted.vtk", result.field.grid, {"u": result.field.values})
    write_config_file(outdir / "charges_boosted.cfg", result.config)
    payload = {
        "boost": list(args.boost),
        "gamma": boost.gamma,
        "extrapolated_fraction": result.extrapolated_fraction,
        "charges": {
            "positions": [list(c.position) for c in result.config.charges],
            "amplitudes": [c.amplitude for c in result.config.charges],
        },
    }
    if len(result.config):
        moved_source = build_mollified_source(result.config, result.field.grid, eps)
        _, res_norm = weak_residual(result.field, moved_source)
        payload["residual_norm"] = res_norm
    (outdir / "boost_report.json").write_text(json.dumps(payload, indent=1) + "\n")
    print(f"boost: |e| = {boost.speed:.17g}, extrapolated fraction "
          f"{result.extrapolated_fraction:.17g} -> {outdir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"solve": cmd_solve, "oracle": cmd_oracle, "verify": cmd_verify, "boost": cmd_boost}
    try:
        return handlers[args.command](args)
    except LipschitzViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
