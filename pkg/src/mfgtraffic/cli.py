"""Command-line driver.

    mfgtraffic solve --config run.toml --out results/ [--iters N] [--stride S]
    mfgtraffic particles --config run.toml --artifacts results/ --n-sweep 100,1000 --seed 1
    mfgtraffic hydro --artifacts results/
    mfgtraffic check-cfl --config run.toml
    mfgtraffic print-config [--config run.toml]

Exit status: 0 ok, 2 bad config, 3 CFL violation, 4 solver produced NaN or
negative density, 5 no stagnation within n_iters (artifacts still written),
6 missing or incompatible artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import Config, dump_config, initial_density, load_config
from .errors import ArtifactError, ConfigError, MFGError
from .fieldio import read_trajectory, write_trajectories
from .fixed_point import run_algorithm1
from .fk import check_cfl, require_cfl
from .grid import PhaseGrid
from .hamiltonian import control_fields
from .hydro import hydro_csv
from .particles import simulate
from .trajectory import TimeGrid, TrajectoryStore

log = logging.getLogger("mfgtraffic")

EXIT_OK, EXIT_CONFIG, EXIT_CFL, EXIT_SOLVER, EXIT_NOT_CONVERGED, EXIT_ARTIFACTS = 0, 2, 3, 4, 5, 6


def resolve_time_grid(config: Config, grid: PhaseGrid):
    """Time grid for the run; raises CFLError if an explicit tau is too large."""
    p, r = config.params, config.run
    if r.tau is None:
        report = check_cfl(grid, None, p, r.cfl_safety)
        tg = TimeGrid.from_horizon(p.T, None, r.checkpoint_stride, report.tau_max)
        return tg, check_cfl(grid, tg.tau, p, r.cfl_safety)
    report = require_cfl(grid, r.tau, p, r.cfl_safety)
    return TimeGrid.from_horizon(p.T, r.tau, r.checkpoint_stride), report


def manifest_dict(config: Config, grid: PhaseGrid, tg: TimeGrid) -> dict:
    return {
        "software": "mfgtraffic",
        "version": __version__,
        "config": config.to_dict(),
        "grid": {"Nx": grid.Nx, "L": grid.L, "s_max": grid.s_max, "h": grid.h, "k": grid.k},
        "time": {"n_steps": tg.n_steps, "tau": tg.tau, "stride": tg.stride, "T": tg.T},
    }


def cmd_solve(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.iters is not None:
        overrides["n_iters"] = args.iters
    if args.stride is not None:
        overrides["checkpoint_stride"] = args.stride
    if overrides:
        config = config.replace(**overrides)
    p, r = config.params, config.run
    grid = PhaseGrid.from_params(p, r.Nx)
    tg, report = resolve_time_grid(config, grid)
    log.info("%s", report)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = manifest_dict(config, grid, tg)

    def progress(n, d2, D, stagnant):
        log.info("iteration %d: delta2=%.6e D=%.12e%s", n, d2, D, " (stagnant)" if stagnant else "")

    result = run_algorithm1(initial_density(grid), grid, tg, p, r.n_iters, r.make_kernel(),
                            relaxation=r.relaxation, run_all=r.run_all_iters, upwind=r.upwind,
                            store_controls=r.store_controls, callback=progress)
    controls = result.controls
    if controls is None:
        controls = TrajectoryStore(tg, (2, *grid.shape))
        for s in range(len(result.V)):
            controls.values[s] = control_fields(result.V.values[s], grid, p, r.upwind)

    (out / "iterations.csv").write_text(result.log.to_csv())
    (out / "timing.csv").write_text(
        "n,wall_time_s\n" + "".join(f"{n},{t:.6f}\n" for n, t in
                                    enumerate(result.log.wall_time, start=1)))
    write_trajectories(out / "fields", {"V": result.V, "rho": result.rho,
                                        "controls": (("u_star", "w_star"), controls)})
    (out / "hydro.csv").write_text(hydro_csv(result.rho, grid))
    manifest["result"] = {
        "converged": result.converged,
        "stop_iter": result.log.stop_iter,
        "iterations_run": result.log.n,
        "max_step_mass_change": max(m["max_step_mass_change"] for m in result.fk_meta),
        "min_preclamp_density": min(m["min_preclamp"] for m in result.fk_meta),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if not result.converged:
        log.warning("running sum did not stagnate within %d iterations", r.n_iters)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def load_artifacts(directory, config: Config | None = None):
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text())
    except (OSError, ValueError) as exc:
        raise ArtifactError(f"cannot read manifest in {directory}: {exc}") from exc
    stored = Config().replace(**manifest["config"])
    if config is not None:
        for key in ("alpha", "epsilon", "gamma", "beta", "u_min", "u_max", "w_max", "s_max",
                    "T", "Nx"):
            if config.to_dict()[key] != manifest["config"][key]:
                raise ArtifactError(f"config {key}={config.to_dict()[key]!r} does not match "
                                    f"artifacts ({manifest['config'][key]!r})")
    grid = PhaseGrid.from_params(stored.params, stored.run.Nx)
    t = manifest["time"]
    tg = TimeGrid(t["n_steps"], t["tau"], t["stride"])
    return stored, grid, tg


def cmd_particles(args) -> int:
    config = load_config(args.config)
    _, grid, tg = load_artifacts(args.artifacts, config)
    fields = Path(args.artifacts) / "fields"
    rho = read_trajectory(fields, "rho", tg)
    u = read_trajectory(fields, "u_star", tg)
    w = read_trajectory(fields, "w_star", tg)
    controls = TrajectoryStore(tg, (2, *grid.shape))
    controls.values[:, 0] = u.values
    controls.values[:, 1] = w.values
    try:
        sweep = [int(s) for s in args.n_sweep.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --n-sweep {args.n_sweep!r}") from exc
    if not sweep or min(sweep) < 1:
        raise ConfigError("--n-sweep needs positive particle counts")
    seed = config.run.seed if args.seed is None else args.seed
    r = config.run
    runs = {}
    for n in sweep:
        try:
            runs[n] = simulate(controls, rho, grid, config.params, n, seed, tau_p=r.tau_p,
                               disturbance=r.disturbance, dump_stride=r.dump_stride)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    out = Path(args.out) if args.out else Path(args.artifacts) / "particles.csv"
    lines = ["t,N,seed,l1_position,l1_velocity"]
    times = runs[sweep[0]].times
    for s, t in enumerate(times):
        for n in sweep:
            run = runs[n]
            lines.append(f"{float(t)!r},{n},{seed},{float(run.l1_position[s])!r},"
                         f"{float(run.l1_velocity[s])!r}")
    out.write_text("\n".join(lines) + "\n")
    if r.dump_stride:
        for n, run in runs.items():
            path = out.with_name(f"{out.stem}_trajectories_N{n}.csv")
            path.write_text("t,id,x,v\n" + "".join(
                f"{t!r},{pid},{float(x)!r},{float(v)!r}\n" for t, pid, x, v in run.dump))
    print(out)
    return EXIT_OK


def cmd_hydro(args) -> int:
    _, grid, tg = load_artifacts(args.artifacts)
    rho = read_trajectory(Path(args.artifacts) / "fields", "rho", tg)
    out = Path(args.out) if args.out else Path(args.artifacts) / "hydro.csv"
    out.write_text(hydro_csv(rho, grid))
    print(out)
    return EXIT_OK


def cmd_check_cfl(args) -> int:
    config = load_config(args.config)
    grid = PhaseGrid.from_params(config.params, config.run.Nx)
    tg, report = resolve_time_grid(config, grid)
    print(report)
    print(f"time grid: n_steps={tg.n_steps} tau={tg.tau!r} stride={tg.stride}")
    return EXIT_OK


def cmd_print_config(args) -> int:
    sys.stdout.write(dump_config(load_config(args.config)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfgtraffic", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the backward-forward iteration")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--iters", type=int)
    s.add_argument("--stride", type=int)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("particles", help="Monte-Carlo check against a solved game")
    s.add_argument("--config", required=True)
    s.add_argument("--artifacts", required=True)
    s.add_argument("--n-sweep", default="100,1000,10000")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_particles)

    s = sub.add_parser("hydro", help="recompute hydrodynamic moments from stored densities")
    s.add_argument("--artifacts", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_hydro)

    s = sub.add_parser("check-cfl", help="report the explicit time-step bound")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_check_cfl)

    s = sub.add_parser("print-config", help="print the effective configuration")
    s.add_argument("--config")
    s.set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except MFGError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
