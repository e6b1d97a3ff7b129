"""Command-line orchestration: experiment recipes, run manifests, CSV output.

Exit codes: 0 success, 1 usage error (bad flags, missing files),
2 validation failure, 3 solver failure.
"""

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import PnflowError, SolverFailure, StepFailure
from .grid import Grid, Field, write_field_csv
from .potential import PotentialSpec, cosine_potential, tabulated_potential
from . import asymlab, dynsys, evolve, heatkernel, layer as layer_mod, tracker

USAGE_ERROR, VALIDATION_ERROR, SOLVER_ERROR = 1, 2, 3


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str = __version__
    wall_clock_s: float = 0.0
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        with open(path, "w", newline="\n") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
        return path


def _potential_from_config(cfg: dict) -> PotentialSpec:
    kind = cfg.get("kind", "cosine")
    if kind == "cosine":
        return cosine_potential()
    if kind == "tabulated":
        path = cfg["samples_path"]
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        return tabulated_potential(rows[:, 0], rows[:, 1])
    raise PnflowError(f"unknown potential kind {kind!r}")


def _grid_from_config(cfg: dict) -> Grid:
    return Grid(half_width=float(cfg.get("half_width", 400.0)),
                n=int(cfg.get("n", 2**14)))


class _UsageError(Exception):
    pass


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise _UsageError(f"config file not found: {path}")
    with open(p) as fh:
        return json.load(fh)


def _finish(manifest: RunManifest, out_dir: Path, started: float) -> int:
    manifest.wall_clock_s = time.time() - started
    mpath = manifest.write(out_dir)
    print(f"manifest: {mpath}")
    for key, val in manifest.summary.items():
        print(f"{key}={val}")
    return 0


def cmd_layer(args, out_dir: Path) -> int:
    started = time.time()
    pot = cosine_potential()
    grid = Grid(args.L, args.n)
    sol = layer_mod.compute_layer(args.s, pot, grid, method=args.method,
                                  tol=args.tol)
    csv = out_dir / "layer.csv"
    layer_mod.write_layer_csv(csv, sol)
    rep = layer_mod.tail_fit(sol)
    rpath = out_dir / "tail_report.txt"
    rpath.write_text(str(rep) + "\n")
    man = RunManifest(
        command="layer",
        config={"s": args.s, "L": args.L, "n": args.n, "method": args.method,
                "tol": args.tol},
        outputs=[str(csv), str(rpath)],
        summary={"gamma": sol.gamma, "residual": sol.residual,
                 "wp_exponent": rep.wp.exponent,
                 "leading_coefficient": rep.leading.coefficient},
    )
    return _finish(man, out_dir, started)


def cmd_dynsys(args, out_dir: Path) -> int:
    started = time.time()
    beta = dynsys.beta_solve(args.N, args.s, args.gamma)
    if args.beta_only:
        print("beta = (" + ", ".join(f"{b:.5f}" for b in beta.beta) + ")")
        man = RunManifest(command="dynsys",
                          config={"N": args.N, "s": args.s, "gamma": args.gamma,
                                  "beta_only": True},
                          summary={"beta": list(beta.beta)})
        return _finish(man, out_dir, started)
    state0 = dynsys.ParticleState(t=1.0, xi=beta.beta * (1.0 + 0.0))
    if args.x0:
        state0 = dynsys.ParticleState(t=1.0, xi=np.array(args.x0, dtype=float))
    traj = dynsys.integrate(state0, args.s, args.gamma, args.t_end)
    csv = out_dir / "trajectory.csv"
    dynsys.write_trajectory_csv(csv, traj)
    man = RunManifest(
        command="dynsys",
        config={"N": args.N, "s": args.s, "gamma": args.gamma,
                "t_end": args.t_end, "x0": list(state0.xi)},
        outputs=[str(csv)],
        summary={"beta": list(beta.beta),
                 "spacing_exponent": traj.spacing_exponent(args.t_end / 100.0),
                 "barycenter_drift": traj.barycenter_drift()},
    )
    return _finish(man, out_dir, started)


def _initial_field(cfg: dict, grid: Grid, sol) -> Field:
    init = cfg.get("initial", {"type": "dislocations", "x0": [-5.0, 5.0]})
    kind = init.get("type", "dislocations")
    if kind == "dislocations":
        return evolve.dislocation_datum(sol, np.array(init["x0"], dtype=float), grid)
    if kind == "layer":
        return Field(grid, sol.profile(grid.nodes), 0.0, 1.0)
    raise PnflowError(f"unknown initial datum type {kind!r}")


def cmd_evolve(args, out_dir: Path) -> int:
    started = time.time()
    cfg = _load_config(args.config)
    pot = _potential_from_config(cfg.get("potential", {}))
    grid = _grid_from_config(cfg.get("grid", {}))
    s = float(cfg["s"])
    ecfg = evolve.EvolveConfig(
        s=s, potential=pot, grid=grid,
        t0=float(cfg.get("t0", 1.0)), t1=float(cfg.get("t1", 10.0)),
        dt=cfg.get("dt"), scheme=cfg.get("scheme", "etd_picard"),
        picard_tol=float(cfg.get("picard_tol", 1e-9)),
        picard_max_iters=int(cfg.get("picard_max_iters", 60)),
    )
    lay = layer_mod.compute_layer(
        s, pot, grid, method=cfg.get("layer_method", "newton"),
        tol=float(cfg.get("layer_tol", 1e-10)))
    u0 = _initial_field(cfg, grid, lay)
    sched = np.geomspace(ecfg.t0, ecfg.t1, int(cfg.get("n_snapshots", 17))) \
        if ecfg.t0 > 0 else np.linspace(ecfg.t0, ecfg.t1, int(cfg.get("n_snapshots", 17)))
    result = evolve.run(u0, ecfg, snapshot_times=sched)
    outputs = []
    for t, f in zip(result.times, result.snapshots):
        path = out_dir / f"u_t{t:012.6f}.csv"
        write_field_csv(path, f, value_name="u")
        outputs.append(str(path))
    man = RunManifest(command="evolve", config=cfg, outputs=outputs,
                      summary={"dt": ecfg.resolved_dt(),
                               "n_snapshots": len(result.times),
                               "gamma": lay.gamma})
    return _finish(man, out_dir, started)


def _snapshots_from_manifest(man: dict):
    snaps = []
    for path in man["outputs"]:
        name = Path(path).name
        if not name.startswith("u_t"):
            continue
        t = float(name[3:-4])
        from .grid import read_field_csv

        snaps.append((t, read_field_csv(path)))
    snaps.sort(key=lambda p: p[0])
    return snaps


def cmd_track(args, out_dir: Path) -> int:
    started = time.time()
    man_in = _load_config(args.run)
    cfg = man_in["config"]
    pot = _potential_from_config(cfg.get("potential", {}))
    grid = _grid_from_config(cfg.get("grid", {}))
    s = float(cfg["s"])
    snaps = _snapshots_from_manifest(man_in)
    if not snaps:
        print("manifest contains no snapshots", file=sys.stderr)
        return VALIDATION_ERROR
    lay = layer_mod.compute_layer(s, pot, grid, method="newton", tol=1e-10)
    n_disloc = int(round(snaps[0][1].right_exterior - snaps[0][1].left_exterior))
    beta = dynsys.beta_solve(n_disloc, s, lay.gamma)
    records = tracker.track_history(snaps, lay, beta, s, lay.gamma)
    t0_cal = tracker.calibrate_time_origin(
        [r.t for r in records], [r.xi for r in records], beta, s)
    records = tracker.track_history(snaps, lay, beta, s, lay.gamma,
                                    t_origin=t0_cal)
    csv = out_dir / "diagnostics.csv"
    tracker.write_diagnostics_csv(csv, records)
    rep = tracker.rate_report(records, s)
    rpath = out_dir / "rate_report.txt"
    rpath.write_text(str(rep) + "\n")
    man = RunManifest(command="track", config={"run": args.run},
                      outputs=[str(csv), str(rpath)],
                      summary={"spacing_exponent": rep.spacing_exponent,
                               "anorm_max": rep.anorm_max,
                               "time_origin": t0_cal})
    return _finish(man, out_dir, started)


def cmd_heatkernel(args, out_dir: Path) -> int:
    started = time.time()
    rep = heatkernel.kernel_property_suite(args.s, quick=args.quick)
    sl = heatkernel.kernel_eval(args.s, 1.0, Grid(100.0, 4001))
    csv = out_dir / "kernel_t1.csv"
    heatkernel.write_kernel_csv(csv, sl)
    rpath = out_dir / "kernel_report.txt"
    rpath.write_text(str(rep) + "\n")
    man = RunManifest(command="heatkernel", config={"s": args.s},
                      outputs=[str(csv), str(rpath)], summary=rep.metrics)
    return _finish(man, out_dir, started)


def cmd_asymlab(args, out_dir: Path) -> int:
    started = time.time()
    if args.build_aux:
        aux = asymlab.build_auxiliary(args.s, args.wpp0)
        csv = out_dir / "auxiliary_potential.csv"
        with open(csv, "w", newline="\n") as fh:
            fh.write("r,V\n")
            for r, v in zip(aux.r_nodes, aux.v_vals):
                fh.write(f"{float(r)!r},{float(v)!r}\n")
        man = RunManifest(command="asymlab", config={"s": args.s, "wpp0": args.wpp0,
                                                     "build_aux": True},
                          outputs=[str(csv)],
                          summary={"A": aux.a_mass, "Vpp0": aux.vpp0,
                                   "scale_a": aux.scale_a})
        return _finish(man, out_dir, started)
    scan = asymlab.omega_ratio_scan(args.which, args.s)
    csv = out_dir / f"omega{args.which}_scan.csv"
    with open(csv, "w", newline="\n") as fh:
        fh.write("x,fraclap,ratio\n")
        for x, v, r in zip(scan.x, scan.values, scan.ratio):
            fh.write(f"{float(x)!r},{float(v)!r},{float(r)!r}\n")
    man = RunManifest(command="asymlab",
                      config={"s": args.s, "which": args.which},
                      outputs=[str(csv)],
                      summary={"C_bound": scan.c_bound,
                               "lambda_fit": scan.lambda_fit})
    return _finish(man, out_dir, started)


def cmd_pipeline(args, out_dir: Path) -> int:
    started = time.time()
    cfg = _load_config(args.config)
    pot = _potential_from_config(cfg.get("potential", {}))
    grid = _grid_from_config(cfg.get("grid", {}))
    s = float(cfg["s"])
    n_disloc = int(cfg.get("N", 2))
    if args.dry_run:
        man = RunManifest(command="pipeline", config=cfg,
                          summary={"dry_run": True})
        return _finish(man, out_dir, started)

    lay = layer_mod.compute_layer(s, pot, grid, method="newton",
                                  tol=float(cfg.get("layer_tol", 1e-10)))
    lcsv = out_dir / "layer.csv"
    layer_mod.write_layer_csv(lcsv, lay)
    beta = dynsys.beta_solve(n_disloc, s, lay.gamma)

    t0, t1 = float(cfg.get("t0", 1.0)), float(cfg.get("t1", 100.0))
    traj = dynsys.integrate(
        dynsys.ParticleState(t=t0, xi=beta.beta * t0 ** (1.0 / (1.0 + 2.0 * s))),
        s, lay.gamma, max(t1, 1e4))
    tcsv = out_dir / "trajectory.csv"
    dynsys.write_trajectory_csv(tcsv, traj)

    h0 = np.array(cfg.get("h0", [0.0] * n_disloc), dtype=float)
    x0 = beta.beta * t0 ** (1.0 / (1.0 + 2.0 * s)) + h0
    ecfg = evolve.EvolveConfig(s=s, potential=pot, grid=grid, t0=t0, t1=t1,
                               dt=cfg.get("dt"),
                               scheme=cfg.get("scheme", "imex_spectral"))
    result = evolve.run_dislocations(x0, ecfg, lay,
                                     n_snapshots=int(cfg.get("n_snapshots", 33)))
    outputs = [str(lcsv), str(tcsv)]
    for t, f in zip(result.times, result.snapshots):
        path = out_dir / f"u_t{t:012.6f}.csv"
        write_field_csv(path, f, value_name="u")
        outputs.append(str(path))

    snaps = list(zip(result.times, result.snapshots))
    records = tracker.track_history(snaps, lay, beta, s, lay.gamma)
    t0_cal = tracker.calibrate_time_origin([r.t for r in records],
                                           [r.xi for r in records], beta, s)
    records = tracker.track_history(snaps, lay, beta, s, lay.gamma,
                                    t_origin=t0_cal)
    dcsv = out_dir / "diagnostics.csv"
    tracker.write_diagnostics_csv(dcsv, records)
    outputs.append(str(dcsv))
    rep = tracker.rate_report(records, s)

    summary = {"gamma": lay.gamma, "beta": list(beta.beta),
               "spacing_exponent": rep.spacing_exponent,
               "anorm_max": rep.anorm_max,
               "anorm_slope": rep.anorm_slope,
               "h_trend_scaled": rep.h_trend_scaled,
               "ode_spacing_exponent": traj.spacing_exponent(100.0)}

    pert = cfg.get("odd_perturbation", 0.0)
    if pert:
        from .grid import WeightPhi, phi

        weight = WeightPhi(s)
        eta = (pert * phi(weight, grid.nodes, max(t0, 1.0))
               * (2.0 / np.pi) * np.arctan(grid.nodes / 5.0))
        u0 = evolve.dislocation_datum(lay, x0, grid)
        u0p = Field(grid, u0.values + eta, u0.left_exterior, u0.right_exterior)
        base = evolve.run(u0, ecfg, snapshot_times=[t1])
        pert_run = evolve.run(u0p, ecfg, snapshot_times=[t1])
        gap0 = float(np.max(np.abs(eta)))
        gap1 = float(np.max(np.abs(pert_run.last().values - base.last().values)))
        summary["perturbation_initial"] = gap0
        summary["perturbation_final"] = gap1

    man = RunManifest(command="pipeline", config=cfg, outputs=outputs,
                      summary=summary)
    return _finish(man, out_dir, started)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pnflow",
                                 description="fractional Peierls-Nabarro laboratory")
    ap.add_argument("--out-dir", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1,
                    help="recorded in the manifest; computations are single-threaded")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layer", help="compute the layer solution and tail fits")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--L", type=float, default=400.0)
    p.add_argument("--n", type=int, default=2**14)
    p.add_argument("--method", choices=["relaxation", "newton"], default="newton")
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("dynsys", help="self-similar profile and ODE trajectories")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--t-end", type=float, default=1e4)
    p.add_argument("--x0", type=float, nargs="*", default=None)
    p.add_argument("--beta-only", action="store_true")

    p = sub.add_parser("evolve", help="mild-solution PDE run from a JSON config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("track", help="decompose snapshots of a previous run")
    p.add_argument("--run", required=True, help="manifest of an evolve run")

    p = sub.add_parser("heatkernel", help="kernel property suite")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--quick", action="store_true")

    p = sub.add_parser("asymlab", help="barrier ratio scans and the auxiliary potential")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--which", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--build-aux", action="store_true")
    p.add_argument("--wpp0", type=float, default=4.0 * np.pi**2)

    p = sub.add_parser("pipeline", help="layer -> beta -> evolve -> track chain")
    p.add_argument("--config", required=True)
    p.add_argument("--dry-run", action="store_true")
    return ap


COMMANDS = {
    "layer": cmd_layer,
    "dynsys": cmd_dynsys,
    "evolve": cmd_evolve,
    "track": cmd_track,
    "heatkernel": cmd_heatkernel,
    "asymlab": cmd_asymlab,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors; the contract is 1
        return USAGE_ERROR if exc.code not in (0, None) else 0
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](args, out_dir)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    except (SolverFailure, StepFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return SOLVER_ERROR
    except PnflowError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return VALIDATION_ERROR


if __name__ == "__main__":
    sys.exit(main())
