"""Command-line entry point.

Subcommands:

* ``simulate`` -- draw one scenario from a config and write it to a
  ``scenario.npz`` (observations, ground truth, and everything needed to
  re-run the estimate).
* ``solve``    -- run one estimate on a stored scenario file.
* ``resolve``  -- one-shot resolution test from a config: simulate,
  estimate, write ``spectrum.csv`` (+ figure) and ``estimate.json``.
* ``sweep``    -- Monte-Carlo RMSE-versus-SNR sweep: ``trials.csv``,
  ``summary.json`` (+ figure).

CSV/JSON outputs are byte-reproducible for a fixed config and seed.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench
from .errors import ConfigError
from .bench import load_config, run_sweep, run_trial, write_spectrum, \
    write_summary, write_timings, write_trials
from .lifting import build_grid
from .model import ArrayGeometry, CalibrationModel, SnapshotSet, simulate
from .program import build_program, dump_program
from .recovery import estimate

SCENARIO_KEYS = ("observations", "noise_variance", "rng_seed", "basis",
                 "h_true", "grid_deg", "spacing_ratio", "true_doas_deg",
                 "support", "sbar", "beta")


def _add_common(parser, need_config=True):
    parser.add_argument("--config", required=need_config, help="JSON experiment config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--method", default=None, choices=bench.METHODS,
                        help="run only this method")
    parser.add_argument("--threads", type=int, default=1,
                        help="parallel worker processes for trials")
    parser.add_argument("--dump-program", action="store_true",
                        help="write the conic program of the (first) solve to program.socp")
    parser.add_argument("--solver-log", action="store_true",
                        help="write per-iteration solver CSV logs")
    parser.add_argument("--timings", action="store_true",
                        help="write wall-clock timings sidecar (not byte-reproducible)")
    parser.add_argument("--plots", dest="plots", action="store_true", default=True,
                        help="render PNG figures next to the CSV outputs (default)")
    parser.add_argument("--no-plots", dest="plots", action="store_false")


def _load(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.method is not None:
        overrides["method"] = (args.method,)
    config = load_config(args.config, overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return config, out


def _solver_settings(config, out, args, name="solver_log.csv"):
    settings = config.solver
    if args.solver_log:
        from dataclasses import replace
        settings = replace(settings, log_path=str(out / name))
    return settings


def cmd_simulate(args):
    config, out = _load(args)
    record_seed = config.seed
    root = np.random.SeedSequence([record_seed, 0, 0])
    data_seed, h_seed = (int(s) for s in root.generate_state(2, np.uint64))
    cal = config.calibration(h_seed)
    snaps, truth = simulate(config.geometry, cal, config.scene(config.snr_db_list[0]),
                            config.grid, data_seed, exact_model=config.exact_model)
    path = out / "scenario.npz"
    np.savez(path,
             observations=snaps.observations,
             noise_variance=snaps.noise_variance,
             rng_seed=snaps.rng_seed,
             basis=cal.basis,
             h_true=cal.coefficients,
             grid_deg=np.array([config.start_deg, config.stop_deg, config.step_deg]),
             spacing_ratio=config.spacing_ratio,
             true_doas_deg=np.asarray(config.true_doas_deg),
             support=truth.support,
             sbar=truth.sbar,
             beta=truth.beta)
    print(f"wrote {path}")
    return 0


def cmd_solve(args):
    config, out = _load(args)
    data = np.load(args.scenario)
    missing = [k for k in SCENARIO_KEYS if k not in data]
    if missing:
        print(f"scenario file is missing keys: {missing}", file=sys.stderr)
        return 2
    basis = data["basis"]
    geometry = ArrayGeometry(basis.shape[0], float(data["spacing_ratio"]))
    cal = CalibrationModel(basis=basis, coefficients=data["h_true"])
    start, stop, step = data["grid_deg"]
    grid = build_grid(float(start), float(stop), float(step))
    snaps = SnapshotSet(observations=data["observations"],
                        noise_variance=float(data["noise_variance"]),
                        rng_seed=int(data["rng_seed"]))
    method = (args.method or config.method[0])
    factory = bench.ablation_methods(
        bench.ExperimentConfig(num_sensors=geometry.num_sensors,
                               spacing_ratio=geometry.spacing_ratio,
                               start_deg=float(start), stop_deg=float(stop),
                               step_deg=float(step),
                               true_doas_deg=tuple(np.asarray(data["true_doas_deg"])),
                               num_snapshots=snaps.num_snapshots,
                               method=(method,), seed=config.seed))[method]
    op, used = factory(cal, snaps)
    eta = config.eta_for(used.noise_variance, used.num_snapshots)
    if args.dump_program:
        dump_program(build_program(op, used, eta, grid.half_interval),
                     out / "program.socp")
    settings = _solver_settings(config, out, args)
    k = len(np.asarray(data["true_doas_deg"]))
    result = estimate(op, used, k, settings=settings, eta=eta)
    write_spectrum(out / "spectrum.csv", grid, result.spectrum)
    payload = {
        "method": method,
        "theta_hat_deg": [float(t) for t in result.theta_hat],
        "support": [int(i) for i in result.support],
        "beta_hat_deg": [float(np.rad2deg(result.beta_hat[i])) for i in result.support],
        "residual": float(result.residual),
        "sigma1_ratio": float(result.sigma1_ratio),
        "solver_status": result.solver_status,
        "solver_iterations": int(result.solver_iterations),
        "rmse_deg": bench.trial_rmse(result.theta_hat, np.asarray(data["true_doas_deg"])),
    }
    with open(out / "estimate.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.plots:
        from .plots import render_spectrum
        render_spectrum(out / "spectrum.png", grid.angles_deg, result.spectrum,
                        np.asarray(data["true_doas_deg"]))
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_resolve(args):
    config, out = _load(args)
    if args.dump_program:
        _dump_first_program(config, out)
    record, result = run_trial(config, 0, 0, args.method or config.method[0])
    grid = config.grid
    write_spectrum(out / "spectrum.csv", grid, result.spectrum)
    payload = {
        "method": record.method,
        "snr_db": record.snr_db,
        "theta_hat_deg": record.theta_hat,
        "true_doas_deg": list(config.true_doas_deg),
        "rmse_deg": record.rmse_deg,
        "support": [int(i) for i in result.support],
        "solver_status": record.solver_status,
        "solver_iterations": record.solve_iters,
    }
    with open(out / "estimate.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.timings:
        write_timings(out / "timings.csv", [record])
    if args.plots:
        from .plots import render_spectrum
        render_spectrum(out / "spectrum.png", grid.angles_deg, result.spectrum,
                        config.true_doas_deg)
    print(json.dumps(payload, sort_keys=True))
    return 0


def _dump_first_program(config, out):
    root = np.random.SeedSequence([config.seed, 0, 0])
    data_seed, h_seed = (int(s) for s in root.generate_state(2, np.uint64))
    cal = config.calibration(h_seed)
    snaps, _ = simulate(config.geometry, cal, config.scene(config.snr_db_list[0]),
                        config.grid, data_seed, exact_model=config.exact_model)
    factory = bench.ablation_methods(config)[config.method[0]]
    op, used = factory(cal, snaps)
    eta = config.eta_for(used.noise_variance, used.num_snapshots)
    dump_program(build_program(op, used, eta, config.grid.half_interval),
                 out / "program.socp")


def cmd_sweep(args):
    config, out = _load(args)
    if args.dump_program:
        _dump_first_program(config, out)
    total = len(config.snr_db_list) * config.trials_per_snr * len(config.method)
    done = []

    def progress(task, record):
        done.append(record)
        print(f"[{len(done)}/{total}] snr={record.snr_db} trial={record.trial_index} "
              f"{record.method}: rmse={record.rmse_deg:.3f} deg "
              f"({record.solver_status}, {record.runtime_s:.1f}s)", flush=True)

    records = run_sweep(config, threads=args.threads, progress=progress)
    write_trials(out / "trials.csv", records)
    payload = write_summary(out / "summary.json", config, records)
    if args.timings:
        write_timings(out / "timings.csv", records)
    if args.plots:
        from .plots import render_rmse_curves
        render_rmse_curves(out / "rmse_vs_snr.png", payload["results"])
    for row in payload["results"]:
        print(f"snr={row['snr_db']} {row['method']}: rmse={row['rmse_mean']:.4f} "
              f"ci95=[{row['rmse_ci95'][0]:.4f}, {row['rmse_ci95'][1]:.4f}] "
              f"({row['trials']} trials)")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="liftdoa",
        description="Self-calibrating off-grid DoA estimation benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit a scenario file from a config")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("solve", help="single estimate from a scenario file")
    _add_common(p)
    p.add_argument("--scenario", required=True, help="scenario .npz from 'simulate'")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("resolve", help="resolution test: spectrum CSV from a config")
    _add_common(p)
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("sweep", help="Monte-Carlo RMSE-versus-SNR sweep")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
