"""Config-driven experiment harness: single scenarios, resolution tests, SNR sweeps.

Experiments are described by a JSON config file whose sections mirror
:class:`ExperimentConfig`.  Every trial derives its RNG stream from
``(seed, snr_index, trial_index)`` through ``numpy``'s SeedSequence, so runs
are reproducible and trials can execute in any order (or in parallel)
without changing the outputs.  All delimited outputs use shortest
round-trip float formatting and are byte-stable for a fixed config + seed;
wall-clock timings are therefore kept out of them (``--timings`` writes a
separate, non-contractual file).
"""

import csv
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .lifting import LiftedOperator, build_grid
from .model import ArrayGeometry, CalibrationModel, SourceScene, SnapshotSet, simulate
from .program import select_eta
from .recovery import estimate
from .solver import SolverSettings

__all__ = ["ExperimentConfig", "TrialRecord", "load_config", "run_single",
           "run_sweep", "ablation_methods", "trial_rmse", "write_spectrum",
           "write_trials", "write_summary"]

METHODS = ("proposed", "ongrid-ablation", "single-snapshot-ablation")


@dataclass(frozen=True)
class ExperimentConfig:
    num_sensors: int = 8
    spacing_ratio: float = 0.5
    num_coeffs: int = 2
    h_seed: int = None            # fixed calibration draw; None = redraw per trial
    h_coefficients: tuple = None  # explicit complex h as (re, im) pairs
    start_deg: float = -90.0
    stop_deg: float = 90.0
    step_deg: float = 3.0
    true_doas_deg: tuple = (13.222, 28.602)
    source_powers: tuple = None
    num_snapshots: int = 10
    num_sources: int = None
    snr_db_list: tuple = (20.0,)
    trials_per_snr: int = 1
    method: tuple = ("proposed",)
    eta_rule: str = "quantile"    # "quantile" or "fixed"
    eta_confidence: float = 0.95
    eta_value: float = None
    solver: SolverSettings = field(default_factory=SolverSettings)
    seed: int = 0
    exact_model: bool = False

    def __post_init__(self):
        if self.trials_per_snr < 1:
            raise ConfigError("trials_per_snr", "must be at least 1")
        if not self.snr_db_list:
            raise ConfigError("snr_db_list", "must not be empty")
        for name in self.method:
            if name not in METHODS:
                raise ConfigError("method", f"unknown method '{name}' (choose from {METHODS})")
        if self.eta_rule not in ("quantile", "fixed"):
            raise ConfigError("eta_rule", "must be 'quantile' or 'fixed'")
        if self.eta_rule == "fixed" and self.eta_value is None:
            raise ConfigError("eta_value", "required when eta_rule is 'fixed'")
        k = self.num_sources
        if k is not None and k != len(self.true_doas_deg):
            raise ConfigError("num_sources", "must match the number of true DoAs")
        object.__setattr__(self, "method", tuple(self.method))
        object.__setattr__(self, "true_doas_deg", tuple(self.true_doas_deg))
        object.__setattr__(self, "snr_db_list", tuple(self.snr_db_list))
        if self.source_powers is not None:
            object.__setattr__(self, "source_powers", tuple(self.source_powers))
        if self.num_sources is None:
            object.__setattr__(self, "num_sources", len(self.true_doas_deg))

    @property
    def geometry(self):
        return ArrayGeometry(self.num_sensors, self.spacing_ratio)

    @property
    def grid(self):
        return build_grid(self.start_deg, self.stop_deg, self.step_deg)

    def scene(self, snr_db):
        return SourceScene(true_doas_deg=np.asarray(self.true_doas_deg),
                           num_snapshots=self.num_snapshots,
                           source_powers=None if self.source_powers is None
                           else np.asarray(self.source_powers),
                           snr_db=float(snr_db))

    def calibration(self, trial_h_seed):
        if self.h_coefficients is not None:
            h = np.asarray([complex(re, im) for re, im in self.h_coefficients])
            from .model import dft_calibration_basis
            basis = dft_calibration_basis(self.num_sensors, h.size)
            return CalibrationModel(basis=basis, coefficients=h)
        seed = self.h_seed if self.h_seed is not None else trial_h_seed
        return CalibrationModel.random(self.geometry, self.num_coeffs, seed)

    def eta_for(self, noise_variance, num_snapshots):
        if self.eta_rule == "fixed":
            return float(self.eta_value)
        eta = select_eta(noise_variance, self.num_sensors, num_snapshots,
                         self.eta_confidence)
        return max(eta, 1e-8)


@dataclass
class TrialRecord:
    snr_db: float
    trial_index: int
    method: str
    rmse_deg: float
    theta_hat: list
    residual: float
    solve_iters: int
    runtime_s: float
    solver_status: str


_SECTION_FIELDS = {
    "geometry": {"num_sensors", "spacing_ratio"},
    "calibration": {"num_coeffs", "h_seed", "h_coefficients"},
    "grid": {"start_deg", "stop_deg", "step_deg"},
    "scene": {"true_doas_deg", "source_powers", "num_snapshots", "num_sources"},
    "experiment": {"snr_db_list", "trials_per_snr", "method", "seed", "exact_model"},
    "eta_rule": {"rule", "confidence", "value"},
    "solver": {"feas_tol", "gap_tol", "max_iters", "step_fraction"},
}


def load_config(path, overrides=None):
    """Read and validate a JSON experiment config; raises ConfigError with
    the offending section/field name."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    flat = {}
    for section, content in raw.items():
        if section not in _SECTION_FIELDS:
            raise ConfigError(section, "unknown config section")
        if not isinstance(content, dict):
            raise ConfigError(section, "section must be a JSON object")
        for key, value in content.items():
            if key not in _SECTION_FIELDS[section]:
                raise ConfigError(f"{section}.{key}", "unknown field")
            if section == "eta_rule":
                key = {"rule": "eta_rule", "confidence": "eta_confidence",
                       "value": "eta_value"}[key]
            flat[key] = value
    solver_kwargs = {k: flat.pop(k) for k in
                     ("feas_tol", "gap_tol", "max_iters", "step_fraction")
                     if k in flat}
    if "method" in flat and isinstance(flat["method"], str):
        flat["method"] = (flat["method"],)
    if "h_coefficients" in flat and flat["h_coefficients"] is not None:
        flat["h_coefficients"] = tuple(tuple(p) for p in flat["h_coefficients"])
    for key in ("true_doas_deg", "source_powers", "snr_db_list", "method"):
        if key in flat and flat[key] is not None and not isinstance(flat[key], tuple):
            flat[key] = tuple(flat[key])
    if overrides:
        flat.update(overrides)
    try:
        return ExperimentConfig(solver=SolverSettings(**solver_kwargs), **flat)
    except TypeError as exc:
        raise ConfigError("<config>", str(exc)) from None


def ablation_methods(config):
    """Operator factory per configured method; shared data keeps trials paired.

    Each factory maps ``(calibration, snapshots)`` to the operator and the
    (possibly reduced) snapshot set that method solves: the on-grid ablation
    drops the derivative block, the single-snapshot ablation keeps only the
    first snapshot.
    """
    geometry, grid = config.geometry, config.grid

    def proposed(cal, snaps):
        op = LiftedOperator(geometry, grid, cal, snaps.num_snapshots)
        return op, snaps

    def ongrid(cal, snaps):
        op = LiftedOperator(geometry, grid, cal, snaps.num_snapshots, off_grid=False)
        return op, snaps

    def single(cal, snaps):
        first = SnapshotSet(observations=snaps.observations[:, :1],
                            noise_variance=snaps.noise_variance,
                            rng_seed=snaps.rng_seed)
        op = LiftedOperator(geometry, grid, cal, 1)
        return op, first

    table = {"proposed": proposed, "ongrid-ablation": ongrid,
             "single-snapshot-ablation": single}
    unknown = set(config.method) - set(table)
    if unknown:
        raise ConfigError("method", f"unknown methods {sorted(unknown)}")
    return {name: table[name] for name in config.method}


def trial_rmse(theta_hat, theta_true):
    """Assignment-matched RMSE in degrees: sqrt((1/K) min_perm ||err||^2)."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_true = np.asarray(theta_true, dtype=float)
    best = np.inf
    for perm in itertools.permutations(range(theta_true.size)):
        best = min(best, float(np.mean((theta_hat[list(perm)] - theta_true) ** 2)))
    return float(np.sqrt(best))


def _trial_seed(seed, snr_index, trial_index):
    return np.random.SeedSequence([int(seed), int(snr_index), int(trial_index)])


def run_trial(config, snr_index, trial_index, method_name):
    """One seeded trial of one method; returns (TrialRecord, RecoveryResult)."""
    snr_db = config.snr_db_list[snr_index]
    root = _trial_seed(config.seed, snr_index, trial_index)
    data_seed, h_seed = (int(s) for s in root.generate_state(2, np.uint64))
    cal = config.calibration(h_seed)
    scene = config.scene(snr_db)
    snaps, truth = simulate(config.geometry, cal, scene, config.grid,
                            data_seed, exact_model=config.exact_model)
    factory = ablation_methods(config)[method_name]
    op, data = factory(cal, snaps)
    eta = config.eta_for(data.noise_variance, data.num_snapshots)
    start = time.perf_counter()
    result = estimate(op, data, config.num_sources, settings=config.solver, eta=eta)
    runtime = time.perf_counter() - start
    record = TrialRecord(
        snr_db=float(snr_db), trial_index=trial_index, method=method_name,
        rmse_deg=trial_rmse(result.theta_hat, truth.theta_deg),
        theta_hat=[float(t) for t in result.theta_hat],
        residual=float(result.residual),
        solve_iters=int(result.solver_iterations),
        runtime_s=float(runtime), solver_status=result.solver_status)
    return record, result


def run_single(config, method_name=None, snr_index=0, trial_index=0):
    """One scenario, one estimate; used by the resolve/solve commands."""
    name = method_name or config.method[0]
    return run_trial(config, snr_index, trial_index, name)


def _run_trial_star(args):
    config, snr_index, trial_index, name = args
    record, _ = run_trial(config, snr_index, trial_index, name)
    return record


def run_sweep(config, threads=1, progress=None):
    """All (snr, trial, method) triples of the config; returns TrialRecords
    in deterministic (snr, trial, method) order regardless of scheduling."""
    tasks = [(config, si, ti, name)
             for si in range(len(config.snr_db_list))
             for ti in range(config.trials_per_snr)
             for name in config.method]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_trial_star, tasks))
    else:
        records = []
        for task in tasks:
            records.append(_run_trial_star(task))
            if progress:
                progress(task, records[-1])
    return records


def summarize(records):
    """Aggregate per (snr, method): paper-style RMSE with a normal-theory CI.

    ``rmse_mean`` is sqrt(mean of per-trial squared errors); the 95% CI is a
    normal approximation on the squared errors, mapped through the square
    root (lower bound clipped at zero).
    """
    keys = sorted({(r.snr_db, r.method) for r in records})
    out = []
    for snr_db, method in keys:
        sq = np.array([r.rmse_deg ** 2 for r in records
                       if r.snr_db == snr_db and r.method == method])
        mean_sq = float(np.mean(sq))
        if sq.size > 1:
            half = 1.96 * float(np.std(sq, ddof=1)) / np.sqrt(sq.size)
        else:
            half = 0.0
        out.append({
            "snr_db": snr_db,
            "method": method,
            "rmse_mean": float(np.sqrt(mean_sq)),
            "rmse_ci95": [float(np.sqrt(max(0.0, mean_sq - half))),
                          float(np.sqrt(mean_sq + half))],
            "trials": int(sq.size),
        })
    return out


def _fmt(value):
    """Shortest round-trip decimal for floats, plain text otherwise."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_spectrum(path, grid, spectrum):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", "amplitude"])
        for ang, amp in zip(grid.angles_deg, spectrum):
            writer.writerow([_fmt(float(ang)), _fmt(float(amp))])


TRIAL_COLUMNS = ["snr_db", "trial_index", "method", "rmse_deg", "theta_hat",
                 "residual", "solve_iters", "solver_status"]


def write_trials(path, records):
    """Per-trial CSV.  Wall-clock runtime is deliberately not included so
    identical config + seed reproduce the file byte for byte; use
    :func:`write_timings` for the timing sidecar."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_COLUMNS)
        for r in records:
            writer.writerow([
                _fmt(r.snr_db), r.trial_index, r.method, _fmt(r.rmse_deg),
                ";".join(_fmt(t) for t in r.theta_hat),
                _fmt(r.residual), r.solve_iters, r.solver_status])


def write_timings(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "trial_index", "method", "runtime_s"])
        for r in records:
            writer.writerow([_fmt(r.snr_db), r.trial_index, r.method,
                             _fmt(r.runtime_s)])


def write_summary(path, config, records):
    payload = {
        "config_seed": config.seed,
        "methods": list(config.method),
        "results": summarize(records),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def read_trials(path):
    """Inverse of :func:`write_trials` (runtime_s comes back as 0.0)."""
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(TrialRecord(
                snr_db=float(row["snr_db"]), trial_index=int(row["trial_index"]),
                method=row["method"], rmse_deg=float(row["rmse_deg"]),
                theta_hat=[float(t) for t in row["theta_hat"].split(";") if t],
                residual=float(row["residual"]),
                solve_iters=int(row["solve_iters"]), runtime_s=0.0,
                solver_status=row["solver_status"]))
    return records
