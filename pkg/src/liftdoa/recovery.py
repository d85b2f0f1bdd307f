"""Post-processing of the solved lifted matrix into calibration and DoA estimates.

The exact noiseless lifted matrix is rank one (coefficients times the
stacked signal row), so the leading singular triple separates the two
factors.  Support detection reads the per-bin group magnitudes of the signal
row; the off-grid magnitude per detected source is the least-squares ratio
of the derivative row to the signal row, and its sign is picked by
enumerating all 2^K patterns and keeping the one with the smallest data
residual.
"""

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import UnstableRatioWarning
from .lifting import lift_scene
from .norms import corollary_check
from .program import build_program, extract_lifted, select_eta
from .solver import SolverSettings, solve

__all__ = ["RecoveryResult", "rank_one_factor", "detect_support",
           "beta_magnitude", "recover_sign", "estimate"]

MAX_SIGN_SOURCES = 20
SUPPORT_FLOOR = 1e-3  # rows below this fraction of the peak are treated as zero


@dataclass
class RecoveryResult:
    h_hat: np.ndarray          # m complex calibration coefficients
    sbar_hat: np.ndarray       # N x L complex signal rows
    p_hat: np.ndarray          # N x L complex derivative-weighted rows (zero on-grid)
    beta_hat: np.ndarray       # N signed offsets (radians), zero off support
    support: np.ndarray        # K grid indices, ascending
    theta_hat: np.ndarray      # K estimated DoAs in degrees
    residual: float
    spectrum: np.ndarray       # N, normalized to peak 1
    sigma1_ratio: float = np.nan
    solver_status: str = ""
    solver_iterations: int = 0
    norms: object = None
    unstable_support: np.ndarray = field(default=None)


def rank_one_factor(xt):
    """Best rank-one split of the lifted matrix.

    Returns ``(h_hat, xrow, sigma1_ratio)`` with ``h_hat @ xrow^T`` the
    leading singular dyad; the phase is fixed so the largest-magnitude entry
    of ``h_hat`` is real positive.  ``sigma1_ratio`` (leading singular value
    over their sum) diagnoses how close the solution is to rank one.
    """
    xt = np.asarray(xt, dtype=complex)
    if not np.any(xt):
        raise ValueError("cannot factor the zero matrix")
    u, sing, wh = np.linalg.svd(xt, full_matrices=False)
    scale = np.sqrt(sing[0])
    h_hat = scale * u[:, 0]
    xrow = scale * wh[0, :]   # conj(w_1) is wh[0]; h_hat * xrow^T = sigma1 u1 w1^H
    pivot = np.argmax(np.abs(h_hat))
    phase = h_hat[pivot] / abs(h_hat[pivot])
    return h_hat / phase, xrow * phase, float(sing[0] / np.sum(sing))


def detect_support(xrow, num_bins, num_snapshots, num_sources, min_separation=1):
    """Pick the ``num_sources`` strongest grid bins of the recovered row.

    The spectrum is the per-bin group magnitude (all snapshot and derivative
    entries for the bin) normalized to peak one.  Selection is greedy over
    descending magnitude with ties broken toward the lower index; selected
    peaks must be more than ``min_separation`` bins apart.
    """
    xrow = np.asarray(xrow).ravel()
    if num_sources < 1:
        raise ValueError("need at least one source")
    if num_sources > num_bins:
        raise ValueError("cannot detect more sources than grid bins")
    if xrow.size % num_bins:
        raise ValueError("row length must be a multiple of the bin count")
    blocks = xrow.reshape(-1, num_bins)
    raw = np.linalg.norm(blocks, axis=0)
    peak = raw.max()
    spectrum = raw / peak if peak > 0 else raw
    order = np.lexsort((np.arange(num_bins), -spectrum))
    chosen = []
    for idx in order:
        if all(abs(int(idx) - c) > min_separation for c in chosen):
            chosen.append(int(idx))
        if len(chosen) == num_sources:
            break
    if len(chosen) < num_sources:
        raise ValueError("separation constraint left too few candidate bins")
    return np.array(sorted(chosen)), spectrum


def beta_magnitude(sbar_hat, p_hat, support, radius):
    """Per-source offset magnitude from the derivative-to-signal row ratio.

    In the exact model the derivative row is a real multiple of the signal
    row, so the multi-snapshot aggregate used here is the least-squares
    projection |<sbar row, p row>| / ||sbar row||^2: it equals the plain
    per-entry ratio on proportional rows and averages out the row components
    the noise leaves non-proportional.  Clamped to [0, radius].

    Rows whose signal norm falls below ``SUPPORT_FLOOR`` of the strongest
    support row give an unstable ratio; they get magnitude 0 and a warning.
    """
    sbar_hat = np.atleast_2d(sbar_hat)
    p_hat = np.atleast_2d(p_hat)
    s_rows = sbar_hat[support]
    p_rows = p_hat[support]
    s_norms = np.linalg.norm(s_rows, axis=1)
    floor = SUPPORT_FLOOR * np.max(s_norms, initial=0.0)
    unstable = s_norms <= floor
    if np.any(unstable):
        warnings.warn("vanishing signal row on support; off-grid offset set to 0",
                      UnstableRatioWarning, stacklevel=2)
    mags = np.zeros(support.size)
    ok = ~unstable
    proj = np.abs(np.sum(np.conj(s_rows[ok]) * p_rows[ok], axis=1))
    mags[ok] = np.clip(proj / s_norms[ok] ** 2, 0.0, radius)
    return mags, unstable


def recover_sign(op, observations, h_hat, sbar_hat, magnitudes, support):
    """Choose the sign pattern of the off-grid offsets by residual enumeration.

    For each of the 2^K patterns, rebuilds the candidate lifted matrix with
    p rows = +/-|beta| * sbar rows and evaluates the data residual through
    the matrix-free operator; the minimizing pattern wins.  Ties keep the
    earliest pattern in enumeration order, so an all-zero magnitude vector
    returns the canonical all-positive pattern.
    """
    k = len(support)
    if k > MAX_SIGN_SOURCES:
        raise ValueError(f"sign enumeration limited to {MAX_SIGN_SOURCES} sources")
    y = np.asarray(observations, dtype=complex)
    best = None
    for pattern in itertools.product((1.0, -1.0), repeat=k):
        beta_sup = np.asarray(pattern) * magnitudes
        p_cand = np.zeros_like(sbar_hat)
        p_cand[support] = beta_sup[:, None] * sbar_hat[support]
        xt_cand = lift_scene(h_hat, sbar_hat, p_cand)
        resid = op.residual_norm(xt_cand, y)
        if best is None or resid < best[0]:
            best = (resid, beta_sup)
    residual, beta_sup = best
    return beta_sup, float(residual)


def estimate(op, snapshots, num_sources, settings=None, eta=None, confidence=0.95):
    """Full pipeline: build program, solve, factor, detect, assemble angles.

    ``eta`` defaults to the noise-ball quantile rule at ``confidence`` using
    the snapshot set's noise variance.  A non-optimal solver status degrades
    the result (flagged in ``solver_status``) instead of raising.

    The source count is assumed known; automatic model-order selection is an
    exposed hook only (pass ``num_sources=None`` to see it refused).
    """
    if num_sources is None:
        raise NotImplementedError(
            "model-order selection is not implemented; pass num_sources")
    settings = settings or SolverSettings()
    if eta is None:
        eta = select_eta(snapshots.noise_variance, op.num_sensors,
                         op.num_snapshots, confidence)
        eta = max(eta, 1e-8)  # keep the cone solvable in the noiseless limit
    radius = op.grid.half_interval
    program = build_program(op, snapshots, eta, radius)
    solution = solve(program, settings)
    xt = extract_lifted(program, solution.primal)

    n_bins = op.num_bins
    n_snap = op.num_snapshots
    h_hat, xrow, sigma1_ratio = rank_one_factor(xt)
    support, spectrum = detect_support(xrow, n_bins, n_snap, num_sources)
    per_snap = xrow.reshape(n_snap, op.block_width)
    sbar_hat = per_snap[:, :n_bins].T.copy()
    beta_hat = np.zeros(n_bins)
    unstable = np.zeros(num_sources, dtype=bool)
    if op.off_grid:
        p_hat = per_snap[:, n_bins:].T.copy()
        magnitudes, unstable = beta_magnitude(sbar_hat, p_hat, support, radius)
        beta_sup, residual = recover_sign(op, snapshots.observations, h_hat,
                                          sbar_hat, magnitudes, support)
        beta_hat[support] = beta_sup
    else:
        p_hat = np.zeros_like(sbar_hat)
        residual = op.residual_norm(lift_scene(h_hat, sbar_hat, None),
                                    snapshots.observations)
    theta_hat = np.rad2deg(op.grid.angles[support] + beta_hat[support])
    report = corollary_check(xt, n_bins, n_snap) if op.off_grid else None
    return RecoveryResult(
        h_hat=h_hat, sbar_hat=sbar_hat, p_hat=p_hat, beta_hat=beta_hat,
        support=support, theta_hat=theta_hat, residual=residual,
        spectrum=spectrum, sigma1_ratio=sigma1_ratio,
        solver_status=solution.status, solver_iterations=solution.iterations,
        norms=report, unstable_support=unstable)
