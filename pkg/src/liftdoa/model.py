"""Physical scenario synthesis for a uniform linear array with miscalibrated sensors.

The received-signal model is

    Y = D A(theta) S + noise,      D = diag(B h),

where the unknown per-sensor complex gains ``d = B h`` live in the column
span of a known (here: partial DFT) basis ``B``.  True directions generally
fall off the search grid; the linearized generator replaces ``A(theta)`` by
first-order Taylor expansion around the nearest grid angles, which is the
model the estimator inverts.

All angles are radians internally; degrees appear only at I/O boundaries.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ScenarioError

__all__ = [
    "ArrayGeometry",
    "CalibrationModel",
    "SourceScene",
    "SnapshotSet",
    "GroundTruth",
    "steering_vector",
    "steering_derivative",
    "dft_calibration_basis",
    "simulate",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: ``num_sensors`` elements, ``spacing_ratio`` = d/wavelength."""

    num_sensors: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.num_sensors < 2:
            raise ValueError("need at least 2 sensors")
        if self.spacing_ratio <= 0:
            raise ValueError("spacing_ratio must be positive")


@dataclass(frozen=True)
class CalibrationModel:
    """Per-sensor complex gains ``gains = basis @ coefficients``.

    ``basis`` is the known M x m matrix (m < M); ``coefficients`` is the
    unknown m-vector the estimator recovers.  ``diag(gains)`` is the gain
    matrix applied to the array output.
    """

    basis: np.ndarray
    coefficients: np.ndarray
    gains: np.ndarray = field(init=False)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex)
        coeff = np.asarray(self.coefficients, dtype=complex).ravel()
        if basis.ndim != 2:
            raise ValueError("basis must be a matrix")
        if basis.shape[1] >= basis.shape[0]:
            raise ValueError("basis must be tall: m < M")
        if coeff.shape[0] != basis.shape[1]:
            raise ValueError("coefficient length must match basis columns")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "coefficients", coeff)
        object.__setattr__(self, "gains", basis @ coeff)

    @property
    def num_coeffs(self):
        return self.basis.shape[1]

    @classmethod
    def random(cls, geometry, num_coeffs, seed):
        """Draw coefficients i.i.d. standard circular complex Gaussian on a DFT basis."""
        rng = np.random.default_rng(seed)
        h = (rng.standard_normal(num_coeffs) + 1j * rng.standard_normal(num_coeffs)) / np.sqrt(2)
        basis = dft_calibration_basis(geometry.num_sensors, num_coeffs)
        return cls(basis=basis, coefficients=h)


@dataclass(frozen=True)
class SourceScene:
    """Far-field narrowband sources: DoAs in degrees, snapshot count, powers, SNR."""

    true_doas_deg: np.ndarray
    num_snapshots: int
    source_powers: np.ndarray = None
    snr_db: float = 20.0

    def __post_init__(self):
        doas = np.atleast_1d(np.asarray(self.true_doas_deg, dtype=float))
        if doas.size < 1:
            raise ValueError("need at least one source")
        if np.any(np.abs(doas) >= 90.0):
            raise ValueError("DoAs must lie strictly inside (-90, 90) degrees")
        powers = self.source_powers
        if powers is None:
            powers = np.ones(doas.size)
        powers = np.atleast_1d(np.asarray(powers, dtype=float))
        if powers.shape != doas.shape:
            raise ValueError("source_powers must match true_doas_deg in length")
        if np.any(powers <= 0):
            raise ValueError("source powers must be positive")
        if self.num_snapshots < 1:
            raise ValueError("need at least one snapshot")
        object.__setattr__(self, "true_doas_deg", doas)
        object.__setattr__(self, "source_powers", powers)

    @property
    def num_sources(self):
        return self.true_doas_deg.size

    @property
    def noise_variance(self):
        """Per-entry complex noise variance implied by the configured SNR.

        SNR is defined per sensor per snapshot against total source power:
        ``snr_db = 10 log10(sum(powers) / noise_variance)``.
        """
        return float(np.sum(self.source_powers) * 10.0 ** (-self.snr_db / 10.0))


@dataclass(frozen=True)
class SnapshotSet:
    """Observed array output ``observations`` (M x L) with its noise level and seed."""

    observations: np.ndarray
    noise_variance: float
    rng_seed: int

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=complex)
        if obs.ndim != 2:
            raise ValueError("observations must be M x L")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")
        object.__setattr__(self, "observations", obs)

    @property
    def num_sensors(self):
        return self.observations.shape[0]

    @property
    def num_snapshots(self):
        return self.observations.shape[1]


@dataclass(frozen=True)
class GroundTruth:
    """What the generator knows: the sparse signal rows, offsets and support."""

    sbar: np.ndarray      # N x L, nonzero only on support rows
    beta: np.ndarray      # N, signed off-grid offsets in radians, zero off support
    support: np.ndarray   # K grid indices, ascending
    theta_deg: np.ndarray  # K true DoAs in degrees (support order)


def _element_offsets(num_sensors):
    # symmetric index k - (M-1)/2, k = 0..M-1
    return np.arange(num_sensors) - (num_sensors - 1) / 2.0


def steering_vector(geometry, angle):
    """Array response to a unit plane wave from ``angle`` (radians).

    Entry k is ``exp(-1j (k - (M-1)/2) 2 pi (d/lambda) sin(angle))``, so all
    entries have unit modulus.  ``angle`` may be a scalar or a 1-D array; the
    result has shape (M,) or (M, len(angle)).
    """
    ang = np.asarray(angle, dtype=float)
    if np.any(np.abs(ang) > np.pi / 2):
        raise ValueError("angle must lie in [-pi/2, pi/2]")
    offsets = _element_offsets(geometry.num_sensors)
    phase = np.multiply.outer(offsets, 2.0 * np.pi * geometry.spacing_ratio * np.sin(ang))
    return np.exp(-1j * phase)


def steering_derivative(geometry, angle):
    """Derivative of :func:`steering_vector` with respect to the angle in radians."""
    ang = np.asarray(angle, dtype=float)
    if np.any(np.abs(ang) > np.pi / 2):
        raise ValueError("angle must lie in [-pi/2, pi/2]")
    offsets = _element_offsets(geometry.num_sensors)
    scale = np.multiply.outer(-1j * offsets, 2.0 * np.pi * geometry.spacing_ratio * np.cos(ang))
    return scale * steering_vector(geometry, angle)


def dft_calibration_basis(num_sensors, num_coeffs):
    """First ``num_coeffs`` columns of the unnormalized M x M DFT matrix.

    Entries are ``exp(-2j pi k l / M)``; column 0 is all ones.  Scaling is
    absorbed by the calibration coefficients, so no 1/sqrt(M) factor.
    """
    if num_coeffs >= num_sensors:
        raise ValueError("calibration basis must have fewer columns than sensors")
    k = np.arange(num_sensors)[:, None]
    l = np.arange(num_coeffs)[None, :]
    return np.exp(-2j * np.pi * k * l / num_sensors)


def _bin_sources(grid, doas_rad):
    """Map each true DoA to its nearest grid bin; offsets must fit in one half-step."""
    step = 2.0 * grid.half_interval
    idx = np.rint((doas_rad - grid.angles[0]) / step).astype(int)
    if np.any(idx < 0) or np.any(idx >= grid.angles.size):
        raise ScenarioError("true DoA outside the grid span")
    beta = doas_rad - grid.angles[idx]
    if np.any(np.abs(beta) > grid.half_interval * (1 + 1e-12)):
        raise ScenarioError("true DoA outside the grid span")
    if np.unique(idx).size != idx.size:
        raise ScenarioError("two sources map to the same grid bin")
    return idx, beta


def simulate(geometry, calibration, scene, grid, seed, exact_model=False):
    """Synthesize noisy snapshots and the ground truth behind them.

    By default the observations follow the linearized off-grid model

        Y = D (Abar + Bbar Gamma) Sbar + noise,

    i.e. exactly the model the estimator inverts, so estimator error can be
    measured without first-order approximation error.  With
    ``exact_model=True`` the steering vectors are evaluated at the true DoAs
    instead.

    Source signals are i.i.d. circular complex Gaussian per snapshot with the
    configured powers; noise is white circular complex Gaussian with variance
    ``scene.noise_variance`` per entry.  Reproducible: the same seed yields
    bit-identical output.

    Returns ``(SnapshotSet, GroundTruth)``.
    """
    from .lifting import build_dictionary  # local import: lifting depends on this module

    doas_rad = np.deg2rad(scene.true_doas_deg)
    support, beta_sup = _bin_sources(grid, doas_rad)
    order = np.argsort(support)
    support = support[order]
    beta_sup = beta_sup[order]
    powers = scene.source_powers[order]

    n_bins = grid.angles.size
    L = scene.num_snapshots
    rng = np.random.default_rng(seed)

    sbar = np.zeros((n_bins, L), dtype=complex)
    draws = (rng.standard_normal((scene.num_sources, L))
             + 1j * rng.standard_normal((scene.num_sources, L))) / np.sqrt(2)
    sbar[support] = np.sqrt(powers)[:, None] * draws

    beta = np.zeros(n_bins)
    beta[support] = beta_sup

    sigma2 = scene.noise_variance
    noise = np.sqrt(sigma2 / 2.0) * (rng.standard_normal((geometry.num_sensors, L))
                                     + 1j * rng.standard_normal((geometry.num_sensors, L)))

    if exact_model:
        a_true = steering_vector(geometry, doas_rad[order])
        clean = np.diag(calibration.gains) @ a_true @ sbar[support]
    else:
        dic = build_dictionary(geometry, grid)
        mix = dic.steering_block + dic.derivative_block * beta[None, :]
        clean = calibration.gains[:, None] * (mix @ sbar)

    snapshots = SnapshotSet(observations=clean + noise,
                            noise_variance=sigma2,
                            rng_seed=int(seed))
    truth = GroundTruth(sbar=sbar, beta=beta, support=support,
                        theta_deg=scene.true_doas_deg[order])
    return snapshots, truth
