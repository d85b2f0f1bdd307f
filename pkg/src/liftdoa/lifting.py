"""Search grid, steering dictionary, and the lifted measurement operator.

Lifting replaces the bilinear unknown (calibration coefficients h, sparse
signal columns x_l) by the rank-one matrix

    Xt = h [x_1^T, ..., x_L^T]   (m x L*W complex),

so the measurement becomes linear in Xt.  The column layout is snapshot
blocks of width W side by side; with the off-grid derivative block W = 2N
and each snapshot block is [sbar_l (N cols), p_l (N cols)].  The forward map
is

    row i of A(Xt) = b_i^H Xt Gtil_i,

with b_i the i-th column of basis^H and Gtil_i = blockdiag(g_i, ..., g_i)
built from row i of the dictionary.  Its matrix form Phi (ML x m*L*W) acts on
column-stacked Xt and produces the row-major stacking of the observations
(vec of Y transposed); row (i, l) of Phi carries g_i[j] * basis[i, a] at
column (l*W + j)*m + a.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import MemoryBudgetError
from .model import steering_derivative, steering_vector

__all__ = [
    "AngleGrid",
    "Dictionary",
    "LiftedOperator",
    "build_grid",
    "build_dictionary",
    "lift_scene",
    "snapshot_columns",
]

DEFAULT_PHI_BUDGET_BYTES = 2 << 30


@dataclass(frozen=True)
class AngleGrid:
    """Uniform search grid (radians) with half-interval r = step/2."""

    angles: np.ndarray
    half_interval: float

    def __post_init__(self):
        ang = np.asarray(self.angles, dtype=float)
        if ang.size < 2:
            raise ValueError("grid needs at least two angles")
        steps = np.diff(ang)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("grid must be strictly increasing and uniform")
        if not np.isclose(self.half_interval, steps[0] / 2.0, rtol=1e-9):
            raise ValueError("half_interval must equal half the grid step")
        if ang[0] < -np.pi / 2 or ang[-1] > np.pi / 2:
            raise ValueError("grid angles must lie in [-pi/2, pi/2]")
        object.__setattr__(self, "angles", ang)

    @property
    def num_angles(self):
        return self.angles.size

    @property
    def angles_deg(self):
        return np.rad2deg(self.angles)


def build_grid(start_deg, stop_deg, step_deg):
    """Half-open uniform grid [start, stop) in degrees; e.g. (-90, 90, 1) has N = 180."""
    if step_deg <= 0:
        raise ValueError("step must be positive")
    if stop_deg <= start_deg:
        raise ValueError("stop must exceed start")
    n = int(np.ceil((stop_deg - start_deg) / step_deg - 1e-12))
    if n < 2:
        raise ValueError("grid would be empty or a single point")
    angles = np.deg2rad(start_deg + step_deg * np.arange(n))
    return AngleGrid(angles=angles, half_interval=np.deg2rad(step_deg) / 2.0)


@dataclass(frozen=True)
class Dictionary:
    """Steering responses and their angle derivatives on the grid, plus [Abar, Bbar]."""

    steering_block: np.ndarray    # M x N
    derivative_block: np.ndarray  # M x N

    @property
    def combined(self):
        return np.hstack([self.steering_block, self.derivative_block])


def build_dictionary(geometry, grid):
    return Dictionary(steering_block=steering_vector(geometry, grid.angles),
                      derivative_block=steering_derivative(geometry, grid.angles))


def snapshot_columns(xt, width):
    """View the lifted matrix (or a row of it) as (L, width) snapshot blocks."""
    arr = np.asarray(xt)
    if arr.shape[-1] % width:
        raise ValueError("column count is not a multiple of the snapshot width")
    return arr.reshape(arr.shape[:-1] + (-1, width))


def lift_scene(coefficients, sbar, p=None):
    """Build the rank-one lifted matrix from h and the per-snapshot sparse columns.

    ``sbar`` is N x L; ``p`` (same shape) is the derivative-weighted part.
    With ``p`` given, each snapshot block is [sbar_l, p_l] (width 2N);
    without it the block is sbar_l alone (width N, on-grid model).
    """
    h = np.asarray(coefficients, dtype=complex).ravel()
    x = np.asarray(sbar, dtype=complex)
    if p is not None:
        x = np.vstack([sbar, p])
    xrow = x.T.reshape(-1)  # snapshot-major concatenation [x_1^T, ..., x_L^T]
    return np.outer(h, xrow)


class LiftedOperator:
    """Linear map from lifted matrices (m x L*W) to observations (M x L).

    Matrix-free by default; ``materialize`` produces the dense matrix form
    under a memory budget, ``matrix_sparse`` the sparse one (used by the
    program builder).  Immutable after construction.
    """

    def __init__(self, geometry, grid, calibration, num_snapshots, dictionary=None,
                 off_grid=True):
        if dictionary is None:
            dictionary = build_dictionary(geometry, grid)
        self.geometry = geometry
        self.grid = grid
        self.basis = calibration.basis
        self.off_grid = bool(off_grid)
        self.gmat = dictionary.combined if off_grid else dictionary.steering_block
        self.num_snapshots = int(num_snapshots)
        if self.num_snapshots < 1:
            raise ValueError("need at least one snapshot")

    @property
    def num_sensors(self):
        return self.basis.shape[0]

    @property
    def num_coeffs(self):
        return self.basis.shape[1]

    @property
    def num_bins(self):
        return self.grid.num_angles

    @property
    def block_width(self):
        """Columns per snapshot block: 2N off-grid, N on-grid."""
        return self.gmat.shape[1]

    @property
    def lifted_shape(self):
        return (self.num_coeffs, self.num_snapshots * self.block_width)

    @property
    def observation_shape(self):
        return (self.num_sensors, self.num_snapshots)

    def sensor_factors(self, i):
        """(b_i, g_i) for sensor i: b_i^H is row i of the basis, g_i row i of the dictionary."""
        return self.basis[i].conj(), self.gmat[i]

    def apply_forward(self, xt):
        """A(Xt): row i equals b_i^H Xt Gtil_i.  Never materializes the matrix form."""
        xt = np.asarray(xt, dtype=complex)
        if xt.shape != self.lifted_shape:
            raise ValueError(f"lifted matrix must have shape {self.lifted_shape}")
        mixed = self.basis @ xt  # (M, L*W); row i = b_i^H Xt
        blocks = snapshot_columns(mixed, self.block_width)  # (M, L, W)
        return np.einsum("ilw,iw->il", blocks, self.gmat)

    def apply_adjoint(self, residual):
        """Adjoint of :meth:`apply_forward` under the trace inner product."""
        r = np.asarray(residual, dtype=complex)
        if r.shape != self.observation_shape:
            raise ValueError(f"residual must have shape {self.observation_shape}")
        out = np.einsum("ia,il,iw->alw", self.basis.conj(), r, self.gmat.conj())
        return out.reshape(self.lifted_shape)

    def residual_norm(self, xt, observations):
        """|| A(Xt) - Y ||_F, the data misfit used for sign selection."""
        return float(np.linalg.norm(self.apply_forward(xt) - observations))

    def matrix_sparse(self):
        """Sparse matrix form acting on column-stacked Xt (CSR, complex)."""
        m = self.num_coeffs
        width = self.block_width
        n_sens, n_snap = self.observation_shape
        # row (i, l), column (l*width + j)*m + a holds g_i[j] * basis[i, a]
        i_idx, l_idx, j_idx, a_idx = np.meshgrid(
            np.arange(n_sens), np.arange(n_snap), np.arange(width), np.arange(m),
            indexing="ij")
        rows = (i_idx * n_snap + l_idx).ravel()
        cols = ((l_idx * width + j_idx) * m + a_idx).ravel()
        vals = (self.gmat[i_idx, j_idx] * self.basis[i_idx, a_idx]).ravel()
        shape = (n_sens * n_snap, m * n_snap * width)
        return sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()

    def materialize(self, budget_bytes=DEFAULT_PHI_BUDGET_BYTES):
        """Dense matrix form; raises :class:`MemoryBudgetError` above the budget."""
        rows = self.num_sensors * self.num_snapshots
        cols = self.num_coeffs * self.num_snapshots * self.block_width
        need = 16 * rows * cols
        if need > budget_bytes:
            raise MemoryBudgetError(
                f"dense matrix form needs {need} bytes (> budget {budget_bytes}); "
                "use apply_forward/apply_adjoint instead")
        return self.matrix_sparse().toarray()
