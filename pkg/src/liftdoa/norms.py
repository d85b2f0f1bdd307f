"""Matrix norms used by the recovery program and its optimality diagnostics.

The objective norm treats the lifted matrix as 2L column blocks of width N
and groups the k-th column of every block together (one group per grid bin):

    ||Xt||_{2,1,2} = sum_i || [ ||Xt_{:,i}||_2, ||Xt_{:,i+N}||_2, ... ] ||_2.

It upper-bounds the entrywise l1 norm (after scaling by sqrt(2mL)) which in
turn upper-bounds the nuclear norm, so minimizing it alone still promotes
the low-rank joint block-sparse structure.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["NormReport", "group_norms", "norm_212", "nuclear_norm", "entrywise_l1",
           "corollary_check"]


def group_norms(xt, num_bins):
    """Per-bin Frobenius norms: columns {i, i+N, i+2N, ...} form group i."""
    xt = np.asarray(xt)
    if xt.shape[1] % num_bins:
        raise ValueError("column count is not a multiple of the bin count")
    blocks = xt.reshape(xt.shape[0], -1, num_bins)  # (m, n_blocks, N)
    return np.sqrt(np.sum(np.abs(blocks) ** 2, axis=(0, 1)))


def norm_212(xt, num_bins, num_snapshots):
    """Two-layer group norm of an m x 2LN lifted matrix."""
    xt = np.asarray(xt)
    if xt.shape[1] != 2 * num_snapshots * num_bins:
        raise ValueError("lifted matrix must have 2*L*N columns")
    return float(np.sum(group_norms(xt, num_bins)))


def nuclear_norm(xt):
    return float(np.sum(np.linalg.svd(np.asarray(xt), compute_uv=False)))


def entrywise_l1(xt):
    return float(np.sum(np.abs(xt)))


@dataclass(frozen=True)
class NormReport:
    """Norm chain sqrt(2mL) * group <= ... evaluated on one matrix."""

    nuclear: float
    entrywise_l1: float
    group_212: float
    column_norms: np.ndarray
    scale: float            # sqrt(2 m L)
    violation: float        # worst relative slack violation, <= 0 when the chain holds

    @property
    def holds(self):
        return self.violation <= 1e-9


def corollary_check(xt, num_bins, num_snapshots):
    """Evaluate the norm chain on ``xt`` and report any relative violation.

    Checks ``sqrt(2mL) * ||Xt||_{2,1,2} >= ||Xt||_1 >= ||Xt||_*`` with
    relative slack; ``violation`` is the larger of the two normalized gaps'
    negatives, so a positive value flags a broken inequality.
    """
    xt = np.asarray(xt, dtype=complex)
    if xt.size == 0:
        raise ValueError("empty matrix")
    m = xt.shape[0]
    v = np.linalg.norm(xt, axis=0)
    g212 = norm_212(xt, num_bins, num_snapshots)
    l1 = entrywise_l1(xt)
    nuc = nuclear_norm(xt)
    scale = np.sqrt(2.0 * m * num_snapshots)
    ref = max(l1, nuc, scale * g212, 1e-300)
    violation = max(l1 - scale * g212, nuc - l1) / ref
    return NormReport(nuclear=nuc, entrywise_l1=l1, group_212=g212,
                      column_norms=v, scale=float(scale), violation=float(violation))
