import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liftdoa.norms import (corollary_check, entrywise_l1, group_norms, norm_212,
                           nuclear_norm)


class TestNorm212:
    def test_zero(self):
        assert norm_212(np.zeros((3, 8)), num_bins=2, num_snapshots=2) == 0.0

    def test_all_ones_small(self):
        # m=2, N=2, L=1: column norms sqrt(2), two groups each sqrt(2+2)=2
        xt = np.ones((2, 4), dtype=complex)
        assert norm_212(xt, 2, 1) == pytest.approx(4.0)

    def test_single_group_equals_frobenius(self):
        # N=3, L=2: group 1 is columns {1, 4, 7, 10}
        rng = np.random.default_rng(0)
        xt = np.zeros((3, 12), dtype=complex)
        for col in (1, 4, 7, 10):
            xt[:, col] = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert norm_212(xt, 3, 2) == pytest.approx(np.linalg.norm(xt))

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            norm_212(np.ones((2, 10)), num_bins=4, num_snapshots=2)


def test_single_group_support_norm():
    rng = np.random.default_rng(5)
    xt = np.zeros((2, 8), dtype=complex)
    for col in (3, 7):
        xt[:, col] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    g = group_norms(xt, 4)
    assert g[3] == pytest.approx(np.linalg.norm(xt))
    assert np.all(g[[0, 1, 2]] == 0)


class TestCorollary:
    def test_rank_one_unit(self):
        rng = np.random.default_rng(1)
        u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        u /= np.linalg.norm(u)
        w /= np.linalg.norm(w)
        report = corollary_check(np.outer(u, w.conj()), num_bins=2, num_snapshots=2)
        assert report.nuclear == pytest.approx(1.0)
        assert report.entrywise_l1 >= 1.0 - 1e-12
        assert report.holds

    def test_zero_matrix_tight(self):
        report = corollary_check(np.zeros((2, 4)), 2, 1)
        assert report.nuclear == report.entrywise_l1 == report.group_212 == 0.0
        assert report.holds

    def test_random_sweep(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            m = rng.integers(1, 5)
            num_snapshots = rng.integers(1, 4)
            num_bins = rng.integers(1, 5)
            cols = 2 * num_snapshots * num_bins
            if cols > 24:
                continue
            xt = rng.standard_normal((m, cols)) + 1j * rng.standard_normal((m, cols))
            assert corollary_check(xt, num_bins, num_snapshots).holds

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            corollary_check(np.zeros((0, 0)), 1, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_norm_chain_property(m, num_snapshots, num_bins, seed):
    rng = np.random.default_rng(seed)
    cols = 2 * num_snapshots * num_bins
    xt = rng.standard_normal((m, cols)) + 1j * rng.standard_normal((m, cols))
    scale = np.sqrt(2 * m * num_snapshots)
    g = norm_212(xt, num_bins, num_snapshots)
    l1 = entrywise_l1(xt)
    nuc = nuclear_norm(xt)
    assert scale * g >= l1 * (1 - 1e-9)
    assert l1 >= nuc * (1 - 1e-9)
