import numpy as np
import numpy.testing as npt
import pytest

from liftdoa.errors import MemoryBudgetError
from liftdoa.lifting import (LiftedOperator, build_dictionary, build_grid,
                             lift_scene, snapshot_columns)
from liftdoa.model import (ArrayGeometry, CalibrationModel, SourceScene,
                           simulate, steering_derivative, steering_vector)

GEOM8 = ArrayGeometry(8, 0.5)


def random_lifted(op, rng):
    m, cols = op.lifted_shape
    return (rng.standard_normal((m, cols)) + 1j * rng.standard_normal((m, cols)))


class TestBuildGrid:
    def test_paper_grid(self):
        grid = build_grid(-90, 90, 1)
        assert grid.num_angles == 180
        assert grid.half_interval == pytest.approx(np.deg2rad(0.5))
        assert grid.angles_deg[0] == pytest.approx(-90.0)

    def test_coarse_and_fractional(self):
        assert build_grid(-90, 90, 3).num_angles == 60
        grid = build_grid(0, 10, 2.5)
        assert grid.num_angles == 4
        npt.assert_allclose(grid.angles_deg, [0, 2.5, 5, 7.5])

    def test_invalid(self):
        with pytest.raises(ValueError):
            build_grid(0, 10, -1)
        with pytest.raises(ValueError):
            build_grid(10, 0, 1)
        with pytest.raises(ValueError):
            build_grid(0, 1, 5)  # single point


class TestDictionary:
    def test_dimensions_paper(self):
        grid = build_grid(-90, 90, 1)
        dic = build_dictionary(GEOM8, grid)
        assert dic.combined.shape == (8, 360)

    def test_columns_match_generators(self):
        grid = build_grid(-30, 30, 10)
        dic = build_dictionary(GEOM8, grid)
        for i, ang in enumerate(grid.angles):
            npt.assert_allclose(dic.steering_block[:, i], steering_vector(GEOM8, ang))
            npt.assert_allclose(dic.derivative_block[:, i], steering_derivative(GEOM8, ang))

    def test_row_extraction(self):
        grid = build_grid(-30, 30, 10)
        g = build_dictionary(GEOM8, grid).combined
        npt.assert_array_equal(g[3], np.asarray(g)[3, :])


class TestLiftedOperator:
    def setup_method(self):
        self.cal = CalibrationModel.random(GEOM8, 3, seed=7)
        self.grid = build_grid(-60, 60, 10)  # N=12
        self.op = LiftedOperator(GEOM8, self.grid, self.cal, num_snapshots=4)

    def test_forward_matches_dense_model(self):
        rng = np.random.default_rng(0)
        n = self.grid.num_angles
        x = rng.standard_normal((2 * n, 4)) + 1j * rng.standard_normal((2 * n, 4))
        xt = lift_scene(self.cal.coefficients, x[:n], x[n:])
        g = build_dictionary(GEOM8, self.grid).combined
        expected = np.diag(self.cal.gains) @ g @ x
        npt.assert_allclose(self.op.apply_forward(xt), expected, atol=1e-11)

    def test_zero_and_linearity(self):
        rng = np.random.default_rng(1)
        zero = np.zeros(self.op.lifted_shape, dtype=complex)
        assert np.all(self.op.apply_forward(zero) == 0)
        x1, x2 = random_lifted(self.op, rng), random_lifted(self.op, rng)
        alpha = 2.7 - 0.3j
        lhs = self.op.apply_forward(alpha * x1 + x2)
        rhs = alpha * self.op.apply_forward(x1) + self.op.apply_forward(x2)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)

    def test_matrix_consistency(self):
        rng = np.random.default_rng(2)
        phi = self.op.materialize()
        for _ in range(20):
            xt = random_lifted(self.op, rng)
            via_phi = phi @ xt.T.reshape(-1)
            direct = self.op.apply_forward(xt).reshape(-1)  # row-major = vec(Y^T)
            assert np.linalg.norm(via_phi - direct) <= 1e-10 * np.linalg.norm(xt)

    def test_row_block_convention(self):
        # the i-th L-row-block of the matrix form acts as b_i^H Xt Gtil_i
        rng = np.random.default_rng(3)
        xt = random_lifted(self.op, rng)
        phi = self.op.materialize()
        out = phi @ xt.T.reshape(-1)
        n_snap = self.op.num_snapshots
        for i in range(self.op.num_sensors):
            b_i, g_i = self.op.sensor_factors(i)
            row = np.conj(b_i) @ xt  # b_i^H Xt
            per_block = snapshot_columns(row, self.op.block_width) @ g_i
            npt.assert_allclose(out[i * n_snap: (i + 1) * n_snap], per_block, atol=1e-11)

    def test_hand_kronecker_tiny(self):
        # M=2, m=1, N=2, L=1: row i is g_i^T kron b_i^H with b_i column i of basis^H,
        # so entry (j*m + a) = g_i[j] * basis[i, a]
        geom = ArrayGeometry(2, 0.5)
        basis = np.array([[1.0 + 0j], [0.0 + 1.0j]])
        cal = CalibrationModel(basis=basis, coefficients=np.array([1.0 + 0j]))
        grid = build_grid(-10, 10, 10)
        op = LiftedOperator(geom, grid, cal, num_snapshots=1, off_grid=False)
        phi = op.materialize()
        assert phi.shape == (2, 2)
        dic = build_dictionary(geom, grid)
        for i in range(2):
            b_i = np.conj(basis[i, :])  # column i of basis^H
            hand = np.kron(dic.steering_block[i, :], np.conj(b_i))
            npt.assert_allclose(phi[i], hand, atol=1e-14)

    def test_adjoint_identity(self):
        cal = CalibrationModel.random(ArrayGeometry(4, 0.5), 2, seed=5)
        grid = build_grid(-45, 45, 30)  # N=3
        op = LiftedOperator(ArrayGeometry(4, 0.5), grid, cal, num_snapshots=2)
        rng = np.random.default_rng(4)
        for _ in range(50):
            xt = random_lifted(op, rng)
            r = rng.standard_normal(op.observation_shape) \
                + 1j * rng.standard_normal(op.observation_shape)
            lhs = np.vdot(r, op.apply_forward(xt))
            rhs = np.vdot(op.apply_adjoint(r), xt)
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)
        assert np.all(op.apply_adjoint(np.zeros(op.observation_shape)) == 0)

    def test_normal_operator_psd(self):
        phi = self.op.materialize()
        eigvals = np.linalg.eigvalsh(phi.conj().T @ phi)
        assert eigvals.min() >= -1e-10 * max(eigvals.max(), 1.0)

    def test_memory_budget(self):
        cal = CalibrationModel.random(GEOM8, 4, seed=1)
        grid = build_grid(-90, 90, 1)
        op = LiftedOperator(GEOM8, grid, cal, num_snapshots=100)
        # paper scale: ML x 2mLN = 800 x 144000 (1.8 GB dense complex)
        assert op.matrix_sparse().shape == (800, 144_000)
        with pytest.raises(MemoryBudgetError):
            op.materialize(budget_bytes=1 << 30)

    def test_snapshot_permutation_permutes_columns(self):
        rng = np.random.default_rng(6)
        xt = random_lifted(self.op, rng)
        perm = np.array([2, 0, 3, 1])
        blocks = xt.reshape(3, 4, self.op.block_width)
        xt_perm = blocks[:, perm, :].reshape(self.op.lifted_shape)
        npt.assert_allclose(self.op.apply_forward(xt_perm),
                            self.op.apply_forward(xt)[:, perm], atol=1e-12)

    def test_rank_one_consistency_with_simulation(self):
        scene = SourceScene(true_doas_deg=[-12.3, 31.0], num_snapshots=4, snr_db=np.inf)
        snaps, truth = simulate(GEOM8, self.cal, scene, self.grid, seed=11)
        xt = lift_scene(self.cal.coefficients, truth.sbar,
                        truth.beta[:, None] * truth.sbar)
        out = self.op.apply_forward(xt)
        rel = np.linalg.norm(out - snaps.observations) / np.linalg.norm(snaps.observations)
        assert rel <= 1e-10
