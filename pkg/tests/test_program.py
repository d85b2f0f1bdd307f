import numpy as np
import numpy.testing as npt
import pytest
from scipy.stats import chi2

from liftdoa.lifting import LiftedOperator, build_grid, lift_scene
from liftdoa.model import ArrayGeometry, CalibrationModel, SourceScene, simulate
from liftdoa.norms import norm_212
from liftdoa.program import (build_program, cone_violations, dump_program,
                             extract_lifted, load_program, pack_feasible_point,
                             select_eta)
from liftdoa.solver import SolverSettings, solve

GEOM4 = ArrayGeometry(4, 0.5)
GEOM8 = ArrayGeometry(8, 0.5)


def small_setup(m=2, step=15.0, num_snapshots=2, seed=0, geom=GEOM4, doas=(4.0,),
                snr_db=20.0):
    cal = CalibrationModel.random(geom, m, seed=seed)
    grid = build_grid(-45, 45, step)
    scene = SourceScene(true_doas_deg=np.asarray(doas), num_snapshots=num_snapshots,
                        snr_db=snr_db)
    snaps, truth = simulate(geom, cal, scene, grid, seed=seed)
    op = LiftedOperator(geom, grid, cal, num_snapshots=num_snapshots)
    return op, snaps, truth, grid, cal


class TestSelectEta:
    def test_monotone_in_confidence(self):
        vals = [select_eta(1.0, 8, 10, c) for c in (0.5, 0.9, 0.99, 0.999)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_zero_noise(self):
        assert select_eta(0.0, 8, 10, 0.95) == 0.0

    def test_paper_scale_quantile_against_monte_carlo(self):
        eta = select_eta(1.0, 8, 100, 0.95)
        assert eta ** 2 == pytest.approx(0.5 * chi2.ppf(0.95, 1600))
        # independent oracle: 1e5 draws of the actual M x L complex noise,
        # accumulated in chunks to bound memory
        rng = np.random.default_rng(0)
        norms = np.empty(100_000)
        for i in range(100):
            block = rng.standard_normal((1000, 1600)) * np.sqrt(0.5)
            norms[i * 1000:(i + 1) * 1000] = np.sqrt(np.sum(block ** 2, axis=1))
        mc = np.quantile(norms, 0.95)
        assert eta == pytest.approx(mc, rel=0.01)

    def test_invalid_confidence(self):
        for bad in (0.0, 1.0, -1.0, 2.0):
            with pytest.raises(ValueError):
                select_eta(1.0, 4, 2, bad)


class TestBuildProgram:
    def test_documented_sizes(self):
        # M=4, m=2, N=6, L=2 (grid -45:15:45): variables 143, cone layout as
        # documented (group cones bind the column-norm variables, dim 2L+1)
        op, snaps, _, grid, _ = small_setup()
        assert grid.num_angles == 6
        prog = build_program(op, snaps, eta=1.0, radius=grid.half_interval)
        assert prog.c.size == 2 * (2 * 2 * 2 * 6) + 24 + 6 + 1 + 16  # 143
        cones = list(prog.cones)
        assert cones[0] == ("zero", 16)
        assert cones[1] == ("nonneg", 24 + 12 + 1)
        assert cones[2] == ("soc", 17)            # residual ball
        assert cones[3:3 + 24] == [("soc", 5)] * 24   # column cones
        assert cones[3 + 24:] == [("soc", 5)] * 6     # per-bin group cones over v
        assert sum(d for _, d in cones) == prog.b_eq.size

    def test_objective_is_q(self):
        op, snaps, _, grid, _ = small_setup()
        prog = build_program(op, snaps, eta=1.0, radius=grid.half_interval)
        expected = np.zeros(prog.c.size)
        expected[prog.var_map.q.start] = 1.0
        npt.assert_array_equal(prog.c, expected)

    def test_zero_solution_when_eta_dominates(self):
        op, snaps, _, grid, _ = small_setup()
        eta = 2.0 * np.linalg.norm(snaps.observations)
        prog = build_program(op, snaps, eta=eta, radius=grid.half_interval)
        assert prog.zero_candidate_feasible
        sol = solve(prog)
        assert sol.status == "optimal"
        assert sol.primal_objective == pytest.approx(0.0, abs=1e-6)
        assert np.linalg.norm(extract_lifted(prog, sol.primal)) <= 1e-5

    def test_validation_errors(self):
        op, snaps, _, grid, _ = small_setup()
        with pytest.raises(ValueError):
            build_program(op, snaps, eta=0.0, radius=grid.half_interval)
        with pytest.raises(ValueError):
            build_program(op, snaps, eta=1.0, radius=-1.0)
        with pytest.raises(ValueError):
            build_program(op, snaps.observations[:2], eta=1.0, radius=0.1)

    def test_true_point_is_feasible(self):
        op, snaps, truth, grid, cal = small_setup(snr_db=30.0)
        xt = lift_scene(cal.coefficients, truth.sbar, truth.beta[:, None] * truth.sbar)
        resid = np.linalg.norm(op.apply_forward(xt) - snaps.observations)
        prog = build_program(op, snaps, eta=resid * 1.001, radius=grid.half_interval)
        x = pack_feasible_point(prog, op, snaps.observations, xt, margin=1e-9)
        worst = cone_violations(prog, x)
        assert worst["zero"] <= 1e-9
        assert worst["nonneg"] <= 1e-9
        assert worst["soc"] <= 1e-9

    def test_epigraph_correctness(self):
        # exactly feasible points obey the epigraph inequality to 1e-8 ...
        rng = np.random.default_rng(3)
        op, snaps, _, grid, _ = small_setup(seed=3)
        for _ in range(5):
            xt = 0.1 * (rng.standard_normal(op.lifted_shape)
                        + 1j * rng.standard_normal(op.lifted_shape))
            resid = np.linalg.norm(op.apply_forward(xt) - snaps.observations)
            prog = build_program(op, snaps, eta=resid + 1e-3, radius=10.0)
            x = pack_feasible_point(prog, op, snaps.observations, xt)
            q = float(x[prog.var_map.q.start])
            assert norm_212(xt, grid.num_angles, op.num_snapshots) <= q + 1e-8
        # ... and solver outputs obey it to within the feasibility tolerance
        prog = build_program(op, snaps, eta=0.5, radius=grid.half_interval)
        sol = solve(prog)
        assert sol.status == "optimal"
        xt = extract_lifted(prog, sol.primal)
        q = float(sol.primal[prog.var_map.q.start])
        tol = 10 * SolverSettings().feas_tol * (1.0 + abs(q))
        assert norm_212(xt, grid.num_angles, op.num_snapshots) <= q + tol

    def test_feasible_point_round_trip(self):
        # random (Xt, v)-style points satisfying the model constraints map to
        # feasible program points, and solver outputs decode consistently
        rng = np.random.default_rng(4)
        op, snaps, _, grid, _ = small_setup(seed=5)
        for _ in range(5):
            xt = 0.05 * (rng.standard_normal(op.lifted_shape)
                         + 1j * rng.standard_normal(op.lifted_shape))
            # enforce the off-grid coupling |p| <= r |s| per column pair
            blocks = xt.reshape(op.num_coeffs, op.num_snapshots, 2, grid.num_angles)
            blocks[:, :, 1, :] = grid.half_interval * 0.9 * blocks[:, :, 0, :]
            resid = np.linalg.norm(op.apply_forward(xt) - snaps.observations)
            prog = build_program(op, snaps, eta=resid + 1e-6, radius=grid.half_interval)
            x = pack_feasible_point(prog, op, snaps.observations, xt, margin=1e-9)
            worst = cone_violations(prog, x)
            assert max(worst.values()) <= 1e-8
            npt.assert_allclose(extract_lifted(prog, x), xt, atol=1e-12)

    def test_objective_invariant_to_bin_permutation(self):
        # permuting grid bins together with dictionary columns relabels the
        # groups only; the optimum is unchanged
        op, snaps, _, grid, cal = small_setup(seed=6)
        prog = build_program(op, snaps, eta=0.8, radius=grid.half_interval)
        base = solve(prog).primal_objective

        perm = np.array([3, 0, 5, 1, 4, 2])
        from liftdoa.lifting import Dictionary, build_dictionary
        dic = build_dictionary(op.geometry, grid)
        permuted = Dictionary(steering_block=dic.steering_block[:, perm],
                              derivative_block=dic.derivative_block[:, perm])
        op_perm = LiftedOperator(op.geometry, grid, cal, op.num_snapshots,
                                 dictionary=permuted)
        prog_perm = build_program(op_perm, snaps, eta=0.8, radius=grid.half_interval)
        assert solve(prog_perm).primal_objective == pytest.approx(base, abs=1e-6)

    def test_coupling_zeroes_derivative_blocks_as_radius_shrinks(self):
        op, snaps, _, grid, _ = small_setup(seed=7, snr_db=15.0)
        prog = build_program(op, snaps, eta=0.6, radius=1e-9)
        sol = solve(prog)
        assert sol.status == "optimal"
        xt = extract_lifted(prog, sol.primal)
        blocks = np.abs(xt.reshape(op.num_coeffs, op.num_snapshots, 2, grid.num_angles))
        p_mass = float(np.sum(blocks[:, :, 1, :] ** 2))
        s_mass = float(np.sum(blocks[:, :, 0, :] ** 2))
        assert p_mass <= 1e-12 * max(s_mass, 1.0)

    def test_corollary_on_solver_output(self):
        from liftdoa.norms import corollary_check
        op, snaps, _, grid, _ = small_setup(seed=8)
        prog = build_program(op, snaps, eta=0.7, radius=grid.half_interval)
        sol = solve(prog)
        xt = extract_lifted(prog, sol.primal)
        assert corollary_check(xt, grid.num_angles, op.num_snapshots).holds


class TestDumpLoad:
    def test_round_trip(self, tmp_path):
        op, snaps, _, grid, _ = small_setup(seed=9)
        prog = build_program(op, snaps, eta=0.9, radius=grid.half_interval)
        path = tmp_path / "program.socp"
        dump_program(prog, path)
        loaded = load_program(path)
        npt.assert_array_equal(loaded.c, prog.c)
        npt.assert_array_equal(loaded.b_eq, prog.b_eq)
        assert (loaded.A_eq != prog.A_eq).nnz == 0
        assert loaded.cones == prog.cones
        assert loaded.var_map == prog.var_map
        assert loaded.eta == prog.eta
        # solving the loaded program reproduces the original solution
        s1, s2 = solve(prog), solve(loaded)
        assert s1.primal_objective == pytest.approx(s2.primal_objective, abs=1e-9)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "bogus.socp"
        path.write_text("not a program\n")
        with pytest.raises(ValueError):
            load_program(path)
