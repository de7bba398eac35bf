import numpy as np
import pytest
import scipy.linalg

from repcov import (
    AdmmSettings,
    MaxItersExceeded,
    SymMatrix,
    between_sample,
    default_delta,
    kkt_residual,
    objective_value,
    psd_floor_projection,
    soft_threshold_offdiag,
    solve,
)
from repcov.simulate import CovTemplate, ModelName, StudyConfig, generate, model_templates

from _oracles import subgradient_oracle, subgradient_objective


def random_sym(rng, p, shift=0.0):
    a = rng.standard_normal((p, p))
    return SymMatrix((a + a.T) / 2 + shift * np.eye(p))


class TestSoftThreshold:
    def test_operator_values(self):
        a = SymMatrix([[2.0, 0.8], [0.8, 1.0]])
        out = soft_threshold_offdiag(a, 0.5).values
        np.testing.assert_allclose(out, [[2.0, 0.3], [0.3, 1.0]])
        out = soft_threshold_offdiag(SymMatrix([[2.0, -0.3], [-0.3, 1.0]]), 0.5).values
        np.testing.assert_allclose(out, [[2.0, 0.0], [0.0, 1.0]])

    def test_zero_threshold_is_identity(self, rng):
        a = random_sym(rng, 6)
        np.testing.assert_array_equal(soft_threshold_offdiag(a, 0.0).values, a.values)

    def test_diagonal_exempt(self):
        out = soft_threshold_offdiag(SymMatrix([[2.0, 0.1], [0.1, -3.0]]), 10.0).values
        np.testing.assert_allclose(np.diagonal(out), [2.0, -3.0])
        assert out[0, 1] == 0.0

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            soft_threshold_offdiag(SymMatrix(np.eye(2)), -0.1)


class TestPsdFloorProjection:
    def test_diagonal_clamp(self):
        out = psd_floor_projection(SymMatrix(np.diag([2.0, -1.0])), 0.1).values
        np.testing.assert_allclose(out, np.diag([2.0, 0.1]), atol=1e-14)

    def test_feasible_input_is_fixed_point(self, rng):
        a = rng.standard_normal((5, 5))
        spd = SymMatrix(a @ a.T + np.eye(5))
        out = psd_floor_projection(spd, 1e-6).values
        np.testing.assert_allclose(out, spd.values, atol=1e-12)

    def test_matches_independent_eigenbasis_clamp(self, rng):
        a = random_sym(rng, 6)
        delta = 0.05
        # independent route: scipy's plain 'ev' driver, clamp, rebuild
        w, v = scipy.linalg.eigh(a.values, driver="ev")
        oracle = v @ np.diag(np.maximum(w, delta)) @ v.T
        ours = psd_floor_projection(a, delta).values
        np.testing.assert_allclose(ours, oracle, atol=1e-8)
        assert np.linalg.eigvalsh(ours)[0] >= delta - 1e-10


class TestSolve:
    def test_identity_fast_path(self):
        res = solve(SymMatrix(np.eye(4)), AdmmSettings(lam=0.5, delta=0.01))
        assert res.used_fast_path
        assert res.iterations == 0
        np.testing.assert_array_equal(res.solution.values, np.eye(4))
        np.testing.assert_array_equal(res.sparse_solution.values, np.eye(4))

    def test_zero_penalty_is_projection(self, rng):
        b = random_sym(rng, 7)
        delta = 0.02
        res = solve(b, AdmmSettings(lam=0.0, delta=delta))
        proj = psd_floor_projection(b, delta)
        np.testing.assert_allclose(res.solution.values, proj.values, atol=1e-6)

    def test_against_subgradient_oracle_small(self, rng):
        b = random_sym(rng, 8, shift=0.3)
        lam, delta = 0.25, 1e-3
        res = solve(b, AdmmSettings(lam=lam, delta=delta))
        oracle_x, oracle_obj, gap = subgradient_oracle(b.values, lam, delta, iters=60_000)
        ours = objective_value(b, res.solution, lam)
        assert ours <= oracle_obj + 1e-6 * (1.0 + abs(oracle_obj))
        assert abs(ours - oracle_obj) <= gap + 1e-6 * (1.0 + abs(oracle_obj))

    @pytest.mark.slow
    def test_between_draw_p20_against_long_oracle(self):
        config = StudyConfig(
            model=ModelName.M1, p=20, m=30, group_sizes=(3,) * 30, replicates=1, seed=77
        )
        tb, te = model_templates(ModelName.M1, 20)
        data = generate(config, tb, te)
        b = between_sample(data)
        lam, delta = 0.2, 1e-4
        res = solve(b, AdmmSettings(lam=lam, delta=delta))
        ours = objective_value(b, res.solution, lam)
        oracle_x, oracle_obj, gap = subgradient_oracle(b.values, lam, delta, iters=400_000)
        assert ours <= oracle_obj + 1e-6 * (1.0 + abs(oracle_obj))
        assert abs(ours - oracle_obj) <= gap + 1e-6 * (1.0 + abs(oracle_obj))
        assert kkt_residual(b, res.solution, lam, delta) <= 1e-6

    def test_stopping_criteria_hold_at_exit(self, rng):
        b = random_sym(rng, 10)
        settings = AdmmSettings(lam=0.15, delta=1e-3)
        res = solve(b, settings, use_fast_path=False)
        p = 10
        eps_pri = p * settings.eps_abs + settings.eps_rel * max(
            np.linalg.norm(res.solution.values), np.linalg.norm(res.sparse_solution.values)
        )
        assert res.primal_residual <= eps_pri
        assert res.dual_residual <= p * settings.eps_abs + settings.eps_rel * np.linalg.norm(
            res.dual_variable
        )

    def test_floor_always_met(self, rng):
        for trial in range(20):
            p = int(rng.integers(3, 12))
            b = random_sym(rng, p, shift=float(rng.normal()))
            delta = float(10 ** rng.uniform(-5, -1))
            lam = float(rng.uniform(0, 0.6))
            res = solve(b, AdmmSettings(lam=lam, delta=delta))
            assert res.min_eigenvalue >= delta - 1e-8

    def test_fast_path_agrees_with_full_admm(self, rng):
        b = random_sym(rng, 6, shift=2.5)
        settings = AdmmSettings(lam=0.4, delta=1e-4)
        fast = solve(b, settings)
        assert fast.used_fast_path
        full = solve(b, settings, use_fast_path=False)
        assert not full.used_fast_path
        diff = np.linalg.norm(fast.solution.values - full.solution.values)
        assert diff <= 1e-6

    def test_sparsity_nonincreasing_in_penalty(self, rng):
        b = random_sym(rng, 12, shift=0.5)
        settings = AdmmSettings(delta=1e-3)
        grid = np.geomspace(1.5, 0.01, 12)
        counts = []
        for lam in grid:
            res = solve(b, AdmmSettings(lam=float(lam), delta=1e-3))
            nz = np.abs(res.sparse_solution.values) > 1e-12
            np.fill_diagonal(nz, False)
            counts.append(int(nz.sum()))
        assert all(a <= b_ for a, b_ in zip(counts, counts[1:]))

    def test_max_iters_exceeded_carries_iterate(self, rng):
        b = random_sym(rng, 8)
        with pytest.raises(MaxItersExceeded) as err:
            solve(b, AdmmSettings(lam=0.2, delta=1e-3, max_iters=2), use_fast_path=False)
        res = err.value.result
        assert res.iterations == 2
        assert res.primal_residual > 0
        assert res.solution.dim == 8

    def test_default_delta_rule(self):
        assert default_delta(SymMatrix(np.diag([0.2, 0.4]))) == pytest.approx(1e-4)
        assert default_delta(SymMatrix(np.diag([3.0, 9.0]))) == pytest.approx(9e-4)


class TestKktResidual:
    def test_fast_path_solution_certified(self, rng):
        b = random_sym(rng, 6, shift=2.5)
        res = solve(b, AdmmSettings(lam=0.4, delta=1e-4))
        assert res.used_fast_path
        assert kkt_residual(b, res.solution, 0.4, 1e-4) <= 1e-8

    def test_projection_certified(self, rng):
        b = random_sym(rng, 6)
        delta = 0.05
        proj = psd_floor_projection(b, delta)
        assert kkt_residual(b, proj, 0.0, delta) <= 1e-8

    def test_perturbation_detected(self, rng):
        b = random_sym(rng, 6, shift=2.5)
        res = solve(b, AdmmSettings(lam=0.4, delta=1e-4))
        sol = res.solution.values.copy()
        # nudge one surviving (nonzero) off-diagonal
        iu = np.triu_indices(6, 1)
        alive = [k for k in range(len(iu[0])) if abs(sol[iu[0][k], iu[1][k]]) > 1e-6]
        i, j = iu[0][alive[0]], iu[1][alive[0]]
        sol[i, j] += 0.1
        sol[j, i] += 0.1
        assert kkt_residual(b, SymMatrix(sol), 0.4, 1e-4) >= 0.05

    def test_admm_solutions_certified(self, rng):
        for trial in range(10):
            b = random_sym(rng, 8, shift=0.2)
            lam = float(rng.uniform(0.05, 0.5))
            res = solve(b, AdmmSettings(lam=lam, delta=1e-3))
            assert kkt_residual(b, res.solution, lam, 1e-3) <= 1e-6
