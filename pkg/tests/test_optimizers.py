"""
=============================================
🧪 优化器测试
=============================================
"""

from dataclasses import replace

import numpy as np
import pytest

from app.exceptions import DimensionError, IndefinitenessError
from app.optimizers import (
    OptConfig,
    RayleighSumProblem,
    golden_section,
    minimize_lambda_max,
    minimize_over_omega,
    minimize_rayleigh_sum,
    omega_grid,
)
from app.oracle import sphere_sample_minimum


class TestRayleighSum:
    """Rayleigh 商之和测试"""

    def test_two_dimensional(self, fast_opts):
        """测试 H1 = diag(0,1), H2 = diag(1,0), H3 = I 的最小值 3/4"""
        problem = RayleighSumProblem(np.diag([0.0, 1.0]), np.diag([1.0, 0.0]), np.eye(2))
        result = minimize_rayleigh_sum(problem, fast_opts)
        assert result.value == pytest.approx(0.75, abs=1e-6)
        assert np.linalg.norm(result.minimizer) == pytest.approx(1.0)
        assert result.heuristic

    def test_not_worse_than_sampling(self, fast_opts):
        """测试结果不劣于球面随机采样"""
        rng = np.random.default_rng(3)
        G = rng.standard_normal((3, 3))
        F = rng.standard_normal((3, 2))
        problem = RayleighSumProblem(G @ G.T, np.diag([2.0, 1.0, 0.5]), F @ F.T + 0.1 * np.eye(3))
        sampled, _ = sphere_sample_minimum(problem, 500, seed=0)
        opts = replace(fast_opts, multistarts=10, probes=256)
        assert minimize_rayleigh_sum(problem, opts).value <= sampled + 1e-9

    def test_zero_over_zero(self, fast_opts):
        """测试分母核上的 0/0 候选"""
        problem = RayleighSumProblem(np.diag([1.0, 0.0]), np.diag([1.0, 0.0]), np.diag([1.0, 0.0]))
        result = minimize_rayleigh_sum(problem, fast_opts)
        assert result.value == pytest.approx(0.0, abs=1e-10)

    def test_exclude_kernel(self):
        problem = RayleighSumProblem(np.eye(2), np.diag([1.0, 0.0]), np.diag([1.0, 0.0]), exclude_kernel=True)
        assert problem.objective(np.array([0.0, 1.0])) == float("inf")

    def test_missing_denominator(self):
        with pytest.raises(DimensionError):
            RayleighSumProblem(np.eye(2), np.eye(2))


class TestLambdaMax:
    """λ_max 凸最小化测试"""

    def test_one_parameter(self, fast_opts):
        """λ_max(diag(1−t, t−1)) 在 t = 1 处取最小值 0"""
        G = np.diag([1.0, -1.0])
        H = np.diag([-1.0, 1.0])
        result = minimize_lambda_max(G, [H], fast_opts)
        assert result.value == pytest.approx(0.0, abs=1e-6)
        assert result.minimizer[0] == pytest.approx(1.0, abs=1e-6)

    def test_two_parameters(self, fast_opts):
        G = np.diag([2.0, 0.0, 0.0])
        H1 = np.diag([-1.0, 1.0, 0.0])
        H2 = np.diag([-1.0, 0.0, 1.0])
        result = minimize_lambda_max(G, [H1, H2], fast_opts)
        assert result.value == pytest.approx(2.0 / 3.0, abs=1e-5)

    def test_definite_direction_rejected(self):
        with pytest.raises(IndefinitenessError):
            minimize_lambda_max(np.eye(2), [np.eye(2)])


class TestOmegaSearch:
    """ω 外层最小化测试"""

    def test_golden_section(self):
        x, fx, _, converged = golden_section(lambda w: (w - 0.3) ** 2, -1.0, 1.0, 1e-10)
        assert x == pytest.approx(0.3, abs=1e-6)
        assert converged

    def test_grid_symmetric(self, fast_opts):
        grid = omega_grid(fast_opts)
        assert grid.size == 2 * fast_opts.omega_grid_points + 1
        assert np.allclose(grid, -grid[::-1])

    def test_minimize_over_omega(self, fast_opts):
        result = minimize_over_omega(lambda w: (w - 2.5) ** 2 + 1.0, seeds=[], opts=fast_opts)
        assert result.minimizer == pytest.approx(2.5, abs=1e-5)
        assert result.value == pytest.approx(1.0, abs=1e-9)

    def test_non_finite_values_ignored(self, fast_opts):
        result = minimize_over_omega(lambda w: float("nan") if w < 0 else (w - 1.0) ** 2, [1.0], fast_opts)
        assert result.value == pytest.approx(0.0, abs=1e-12)

    def test_threads(self, fast_opts):
        result = minimize_over_omega(lambda w: abs(w + 1.0), [], replace(fast_opts, threads=4), reentrant=True)
        assert result.minimizer == pytest.approx(-1.0, abs=1e-5)

    def test_refine_objective(self, fast_opts):
        """测试网格阶段用 f，黄金分割细化阶段改用 refine_f"""
        grid_calls: list[float] = []
        refine_calls: list[float] = []

        def f(w: float) -> float:
            grid_calls.append(w)
            return (w - 2.5) ** 2 + 1.0

        def refine_f(w: float) -> float:
            refine_calls.append(w)
            return (w - 2.5) ** 2 + 1.0

        result = minimize_over_omega(f, [], fast_opts, refine_f=refine_f)
        assert len(grid_calls) == 2 * fast_opts.omega_grid_points + 1
        assert grid_calls == sorted(grid_calls)
        assert refine_calls
        assert result.minimizer == pytest.approx(2.5, abs=1e-5)
