"""
=============================================
🧪 纯虚特征值距离测试
=============================================
"""

import numpy as np
import pytest

from app.distance_im import (
    _sd_full_value_grad,
    _SdOperators,
    build_omega_matrices,
    dist_im,
    dist_im_full,
    dist_im_jr,
    lambda_set,
    omega_objective,
    sd_display_value,
    sd_display_vector,
    verify_im_witness,
)
from app.exceptions import NotRobustlyStableError, OmegaInLambdaError, ParameterError
from app.models import BoundKind, Branch, Scope, SetTag
from app.oracle import grid_omega_oracle
from app.system import PerturbationTriple, random_system, validate


class TestLambdaSet:
    """Λ = {ω : det(iωE − J) = 0} 测试"""

    def test_rotation(self, rotation_system):
        omegas, everywhere = lambda_set(rotation_system)
        assert not everywhere
        assert np.allclose(omegas, [-1.0, 1.0])

    def test_no_finite_eigenvalues(self, parent_system):
        omegas, everywhere = lambda_set(parent_system)
        assert omegas.size == 0
        assert not everywhere

    def test_singular_pencil(self, singular_system):
        _, everywhere = lambda_set(singular_system)
        assert everywhere


class TestOmegaMatrices:
    """逐 ω 块矩阵测试"""

    def test_block_structure(self):
        sys = validate(np.eye(2), np.zeros((2, 2)), np.eye(2))
        mats = build_omega_matrices(sys, 1.0)
        assert np.allclose(mats.M, -1j * np.eye(2))
        for H in (mats.H1_tilde, mats.H2_tilde, mats.G1, mats.G2, mats.G, mats.H1, mats.H2):
            assert np.allclose(H, H.conj().T)
        assert np.allclose(mats.H2_tilde, -1.0 * mats.H1_tilde)
        assert np.linalg.eigvalsh(mats.G1).min() > 0

    def test_feasibility_forms_relation(self, rotation_system):
        """测试 H̃2 = −ω·H̃1 对一般 ω 成立"""
        mats = build_omega_matrices(rotation_system, 0.4)
        assert np.allclose(mats.H2_tilde, -0.4 * mats.H1_tilde)

    def test_omega_in_lambda(self, rotation_system):
        with pytest.raises(OmegaInLambdaError) as exc_info:
            build_omega_matrices(rotation_system, 1.0)
        assert exc_info.value.omega == 1.0


class TestOmegaObjective:
    """逐 ω 目标测试"""

    def test_si_values(self, rotation_system, fast_opts):
        assert omega_objective(rotation_system, SetTag.SI_JR, 1.0, fast_opts) == pytest.approx(1.0)
        assert omega_objective(rotation_system, SetTag.SI_JR, 0.0, fast_opts) == pytest.approx(2.0)
        assert omega_objective(rotation_system, SetTag.SI, 0.0, fast_opts) == pytest.approx(2.0)

    def test_full_not_above_jr(self, parent_system, fast_opts):
        """测试完整扰动的逐 ω 值不超过 (J, R) 部分扰动"""
        for w in (0.0, 0.5, 2.0):
            full = omega_objective(parent_system, SetTag.SI, w, fast_opts)
            jr = omega_objective(parent_system, SetTag.SI_JR, w, fast_opts)
            assert full <= jr + 1e-12

    def test_decreasing_not_below_indefinite(self, rotation_system, fast_opts):
        for w in (0.0, 1.0, 3.0):
            sd = omega_objective(rotation_system, SetTag.SD_JR, w, fast_opts)
            si = omega_objective(rotation_system, SetTag.SI_JR, w, fast_opts)
            assert sd >= si - 1e-9


class TestDistImJR:
    """(J, R) 部分扰动测试"""

    def test_si_rotation(self, rotation_system, fast_opts):
        report = dist_im_jr(rotation_system, SetTag.SI, fast_opts)
        assert report.set_tag == SetTag.SI_JR
        assert report.value == pytest.approx(1.0, rel=1e-6)
        assert report.bound_kind == BoundKind.EXACT
        assert abs(report.omega_star) == pytest.approx(1.0, rel=1e-6)
        assert report.branch == Branch.LAMBDA
        assert report.witness_verified and report.tight
        assert np.allclose(report.witness.dE, 0)

    def test_sd_rotation(self, rotation_system, fast_opts):
        report = dist_im_jr(rotation_system, SetTag.SD, fast_opts)
        assert report.value == pytest.approx(1.0, rel=1e-6)
        assert report.bound_kind == BoundKind.EXACT
        assert report.heuristic
        assert report.witness_verified
        assert np.linalg.eigvalsh(report.witness.dR).max() <= 1e-10

    def test_sandwich(self, parent_system, fast_opts):
        """测试 S_d ≥ S_i"""
        sd = dist_im_jr(parent_system, SetTag.SD_JR, fast_opts)
        si = dist_im_jr(parent_system, SetTag.SI_JR, fast_opts)
        assert sd.value >= si.value * (1 - 1e-6)

    def test_rotation_matches_grid(self, rotation_system, fast_opts):
        """测试两个集合的值与稠密 ω 网格的预言机一致"""
        grid = (-3.0, 3.0, 121)
        for tag, kind in ((SetTag.SI, "im_jr_si"), (SetTag.SD, "im_jr_sd")):
            oracle_value = grid_omega_oracle(rotation_system, kind, grid, fast_opts)
            assert oracle_value == pytest.approx(1.0, rel=1e-6)
            report = dist_im_jr(rotation_system, tag, fast_opts)
            assert report.value == pytest.approx(oracle_value, rel=1e-6)

    def test_requires_stability(self, index_two_system, fast_opts):
        with pytest.raises(NotRobustlyStableError) as exc_info:
            dist_im_jr(index_two_system, SetTag.SI, fast_opts)
        assert exc_info.value.failed == ["cond_b"]


class TestDistImFull:
    """完整扰动测试"""

    def test_si_rotation(self, rotation_system, fast_opts):
        report = dist_im_full(rotation_system, SetTag.SI, opts=fast_opts)
        assert report.value == pytest.approx(1.0, rel=1e-6)
        # 见证保持半正定性且范数达到下界
        assert report.bound_kind == BoundKind.EXACT
        assert report.tight

    def test_sd_rotation(self, rotation_system, fast_opts):
        report = dist_im_full(rotation_system, SetTag.SD, opts=fast_opts)
        assert report.value == pytest.approx(1.0, rel=1e-6)
        assert report.scope == Scope.FULL

    def test_full_not_above_jr(self, parent_system, fast_opts):
        full = dist_im_full(parent_system, SetTag.SI, opts=fast_opts)
        jr = dist_im_jr(parent_system, SetTag.SI, fast_opts)
        assert full.value <= jr.value * (1 + 1e-6)

    def test_lambda_max_not_above_closed_form(self, parent_system, fast_opts):
        closed = dist_im_full(parent_system, SetTag.SI, method="closed_form", opts=fast_opts)
        dual = dist_im_full(parent_system, SetTag.SI, method="lambda_max", opts=fast_opts)
        assert dual.value <= closed.value * (1 + 1e-6)
        assert any("λ_max" in note for note in dual.notes)

    def test_dispatch(self, rotation_system, fast_opts):
        assert dist_im(rotation_system, SetTag.SD_JR, fast_opts).scope == Scope.JR


class TestVerifyWitness:

    def test_rejects_unrelated_perturbation(self, rotation_system):
        Z = np.zeros((2, 2))
        triple = PerturbationTriple(Z, Z, -0.5 * np.eye(2), SetTag.SI_JR)
        assert not verify_im_witness(rotation_system, triple, np.array([1.0, 0.0]), 1.0)


class TestSdFullObjective:
    """S_d 完整扰动逐 ω 目标测试"""

    @pytest.fixture
    def system(self):
        return random_system(3, np.random.default_rng(11))

    def _point(self, n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return np.concatenate([rng.standard_normal(2 * n), [0.7, 0.3]])

    @pytest.mark.parametrize("sign, square_j", [(-1.0, False), (1.0, False), (1.0, True)])
    def test_gradient_matches_differences(self, system, sign, square_j):
        """测试解析梯度与中心差分一致"""
        ops = _SdOperators.build(system, 0.8)
        z = self._point(system.n, 5)
        _, grad = _sd_full_value_grad(ops, z, sign, square_j)
        h = 1e-6
        for i in range(z.size):
            step = np.zeros_like(z)
            step[i] = h
            upper, _ = _sd_full_value_grad(ops, z + step, sign, square_j)
            lower, _ = _sd_full_value_grad(ops, z - step, sign, square_j)
            assert grad[i] == pytest.approx((upper - lower) / (2 * h), rel=1e-4, abs=1e-6)

    def test_scale_invariant(self, system):
        ops = _SdOperators.build(system, -1.3)
        z = self._point(system.n, 6)
        scaled = z.copy()
        scaled[: 2 * system.n] *= 3.0
        assert _sd_full_value_grad(ops, scaled)[0] == pytest.approx(_sd_full_value_grad(ops, z)[0], rel=1e-12)

    @pytest.mark.parametrize("omega", [0.4, -2.0])
    def test_display_matches_reduced_form(self, system, omega):
        """测试在 u 上按字面计算的目标与 (x, a, q) 约化形式相同"""
        n = system.n
        z = self._point(n, 7)
        x = z[:n] + 1j * z[n:2 * n]
        u = sd_display_vector(system, omega, x, 0.7, 0.3)
        ops = _SdOperators.build(system, omega)
        printed = sd_display_value(system, omega, u, "printed")
        uniform = sd_display_value(system, omega, u, "uniform")
        assert printed == pytest.approx(_sd_full_value_grad(ops, z, 1.0, False)[0], rel=1e-9)
        assert uniform == pytest.approx(_sd_full_value_grad(ops, z, 1.0, True)[0], rel=1e-9)

    def test_display_constraint_violation(self, system):
        """测试 x*v_E 不为正实数时目标为 +∞"""
        u = sd_display_vector(system, 0.4, np.ones(3, dtype=complex), -0.5, 0.0)
        assert sd_display_value(system, 0.4, u) == float("inf")

    def test_display_unknown_reading(self, system):
        u = sd_display_vector(system, 0.4, np.ones(3, dtype=complex), 0.5, 0.0)
        with pytest.raises(ParameterError):
            sd_display_value(system, 0.4, u, "squared")


class TestRandomOrdering:
    """随机稳定系统上的包含关系与见证 (样本数缩减为 5 个)"""

    def test_orderings_and_witnesses(self, make_random_system, fast_opts, check_exact_witness):
        checked = 0
        for trial in range(5):
            n = 3
            sys = make_random_system(n, rank_e=n - trial % 2)
            sd_jr = dist_im_jr(sys, SetTag.SD, fast_opts)
            sd_full = dist_im_full(sys, SetTag.SD, opts=fast_opts, extra_seeds=[sd_jr.omega_star])
            si_jr = dist_im_jr(sys, SetTag.SI, fast_opts, extra_seeds=[sd_jr.omega_star])
            si_full = dist_im_full(
                sys, SetTag.SI, opts=fast_opts,
                extra_seeds=[sd_full.omega_star, sd_jr.omega_star, si_jr.omega_star],
            )
            assert si_jr.value <= sd_jr.value * (1 + 1e-8) + 1e-12
            assert si_full.value <= sd_full.value * (1 + 1e-8) + 1e-12
            assert si_full.value <= si_jr.value * (1 + 1e-8) + 1e-12
            assert sd_full.value <= sd_jr.value * (1 + 1e-8) + 1e-12
            for report in (sd_jr, sd_full, si_jr, si_full):
                checked += check_exact_witness(sys, report)
        assert checked > 0
