"""
=============================================
🧪 阶梯形与稳定性判定测试
=============================================
"""

import numpy as np
import pytest

from app.exceptions import SingularPencilError
from app.staircase import (
    classify,
    compute_staircase,
    finite_spectrum,
    principal_submatrices_nonsingular,
    reduced_pencil,
    refined_form,
    verdict,
)
from app.system import validate


class TestStaircase:
    """阶梯形构造测试"""

    def test_invertible_e(self, rotation_system):
        sc = compute_staircase(rotation_system)
        assert sc.block_sizes == (0, 2, 0, 0, 0)
        assert classify(sc).index == 0
        assert np.allclose(finite_spectrum(sc), [-1 - 1j, -1 + 1j])

    def test_unitary(self, parent_system):
        sc = compute_staircase(parent_system)
        assert np.allclose(sc.P.conj().T @ sc.P, np.eye(2))

    def test_index_one(self, parent_system):
        sc = compute_staircase(parent_system)
        assert sc.block_sizes == (0, 1, 1, 0, 0)
        cls = classify(sc)
        assert cls.regular and cls.index == 1
        assert np.allclose(finite_spectrum(sc), [-1.0])

    def test_index_two(self, index_two_system):
        sc = compute_staircase(index_two_system)
        assert sc.block_sizes == (1, 0, 0, 1, 0)
        assert classify(sc).index == 2
        assert finite_spectrum(sc).size == 0

    def test_singular(self, singular_system):
        sc = compute_staircase(singular_system)
        assert sc.block_sizes[4] == 1
        assert not classify(sc).regular
        with pytest.raises(SingularPencilError) as exc_info:
            finite_spectrum(sc)
        witness = np.asarray(exc_info.value.witness)
        assert abs(witness[1]) == pytest.approx(1.0)

    def test_reduced_pencil(self, parent_system):
        """测试有限谱子束的谱与原束一致"""
        sub = reduced_pencil(compute_staircase(parent_system))
        assert sub.n == 1
        assert np.allclose(np.linalg.eigvals(np.linalg.solve(sub.E, sub.A)), [-1.0])

    def test_refined_form(self, index_two_system):
        """测试细化形式中 J41 = I"""
        sc = compute_staircase(index_two_system)
        Z, _, J_t, _ = refined_form(sc)
        s = sc.slices()
        assert np.allclose(J_t[s[3], s[0]], np.eye(1))
        assert np.allclose(J_t[s[0], s[3]], -np.eye(1))


class TestPrincipalSubmatrices:

    def test_zero_diagonal(self):
        ok, exact = principal_submatrices_nonsingular(np.array([[0.0, 1.0], [-1.0, 0.0]]), 1e-10, 12)
        assert (ok, exact) == (False, True)

    def test_cap(self):
        assert principal_submatrices_nonsingular(np.eye(3), 1e-10, 2) == (False, False)


class TestVerdict:
    """鲁棒渐近稳定性判定测试"""

    def test_stable_ode(self, rotation_system):
        result = verdict(rotation_system)
        assert result.robustly_stable
        assert result.spectral_abscissa == pytest.approx(-1.0)
        assert result.bounds.d_dae == pytest.approx(1.0)
        assert result.bounds.d_sing_stack == pytest.approx(np.sqrt(3.0))
        assert result.bounds.d_hi_lower is None

    def test_stable_dae(self, parent_system):
        result = verdict(parent_system)
        assert result.robustly_stable
        assert result.n_infinite == 1
        assert result.bounds.d_dae == 0.0
        assert result.bounds.d_dae_note
        assert result.bounds.d_hi_lower == pytest.approx(1.0)
        assert result.bounds.d_r == pytest.approx(1.0)

    def test_index_two(self, index_two_system):
        result = verdict(index_two_system)
        assert not result.robustly_stable
        assert result.reason() == "index 2"

    def test_singular(self, singular_system):
        result = verdict(singular_system)
        assert result.failed_conditions() == ["cond_a", "cond_b", "cond_c"]
        assert result.reason() == "singular pencil"
        assert result.spectral_abscissa is None

    def test_imaginary_axis(self):
        result = verdict(validate(np.eye(2), [[0.0, 1.0], [-1.0, 0.0]], np.zeros((2, 2))))
        assert result.failed_conditions() == ["cond_c"]
        assert result.reason() == "eigenvalue on the imaginary axis"

    def test_principal_submatrix(self):
        """测试 N*(J−R)N 可逆但主子矩阵奇异"""
        J = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
        result = verdict(validate(np.diag([1.0, 0.0, 0.0]), J, np.zeros((3, 3))))
        assert result.index == 1
        assert not result.principal_submatrix_ok
        assert "cond_b" in result.failed_conditions()

    def test_reduced_bound(self, rotation_system):
        result = verdict(rotation_system, with_reduced_bound=True)
        assert result.bounds.d_reduced_im == pytest.approx(1.0, rel=1e-6)
        assert result.bounds.d_reduced_im_kind == "exact"

    def test_cache_returns_copy(self, parent_system):
        first = verdict(parent_system)
        first.notes.append("mutated")
        assert "mutated" not in verdict(parent_system).notes


class TestSpectralInvariants:
    """随机系统上的谱性质 (200 个随机系统，阶数 2 到 8)"""

    def test_random_finite_eigenvalues(self, make_random_system):
        for trial in range(200):
            n = 2 + trial % 7
            sys = make_random_system(n, rank_e=n - trial % 3 if n > 2 else n)
            sc = compute_staircase(sys)
            cls = classify(sc)
            assert cls.regular
            assert cls.index is not None and cls.index <= 2
            eigs = finite_spectrum(sc)
            assert np.all(eigs.real <= 1e-8 * np.maximum(1.0, np.abs(eigs)))

    def test_axis_eigenvectors_undamped(self):
        """纯虚特征值的特征向量满足 R·v = 0"""
        J = np.zeros((3, 3))
        J[:2, :2] = [[0.0, 1.0], [-1.0, 0.0]]
        sys = validate(np.eye(3), J, np.diag([0.0, 0.0, 1.0]))
        values, vectors = np.linalg.eig(sys.A)
        on_axis = np.abs(values.real) <= 1e-10
        assert np.count_nonzero(on_axis) == 2
        for v in vectors[:, on_axis].T:
            assert np.linalg.norm(sys.R @ v) <= 1e-8

    def test_positive_damping_is_robust(self, make_random_system, rng):
        """R ≻ 0 时，保持 R+ΔR ≻ 0 的结构化扰动不改变判定"""
        for _ in range(20):
            sys = make_random_system(4, rank_e=3)
            lam = np.linalg.eigvalsh(sys.R)[0]
            for _ in range(3):
                G = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
                dR = (G + G.conj().T) / 2
                dR *= 0.5 * lam / np.linalg.norm(dR, 2)
                dJ = (G - G.conj().T) / 2
                perturbed = validate(sys.E, sys.J + dJ, sys.R + dR)
                assert verdict(perturbed).robustly_stable


class TestExampleRegressions:
    """内置算例的定性回归"""

    def test_dc_network(self, dc_network_system):
        result = verdict(dc_network_system)
        assert result.robustly_stable
        assert result.index == 1
        assert result.n_infinite == 2
        assert len(result.finite_eigenvalues) == 3
        assert all(re < 0 for re, _ in result.finite_eigenvalues)

    def test_undamped_mechanical(self, mechanical_system):
        result = verdict(mechanical_system)
        assert result.reason() == "eigenvalue on the imaginary axis"
