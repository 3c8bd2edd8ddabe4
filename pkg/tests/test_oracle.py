"""
=============================================
🧪 蛮力预言机测试
=============================================
"""

import numpy as np
import pytest

from app.distance_im import dist_im_full, dist_im_jr
from app.exceptions import ParameterError, SingularPencilError
from app.models import BoundKind, Branch, DistanceKind, SetTag
from app.optimizers import OptConfig
from app.oracle import (
    certify_distance,
    compare_sd_readings,
    determinant_roots,
    grid_omega_oracle,
    sample_structured_perturbations,
    triggers_degeneracy,
)
from app.system import random_system, validate


class TestSampling:
    """结构化采样测试"""

    @pytest.mark.parametrize("tag", [SetTag.SD, SetTag.SI, SetTag.SD_JR, SetTag.SI_JR])
    def test_samples_in_set(self, parent_system, tag):
        samples = sample_structured_perturbations(parent_system, tag, 0.5, 40, rng_seed=1)
        assert samples
        for triple in samples:
            assert triple.norm <= 0.5 * (1 + 1e-9)
            assert not triple.membership_violations(parent_system)
            assert triple.set_tag == tag

    def test_jr_scope_keeps_e(self, parent_system):
        for triple in sample_structured_perturbations(parent_system, SetTag.SI_JR, 1.0, 10):
            assert np.allclose(triple.dE, 0)

    def test_reproducible(self, parent_system):
        first = sample_structured_perturbations(parent_system, SetTag.SI, 1.0, 5, rng_seed=7)
        second = sample_structured_perturbations(parent_system, SetTag.SI, 1.0, 5, rng_seed=7)
        assert all(np.array_equal(a.dJ, b.dJ) for a, b in zip(first, second))

    def test_zero_budget(self, parent_system):
        samples = sample_structured_perturbations(parent_system, SetTag.SD, 0.0, 3)
        assert len(samples) == 3
        assert all(t.norm == 0.0 for t in samples)

    def test_negative_budget(self, parent_system):
        with pytest.raises(ParameterError) as exc_info:
            sample_structured_perturbations(parent_system, SetTag.SD, -1.0, 3)
        assert "norm_budget" in str(exc_info.value)


class TestDegeneracy:
    """退化判定测试"""

    def test_singular(self, singular_system):
        assert triggers_degeneracy(singular_system, DistanceKind.SING)
        assert triggers_degeneracy(singular_system, DistanceKind.INST)

    def test_high_index(self, index_two_system):
        assert triggers_degeneracy(index_two_system, DistanceKind.HI)
        assert not triggers_degeneracy(index_two_system, DistanceKind.SING)

    def test_imaginary_axis(self, rotation_system):
        assert not triggers_degeneracy(rotation_system, DistanceKind.IM)
        lossless = validate(np.eye(2), [[0.0, 1.0], [-1.0, 0.0]], np.zeros((2, 2)))
        assert triggers_degeneracy(lossless, DistanceKind.IM)


class TestCertificate:
    """采样证书测试"""

    def test_exact_report_passes(self, rotation_system, fast_opts):
        report = dist_im_jr(rotation_system, SetTag.SI, fast_opts)
        certificate = certify_distance(report, rotation_system, samples=50, seed=3)
        assert certificate.passed
        assert certificate.witness_triggers
        assert certificate.seed == 3
        assert certificate.samples == 50

    def test_inflated_value_fails(self, rotation_system, fast_opts):
        """测试报告值被放大后由见证范数给出反例"""
        report = dist_im_jr(rotation_system, SetTag.SI, fast_opts)
        report.value = 2 * report.value
        certificate = certify_distance(report, rotation_system, samples=10)
        assert not certificate.passed
        assert "见证扰动范数" in certificate.counterexample

    def test_upper_bound_skips_sampling(self, rotation_system, fast_opts):
        report = dist_im_jr(rotation_system, SetTag.SI, fast_opts)
        report.bound_kind = BoundKind.UPPER
        certificate = certify_distance(report, rotation_system, samples=10)
        assert certificate.passed
        assert certificate.samples == 0
        assert certificate.notes


class TestGridAndDeterminant:

    def test_grid_oracle_matches(self, rotation_system):
        value = grid_omega_oracle(rotation_system, "im_jr_si", (-2.0, 2.0, 401))
        assert value == pytest.approx(1.0, abs=1e-6)

    def test_grid_oracle_unknown(self, rotation_system):
        with pytest.raises(ParameterError):
            grid_omega_oracle(rotation_system, "im_half", [0.0])

    def test_grid_oracle_unknown_reading(self, rotation_system):
        with pytest.raises(ParameterError):
            grid_omega_oracle(rotation_system, "im_full_sd_squared", [0.0])

    def test_determinant_roots(self, parent_system):
        assert np.allclose(determinant_roots(np.eye(2), np.diag([-1.0, -2.0])), [-2.0, -1.0])
        assert np.allclose(determinant_roots(parent_system.E, parent_system.A), [-1.0])

    def test_determinant_singular(self, singular_system):
        with pytest.raises(SingularPencilError):
            determinant_roots(singular_system.E, singular_system.A)


class TestRandomCrossCheck:
    """行列式插值与阶梯形有限谱的交叉核对"""

    def test_finite_spectrum_matches(self, make_random_system):
        from app.staircase import compute_staircase, finite_spectrum

        for trial in range(10):
            sys = make_random_system(3, rank_e=3 - trial % 2)
            direct = np.sort_complex(finite_spectrum(compute_staircase(sys)))
            brute = determinant_roots(sys.E, sys.A)
            assert brute.shape == direct.shape
            assert np.allclose(brute, direct, atol=1e-6)


class TestSdFullGrid:
    """S_d 完整扰动: ω 优化与稠密网格对照"""

    @pytest.fixture
    def opts(self):
        return OptConfig(
            max_iter=200,
            multistarts=4,
            seed=0,
            omega_grid_points=9,
            omega_span_min=0.1,
            omega_span_max=10.0,
            golden_xtol=1e-8,
            nested_refine_top=2,
            threads=1,
        )

    @pytest.mark.parametrize("seed", [21, 22])
    def test_optimizer_matches_grid(self, opts, seed):
        """测试以网格为种子的优化结果不劣于网格，且网格在 ω* 处复现优化值 (相对 1e-3)"""
        sys = random_system(3, np.random.default_rng(seed))
        grid = [float(w) for w in np.linspace(-4.0, 4.0, 81)]
        report = dist_im_full(sys, SetTag.SD, opts=opts, extra_seeds=grid)
        oracle_value = grid_omega_oracle(sys, "im_full_sd", grid + [report.omega_star], opts)
        assert report.value <= oracle_value * (1 + 1e-3)
        if report.branch == Branch.GENERIC:
            assert oracle_value <= report.value * (1 + 1e-3)

    def test_readings_recorded(self, opts):
        """测试三种读法的网格最小值都不超过 ΔE = 0 的值，相对差按定义给出"""
        sys = random_system(3, np.random.default_rng(23))
        grid = (-3.0, 3.0, 13)
        jr_value = grid_omega_oracle(sys, "im_jr_sd", grid, opts)
        comparison = compare_sd_readings(sys, grid, opts)
        assert comparison.eliminated <= jr_value * (1 + 1e-12)
        assert comparison.printed <= jr_value * (1 + 1e-12)
        assert np.isfinite(comparison.uniform) and comparison.uniform >= 0.0
        assert comparison.printed_gap == pytest.approx(
            (comparison.printed - comparison.eliminated) / comparison.eliminated
        )
        assert comparison.uniform_gap == pytest.approx(
            (comparison.uniform - comparison.eliminated) / comparison.eliminated
        )
