"""
=============================================
🧪 奇异束距离与 d_inst 测试
=============================================
"""

import numpy as np
import pytest

from app.distance_sing import (
    dist_sing,
    dist_sing_full,
    dist_sing_jr,
    dist_sing_unstructured,
    distance_inst,
    verify_sing_witness,
)
from app.exceptions import NotRobustlyStableError
from app.models import BoundKind, DistanceKind, Scope, SetTag
from app.oracle import certify_distance
from app.system import PerturbationTriple, make_example, validate


class TestUnstructured:
    """非结构化奇异距离测试"""

    def test_index_two(self, index_two_system):
        report = dist_sing_unstructured(index_two_system)
        assert report.value == pytest.approx(1.0)
        assert report.bound_kind == BoundKind.EXACT
        assert report.set_tag is None
        assert report.witness_verified and report.tight
        assert not report.notes

    def test_scalar(self):
        report = dist_sing_unstructured(validate([[1.0]], [[0.0]], [[1.0]]))
        assert report.value == pytest.approx(np.sqrt(2.0))

    def test_already_singular(self, singular_system):
        assert dist_sing(singular_system, None).value == pytest.approx(0.0, abs=1e-7)


class TestFull:
    """完整扰动测试"""

    def test_scalar_certificate(self):
        """测试标量系统 (1, 0, 1) 的 S_i 距离 √2 通过证书，见证同时消去 E 与 R"""
        sys = validate([[1.0]], [[0.0]], [[1.0]])
        report = dist_sing_full(sys, SetTag.SI)
        assert report.value == pytest.approx(np.sqrt(2.0))
        record = certify_distance(report, sys, samples=200, seed=3)
        assert record.passed
        assert record.witness_triggers

    def test_si_definite(self):
        """测试 E, R ≻ 0 时 S_i 闭式精确"""
        report = dist_sing_full(validate(np.eye(2), np.zeros((2, 2)), np.eye(2)), SetTag.SI)
        assert report.value == pytest.approx(np.sqrt(2.0))
        assert report.bound_kind == BoundKind.EXACT
        assert report.tight

    def test_si_upgraded_by_tight_witness(self, index_two_system):
        """测试 E 奇异时见证紧致则升级为精确"""
        report = dist_sing_full(index_two_system, SetTag.SI)
        assert report.value == pytest.approx(1.0)
        assert report.bound_kind == BoundKind.EXACT
        assert report.witness_verified and report.tight
        dJ = report.witness.dJ
        assert np.allclose(dJ, -dJ.conj().T)
        assert np.allclose(report.witness.dE, 0)

    def test_sandwich(self, parent_system, fast_opts):
        """测试 S_d ≥ S_i = 非结构化"""
        sd = dist_sing_full(parent_system, SetTag.SD, fast_opts)
        si = dist_sing_full(parent_system, SetTag.SI, fast_opts)
        unstructured = dist_sing_unstructured(parent_system)
        assert si.value == pytest.approx(unstructured.value)
        assert sd.value >= si.value * (1 - 1e-9)
        assert sd.heuristic

    def test_sd_witness_membership(self, parent_system, fast_opts):
        report = dist_sing_full(parent_system, SetTag.SD, fast_opts)
        assert report.witness_verified
        assert not report.witness.membership_violations(parent_system)


class TestJR:
    """(J, R) 部分扰动测试"""

    def test_invertible_e(self, rotation_system, fast_opts):
        report = dist_sing_jr(rotation_system, SetTag.SD, fast_opts)
        assert report.value == float("inf")
        assert report.bound_kind == BoundKind.EXACT
        assert report.set_tag == SetTag.SD_JR

    def test_dc_network(self, fast_opts):
        """测试直流电网: E 的核上 N*(R² + J*J)N = 2I"""
        sys = make_example("dc_network")
        si = dist_sing_jr(sys, SetTag.SI, fast_opts)
        sd = dist_sing_jr(sys, SetTag.SD, fast_opts)
        assert si.value == pytest.approx(np.sqrt(2.0))
        assert si.bound_kind == BoundKind.EXACT
        assert sd.value == pytest.approx(np.sqrt(2.0), rel=1e-6)
        assert np.allclose(si.witness.dE, 0)

    def test_dispatch(self, parent_system, fast_opts):
        assert dist_sing(parent_system, SetTag.SI_JR, fast_opts).scope == Scope.JR


class TestVerifySingWitness:

    def test_zero_perturbation(self, singular_system):
        triple = PerturbationTriple.zeros(2)
        assert verify_sing_witness(singular_system, triple, np.array([0.0, 1.0]))
        assert not verify_sing_witness(singular_system, triple, np.array([1.0, 0.0]))


class TestDistanceInst:
    """到不稳定距离的聚合测试"""

    def test_jr_all_exact(self, rotation_system, fast_opts):
        report = distance_inst(rotation_system, SetTag.SI_JR, fast_opts)
        assert report.value == pytest.approx(1.0, rel=1e-6)
        assert report.mechanism == DistanceKind.IM
        assert report.sing.value == float("inf")
        assert report.hi.value == float("inf")
        assert report.bound_kind == BoundKind.EXACT

    def test_full_mixed_kinds(self, rotation_system, fast_opts):
        """测试含上界分量时聚合结果降为上界"""
        report = distance_inst(rotation_system, SetTag.SI, fast_opts)
        assert report.mechanism == DistanceKind.IM
        assert report.hi.bound_kind == BoundKind.UPPER
        assert report.hi.value == pytest.approx(np.sqrt(2.0))
        assert report.sing.value == pytest.approx(np.sqrt(3.0))
        assert report.bound_kind == BoundKind.UPPER
        assert report.notes

    def test_requires_stability(self, index_two_system, fast_opts):
        with pytest.raises(NotRobustlyStableError):
            distance_inst(index_two_system, SetTag.SI, fast_opts)


class TestRandomOrdering:
    """随机系统上的夹逼、包含关系与见证 (样本数缩减为 30 个)"""

    def test_chain(self, make_random_system, fast_opts, check_exact_witness):
        checked = 0
        for trial in range(30):
            n = 2 + trial % 3
            sys = make_random_system(n, rank_e=n - 1)
            unstructured = dist_sing_unstructured(sys).value
            si = dist_sing_full(sys, SetTag.SI, fast_opts)
            sd = dist_sing_full(sys, SetTag.SD, fast_opts)
            si_jr = dist_sing_jr(sys, SetTag.SI, fast_opts)
            assert si.value == pytest.approx(unstructured, rel=1e-9)
            assert sd.value >= si.value * (1 - 1e-9)
            assert si_jr.value >= si.value * (1 - 1e-9)
            for report in (si, sd, si_jr):
                checked += check_exact_witness(sys, report)
        assert checked > 0

    def test_si_certificate(self, make_random_system, fast_opts):
        """测试 S_i 距离通过采样证书"""
        for n in (2, 3):
            sys = make_random_system(n, rank_e=n - 1)
            report = dist_sing_full(sys, SetTag.SI, fast_opts)
            assert certify_distance(report, sys, samples=100, seed=n).passed
