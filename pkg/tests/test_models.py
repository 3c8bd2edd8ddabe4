"""
=============================================
🧪 数据模型测试
=============================================
"""

import orjson
import pytest

from app.models import (
    BoundKind,
    DistanceKind,
    HiDistanceReport,
    ImDistanceReport,
    Scope,
    SetTag,
    StabilityVerdict,
    complex_pairs,
)


class TestSetTag:
    """扰动集合枚举测试"""

    @pytest.mark.parametrize("tag, decreasing, scope", [
        (SetTag.SD, True, Scope.FULL),
        (SetTag.SI, False, Scope.FULL),
        (SetTag.SD_JR, True, Scope.JR),
        (SetTag.SI_JR, False, Scope.JR),
    ])
    def test_properties(self, tag, decreasing, scope):
        assert tag.is_decreasing is decreasing
        assert tag.scope == scope

    def test_with_scope(self):
        assert SetTag.SD.with_scope(Scope.JR) == SetTag.SD_JR
        assert SetTag.SI_JR.with_scope(Scope.FULL) == SetTag.SI

    def test_resolve(self):
        """测试命令行写法到集合的映射"""
        assert SetTag.resolve("SD", Scope.JR) == SetTag.SD_JR
        assert SetTag.resolve("si", Scope.FULL) == SetTag.SI


class TestReports:
    """报告序列化测试"""

    def test_infinite_value_serialized_as_string(self):
        """测试 +∞ 在 JSON 中写为字符串"""
        report = HiDistanceReport(value=float("inf"), bound_kind=BoundKind.EXACT, set_tag=SetTag.SI_JR)
        data = report.model_dump(mode="json")
        assert data["value"] == "inf"
        assert data["kind"] == DistanceKind.HI.value
        orjson.dumps(data)

    def test_witness_excluded(self):
        """测试见证矩阵不进入 JSON，只保留见证向量"""
        report = ImDistanceReport(
            value=1.0, bound_kind=BoundKind.LOWER, set_tag=SetTag.SI,
            witness=object(), witness_vector=complex_pairs([1j, 0]),
        )
        data = report.model_dump(mode="json")
        assert "witness" not in data
        assert data["witness_vector"] == [[0.0, 1.0], [0.0, 0.0]]

    def test_verdict_reason(self):
        """测试判定结果的失败原因"""
        verdict = StabilityVerdict(
            regular=True, index=2, spectral_abscissa=None,
            cond_a=True, cond_b=False, cond_c=True, principal_submatrix_ok=True,
            block_sizes=(1, 0, 0, 1, 0),
        )
        assert not verdict.robustly_stable
        assert verdict.failed_conditions() == ["cond_b"]
        assert verdict.reason() == "index 2"
        assert verdict.model_dump(mode="json")["spectral_abscissa"] is None


class TestComplexPairs:

    def test_none(self):
        assert complex_pairs(None) is None

    def test_pairs(self):
        assert complex_pairs([1 + 2j]) == [[1.0, 2.0]]
