"""
=============================================
🧪 异常处理测试
=============================================
"""

from app.core.error_handler import EXIT_ERROR, ErrorResponse, handle_exception
from app.exceptions import (
    NotRobustlyStableError,
    ParameterError,
    StructureError,
    StructureViolation,
)


class TestErrorResponse:
    """错误载荷格式测试"""

    def test_create(self):
        payload = ErrorResponse.create("X", "msg", {"a": 1})
        assert payload == {"code": "X", "msg": "msg", "data": {"a": 1}}


class TestHandleException:
    """异常到载荷的转换测试"""

    def test_domain_error(self):
        """测试领域异常保留错误码与细节"""
        payload, code = handle_exception(NotRobustlyStableError(["cond_b"], "index 2"))
        assert code == EXIT_ERROR
        assert payload["code"] == "NOT_ROBUSTLY_STABLE"
        assert "cond_b" in payload["msg"]
        assert payload["data"] == {"failed": ["cond_b"]}

    def test_structure_error_lists_violations(self):
        """测试结构异常列出全部违反项"""
        exc = StructureError([
            StructureViolation("not_psd", "E", 1.0),
            StructureViolation("not_skew", "J", 0.5),
        ])
        payload, _ = handle_exception(exc)
        assert payload["code"] == "STRUCTURE_VIOLATION"
        kinds = {(v["kind"], v["matrix"]) for v in payload["data"]["violations"]}
        assert kinds == {("not_psd", "E"), ("not_skew", "J")}

    def test_parameter_error_detail(self):
        """测试参数异常的细节"""
        payload, _ = handle_exception(ParameterError("--steps", "至少为 1"))
        assert payload["data"] == {"parameter": "--steps", "kind": None}

    def test_unexpected_error(self):
        """测试未预期异常返回安全信息"""
        payload, code = handle_exception(RuntimeError("boom"))
        assert code == EXIT_ERROR
        assert payload["code"] == "INTERNAL_ERROR"
        assert "boom" not in payload["msg"]
