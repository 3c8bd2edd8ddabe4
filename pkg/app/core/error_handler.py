"""
=============================================
⚠️ 统一异常处理模块
=============================================
模块名称: error_handler.py
模块功能:
    - 领域异常到结构化错误载荷的转换
    - 未预期异常的兜底处理 (记录完整堆栈)
    - 错误载荷格式统一
    - 进程退出码约定
"""

import traceback
from typing import Any

from app.core.logger import log
from app.exceptions import DhdaeError


# ========== 退出码 ==========
EXIT_OK = 0               # 成功 / 鲁棒稳定
EXIT_ERROR = 1            # 任意错误
EXIT_NOT_STABLE = 2       # check: 系统有效但非鲁棒稳定


class ErrorResponse:
    """错误响应格式"""

    @staticmethod
    def create(error_code: str, message: str, data: Any = None) -> dict[str, Any]:
        """
        创建标准错误载荷

        Args:
            error_code: 错误码
            message: 错误信息（用户友好）
            data: 附加的结构化细节，可选

        Returns:
            dict: {"code", "msg", "data"} 格式的错误载荷
        """
        return {
            "code": error_code,
            "msg": message,
            "data": data
        }


def handle_exception(exc: BaseException) -> tuple[dict[str, Any], int]:
    """
    全局异常处理器

    领域异常返回其错误码与细节；其他异常记录堆栈后返回安全信息

    Args:
        exc: 异常对象

    Returns:
        tuple: (错误载荷, 退出码)
    """
    if isinstance(exc, DhdaeError):
        log.error(exc.message)
        return ErrorResponse.create(exc.code, exc.message, exc.detail() or None), EXIT_ERROR

    # 记录完整错误到日志（包含堆栈）
    log.error(
        f"💥 未处理的异常: {exc}\n"
        f"{''.join(traceback.format_exception(type(exc), exc, exc.__traceback__))}"
    )

    return ErrorResponse.create(
        error_code="INTERNAL_ERROR",
        message="💥 内部错误，请使用 --log-level DEBUG 重新运行查看详情",
    ), EXIT_ERROR


# ==========================================
# 📤 导出对象
# ==========================================

__all__ = [
    "ErrorResponse",
    "handle_exception",
    "EXIT_OK",
    "EXIT_ERROR",
    "EXIT_NOT_STABLE",
]
