"""
=============================================
⚠️ 自定义异常类模块
=============================================
模块名称: exceptions.py
模块功能:
    - 定义数值计算相关的自定义异常
    - 提供友好的错误提示 (表情+中文)
    - 统一错误码和错误信息格式
异常分类:
    - 输入相关: 维度错误、非有限值、文件格式错误、参数错误
    - 结构相关: Hermitian / 反 Hermitian / 半正定结构破坏
    - 束相关: Q 奇异、奇异束、秩判定模糊、ω 落在谱上
    - 优化相关: 映射不可行、不定性条件违反、无下界
    - 判定相关: 系统非鲁棒稳定

"""

from dataclasses import dataclass
from typing import Any, Literal, Optional


# ==========================================
# 🧱 基础异常
# ==========================================

class DhdaeError(Exception):
    """
    🧱 dHDAE 计算异常基类

    所有领域异常均继承此类，便于命令行统一捕获

    Attributes:
        message: 错误信息 (表情 + 中文)
        code: 稳定的错误码字符串 (见 docs/ERROR_CODES.md)
    """

    code: str = "DHDAE_ERROR"

    def __init__(self, message: str):
        """
        初始化基础异常

        Args:
            message: 错误信息
        """
        self.message = message
        super().__init__(self.message)

    def detail(self) -> dict[str, Any]:
        """
        📋 结构化的错误细节

        Returns:
            dict: 可序列化的附加信息，子类按需覆盖
        """
        return {}


# ==========================================
# 📥 输入相关异常
# ==========================================

class DimensionError(DhdaeError):
    """
    📐 维度错误异常

    当矩阵不是方阵、尺寸不一致或向量长度不匹配时抛出
    """

    code = "DIMENSION_ERROR"

    def __init__(self, reason: str, shapes: Optional[list] = None):
        self.shapes = [tuple(s) for s in shapes] if shapes else []
        if self.shapes:
            message = f"📐 维度错误: {reason} (形状: {self.shapes})"
        else:
            message = f"📐 维度错误: {reason}"
        super().__init__(message)

    def detail(self) -> dict[str, Any]:
        return {"shapes": [list(s) for s in self.shapes]}


class NonFiniteError(DhdaeError):
    """🚫 矩阵包含 NaN 或 Inf"""

    code = "NON_FINITE"

    def __init__(self, name: str = "matrix"):
        self.name = name
        super().__init__(f"🚫 矩阵 {name} 含有非有限元素 (NaN/Inf)")

    def detail(self) -> dict[str, Any]:
        return {"matrix": self.name}


class ParameterError(DhdaeError):
    """
    🎛️ 参数错误异常

    当算例参数违反定性要求 (如刚度矩阵非正定) 或选项取值非法时抛出
    """

    code = "PARAMETER_ERROR"

    def __init__(self, parameter: str, reason: str, kind: Optional[str] = None):
        self.parameter = parameter
        self.kind = kind
        prefix = f"[{kind}] " if kind else ""
        super().__init__(f"🎛️ 参数错误: {prefix}{parameter} {reason}")

    def detail(self) -> dict[str, Any]:
        return {"parameter": self.parameter, "kind": self.kind}


class InputFormatError(DhdaeError):
    """
    📄 输入文件格式错误异常

    当系统文件 / 扰动文件无法解析时抛出
    """

    code = "INPUT_FORMAT"

    def __init__(self, path: str, reason: Optional[str] = None):
        self.path = str(path)
        if reason:
            message = f"📄 文件格式无效 ({self.path}): {reason}"
        else:
            message = f"📄 文件格式无效: {self.path}"
        super().__init__(message)

    def detail(self) -> dict[str, Any]:
        return {"path": self.path}


# ==========================================
# 🧬 结构相关异常
# ==========================================

ViolationKind = Literal["not_hermitian", "not_skew", "not_psd", "not_nsd", "not_zero"]


@dataclass(frozen=True)
class StructureViolation:
    """
    🧬 单条结构违反记录

    Attributes:
        kind: 违反类型 (not_hermitian / not_skew / not_psd / not_nsd / not_zero)
        matrix: 矩阵名 (E / J / R / dE / ...)
        residual: 违反程度 (结构残差范数或最负特征值的绝对值)
    """

    kind: ViolationKind
    matrix: str
    residual: float

    def describe(self) -> str:
        labels = {
            "not_hermitian": "非 Hermitian",
            "not_skew": "非反 Hermitian",
            "not_psd": "非半正定",
            "not_nsd": "非半负定",
            "not_zero": "应为零矩阵",
        }
        return f"{self.matrix} {labels[self.kind]} (残差 {self.residual:.3e})"


class StructureError(DhdaeError):
    """
    🧬 结构破坏异常

    校验时一次性收集全部违反项后抛出，不会自动对称化

    Attributes:
        violations: 所有违反项列表
    """

    code = "STRUCTURE_VIOLATION"

    def __init__(self, violations: list[StructureViolation]):
        self.violations = list(violations)
        listed = "; ".join(v.describe() for v in self.violations)
        super().__init__(f"🧬 结构校验失败: {listed}")

    def kinds(self) -> set[tuple[str, str]]:
        """返回 (kind, matrix) 集合，便于断言"""
        return {(v.kind, v.matrix) for v in self.violations}

    def detail(self) -> dict[str, Any]:
        return {
            "violations": [
                {"kind": v.kind, "matrix": v.matrix, "residual": v.residual}
                for v in self.violations
            ]
        }


# ==========================================
# 🎼 矩阵束相关异常
# ==========================================

class QSingularError(DhdaeError):
    """
    🧮 Q 因子奇异异常

    Q 不可逆时拒绝约化: 此时解可能线性增长，鲁棒稳定性无从谈起
    """

    code = "Q_SINGULAR"

    def __init__(self, sigma_min: float, threshold: float):
        self.sigma_min = float(sigma_min)
        self.threshold = float(threshold)
        super().__init__(
            f"🧮 Q 数值奇异: σ_min(Q)={self.sigma_min:.3e} ≤ {self.threshold:.3e}，"
            f"Q 奇异时解可能线性增长，拒绝约化"
        )

    def detail(self) -> dict[str, Any]:
        return {"sigma_min": self.sigma_min, "threshold": self.threshold}


class SingularPencilError(DhdaeError):
    """
    🕳️ 奇异矩阵束异常

    E、J、R 存在公共零空间时抛出，携带公共核向量作为证据
    """

    code = "SINGULAR_PENCIL"

    def __init__(self, witness: Any = None, reason: Optional[str] = None):
        self.witness = witness
        message = "🕳️ 矩阵束奇异: E、J、R 存在公共零空间"
        if reason:
            message = f"{message} ({reason})"
        super().__init__(message)

    def detail(self) -> dict[str, Any]:
        if self.witness is None:
            return {"witness": None}
        return {"witness": [[float(z.real), float(z.imag)] for z in self.witness]}


class RankAmbiguityError(DhdaeError):
    """
    ⚖️ 数值秩判定模糊异常

    阶梯形的零块残差超过 100·rank_tol·‖·‖ 时抛出
    """

    code = "RANK_AMBIGUITY"

    def __init__(self, block: str, residual: float, threshold: float):
        self.block = block
        self.residual = float(residual)
        self.threshold = float(threshold)
        super().__init__(
            f"⚖️ 数值秩判定模糊: 块 {block} 残差 {self.residual:.3e} 超过阈值 {self.threshold:.3e}，"
            f"请调整 --tol"
        )

    def detail(self) -> dict[str, Any]:
        return {"block": self.block, "residual": self.residual, "threshold": self.threshold}


class OmegaInLambdaError(DhdaeError):
    """
    🌊 ω 落在 (iE, J) 的谱上

    此时 iωE−J 不可逆，调用方应改走特征向量分支
    """

    code = "OMEGA_IN_LAMBDA"

    def __init__(self, omega: float, sigma_min: float):
        self.omega = float(omega)
        self.sigma_min = float(sigma_min)
        super().__init__(
            f"🌊 ω={self.omega:.6g} 使 iωE−J 奇异 (σ_min={self.sigma_min:.3e})，应使用特征向量分支"
        )

    def detail(self) -> dict[str, Any]:
        return {"omega": self.omega, "sigma_min": self.sigma_min}


# ==========================================
# 🧭 优化相关异常
# ==========================================

class InfeasibleMappingError(DhdaeError):
    """
    🧭 结构映射不可行异常

    仅在 strict=True 调用映射函数时抛出；默认在结果对象中报告
    """

    code = "INFEASIBLE_MAPPING"

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"🧭 结构映射不可行: {reason}")

    def detail(self) -> dict[str, Any]:
        return {"reason": self.reason}


class IndefinitenessError(DhdaeError):
    """
    📉 不定性前提违反异常

    λ_max 最小化要求 αH₁+βH₂ 对所有非零 (α, β) 均不定
    """

    code = "NOT_INDEFINITE"

    def __init__(self, alpha: float, beta: float):
        self.alpha = float(alpha)
        self.beta = float(beta)
        super().__init__(
            f"📉 不定性前提违反: 方向 (α, β)=({self.alpha:.4f}, {self.beta:.4f}) 上组合矩阵半定"
        )

    def detail(self) -> dict[str, Any]:
        return {"direction": [self.alpha, self.beta]}


class UnboundedBelowError(DhdaeError):
    """📉 目标函数沿某条射线无下界"""

    code = "UNBOUNDED_BELOW"

    def __init__(self, direction: Any):
        self.direction = [float(d) for d in direction]
        super().__init__(f"📉 目标函数无下界，方向: {self.direction}")

    def detail(self) -> dict[str, Any]:
        return {"direction": self.direction}


# ==========================================
# 🛡️ 判定相关异常
# ==========================================

class NotRobustlyStableError(DhdaeError):
    """
    🛡️ 系统非鲁棒渐近稳定异常

    距离计算的前提不满足时抛出

    Attributes:
        failed: 未满足的条件列表 (如 ["cond_b"])
    """

    code = "NOT_ROBUSTLY_STABLE"

    def __init__(self, failed: list[str], reason: Optional[str] = None):
        self.failed = list(failed)
        message = f"🛡️ 系统非鲁棒渐近稳定，未满足条件: {', '.join(self.failed)}"
        if reason:
            message = f"{message} ({reason})"
        super().__init__(message)

    def detail(self) -> dict[str, Any]:
        return {"failed": self.failed}


# ==========================================
# 🔄 导出所有异常类
# ==========================================

__all__ = [
    # 基础
    "DhdaeError",
    # 输入相关
    "DimensionError",
    "NonFiniteError",
    "ParameterError",
    "InputFormatError",
    # 结构相关
    "StructureViolation",
    "StructureError",
    # 束相关
    "QSingularError",
    "SingularPencilError",
    "RankAmbiguityError",
    "OmegaInLambdaError",
    # 优化相关
    "InfeasibleMappingError",
    "IndefinitenessError",
    "UnboundedBelowError",
    # 判定相关
    "NotRobustlyStableError",
]
