"""
=============================================
📦 数据模型模块
=============================================
模块名称: models.py
模块功能:
    - 枚举类型定义 (扰动集合、距离类型、界类型、作用范围)
    - Pydantic 报告模型定义
    - 结构化输出格式 (JSON) 的字段约定
模型列表:
    - StabilityBounds: 稳定性判定附带的距离界汇总
    - StabilityVerdict: 鲁棒渐近稳定性判定结果
    - DistanceReport 及其子类: 三类结构化距离报告
    - InstReport: 到不稳定的距离 (三者取最小)
    - CertificateRecord: 预言机证书
    - HomotopyRow: 同伦轨迹的一行

"""

import math
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer


def _json_float(value: Optional[float]) -> Any:
    """无穷大在 JSON 中以字符串 "inf" / "-inf" 表示"""
    if value is None or math.isfinite(value):
        return value
    return "inf" if value > 0 else "-inf"


def complex_pairs(vec: Any) -> Optional[list[list[float]]]:
    """
    🔢 复向量转换为 [re, im] 对列表

    Args:
        vec: 一维复数组，None 原样返回

    Returns:
        list: [[re, im], ...]
    """
    if vec is None:
        return None
    arr = np.asarray(vec, dtype=complex).ravel()
    return [[float(z.real), float(z.imag)] for z in arr]


# ==========================================
# 🏷️ 扰动集合枚举
# ==========================================

class Scope(str, Enum):
    """
    🎯 扰动作用范围

    选项:
        - FULL: (E, J, R) 三者均可扰动
        - JR: 仅扰动 (J, R)，ΔE = 0
    """

    FULL = "full"
    JR = "jr"

    @property
    def label(self) -> str:
        labels = {
            Scope.FULL: "全扰动 (E, J, R)",
            Scope.JR: "部分扰动 (J, R)",
        }
        return labels.get(self, "未知")


class SetTag(str, Enum):
    """
    🏷️ 结构化扰动集合

    选项:
        - SD: ΔE ≤ 0, ΔR ≤ 0 (半定递减)
        - SI: ΔE, ΔR Hermitian，扰动后仍半正定
        - SD_JR / SI_JR: 对应的 (J, R) 部分扰动集合，ΔE = 0

    所有集合都要求 ΔJ 反 Hermitian。
    """

    SD = "Sd"
    SI = "Si"
    SD_JR = "SdJR"
    SI_JR = "SiJR"

    @property
    def label(self) -> str:
        labels = {
            SetTag.SD: "S_d (半定递减)",
            SetTag.SI: "S_i (保持半正定)",
            SetTag.SD_JR: "S_d(J, R)",
            SetTag.SI_JR: "S_i(J, R)",
        }
        return labels.get(self, "未知")

    @property
    def is_decreasing(self) -> bool:
        """是否要求 ΔE ≤ 0, ΔR ≤ 0"""
        return self in (SetTag.SD, SetTag.SD_JR)

    @property
    def scope(self) -> Scope:
        return Scope.JR if self in (SetTag.SD_JR, SetTag.SI_JR) else Scope.FULL

    def with_scope(self, scope: Scope) -> "SetTag":
        """切换到同一族在指定范围下的集合"""
        if scope == Scope.JR:
            return SetTag.SD_JR if self.is_decreasing else SetTag.SI_JR
        return SetTag.SD if self.is_decreasing else SetTag.SI

    @classmethod
    def resolve(cls, family: str, scope: Scope) -> "SetTag":
        """
        🔎 由命令行的 sd / si 与范围得到集合

        Args:
            family: "sd" 或 "si" (不区分大小写)
            scope: 作用范围

        Returns:
            SetTag: 对应集合
        """
        base = cls.SD if family.lower() == "sd" else cls.SI
        return base.with_scope(scope)


class DistanceKind(str, Enum):
    """📏 距离类型"""

    IM = "im"
    SING = "sing"
    HI = "hi"
    INST = "inst"

    @property
    def label(self) -> str:
        labels = {
            DistanceKind.IM: "到纯虚特征值的距离",
            DistanceKind.SING: "到奇异束的距离",
            DistanceKind.HI: "到高指标的距离",
            DistanceKind.INST: "到不稳定的距离",
        }
        return labels.get(self, "未知")


class BoundKind(str, Enum):
    """
    ⚖️ 数值的性质

    选项:
        - EXACT: 精确值
        - LOWER: 下界
        - UPPER: 上界
    """

    EXACT = "exact"
    LOWER = "lower"
    UPPER = "upper"


class Branch(str, Enum):
    """🌿 纯虚距离的取值分支 (特征向量分支 / 一般 ω 分支)"""

    LAMBDA = "Lambda"
    GENERIC = "generic"


# ==========================================
# 🛡️ 稳定性判定
# ==========================================

class StabilityBounds(BaseModel):
    """
    📐 判定算法五个步骤给出的距离界

    缺失的界为 None (例如 N(E)*RN(E) 奇异时不给出 d_r)
    """

    d_dae: Optional[float] = Field(None, description="λ_min(E)，E 奇异时为 0")
    d_dae_note: Optional[str] = Field(None, description="d_dae 的附注")
    d_sing_stack: Optional[float] = Field(None, description="σ_min([E; J; R])")
    d_hi_lower: Optional[float] = Field(None, description="σ_min(N*(J−R)N)，E 可逆时缺失")
    d_r: Optional[float] = Field(None, description="λ_min(N*RN)，非奇异时给出")
    d_reduced_im: Optional[float] = Field(None, description="约化束上的 S_i(J, R) 纯虚距离")
    d_reduced_im_kind: Optional[str] = Field(None, description="d_reduced_im 的界类型")

    @field_serializer("d_dae", "d_sing_stack", "d_hi_lower", "d_r", "d_reduced_im")
    def _serialize_bound(self, value: Optional[float]) -> Any:
        return _json_float(value)


class StabilityVerdict(BaseModel):
    """
    🛡️ 鲁棒渐近稳定性判定结果

    三个条件:
        - cond_a: 矩阵束正则
        - cond_b: 指标 ≤ 1 且 N(E)*(J−R)N(E) 的所有主子矩阵非奇异
        - cond_c: 有限特征值谱横坐标 < 0
    """

    regular: bool = Field(..., description="矩阵束是否正则")
    index: Optional[int] = Field(None, description="指标 (0/1/2)，奇异束为 None")
    spectral_abscissa: Optional[float] = Field(
        None, description="有限特征值最大实部，无有限特征值时为 −∞，奇异束为 None"
    )
    cond_a: bool = Field(..., description="条件 a: 正则")
    cond_b: bool = Field(..., description="条件 b: 指标与主子矩阵")
    cond_c: bool = Field(..., description="条件 c: 谱横坐标为负")
    principal_submatrix_ok: bool = Field(..., description="主子矩阵检查是否通过")
    exact: bool = Field(True, description="主子矩阵检查是否为穷举 (否则使用充分条件)")
    block_sizes: tuple[int, int, int, int, int] = Field(..., description="阶梯形块大小 n1..n5")
    finite_eigenvalues: list[tuple[float, float]] = Field(
        default_factory=list, description="有限特征值 (实部, 虚部)"
    )
    n_infinite: int = Field(0, description="无穷特征值个数")
    bounds: StabilityBounds = Field(default_factory=StabilityBounds, description="距离界")
    notes: list[str] = Field(default_factory=list, description="附注")

    @property
    def robustly_stable(self) -> bool:
        return self.cond_a and self.cond_b and self.cond_c

    def failed_conditions(self) -> list[str]:
        """
        📋 未满足的条件

        Returns:
            list: 如 ["cond_b"]
        """
        failed = []
        if not self.cond_a:
            failed.append("cond_a")
        if not self.cond_b:
            failed.append("cond_b")
        if not self.cond_c:
            failed.append("cond_c")
        return failed

    def reason(self) -> str:
        """人类可读的失败原因"""
        if not self.cond_a:
            return "singular pencil"
        if not self.cond_b:
            if self.index is not None and self.index >= 2:
                return f"index {self.index}"
            return "principal submatrix of N*(J-R)N singular"
        if not self.cond_c:
            return "eigenvalue on the imaginary axis"
        return "robustly stable"

    @field_serializer("spectral_abscissa")
    def _serialize_abscissa(self, value: Optional[float]) -> Any:
        return _json_float(value)


# ==========================================
# 📏 距离报告
# ==========================================

class DistanceReport(BaseModel):
    """
    📏 结构化距离报告基类

    witness 为 PerturbationTriple 对象，不参与序列化；
    命令行通过 --witness-out 单独写出。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: DistanceKind = Field(..., description="距离类型")
    value: float = Field(..., description="距离值 (可为 +∞)")
    bound_kind: BoundKind = Field(..., description="精确值 / 下界 / 上界")
    set_tag: Optional[SetTag] = Field(None, description="扰动集合，None 表示非结构化")
    scope: Scope = Field(Scope.FULL, description="作用范围")
    witness: Optional[Any] = Field(None, exclude=True, description="见证扰动 (PerturbationTriple)")
    witness_vector: Optional[list[list[float]]] = Field(None, description="见证向量 [re, im] 对")
    witness_norm: Optional[float] = Field(None, description="见证扰动的三元范数")
    witness_verified: bool = Field(False, description="见证扰动是否通过复核")
    tight: bool = Field(False, description="见证扰动范数是否达到报告值")
    heuristic: bool = Field(False, description="是否依赖非凸启发式优化")
    notes: list[str] = Field(default_factory=list, description="附注")

    @field_serializer("value", "witness_norm")
    def _serialize_value(self, value: Optional[float]) -> Any:
        return _json_float(value)


class ImDistanceReport(DistanceReport):
    """🌊 到纯虚特征值的距离报告"""

    kind: DistanceKind = DistanceKind.IM
    omega_star: Optional[float] = Field(None, description="取得最小值的 ω")
    branch: Optional[Branch] = Field(None, description="取值分支")


class SingDistanceReport(DistanceReport):
    """🕳️ 到奇异束的距离报告 (witness_vector 为公共核向量)"""

    kind: DistanceKind = DistanceKind.SING


class HiDistanceReport(DistanceReport):
    """🪜 到高指标的距离报告"""

    kind: DistanceKind = DistanceKind.HI
    k_star: Optional[int] = Field(None, description="E 截断的秩亏数")
    formula_value: Optional[float] = Field(None, description="公式给出的值 (未经见证复核)")

    @field_serializer("formula_value")
    def _serialize_formula(self, value: Optional[float]) -> Any:
        return _json_float(value)


class InstReport(BaseModel):
    """
    🧯 到不稳定的距离

    d_inst = min{d_sing, d_hi, d_im}，mechanism 指明最先到达的边界
    """

    set_tag: SetTag = Field(..., description="扰动集合")
    scope: Scope = Field(..., description="作用范围")
    value: float = Field(..., description="最小值")
    bound_kind: BoundKind = Field(..., description="聚合后的界类型")
    mechanism: DistanceKind = Field(..., description="取得最小值的机制 (sing / hi / im)")
    sing: SingDistanceReport = Field(..., description="奇异距离分量")
    hi: HiDistanceReport = Field(..., description="高指标距离分量")
    im: ImDistanceReport = Field(..., description="纯虚距离分量")
    notes: list[str] = Field(default_factory=list, description="附注")

    @field_serializer("value")
    def _serialize_value(self, value: float) -> Any:
        return _json_float(value)


# ==========================================
# 🔍 预言机证书
# ==========================================

class CertificateRecord(BaseModel):
    """🔍 随机采样证书"""

    passed: bool = Field(..., description="是否通过")
    seed: int = Field(..., description="随机种子")
    samples: int = Field(..., description="采样数量")
    budget: float = Field(..., description="采样范数预算")
    witness_triggers: Optional[bool] = Field(None, description="见证扰动是否触发退化，无见证时为 None")
    counterexample: Optional[str] = Field(None, description="反例描述")
    notes: list[str] = Field(default_factory=list, description="附注")


class SdReadingComparison(BaseModel):
    """⚖️ S_d 完整扰动目标不同读法在同一 ω 网格上的最小距离"""

    eliminated: float = Field(..., description="精确消元 (实现所用)")
    printed: float = Field(..., description="字面读法")
    uniform: float = Field(..., description="ΔJ 项同样平方的读法")
    printed_gap: float = Field(..., description="(printed − eliminated) / eliminated")
    uniform_gap: float = Field(..., description="(uniform − eliminated) / eliminated")


# ==========================================
# 📈 同伦轨迹
# ==========================================

class HomotopyRow(BaseModel):
    """📈 同伦 λE − (J + tΔJ − R − tΔR) 在参数 t 处的谱"""

    t: float = Field(..., description="同伦参数")
    eigenvalues: list[tuple[float, float]] = Field(default_factory=list, description="有限特征值")
    n_inf: int = Field(..., description="无穷特征值个数")
    index: Optional[int] = Field(None, description="指标，奇异时为 None")
    regular: bool = Field(True, description="是否正则")


# ==========================================
# 📤 导出模型
# ==========================================

__all__ = [
    "Scope",               # 作用范围
    "SetTag",              # 扰动集合
    "DistanceKind",        # 距离类型
    "BoundKind",           # 界类型
    "Branch",              # 纯虚距离分支
    "StabilityBounds",     # 距离界汇总
    "StabilityVerdict",    # 稳定性判定
    "DistanceReport",      # 距离报告基类
    "ImDistanceReport",    # 纯虚距离报告
    "SingDistanceReport",  # 奇异距离报告
    "HiDistanceReport",    # 高指标距离报告
    "InstReport",          # 不稳定距离
    "CertificateRecord",   # 预言机证书
    "SdReadingComparison", # S_d 读法对照
    "HomotopyRow",         # 同伦轨迹行
    "complex_pairs",       # 复向量转换
]
