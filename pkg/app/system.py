"""
=============================================
🏗️ dHDAE 系统模型模块
=============================================
模块名称: system.py
模块功能:
    - DhdaeSystem / GeneralizedDhdae / PerturbationTriple 类型
    - 结构校验 (一次性收集全部违反项，不自动对称化)
    - Q 因子消去
    - 有损的结构投影 (仅用于数据导入)
    - 典型算例生成 (机械系统、Stokes、多孔弹性、车内声场、直流电网)
    - 随机有效系统生成 (测试与预言机使用)

"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

import numpy as np

# ========== 内部模块导入 ==========
from app.core.config import Config
from app.core.logger import log
from app.exceptions import (
    DimensionError,
    ParameterError,
    QSingularError,
    StructureError,
    StructureViolation,
)
from app.matrix_core import (
    as_matrix,
    hermitian_eig,
    hermitian_part,
    hermitian_residual,
    sigma_min,
    skew_part,
    spectral_norm,
)
from app.models import SetTag


# ==========================================
# 📦 系统类型
# ==========================================

@dataclass(frozen=True, eq=False)
class DhdaeSystem:
    """
    🏗️ 耗散 Hamilton 微分代数系统 E·ẋ = (J − R)x

    Attributes:
        E: Hermitian 半正定
        J: 反 Hermitian
        R: Hermitian 半正定

    注意:
        直接构造不做校验，对外输入请使用 validate()
    """

    E: np.ndarray
    J: np.ndarray
    R: np.ndarray

    @property
    def n(self) -> int:
        return int(self.E.shape[0])

    @property
    def norm_scale(self) -> float:
        """max(‖E‖, ‖J‖, ‖R‖)，三者均为零时取 1"""
        scale = max(spectral_norm(self.E), spectral_norm(self.J), spectral_norm(self.R))
        return scale if scale > 0 else 1.0

    @property
    def A(self) -> np.ndarray:
        """J − R"""
        return self.J - self.R


@dataclass(frozen=True, eq=False)
class GeneralizedDhdae:
    """🏗️ 带 Q 因子的系统 E·ẋ = (J − R)Qx"""

    E: np.ndarray
    J: np.ndarray
    R: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True, eq=False)
class PerturbationTriple:
    """
    🎯 结构化扰动 (ΔE, ΔJ, ΔR)

    Attributes:
        dE, dJ, dR: 扰动矩阵
        set_tag: 所属集合，None 表示非结构化扰动
    """

    dE: np.ndarray
    dJ: np.ndarray
    dR: np.ndarray
    set_tag: Optional[SetTag] = None

    @property
    def norm(self) -> float:
        """三元范数 √(‖ΔE‖² + ‖ΔJ‖² + ‖ΔR‖²)"""
        return float(np.sqrt(
            spectral_norm(self.dE) ** 2 + spectral_norm(self.dJ) ** 2 + spectral_norm(self.dR) ** 2
        ))

    def scaled(self, s: float) -> "PerturbationTriple":
        return PerturbationTriple(s * self.dE, s * self.dJ, s * self.dR, self.set_tag)

    @classmethod
    def zeros(cls, n: int, set_tag: Optional[SetTag] = None) -> "PerturbationTriple":
        Z = np.zeros((n, n), dtype=np.complex128)
        return cls(Z.copy(), Z.copy(), Z.copy(), set_tag)

    def membership_violations(self, sys: DhdaeSystem, tol: Optional[float] = None) -> list[StructureViolation]:
        """
        🔍 检查扰动是否属于 set_tag 对应的集合

        Args:
            sys: 被扰动的系统
            tol: 相对容差，缺省为 Config.structure_tol

        Returns:
            list: 违反项 (空列表表示属于该集合)
        """
        tol = Config.structure_tol if tol is None else tol
        scale = max(1.0, sys.norm_scale, self.norm)
        violations: list[StructureViolation] = []

        residual = hermitian_residual(self.dE)
        if residual > tol * scale:
            violations.append(StructureViolation("not_hermitian", "dE", residual))
        residual = spectral_norm((self.dJ + self.dJ.conj().T) / 2)
        if residual > tol * scale:
            violations.append(StructureViolation("not_skew", "dJ", residual))
        residual = hermitian_residual(self.dR)
        if residual > tol * scale:
            violations.append(StructureViolation("not_hermitian", "dR", residual))

        if self.set_tag is None:
            return violations

        if self.set_tag.scope.value == "jr":
            norm_de = spectral_norm(self.dE)
            if norm_de > tol * scale:
                violations.append(StructureViolation("not_zero", "dE", norm_de))
        if self.set_tag.is_decreasing:
            for name, M in (("dE", self.dE), ("dR", self.dR)):
                top = hermitian_eig(M).lambda_max if M.shape[0] else 0.0
                if top > tol * scale:
                    violations.append(StructureViolation("not_nsd", name, top))
        for name, M in (("E+dE", sys.E + self.dE), ("R+dR", sys.R + self.dR)):
            low = hermitian_eig(M).lambda_min if M.shape[0] else 0.0
            if low < -tol * scale:
                violations.append(StructureViolation("not_psd", name, -low))
        return violations


# ==========================================
# ✅ 结构校验
# ==========================================

def validate(E, J, R, tol: Optional[float] = None) -> DhdaeSystem:
    """
    ✅ 校验 dHDAE 结构

    检查 E = E* ≥ 0, J = −J*, R = R* ≥ 0，收集全部违反项后统一抛出。

    Args:
        E, J, R: 同阶方阵
        tol: 相对容差，缺省为 Config.structure_tol

    Returns:
        DhdaeSystem: 校验通过的系统 (矩阵按原样保存)

    Raises:
        DimensionError: 非方阵、尺寸不一致或阶数为 0
        NonFiniteError: 含 NaN / Inf
        StructureError: 结构违反 (含残差)
    """
    tol = Config.structure_tol if tol is None else tol
    E = as_matrix(E, "E")
    J = as_matrix(J, "J")
    R = as_matrix(R, "R")
    shapes = [E.shape, J.shape, R.shape]
    if len(set(shapes)) != 1 or E.shape[0] != E.shape[1]:
        raise DimensionError("E、J、R 必须是同阶方阵", shapes=shapes)
    if E.shape[0] == 0:
        raise DimensionError("系统阶数必须至少为 1", shapes=shapes)

    violations: list[StructureViolation] = []
    for name, M in (("E", E), ("R", R)):
        scale = max(1.0, spectral_norm(M))
        residual = hermitian_residual(M)
        if residual > tol * scale:
            violations.append(StructureViolation("not_hermitian", name, residual))
            continue
        if M.shape[0]:
            low = hermitian_eig(M).lambda_min
            if low < -tol * scale:
                violations.append(StructureViolation("not_psd", name, -low))

    residual = spectral_norm((J + J.conj().T) / 2)
    if residual > tol * max(1.0, spectral_norm(J)):
        violations.append(StructureViolation("not_skew", "J", residual))

    if violations:
        raise StructureError(violations)
    return DhdaeSystem(E=E, J=J, R=R)


def project_to_structure(E, J, R) -> DhdaeSystem:
    """
    ⚠️ 有损结构投影

    取 Hermitian / 反 Hermitian 部分并把负特征值截断为 0，仅供数据导入使用。
    """
    def clip(M: np.ndarray) -> np.ndarray:
        eig = hermitian_eig(M)
        w = np.clip(eig.eigenvalues, 0.0, None)
        V = eig.eigenvectors
        return (V * w) @ V.conj().T

    E = as_matrix(E, "E")
    J = as_matrix(J, "J")
    R = as_matrix(R, "R")
    E_p, J_p, R_p = clip(hermitian_part(E)), skew_part(J), clip(hermitian_part(R))
    loss = max(spectral_norm(E - E_p), spectral_norm(J - J_p), spectral_norm(R - R_p))
    log.warning(f"⚠️ 结构投影为有损操作，最大改动 {loss:.3e}")
    return DhdaeSystem(E=E_p, J=J_p, R=R_p)


def reduce_q(sys: GeneralizedDhdae, tol: Optional[float] = None) -> DhdaeSystem:
    """
    🧮 消去 Q 因子

    左乘 Q*: Ẽ = Q*E, J̃ = Q*JQ, R̃ = Q*RQ。

    Args:
        sys: 带 Q 因子的系统
        tol: 结构容差

    Returns:
        DhdaeSystem: 校验通过的约化系统

    Raises:
        QSingularError: σ_min(Q) ≤ rank_tol·‖Q‖
        StructureError: 约化后结构不成立
    """
    Q = as_matrix(sys.Q, "Q")
    s_min = sigma_min(Q)
    threshold = Config.rank_tol * spectral_norm(Q)
    if s_min <= threshold:
        raise QSingularError(s_min, threshold)
    Qh = Q.conj().T
    return validate(Qh @ as_matrix(sys.E, "E"), Qh @ as_matrix(sys.J, "J") @ Q, Qh @ as_matrix(sys.R, "R") @ Q, tol)


def apply_perturbation(sys: DhdaeSystem, triple: PerturbationTriple, check: bool = True) -> DhdaeSystem:
    """
    ➕ 施加扰动

    Args:
        sys: 原系统
        triple: 扰动
        check: 是否校验集合归属与扰动后结构

    Raises:
        StructureError: check=True 且扰动不属于集合或破坏结构
    """
    if triple.dE.shape != sys.E.shape:
        raise DimensionError("扰动尺寸与系统不一致", shapes=[sys.E.shape, triple.dE.shape])
    if check:
        violations = triple.membership_violations(sys)
        if violations:
            raise StructureError(violations)
        return validate(sys.E + triple.dE, sys.J + triple.dJ, sys.R + triple.dR)
    return DhdaeSystem(E=sys.E + triple.dE, J=sys.J + triple.dJ, R=sys.R + triple.dR)


# ==========================================
# 🏭 算例生成
# ==========================================

class ExampleKind(str, Enum):
    """🏭 内置算例"""

    MECHANICAL = "mechanical"
    STOKES = "stokes"
    POROELASTIC = "poroelastic"
    CAR_ACOUSTIC = "car_acoustic"
    DC_NETWORK = "dc_network"

    @property
    def label(self) -> str:
        labels = {
            ExampleKind.MECHANICAL: "阻尼机械系统",
            ExampleKind.STOKES: "Stokes 方程离散",
            ExampleKind.POROELASTIC: "多孔弹性介质",
            ExampleKind.CAR_ACOUSTIC: "车内声场",
            ExampleKind.DC_NETWORK: "直流电网",
        }
        return labels.get(self, "未知")


def _param(params: dict, key: str, default: Any, kind: ExampleKind) -> np.ndarray:
    value = params.get(key, default)
    try:
        return as_matrix(value, key)
    except Exception as e:
        raise ParameterError(key, f"无法解析为矩阵: {e}", kind.value) from e


def _require(M: np.ndarray, key: str, kind: ExampleKind, definite: bool) -> None:
    """要求 M Hermitian 且半正定 (definite=True 时正定)"""
    scale = max(1.0, spectral_norm(M))
    if M.shape[0] != M.shape[1] or hermitian_residual(M) > 1e-12 * scale:
        raise ParameterError(key, "必须是 Hermitian 方阵", kind.value)
    low = hermitian_eig(M).lambda_min
    if definite and low <= 1e-12 * scale:
        raise ParameterError(key, f"必须正定 (λ_min={low:.3e})", kind.value)
    if not definite and low < -1e-12 * scale:
        raise ParameterError(key, f"必须半正定 (λ_min={low:.3e})", kind.value)


def _same_size(kind: ExampleKind, **mats: np.ndarray) -> int:
    sizes = {M.shape[0] for M in mats.values()}
    if len(sizes) != 1:
        raise ParameterError(", ".join(mats), "尺寸不一致", kind.value)
    return sizes.pop()


def _mechanical(kind: ExampleKind, params: dict, defaults: dict) -> DhdaeSystem:
    M = _param(params, "M", defaults["M"], kind)
    D = _param(params, "D", defaults["D"], kind)
    K = _param(params, "K", defaults["K"], kind)
    _require(M, "M", kind, definite=False)
    _require(D, "D", kind, definite=False)
    _require(K, "K", kind, definite=True)
    m = _same_size(kind, M=M, D=D, K=K)
    Z = np.zeros((m, m), dtype=np.complex128)
    E = np.block([[M, Z], [Z, K]])
    J = np.block([[Z, -K], [K, Z]])
    R = np.block([[D, Z], [Z, Z]])
    return validate(E, J, R)


def _car_acoustic_defaults() -> dict:
    # 4 自由度，质量矩阵秩 2
    K = 2 * np.eye(4) - np.eye(4, k=1) - np.eye(4, k=-1)
    return {
        "M": np.diag([1.0, 2.0, 0.0, 0.0]),
        "D": np.diag([0.5, 0.0, 0.2, 0.1]),
        "K": K,
    }


def _stokes(kind: ExampleKind, params: dict) -> DhdaeSystem:
    Mv = _param(params, "Mv", np.eye(2), kind)
    Mp = _param(params, "Mp", [[0.0]], kind)
    A = _param(params, "A", -np.eye(2), kind)
    B = _param(params, "B", [[1.0], [0.0]], kind)
    C = _param(params, "C", [[0.0]], kind)
    _require(Mv, "Mv", kind, definite=True)
    _require(Mp, "Mp", kind, definite=False)
    _require(C, "C", kind, definite=False)
    if A.shape != Mv.shape:
        raise ParameterError("A", "尺寸必须与 Mv 一致", kind.value)
    if B.shape != (Mv.shape[0], Mp.shape[0]) or C.shape != Mp.shape:
        raise ParameterError("B, C", "尺寸与 Mv / Mp 不匹配", kind.value)
    _require(-hermitian_part(A), "-herm(A)", kind, definite=False)

    Zvp = np.zeros(B.shape, dtype=np.complex128)
    E = np.block([[Mv, Zvp], [Zvp.conj().T, Mp]])
    L = np.block([[A, B], [-B.conj().T, -C]])
    # J − R 的分裂: J 取反 Hermitian 部分，R 取 Hermitian 部分的负值
    return validate(E, skew_part(L), -hermitian_part(L))


def _poroelastic(kind: ExampleKind, params: dict) -> DhdaeSystem:
    Y = _param(params, "Y", [[1e-3]], kind)
    A = _param(params, "A", [[2.0]], kind)
    M = _param(params, "M", [[1.0]], kind)
    D = _param(params, "D", [[1.0]], kind)
    K = _param(params, "K", [[1.0]], kind)
    _require(Y, "Y", kind, definite=False)
    _require(A, "A", kind, definite=True)
    _require(M, "M", kind, definite=True)
    _require(K, "K", kind, definite=False)
    nw = _same_size(kind, Y=Y, A=A)
    npr = _same_size(kind, M=M, K=K)
    if D.shape != (npr, nw):
        raise ParameterError("D", f"尺寸必须为 ({npr}, {nw})", kind.value)

    Zww = np.zeros((nw, nw), dtype=np.complex128)
    Zwp = np.zeros((nw, npr), dtype=np.complex128)
    Zpp = np.zeros((npr, npr), dtype=np.complex128)
    E = np.block([[Y, Zww, Zwp], [Zww, A, Zwp], [Zwp.T, Zwp.T, M]])
    J = np.block([[Zww, -A, D.conj().T], [A, Zww, Zwp], [-D, Zwp.T, Zpp]])
    R = np.block([[Zww, Zww, Zwp], [Zww, Zww, Zwp], [Zwp.T, Zwp.T, K]])
    return validate(E, J, R)


def _dc_network(kind: ExampleKind, params: dict) -> DhdaeSystem:
    values = {}
    for key in ("L", "C1", "C2", "R_L", "R_G", "R_R"):
        try:
            value = float(params.get(key, 1.0))
        except (TypeError, ValueError) as e:
            raise ParameterError(key, "必须是实数", kind.value) from e
        if not value > 0:
            raise ParameterError(key, f"必须为正 (当前 {value})", kind.value)
        values[key] = value

    E = np.diag([values["L"], values["C1"], values["C2"], 0.0, 0.0])
    J = np.array([
        [0, -1, 1, 0, 0],
        [1, 0, 0, -1, 0],
        [-1, 0, 0, 0, -1],
        [0, 1, 0, 0, 0],
        [0, 0, 1, 0, 0],
    ], dtype=float)
    R = np.diag([values["R_L"], 0.0, 0.0, values["R_G"], values["R_R"]])
    return validate(E, J, R)


def make_example(kind: ExampleKind | str, params: Optional[dict] = None) -> DhdaeSystem:
    """
    🏭 生成内置算例

    Args:
        kind: 算例类型
        params: 参数字典 (矩阵或标量，标量提升为 1×1)

    Returns:
        DhdaeSystem: 校验通过的系统

    Raises:
        ParameterError: 未知算例或参数违反定性要求
    """
    try:
        kind = ExampleKind(kind)
    except ValueError as e:
        raise ParameterError("kind", f"未知算例 {kind!r}") from e
    params = dict(params or {})

    if kind == ExampleKind.MECHANICAL:
        system = _mechanical(kind, params, {"M": [[1.0]], "D": [[0.0]], "K": [[1.0]]})
    elif kind == ExampleKind.CAR_ACOUSTIC:
        system = _mechanical(kind, params, _car_acoustic_defaults())
    elif kind == ExampleKind.STOKES:
        system = _stokes(kind, params)
    elif kind == ExampleKind.POROELASTIC:
        system = _poroelastic(kind, params)
    else:
        system = _dc_network(kind, params)

    log.debug(f"🏭 生成算例 {kind.label}: n={system.n}")
    return system


def random_system(
    n: int,
    rng: np.random.Generator,
    rank_e: Optional[int] = None,
    rank_r: Optional[int] = None,
    real: bool = False,
) -> DhdaeSystem:
    """
    🎲 随机有效 dHDAE 系统

    Args:
        n: 维数
        rng: numpy 随机数生成器
        rank_e: E 的秩 (缺省 n)
        rank_r: R 的秩 (缺省 n)
        real: 是否只生成实矩阵
    """
    def sample(shape) -> np.ndarray:
        X = rng.standard_normal(shape)
        if not real:
            X = X + 1j * rng.standard_normal(shape)
        return X

    def psd(rank: int) -> np.ndarray:
        F = sample((n, rank))
        return F @ F.conj().T / max(rank, 1)

    rank_e = n if rank_e is None else rank_e
    rank_r = n if rank_r is None else rank_r
    G = sample((n, n))
    return DhdaeSystem(E=hermitian_part(psd(rank_e)), J=skew_part(G), R=hermitian_part(psd(rank_r)))


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "DhdaeSystem",
    "GeneralizedDhdae",
    "PerturbationTriple",
    "ExampleKind",
    "validate",
    "project_to_structure",
    "reduce_q",
    "apply_perturbation",
    "make_example",
    "random_system",
]
