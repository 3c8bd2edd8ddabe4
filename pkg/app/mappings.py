"""
=============================================
🧭 结构化映射模块
=============================================
模块名称: mappings.py
模块功能:
    - 谱范数最小的 Hermitian 映射 Hx = y
    - 谱范数最小的反 Hermitian 映射 Sx = y
    - 谱范数最小的半正定映射 Hx = y
    - 使 (R+ΔR)x = 0 的半负定湮灭扰动
    - 伪逆一致化后的结构映射
约定:
    - 默认在 MappingResult 中报告不可行，strict=True 时抛出 InfeasibleMappingError
    - |Im(x*y)| ≤ 1e−12·‖x‖‖y‖ 视为零；1e−12 到 1e−8 之间视为可行但标记 marginal

"""

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

# ========== 内部模块导入 ==========
from app.exceptions import InfeasibleMappingError
from app.matrix_core import as_matrix, as_vector, spectral_norm


FEASIBLE_TOL = 1e-12      # 判定为零的相对阈值
MARGINAL_TOL = 1e-8       # 边界可行的相对阈值
DEPENDENT_SIN = 1e-10     # 线性相关分支的 sin∠(x, y) 阈值

MapStructure = Literal["herm", "skew", "psd_neg"]


# ==========================================
# 📦 结果类型
# ==========================================

@dataclass(frozen=True, eq=False)
class MappingResult:
    """
    🧭 结构化映射结果

    Attributes:
        matrix: 映射矩阵 (不可行时为 None)
        norm: 谱范数 (不可行时为 +∞)
        feasible: 是否可行
        infeasibility_reason: 不可行原因
        marginal: 可行性条件仅在放宽容差下成立
    """

    matrix: Optional[np.ndarray]
    norm: float
    feasible: bool
    infeasibility_reason: Optional[str] = None
    marginal: bool = False

    def negated(self) -> "MappingResult":
        if self.matrix is None:
            return self
        return MappingResult(-self.matrix, self.norm, self.feasible, self.infeasibility_reason, self.marginal)


def _infeasible(reason: str, strict: bool) -> MappingResult:
    if strict:
        raise InfeasibleMappingError(reason)
    return MappingResult(matrix=None, norm=float("inf"), feasible=False, infeasibility_reason=reason)


def _prepare(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.shape != y.shape:
        raise InfeasibleMappingError(f"x 与 y 长度不一致 ({x.size} vs {y.size})")
    if not np.any(x):
        raise InfeasibleMappingError("x 不能为零向量")
    return x, y


def _zero(n: int) -> MappingResult:
    return MappingResult(matrix=np.zeros((n, n), dtype=np.complex128), norm=0.0, feasible=True)


# ==========================================
# 🧭 Hermitian / 反 Hermitian 映射
# ==========================================

def min_hermitian_map(x, y, strict: bool = False) -> MappingResult:
    """
    🧭 最小谱范数 Hermitian 映射

    可行 ⇔ Im(x*y) = 0，最小范数 ‖y‖/‖x‖。
    线性无关时取 (‖y‖/‖x‖)·[u v]·[[−c, 1], [1, −c]]/(1−c²)·[u v]*，
    其中 u = y/‖y‖, v = x/‖x‖, c = v*u；线性相关时取 yx*/(x*x)。

    Args:
        x: 非零向量
        y: 目标向量
        strict: 不可行时是否抛出异常

    Returns:
        MappingResult: 映射结果

    Raises:
        InfeasibleMappingError: x = 0，或 strict=True 且不可行
    """
    x, y = _prepare(x, y)
    n = x.size
    ny, nx = np.linalg.norm(y), np.linalg.norm(x)
    if ny == 0.0:
        return _zero(n)

    inner = np.vdot(x, y)
    level = abs(inner.imag) / (nx * ny)
    if level > MARGINAL_TOL:
        return _infeasible(f"Im(x*y) = {inner.imag:.3e} ≠ 0", strict)
    marginal = level > FEASIBLE_TOL

    u = y / ny
    v = x / nx
    c = float(np.vdot(v, u).real)
    sin_angle = np.sqrt(max(0.0, 1.0 - c * c))
    if sin_angle < DEPENDENT_SIN:
        # 线性相关: y = αx，α 取实数
        alpha = float(inner.real) / (nx * nx)
        H = alpha * np.outer(x, x.conj()) / (nx * nx)
        return MappingResult(matrix=H, norm=abs(alpha), feasible=True, marginal=marginal)

    B = np.column_stack([u, v])
    core = np.array([[-c, 1.0], [1.0, -c]]) / (1.0 - c * c)
    H = (ny / nx) * B @ core @ B.conj().T
    H = (H + H.conj().T) / 2
    return MappingResult(matrix=H, norm=float(ny / nx), feasible=True, marginal=marginal)


def min_skew_map(x, y, strict: bool = False) -> MappingResult:
    """
    🧭 最小谱范数反 Hermitian 映射 Ŝ = −i·Ĥ(x, iy)

    可行 ⇔ Re(x*y) = 0，最小范数 ‖y‖/‖x‖。
    """
    x, y = _prepare(x, y)
    if np.linalg.norm(y) > 0:
        level = abs(np.vdot(x, y).real) / (np.linalg.norm(x) * np.linalg.norm(y))
        if level > MARGINAL_TOL:
            return _infeasible(f"Re(x*y) = {np.vdot(x, y).real:.3e} ≠ 0", strict)
    result = min_hermitian_map(x, 1j * y, strict=strict)
    if not result.feasible:
        return result
    S = -1j * result.matrix
    S = (S - S.conj().T) / 2
    return MappingResult(matrix=S, norm=result.norm, feasible=True, marginal=result.marginal)


# ==========================================
# ✅ 半定映射
# ==========================================

def min_psd_map(x, y, strict: bool = False) -> MappingResult:
    """
    ✅ 最小谱范数半正定映射 H̃ = yy*/(x*y)

    可行 ⇔ x*y > 0 (y = 0 时按 0/0 := 0 约定返回零矩阵)，范数 ‖y‖²/(x*y)。
    """
    x, y = _prepare(x, y)
    n = x.size
    ny = np.linalg.norm(y)
    if ny == 0.0:
        return _zero(n)
    inner = np.vdot(x, y)
    scale = np.linalg.norm(x) * ny
    level = abs(inner.imag) / scale
    if level > MARGINAL_TOL or inner.real <= FEASIBLE_TOL * scale:
        return _infeasible(f"x*y = {inner:.3e} 不是正实数", strict)
    marginal = level > FEASIBLE_TOL
    H = np.outer(y, y.conj()) / inner.real
    H = (H + H.conj().T) / 2
    return MappingResult(matrix=H, norm=float(ny * ny / inner.real), feasible=True, marginal=marginal)


def min_neg_semidef_annihilator(R, x) -> MappingResult:
    """
    ✅ 半负定湮灭扰动 ΔR = −(Rx)(Rx)*/(x*Rx)

    满足 (R+ΔR)x = 0 且 R+ΔR ≥ 0，范数 ‖Rx‖²/(x*Rx)；Rx = 0 时返回零矩阵。

    Args:
        R: Hermitian 半正定矩阵
        x: 非零向量
    """
    R = as_matrix(R, "R")
    x = as_vector(x, "x")
    if not np.any(x):
        raise InfeasibleMappingError("x 不能为零向量")
    n = x.size
    Rx = R @ x
    quad = float(np.vdot(x, Rx).real)
    if quad <= 1e-14 * max(spectral_norm(R), 1e-300) * float(np.vdot(x, x).real):
        return _zero(n)
    D = -np.outer(Rx, Rx.conj()) / quad
    D = (D + D.conj().T) / 2
    return MappingResult(matrix=D, norm=float(np.vdot(Rx, Rx).real / quad), feasible=True)


# ==========================================
# 🔗 伪逆一致化映射
# ==========================================

def pseudoinverse_consistent_map(N, A, x, structure: MapStructure, strict: bool = False) -> MappingResult:
    """
    🔗 伪逆一致化的结构映射

    在输入向量 Nx 处求解右端为 −(N*)†N*AN x 的结构映射；
    N 列正交时 (N*)† = N。

    Args:
        N: 列正交矩阵
        A: 方阵
        x: 非零系数向量
        structure: herm / skew / psd_neg (半负定)
        strict: 不可行时是否抛出异常
    """
    N = as_matrix(N, "N")
    A = as_matrix(A, "A")
    x = as_vector(x, "x")
    v = N @ x
    rhs = -N @ (N.conj().T @ (A @ v))
    if structure == "herm":
        return min_hermitian_map(v, rhs, strict=strict)
    if structure == "skew":
        return min_skew_map(v, rhs, strict=strict)
    if structure == "psd_neg":
        return min_psd_map(v, -rhs, strict=strict).negated()
    raise InfeasibleMappingError(f"未知结构 {structure!r}")


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "MappingResult",
    "min_hermitian_map",
    "min_skew_map",
    "min_psd_map",
    "min_neg_semidef_annihilator",
    "pseudoinverse_consistent_map",
]
