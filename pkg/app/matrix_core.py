"""
=============================================
🧮 稠密复矩阵核心模块
=============================================
模块名称: matrix_core.py
模块功能:
    - 输入规整 (复数 2 维数组、有限性检查)
    - Hermitian / 反 Hermitian 部分
    - 谱范数、半正定判定、Hermitian 特征分解、SVD
    - 零空间 / 值域基、堆叠矩阵最小奇异值
    - 矩阵束有限特征值 (dH 情形经阶梯形约化)
约定:
    - 所有函数为纯函数，可在线程间自由调用
    - 容差缺省读取 Config.rank_tol / Config.structure_tol

"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

# ========== 内部模块导入 ==========
from app.core.config import Config
from app.exceptions import (
    DimensionError,
    NonFiniteError,
    StructureError,
    StructureViolation,
)


# ==========================================
# 📦 分解结果类型
# ==========================================

@dataclass(frozen=True)
class HermitianEig:
    """
    📊 Hermitian 特征分解

    Attributes:
        eigenvalues: 升序实特征值
        eigenvectors: 酉矩阵，列为对应特征向量
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0]) if self.eigenvalues.size else float("inf")

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1]) if self.eigenvalues.size else float("-inf")


@dataclass(frozen=True)
class Svd:
    """
    📊 奇异值分解 A = U·diag(s)·V*

    Attributes:
        U: 左奇异向量
        s: 非增的奇异值
        V: 右奇异向量 (注意不是 V*)
    """

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray


# ==========================================
# 📥 输入规整
# ==========================================

def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """
    📥 规整为有限的 complex128 二维数组

    标量提升为 1×1 矩阵。

    Args:
        A: 类数组输入
        name: 矩阵名 (用于错误信息)

    Returns:
        np.ndarray: 复矩阵副本

    Raises:
        DimensionError: 维数超过 2
        NonFiniteError: 含 NaN / Inf
    """
    arr = np.array(A, dtype=np.complex128)
    if arr.ndim < 2:
        arr = np.atleast_2d(arr)
    if arr.ndim != 2:
        raise DimensionError(f"{name} 必须是二维矩阵", shapes=[arr.shape])
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(name)
    return arr


def as_vector(x, name: str = "vector") -> np.ndarray:
    """📥 规整为有限的一维复向量"""
    arr = np.array(x, dtype=np.complex128).ravel()
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(name)
    return arr


def _require_square(A: np.ndarray, name: str) -> None:
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} 必须是方阵", shapes=[A.shape])


# ==========================================
# 🧬 结构部分
# ==========================================

def hermitian_part(A) -> np.ndarray:
    """
    🧬 Hermitian 部分 (A + A*)/2

    Raises:
        DimensionError: 非方阵
    """
    A = as_matrix(A, "A")
    _require_square(A, "A")
    return (A + A.conj().T) / 2


def skew_part(A) -> np.ndarray:
    """🧬 反 Hermitian 部分 (A − A*)/2"""
    A = as_matrix(A, "A")
    _require_square(A, "A")
    return (A - A.conj().T) / 2


def spectral_norm(A) -> float:
    """
    📏 谱范数 σ_max(A)

    向量返回 2-范数，空矩阵返回 0。
    """
    arr = np.asarray(A, dtype=np.complex128)
    if arr.size == 0:
        return 0.0
    if arr.ndim == 1:
        return float(np.linalg.norm(arr))
    return float(np.linalg.norm(arr, 2))


def hermitian_residual(A: np.ndarray) -> float:
    """‖A − A*‖/2，即反 Hermitian 部分的谱范数"""
    return spectral_norm((A - A.conj().T) / 2)


# ==========================================
# 📊 分解
# ==========================================

def hermitian_eig(A) -> HermitianEig:
    """
    📊 Hermitian 特征分解 (对 A 的 Hermitian 部分调用 LAPACK heevd)

    Args:
        A: 方阵 (调用方保证近似 Hermitian)

    Returns:
        HermitianEig: 升序特征值 + 酉特征向量
    """
    H = hermitian_part(A)
    if H.shape[0] == 0:
        return HermitianEig(np.zeros(0), np.zeros((0, 0), dtype=np.complex128))
    w, V = sla.eigh(H)
    return HermitianEig(np.asarray(w, dtype=float), V)


def svd(A, full: bool = False) -> Svd:
    """📊 奇异值分解"""
    A = as_matrix(A, "A")
    U, s, Vh = sla.svd(A, full_matrices=full, lapack_driver="gesvd")
    return Svd(U, s, Vh.conj().T)


def sigma_min(A) -> float:
    """
    📉 最小奇异值 σ_min(A) (按列数计)

    行数少于列数时返回 0；零列时返回 +∞。
    """
    A = as_matrix(A, "A")
    m, n = A.shape
    if n == 0:
        return float("inf")
    if m < n:
        return 0.0
    return float(sla.svdvals(A)[-1])


def is_psd(A, tol: Optional[float] = None) -> bool:
    """
    ✅ 半正定判定

    λ_min(A) ≥ −tol·max(1, ‖A‖) 时返回 True。

    Args:
        A: Hermitian 方阵
        tol: 容差，缺省为 Config.structure_tol

    Returns:
        bool: 是否半正定

    Raises:
        StructureError: A 非 Hermitian (超出容差)
    """
    tol = Config.structure_tol if tol is None else tol
    A = as_matrix(A, "A")
    _require_square(A, "A")
    scale = max(1.0, spectral_norm(A))
    residual = hermitian_residual(A)
    if residual > max(tol, 1e-12) * scale:
        raise StructureError([StructureViolation("not_hermitian", "A", residual)])
    if A.shape[0] == 0:
        return True
    return hermitian_eig(A).lambda_min >= -tol * scale


# ==========================================
# 🧭 子空间
# ==========================================

def nullspace_basis(A, rank_tol: Optional[float] = None, scale: Optional[float] = None) -> np.ndarray:
    """
    🧭 右零空间的正交基

    取奇异值 ≤ rank_tol·scale 的右奇异向量，scale 缺省为 ‖A‖。

    Args:
        A: 任意矩阵
        rank_tol: 相对秩容差，缺省为 Config.rank_tol
        scale: 绝对阈值的参考量级

    Returns:
        np.ndarray: n×r 正交列矩阵 (列满秩时 r = 0)

    注意:
        零矩阵 (或无行矩阵) 的零空间为全空间
    """
    rank_tol = Config.rank_tol if rank_tol is None else rank_tol
    A = as_matrix(A, "A")
    m, n = A.shape
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    norm_a = spectral_norm(A)
    if m == 0 or norm_a == 0.0:
        return np.eye(n, dtype=np.complex128)
    threshold = rank_tol * (norm_a if scale is None else scale)
    U, s, Vh = sla.svd(A, full_matrices=True, lapack_driver="gesvd")
    rank = int(np.sum(s > threshold))
    return Vh[rank:].conj().T.copy()


def range_basis(A, rank_tol: Optional[float] = None, scale: Optional[float] = None) -> np.ndarray:
    """🧭 值域 (列空间) 的正交基"""
    rank_tol = Config.rank_tol if rank_tol is None else rank_tol
    A = as_matrix(A, "A")
    m, n = A.shape
    norm_a = spectral_norm(A)
    if norm_a == 0.0 or n == 0:
        return np.zeros((m, 0), dtype=np.complex128)
    threshold = rank_tol * (norm_a if scale is None else scale)
    U, s, _ = sla.svd(A, full_matrices=False, lapack_driver="gesvd")
    rank = int(np.sum(s > threshold))
    return U[:, :rank].copy()


def complement_basis(B: np.ndarray, n: int) -> np.ndarray:
    """
    🧭 正交列 B 在 ℂⁿ 中的正交补

    Args:
        B: n×k 正交列矩阵
        n: 全空间维数
    """
    if B.shape[1] == 0:
        return np.eye(n, dtype=np.complex128)
    if B.shape[1] >= n:
        return np.zeros((n, 0), dtype=np.complex128)
    U, _, _ = sla.svd(B, full_matrices=True, lapack_driver="gesvd")
    return U[:, B.shape[1]:].copy()


def hermitian_kernel_basis(E, tol: Optional[float] = None) -> np.ndarray:
    """
    🧭 半正定 E 的核基 (特征向量形式)

    对角 E 返回自然基向量，判定依据为 λ ≤ tol·max(1, ‖E‖)。
    """
    tol = Config.rank_tol if tol is None else tol
    E = as_matrix(E, "E")
    n = E.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    eig = hermitian_eig(E)
    threshold = tol * max(1.0, spectral_norm(E))
    mask = np.abs(eig.eigenvalues) <= threshold
    return eig.eigenvectors[:, mask].copy()


def stacked_sigma_min(mats: Sequence) -> float:
    """
    📉 竖直堆叠矩阵的最小奇异值

    Args:
        mats: 列数相同的矩阵列表

    Returns:
        float: σ_min([A1; A2; ...])

    Raises:
        DimensionError: 列数不一致
    """
    arrays = [as_matrix(M, f"M{i}") for i, M in enumerate(mats)]
    if not arrays:
        raise DimensionError("堆叠矩阵列表为空")
    cols = {a.shape[1] for a in arrays}
    if len(cols) != 1:
        raise DimensionError("堆叠矩阵列数不一致", shapes=[a.shape for a in arrays])
    return sigma_min(np.vstack(arrays))


# ==========================================
# 🎼 矩阵束特征值
# ==========================================

def pencil_finite_eigs(E, A) -> np.ndarray:
    """
    🎼 矩阵束 λE − A 的有限特征值

    E 可逆时直接计算 E⁻¹A 的特征值；否则按 dH 结构
    (J = A 的反 Hermitian 部分, R = −A 的 Hermitian 部分) 走阶梯形约化。

    Args:
        E: 半正定 Hermitian 方阵
        A: 同阶方阵 (J − R)

    Returns:
        np.ndarray: 排序后的有限特征值

    Raises:
        SingularPencilError: 矩阵束奇异 (携带公共核向量)
    """
    E = as_matrix(E, "E")
    A = as_matrix(A, "A")
    _require_square(E, "E")
    if E.shape != A.shape:
        raise DimensionError("E 与 A 尺寸不一致", shapes=[E.shape, A.shape])
    n = E.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.complex128)
    if sigma_min(E) > Config.rank_tol * max(1.0, spectral_norm(E)):
        eigs = sla.eigvals(np.linalg.solve(E, A))
        return np.sort_complex(eigs)

    from app.staircase import compute_staircase, finite_spectrum
    from app.system import DhdaeSystem

    system = DhdaeSystem(E=hermitian_part(E), J=skew_part(A), R=-hermitian_part(A))
    return finite_spectrum(compute_staircase(system))


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "HermitianEig",
    "Svd",
    "as_matrix",
    "as_vector",
    "hermitian_part",
    "skew_part",
    "spectral_norm",
    "hermitian_residual",
    "hermitian_eig",
    "svd",
    "sigma_min",
    "is_psd",
    "nullspace_basis",
    "range_basis",
    "complement_basis",
    "hermitian_kernel_basis",
    "stacked_sigma_min",
    "pencil_finite_eigs",
]
