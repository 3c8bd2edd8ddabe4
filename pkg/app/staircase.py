"""
=============================================
🪜 阶梯形与稳定性判定模块
=============================================
模块名称: staircase.py
模块功能:
    - 酉阶梯形 P*EP, P*JP, P*RP 的构造 (逐级秩揭示分解)
    - 正则性 / 指标判定
    - 有限谱 (Schur 补约化)
    - 鲁棒渐近稳定性判定及五步距离界
    - 非酉细化形式 (诊断用) 与有限谱子束
构造步骤:
    1. E 的谱分解: 值域 U_r 与核 N
    2. 核内压缩 T = N*(J−R)N，其零空间上 R 与 N*JN 同时为零
    3. 在该零空间上对 U_r*J 做 SVD，分出 n₄ (与 E 值域耦合) 与 n₅ (公共核)
    每一步均为酉变换，合成的 P 为酉矩阵

"""

import hashlib
import itertools
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
from cachetools import LRUCache

# ========== 内部模块导入 ==========
from app.core.config import Config
from app.core.logger import log
from app.exceptions import RankAmbiguityError, SingularPencilError
from app.matrix_core import (
    complement_basis,
    hermitian_eig,
    hermitian_kernel_basis,
    hermitian_part,
    nullspace_basis,
    sigma_min,
    skew_part,
    spectral_norm,
    stacked_sigma_min,
)
from app.models import StabilityBounds, StabilityVerdict
from app.system import DhdaeSystem, validate


# ==========================================
# 📦 阶梯形类型
# ==========================================

@dataclass(frozen=True, eq=False)
class StaircaseForm:
    """
    🪜 酉阶梯形

    Attributes:
        P: 酉变换矩阵
        block_sizes: (n1, n2, n3, n4, n5)，n4 = n1
        E_hat, J_hat, R_hat: 变换后的矩阵 (零块已精确置零)
        rank_tol: 构造时使用的秩容差
        scale: 绝对阈值的参考量级 max(‖E‖, ‖J‖, ‖R‖)
    """

    P: np.ndarray
    block_sizes: tuple[int, int, int, int, int]
    E_hat: np.ndarray
    J_hat: np.ndarray
    R_hat: np.ndarray
    rank_tol: float
    scale: float

    def slices(self) -> list[slice]:
        """五个块对应的下标切片"""
        offsets = np.concatenate([[0], np.cumsum(self.block_sizes)]).astype(int)
        return [slice(int(offsets[i]), int(offsets[i + 1])) for i in range(5)]

    def block(self, which: str, i: int, j: int) -> np.ndarray:
        """
        🔍 取块 (1 起始编号)

        Args:
            which: "E" / "J" / "R"
            i, j: 块行 / 块列编号 (1..5)
        """
        M = {"E": self.E_hat, "J": self.J_hat, "R": self.R_hat}[which]
        s = self.slices()
        return M[s[i - 1], s[j - 1]]

    def columns(self, i: int) -> np.ndarray:
        """P 中第 i 块的列"""
        return self.P[:, self.slices()[i - 1]]


@dataclass(frozen=True)
class Classification:
    """🏷️ 正则性与指标 (奇异束的指标为 None)"""

    regular: bool
    index: Optional[int]


# ==========================================
# 🔧 构造
# ==========================================

def _allowed_masks(sizes: tuple[int, ...]) -> dict[str, np.ndarray]:
    """按阶梯形零模式给出允许非零的位置"""
    labels = np.repeat(np.arange(5), sizes)
    row, col = np.meshgrid(labels, labels, indexing="ij")
    e_mask = (row <= 1) & (col <= 1)
    r_mask = (row <= 2) & (col <= 2)
    j_mask = r_mask | ((row == 3) & (col == 0)) | ((row == 0) & (col == 3))
    return {"E": e_mask, "J": j_mask, "R": r_mask}


def compute_staircase(sys: DhdaeSystem, rank_tol: Optional[float] = None) -> StaircaseForm:
    """
    🪜 计算酉阶梯形

    Args:
        sys: 有效 dHDAE 系统
        rank_tol: 相对秩容差，缺省为 Config.rank_tol

    Returns:
        StaircaseForm: 阶梯形

    Raises:
        RankAmbiguityError: 零块残差超过 100·rank_tol·scale
    """
    rank_tol = Config.rank_tol if rank_tol is None else rank_tol
    n = sys.n
    E, J, R = sys.E, sys.J, sys.R
    scale = sys.norm_scale
    threshold = rank_tol * scale

    # 1. E 的值域与核
    eig = hermitian_eig(E)
    kernel_mask = np.abs(eig.eigenvalues) <= rank_tol * max(1.0, spectral_norm(E))
    U_r = eig.eigenvectors[:, ~kernel_mask]
    N = eig.eigenvectors[:, kernel_mask]

    # 2. 核内压缩 T = N*(J−R)N
    if N.shape[1]:
        T = N.conj().T @ (J - R) @ N
        null_t = nullspace_basis(T, rank_tol, scale=scale)
        comp_t = complement_basis(null_t, N.shape[1])
    else:
        null_t = np.zeros((0, 0), dtype=np.complex128)
        comp_t = np.zeros((0, 0), dtype=np.complex128)
    X3 = N @ comp_t
    Zb = N @ null_t

    # 3. 与 E 值域的耦合 U_r*J·Zb
    if Zb.shape[1] and U_r.shape[1]:
        W = U_r.conj().T @ J @ Zb
        U_w, s_w, Vh_w = sla.svd(W, full_matrices=True, lapack_driver="gesvd")
        rho = int(np.sum(s_w > threshold))
        V_w = Vh_w.conj().T
        Z4 = Zb @ V_w[:, :rho]
        Z5 = Zb @ V_w[:, rho:]
        X1 = U_r @ U_w[:, :rho]
        X2 = U_r @ U_w[:, rho:]
    else:
        Z4 = np.zeros((n, 0), dtype=np.complex128)
        Z5 = Zb
        X1 = np.zeros((n, 0), dtype=np.complex128)
        X2 = U_r

    P = np.hstack([X1, X2, X3, Z4, Z5])
    sizes = (X1.shape[1], X2.shape[1], X3.shape[1], Z4.shape[1], Z5.shape[1])

    transformed = {
        "E": P.conj().T @ E @ P,
        "J": P.conj().T @ J @ P,
        "R": P.conj().T @ R @ P,
    }
    masks = _allowed_masks(sizes)
    limit = 100 * threshold
    for name, M in transformed.items():
        outside = np.where(masks[name], 0, M)
        residual = spectral_norm(outside) if outside.size else 0.0
        if residual > limit:
            raise RankAmbiguityError(f"{name}_hat", residual, limit)
        transformed[name] = np.where(masks[name], M, 0)

    log.debug(f"🪜 阶梯形块大小 (n1..n5) = {sizes}")
    return StaircaseForm(
        P=P,
        block_sizes=sizes,
        E_hat=transformed["E"],
        J_hat=transformed["J"],
        R_hat=transformed["R"],
        rank_tol=rank_tol,
        scale=scale,
    )


def classify(sc: StaircaseForm) -> Classification:
    """
    🏷️ 正则性与指标

    正则 ⇔ n5 = 0；E 可逆时指标 0，n1 = n4 = 0 时指标 1，否则指标 2。
    """
    n1, n2, n3, n4, n5 = sc.block_sizes
    if n5 > 0:
        return Classification(regular=False, index=None)
    if n3 + n4 == 0:
        return Classification(regular=True, index=0)
    if n1 == 0:
        return Classification(regular=True, index=1)
    return Classification(regular=True, index=2)


def _schur_complement(sc: StaircaseForm) -> np.ndarray:
    """S = A22 − A23·A33⁻¹·A32，A = Ĵ − R̂"""
    A = sc.J_hat - sc.R_hat
    s = sc.slices()
    A22 = A[s[1], s[1]]
    if sc.block_sizes[2] == 0:
        return A22
    A23, A32, A33 = A[s[1], s[2]], A[s[2], s[1]], A[s[2], s[2]]
    return A22 - A23 @ np.linalg.solve(A33, A32)


def _singular_witness(sc: StaircaseForm) -> np.ndarray:
    return sc.columns(5)[:, 0]


def finite_spectrum(sc: StaircaseForm) -> np.ndarray:
    """
    🎼 有限特征值

    λE₂₂ − S 的特征值，S 为 Ĵ − R̂ 的 (3,3) 块 Schur 补在 (2,2) 块上的部分。

    Returns:
        np.ndarray: 排序后的有限特征值 (n2 = 0 时为空)

    Raises:
        SingularPencilError: 矩阵束奇异
    """
    if sc.block_sizes[4] > 0:
        raise SingularPencilError(_singular_witness(sc), reason=f"n5={sc.block_sizes[4]}")
    if sc.block_sizes[1] == 0:
        return np.zeros(0, dtype=np.complex128)
    s = sc.slices()
    E22 = hermitian_part(sc.E_hat[s[1], s[1]])
    S = _schur_complement(sc)
    L = sla.cholesky(E22, lower=True)
    X = sla.solve_triangular(L, S, lower=True)
    X = sla.solve_triangular(L, X.conj().T, lower=True).conj().T
    return np.sort_complex(sla.eigvals(X))


def reduced_pencil(sc: StaircaseForm) -> DhdaeSystem:
    """
    🎼 有限谱子束 (E22, skew(S), −herm(S))，经校验后返回
    """
    if sc.block_sizes[4] > 0:
        raise SingularPencilError(_singular_witness(sc), reason="奇异束没有有限谱子束")
    s = sc.slices()
    E22 = hermitian_part(sc.E_hat[s[1], s[1]])
    if sc.block_sizes[1] == 0:
        empty = np.zeros((0, 0), dtype=np.complex128)
        return DhdaeSystem(E=empty, J=empty.copy(), R=empty.copy())
    S = _schur_complement(sc)
    return validate(E22, skew_part(S), -hermitian_part(S))


def refined_form(sc: StaircaseForm) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    🔬 非酉细化形式 (仅供诊断)

    在阶梯形上再做合同变换 Z (L = Z*): E11 对角化并消去 E21 耦合，
    且 J41 = I, J14 = −I。

    Returns:
        tuple: (Z, Ẽ, J̃, R̃)，Z 相对阶梯形坐标
    """
    n = sum(sc.block_sizes)
    s = sc.slices()
    Z = np.eye(n, dtype=np.complex128)
    n1 = sc.block_sizes[0]
    if n1:
        E11 = sc.E_hat[s[0], s[0]]
        E21 = sc.E_hat[s[1], s[0]]
        E22 = sc.E_hat[s[1], s[1]]
        if sc.block_sizes[1]:
            coupling = np.linalg.solve(E22, E21)
            schur = E11 - E21.conj().T @ coupling
        else:
            coupling = np.zeros((0, n1), dtype=np.complex128)
            schur = E11
        eig = hermitian_eig(schur)
        W = eig.eigenvectors
        Z[s[0], s[0]] = W
        Z[s[1], s[0]] = -coupling @ W
        J41 = sc.J_hat[s[3], s[0]]
        Z[s[3], s[3]] = np.linalg.inv(J41 @ W).conj().T
    Zh = Z.conj().T
    return Z, Zh @ sc.E_hat @ Z, Zh @ sc.J_hat @ Z, Zh @ sc.R_hat @ Z


# ==========================================
# 🛡️ 稳定性判定
# ==========================================

_verdict_cache: LRUCache = LRUCache(maxsize=256)
_verdict_lock = threading.Lock()


def _fingerprint(sys: DhdaeSystem, rank_tol: float, with_reduced_bound: bool) -> str:
    h = hashlib.blake2b(digest_size=16)
    for M in (sys.E, sys.J, sys.R):
        arr = np.ascontiguousarray(M, dtype=np.complex128)
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    h.update(f"{rank_tol!r}|{with_reduced_bound}|{Config.submatrix_cap}".encode())
    return h.hexdigest()


def principal_submatrices_nonsingular(T: np.ndarray, threshold: float, cap: int) -> tuple[bool, bool]:
    """
    🧪 检查 T 的所有主子矩阵是否非奇异

    Args:
        T: r×r 矩阵 N*(J−R)N
        threshold: 绝对奇异阈值
        cap: 穷举的 r 上限

    Returns:
        tuple: (是否通过, 是否为穷举)；r > cap 时返回 (False, False)，由调用方改用充分条件
    """
    r = T.shape[0]
    if r > cap:
        return False, False
    for size in range(1, r + 1):
        for subset in itertools.combinations(range(r), size):
            idx = np.array(subset)
            if sigma_min(T[np.ix_(idx, idx)]) <= threshold:
                return False, True
    return True, True


def verdict(sys: DhdaeSystem, with_reduced_bound: bool = False, rank_tol: Optional[float] = None) -> StabilityVerdict:
    """
    🛡️ 鲁棒渐近稳定性判定

    条件 a) 正则；b) 指标 ≤ 1 且 N(E)*(J−R)N(E) 所有主子矩阵非奇异；
    c) 谱横坐标为负。同时给出五步算法的距离界。

    Args:
        sys: 有效系统
        with_reduced_bound: 是否计算约化束上的纯虚距离界 (较慢)
        rank_tol: 秩容差

    Returns:
        StabilityVerdict: 判定结果 (缓存命中时返回副本)
    """
    rank_tol = Config.rank_tol if rank_tol is None else rank_tol
    key = _fingerprint(sys, rank_tol, with_reduced_bound)
    with _verdict_lock:
        cached = _verdict_cache.get(key)
    if cached is not None:
        return cached.model_copy(deep=True)

    sc = compute_staircase(sys, rank_tol)
    cls = classify(sc)
    scale = sc.scale
    threshold = rank_tol * scale
    notes: list[str] = []

    # 条件 b: 主子矩阵
    N = hermitian_kernel_basis(sys.E, rank_tol)
    r = N.shape[1]
    T = N.conj().T @ sys.A @ N
    exact = True
    if r == 0:
        principal_ok = True
    else:
        principal_ok, exact = principal_submatrices_nonsingular(T, threshold, Config.submatrix_cap)
        if not exact:
            NRN = N.conj().T @ sys.R @ N
            principal_ok = hermitian_eig(NRN).lambda_min > threshold
            notes.append(f"核维数 {r} 超过穷举上限，使用 N*RN > 0 充分条件")

    # 条件 c: 谱横坐标
    eigs = np.zeros(0, dtype=np.complex128)
    if cls.regular:
        eigs = finite_spectrum(sc)
        if eigs.size:
            abscissa = float(np.max(eigs.real))
            cond_c = abscissa < -rank_tol * max(1.0, float(np.max(np.abs(eigs))))
        else:
            abscissa = float("-inf")
            cond_c = True
    else:
        abscissa = None
        cond_c = False

    cond_b = cls.regular and cls.index is not None and cls.index <= 1 and principal_ok

    # 五步距离界
    e_eig = hermitian_eig(sys.E)
    bounds = StabilityBounds()
    if r == 0:
        bounds.d_dae = e_eig.lambda_min
    else:
        bounds.d_dae = 0.0
        bounds.d_dae_note = "E 奇异，λ_min(E) 不再是到含无穷特征值系统的距离"
    bounds.d_sing_stack = stacked_sigma_min([sys.E, sys.J, sys.R])
    if r:
        bounds.d_hi_lower = sigma_min(T)
        d_r = hermitian_eig(N.conj().T @ sys.R @ N).lambda_min
        if d_r > threshold:
            bounds.d_r = d_r

    result = StabilityVerdict(
        regular=cls.regular,
        index=cls.index,
        spectral_abscissa=abscissa,
        cond_a=cls.regular,
        cond_b=cond_b,
        cond_c=cond_c,
        principal_submatrix_ok=principal_ok,
        exact=exact,
        block_sizes=sc.block_sizes,
        finite_eigenvalues=[(float(z.real), float(z.imag)) for z in eigs],
        n_infinite=sys.n - sc.block_sizes[1] - sc.block_sizes[4],
        bounds=bounds,
        notes=notes,
    )

    if with_reduced_bound and result.robustly_stable and sc.block_sizes[1]:
        from app.distance_im import reduced_im_bound

        value, kind = reduced_im_bound(reduced_pencil(sc))
        result.bounds.d_reduced_im = value
        result.bounds.d_reduced_im_kind = kind

    if result.robustly_stable:
        log.info(f"🛡️ 系统鲁棒渐近稳定: 块大小 {sc.block_sizes}, 谱横坐标 {abscissa}")
    else:
        log.info(f"⚠️ 系统非鲁棒渐近稳定: {result.reason()} (未满足 {result.failed_conditions()})")

    with _verdict_lock:
        _verdict_cache[key] = result
    return result.model_copy(deep=True)


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "StaircaseForm",
    "Classification",
    "compute_staircase",
    "classify",
    "finite_spectrum",
    "reduced_pencil",
    "refined_form",
    "principal_submatrices_nonsingular",
    "verdict",
]
