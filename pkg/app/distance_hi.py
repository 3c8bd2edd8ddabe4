"""
=============================================
🪜 高指标距离模块
=============================================
模块名称: distance_hi.py
模块功能:
    - 仅扰动 (J, R) 时到指标 ≥ 2 系统的距离 (E 核空间上的 Rayleigh 公式)
    - 完整扰动下的两阶段上界: 先截断 E 的 k 个最小特征值，再求解核空间内层问题
    - 见证扰动由阶梯形复核 (n4 > 0 或 n5 > 0)

"""

from typing import NamedTuple, Optional

import numpy as np

# ========== 内部模块导入 ==========
from app.core.config import Config
from app.core.logger import log
from app.exceptions import NotRobustlyStableError, RankAmbiguityError
from app.mappings import min_neg_semidef_annihilator, pseudoinverse_consistent_map
from app.matrix_core import hermitian_eig, hermitian_kernel_basis
from app.models import BoundKind, HiDistanceReport, Scope, SetTag, complex_pairs
from app.optimizers import OptConfig, RayleighSumProblem, minimize_rayleigh_sum
from app.staircase import classify, compute_staircase, verdict
from app.system import DhdaeSystem, PerturbationTriple, apply_perturbation


TIGHT_TOL = 1e-6


class _Inner(NamedTuple):
    rho: float
    y: Optional[np.ndarray]


# ==========================================
# 🔧 核空间内层问题
# ==========================================

def _inner(N: np.ndarray, J: np.ndarray, R: np.ndarray, decreasing: bool, opts: OptConfig) -> _Inner:
    """
    核空间 span(N) 上的内层问题

    S_d: min ‖N*JNy‖² + (y*(N*RN)²y / y*N*RNy)²
    S_i: λ_min((N*JN)*(N*JN) + (N*RN)²)
    """
    if N.shape[1] == 0:
        return _Inner(float("inf"), None)
    Nh = N.conj().T
    TJ = Nh @ J @ N
    TR = Nh @ R @ N
    TJJ = TJ.conj().T @ TJ
    if decreasing:
        result = minimize_rayleigh_sum(RayleighSumProblem(TJJ, TR @ TR, TR), opts)
        return _Inner(result.value, result.minimizer)
    eig = hermitian_eig(TJJ + TR @ TR)
    return _Inner(eig.lambda_min, eig.eigenvectors[:, 0])


def _witness_parts(
    N: np.ndarray, sys: DhdaeSystem, y: np.ndarray, decreasing: bool, fallback: bool
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """ΔJ、ΔR 使 N*(J+ΔJ)Ny = 0 且 N*(R+ΔR)Ny = 0"""
    dJ = pseudoinverse_consistent_map(N, sys.J, y, "skew")
    if fallback:
        dR = min_neg_semidef_annihilator(sys.R, N @ y)
    else:
        dR = pseudoinverse_consistent_map(N, sys.R, y, "psd_neg" if decreasing else "herm")
    if not dJ.feasible or not dR.feasible:
        return None
    return dJ.matrix, dR.matrix


def verify_hi_witness(sys: DhdaeSystem, triple: PerturbationTriple) -> bool:
    """
    🧪 复核高指标见证

    扰动属于其集合，且扰动后系统的阶梯形给出 n4 > 0 (指标 2) 或 n5 > 0 (奇异)。
    """
    if triple.membership_violations(sys):
        return False
    perturbed = apply_perturbation(sys, triple, check=False)
    try:
        sc = compute_staircase(perturbed)
    except RankAmbiguityError as exc:
        log.debug(f"🔁 见证复核时秩判定模糊: {exc.message}")
        return False
    cls = classify(sc)
    return not cls.regular or (cls.index is not None and cls.index >= 2)


def _require_stable(sys: DhdaeSystem) -> None:
    v = verdict(sys)
    if not v.robustly_stable:
        raise NotRobustlyStableError(v.failed_conditions(), v.reason())


def _try_witness(
    report: HiDistanceReport,
    sys: DhdaeSystem,
    N: np.ndarray,
    y: np.ndarray,
    dE: np.ndarray,
    decreasing: bool,
    target: float,
) -> bool:
    """依次尝试最小范数映射与湮灭扰动回退，附带第一个通过复核的见证"""
    tag = report.set_tag
    for fallback in (False, True):
        parts = _witness_parts(N, sys, y, decreasing, fallback)
        if parts is None:
            continue
        triple = PerturbationTriple(dE, parts[0], parts[1], tag)
        if not verify_hi_witness(sys, triple):
            continue
        report.witness = triple
        report.witness_vector = complex_pairs(N @ y)
        report.witness_norm = triple.norm
        report.witness_verified = True
        report.tight = triple.norm <= target * (1 + TIGHT_TOL) + 1e-12
        return True
    return False


# ==========================================
# 🪜 仅扰动 (J, R)
# ==========================================

def dist_hi_jr(sys: DhdaeSystem, set_tag: SetTag | str, opts: Optional[OptConfig] = None) -> HiDistanceReport:
    """
    🪜 仅扰动 (J, R) 时到高指标系统的距离

    N 为 ker E 的正交基；E ≻ 0 时为 +∞。
    见证由伪逆一致化映射给出；不存在紧见证时降为下界。

    Args:
        sys: 鲁棒渐近稳定的系统
        set_tag: Sd / Si
        opts: 优化器选项

    Returns:
        HiDistanceReport: 距离报告

    Raises:
        NotRobustlyStableError: 系统不满足前提
    """
    _require_stable(sys)
    tag = SetTag(set_tag).with_scope(Scope.JR)
    opts = opts or OptConfig.from_settings()
    N = hermitian_kernel_basis(sys.E, Config.rank_tol)
    if N.shape[1] == 0:
        log.info(f"🪜 高指标距离 [{tag.value}] = ∞ (E 正定)")
        return HiDistanceReport(
            value=float("inf"), bound_kind=BoundKind.EXACT, set_tag=tag, scope=Scope.JR,
            notes=["E 正定，ΔE = 0 时指标恒为 0"],
        )

    inner = _inner(N, sys.J, sys.R, tag.is_decreasing, opts)
    value = float(np.sqrt(max(inner.rho, 0.0)))
    report = HiDistanceReport(
        value=value,
        bound_kind=BoundKind.EXACT,
        set_tag=tag,
        scope=Scope.JR,
        k_star=N.shape[1],
        formula_value=value,
        heuristic=tag.is_decreasing,
    )
    zero = np.zeros((sys.n, sys.n), dtype=np.complex128)
    _try_witness(report, sys, N, inner.y, zero, tag.is_decreasing, value)
    if not report.tight:
        report.bound_kind = BoundKind.LOWER
        report.notes.append("没有达到公式值的保结构见证，降为下界")
        if not report.witness_verified:
            log.warning(f"⚠️ 高指标距离见证复核失败 [{tag.value}]")
    log.info(f"🪜 高指标距离 [{tag.value}] = {value:.6e} ({report.bound_kind.value})")
    return report


# ==========================================
# 🪜 完整扰动: 两阶段上界
# ==========================================

def dist_hi_full(sys: DhdaeSystem, set_tag: SetTag | str, opts: Optional[OptConfig] = None) -> HiDistanceReport:
    """
    🪜 完整扰动下到高指标系统距离的上界

    对 k = max(dim ker E, 1), …, n: Δ̂E = −U_k·diag(λ_1..λ_k)·U_k* 截断 E 的 k 个最小特征值，
    代价为其中最大者 λ_k；N_k = U_k 上求解内层问题，公式值 √(λ_k² + μ_k)。
    λ_k 不小于当前最优值时停止。按公式值升序取第一个通过复核的见证，报告其范数。

    Args:
        sys: 鲁棒渐近稳定的系统
        set_tag: Sd / Si
        opts: 优化器选项

    Returns:
        HiDistanceReport: 上界报告

    Raises:
        NotRobustlyStableError: 系统不满足前提
    """
    _require_stable(sys)
    tag = SetTag(set_tag).with_scope(Scope.FULL)
    opts = opts or OptConfig.from_settings()
    n = sys.n
    eig = hermitian_eig(sys.E)
    lam = np.where(eig.eigenvalues <= Config.rank_tol * max(1.0, sys.norm_scale), 0.0, eig.eigenvalues)
    U = eig.eigenvectors
    r0 = int(np.sum(lam == 0.0))

    candidates: list[tuple[float, int, _Inner]] = []
    best = float("inf")
    for k in range(max(r0, 1), n + 1):
        cost = float(lam[k - 1])
        if cost >= best:
            break
        N = U[:, :k]
        inner = _inner(N, sys.J, sys.R, tag.is_decreasing, opts)
        formula = float(np.sqrt(cost * cost + max(inner.rho, 0.0)))
        candidates.append((formula, k, inner))
        best = min(best, formula)
    candidates.sort(key=lambda c: (c[0], c[1]))

    report = HiDistanceReport(
        value=float("inf"),
        bound_kind=BoundKind.UPPER,
        set_tag=tag,
        scope=Scope.FULL,
        heuristic=tag.is_decreasing,
        notes=["两阶段构造只给出上界，无法断言其紧性"],
    )
    for formula, k, inner in candidates:
        if inner.y is None:
            continue
        N = U[:, :k]
        dE = -(N * lam[:k]) @ N.conj().T
        if _try_witness(report, sys, N, inner.y, dE, tag.is_decreasing, formula):
            report.value = report.witness_norm
            report.k_star = k
            report.formula_value = formula
            break
    if not report.witness_verified:
        log.warning(f"⚠️ 高指标上界没有通过复核的见证 [{tag.value}]")
        if candidates:
            report.formula_value = candidates[0][0]
            report.k_star = candidates[0][1]
        report.notes.append("见证复核失败，value 为 +∞，formula_value 未经确认")
    log.info(f"🪜 高指标上界 [{tag.value}] = {report.value:.6e}，k* = {report.k_star}")
    return report


def dist_hi(sys: DhdaeSystem, set_tag: SetTag | str, opts: Optional[OptConfig] = None) -> HiDistanceReport:
    """🪜 按集合标签的作用范围分派"""
    tag = SetTag(set_tag)
    if tag.scope == Scope.JR:
        return dist_hi_jr(sys, tag, opts)
    return dist_hi_full(sys, tag, opts)


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "verify_hi_witness",
    "dist_hi_jr",
    "dist_hi_full",
    "dist_hi",
]
