"""
=============================================
🕳️ 奇异束距离模块
=============================================
模块名称: distance_sing.py
模块功能:
    - 非结构化奇异距离 √λ_min(E² − J² + R²)
    - 完整扰动下的 S_i 闭式 (E, R ≻ 0 时精确) 与 S_d 三分支 Rayleigh 公式
    - 仅扰动 (J, R) 时的 E 核空间公式
    - 到不稳定的聚合距离 d_inst = min{d_sing, d_hi, d_im}
约定:
    - 奇异 ⇔ E+ΔE, J+ΔJ, R+ΔR 存在公共核向量 x
    - 见证复核: ‖(E+ΔE)x‖, ‖(J+ΔJ)x‖, ‖(R+ΔR)x‖ ≤ 1e−8·scale

"""

from typing import Optional

import numpy as np

# ========== 内部模块导入 ==========
from app.core.config import Config
from app.core.logger import log
from app.mappings import min_hermitian_map, min_neg_semidef_annihilator, min_skew_map
from app.matrix_core import hermitian_eig, hermitian_kernel_basis, stacked_sigma_min
from app.models import BoundKind, DistanceKind, InstReport, Scope, SetTag, SingDistanceReport, complex_pairs
from app.optimizers import OptConfig, RayleighSumProblem, minimize_rayleigh_sum
from app.system import DhdaeSystem, PerturbationTriple


RESIDUAL_TOL = 1e-8
TIGHT_TOL = 1e-6


# ==========================================
# 🧪 见证复核
# ==========================================

def verify_sing_witness(sys: DhdaeSystem, triple: PerturbationTriple, x: np.ndarray) -> bool:
    """
    🧪 复核公共核见证

    结构化扰动还须属于其集合；非结构化扰动 (set_tag 为 None) 只检查残差。
    """
    if triple.set_tag is not None and triple.membership_violations(sys):
        return False
    scale = max(1.0, sys.norm_scale)
    for M, dM in ((sys.E, triple.dE), (sys.J, triple.dJ), (sys.R, triple.dR)):
        if np.linalg.norm((M + dM) @ x) > RESIDUAL_TOL * scale:
            return False
    return True


def _attach(report: SingDistanceReport, sys: DhdaeSystem, triple: Optional[PerturbationTriple], x: np.ndarray) -> bool:
    """附带通过复核的见证；返回是否附带成功"""
    if triple is None or not verify_sing_witness(sys, triple, x):
        return False
    report.witness = triple
    report.witness_vector = complex_pairs(x)
    report.witness_norm = triple.norm
    report.witness_verified = True
    report.tight = triple.norm <= report.value * (1 + TIGHT_TOL) + 1e-12
    return True


def _gram_sum(sys: DhdaeSystem) -> np.ndarray:
    """E² − J² + R² = E*E + J*J + R*R"""
    return sys.E @ sys.E - sys.J @ sys.J + sys.R @ sys.R


def _definite(M: np.ndarray, sys: DhdaeSystem) -> bool:
    return M.shape[0] == 0 or hermitian_eig(M).lambda_min > Config.rank_tol * sys.norm_scale


# ==========================================
# 🕳️ 非结构化与完整扰动
# ==========================================

def dist_sing_unstructured(sys: DhdaeSystem) -> SingDistanceReport:
    """
    🕳️ 非结构化奇异距离

    d = √λ_min(E² − J² + R²) = σ_min([E; J; R])，
    见证 (−Exx*, −Jxx*, −Rxx*)，x 为对应的单位特征向量。

    Args:
        sys: 有效系统

    Returns:
        SingDistanceReport: 精确值
    """
    eig = hermitian_eig(_gram_sum(sys))
    x = eig.eigenvectors[:, 0]
    value = float(np.sqrt(max(eig.lambda_min, 0.0)))
    report = SingDistanceReport(value=value, bound_kind=BoundKind.EXACT, set_tag=None, scope=Scope.FULL)
    xx = np.outer(x, x.conj())
    triple = PerturbationTriple(-sys.E @ xx, -sys.J @ xx, -sys.R @ xx, None)
    _attach(report, sys, triple, x)
    stacked = stacked_sigma_min([sys.E, sys.J, sys.R])
    if abs(stacked - value) > 1e-8 * max(1.0, value):
        report.notes.append(f"Gram 恒等式偏差: σ_min([E;J;R]) = {stacked:.6e}")
    log.info(f"🕳️ 非结构化奇异距离 = {value:.6e}")
    return report


def _si_full_witness(sys: DhdaeSystem, x: np.ndarray, fallback: bool) -> Optional[PerturbationTriple]:
    """最小范数 Hermitian / 反 Hermitian 映射；fallback 时 ΔE、ΔR 改为半负定湮灭扰动"""
    dJ = min_skew_map(x, -sys.J @ x)
    if fallback:
        dE = min_neg_semidef_annihilator(sys.E, x)
        dR = min_neg_semidef_annihilator(sys.R, x)
    else:
        dE = min_hermitian_map(x, -sys.E @ x)
        dR = min_hermitian_map(x, -sys.R @ x)
    if not (dE.feasible and dJ.feasible and dR.feasible):
        return None
    return PerturbationTriple(dE.matrix, dJ.matrix, dR.matrix, SetTag.SI)


def _sd_witness(sys: DhdaeSystem, x: np.ndarray, scope: Scope) -> Optional[PerturbationTriple]:
    """ΔE、ΔR 为半负定湮灭扰动 (jr 范围 ΔE = 0)，ΔJ = Ŝ(x, −Jx)"""
    n = sys.n
    dJ = min_skew_map(x, -sys.J @ x)
    if not dJ.feasible:
        return None
    if scope == Scope.JR:
        dE = np.zeros((n, n), dtype=np.complex128)
    else:
        dE = min_neg_semidef_annihilator(sys.E, x).matrix
    dR = min_neg_semidef_annihilator(sys.R, x).matrix
    return PerturbationTriple(dE, dJ.matrix, dR, SetTag.resolve("sd", scope))


def _restricted_rayleigh(
    N: np.ndarray,
    H1: np.ndarray,
    terms: list[tuple[np.ndarray, np.ndarray]],
    opts: OptConfig,
    exclude_kernel: bool = False,
) -> tuple[float, Optional[np.ndarray]]:
    """在 span(N) 上最小化 Rayleigh 商之和；返回 (值, ℂⁿ 中的单位向量)"""
    if N.shape[1] == 0:
        return float("inf"), None
    Nh = N.conj().T
    squared = [(Nh @ A @ N, Nh @ B @ N) for A, B in terms]
    first, rest = squared[0], squared[1:]
    problem = RayleighSumProblem(
        Nh @ H1 @ N, first[0], first[1], extra_terms=rest, exclude_kernel=exclude_kernel
    )
    result = minimize_rayleigh_sum(problem, opts)
    if not np.isfinite(result.value):
        return float("inf"), None
    x = N @ result.minimizer
    return result.value, x / np.linalg.norm(x)


def _sd_full_branches(sys: DhdaeSystem, opts: OptConfig) -> list[tuple[str, float, Optional[np.ndarray]]]:
    """
    S_d 完整扰动的三个分支

    - JR: x ∈ ker E，目标 ‖Jx‖² + (x*R²x/x*Rx)²
    - EJ: x ∈ ker R，目标 ‖Jx‖² + (x*E²x/x*Ex)²
    - M3: x ∉ ker E ∪ ker R，三项之和
    """
    n = sys.n
    E, J, R = sys.E, sys.J, sys.R
    JJ = J.conj().T @ J
    tol = Config.rank_tol
    branches = []
    value, x = _restricted_rayleigh(hermitian_kernel_basis(E, tol), JJ, [(R @ R, R)], opts)
    branches.append(("JR", value, x))
    value, x = _restricted_rayleigh(hermitian_kernel_basis(R, tol), JJ, [(E @ E, E)], opts)
    branches.append(("EJ", value, x))
    value, x = _restricted_rayleigh(
        np.eye(n, dtype=np.complex128), JJ, [(R @ R, R), (E @ E, E)], opts, exclude_kernel=True
    )
    branches.append(("M3", value, x))
    return branches


def dist_sing_full(sys: DhdaeSystem, set_tag: SetTag | str, opts: Optional[OptConfig] = None) -> SingDistanceReport:
    """
    🕳️ 完整扰动下的奇异距离

    S_i: 值 √λ_min(E² − J² + R²)，E ≻ 0 且 R ≻ 0 时精确，否则为下界
    (见证保持半正定性且范数相符时升级为精确)；
    S_d: JR / EJ / M3 三个分支的最小值。

    Args:
        sys: 有效系统
        set_tag: Sd / Si
        opts: 优化器选项

    Returns:
        SingDistanceReport: 距离报告
    """
    tag = SetTag(set_tag).with_scope(Scope.FULL)
    opts = opts or OptConfig.from_settings()

    if not tag.is_decreasing:
        eig = hermitian_eig(_gram_sum(sys))
        x = eig.eigenvectors[:, 0]
        value = float(np.sqrt(max(eig.lambda_min, 0.0)))
        definite = _definite(sys.E, sys) and _definite(sys.R, sys)
        report = SingDistanceReport(
            value=value,
            bound_kind=BoundKind.EXACT if definite else BoundKind.LOWER,
            set_tag=tag,
            scope=Scope.FULL,
        )
        if not definite:
            report.notes.append("E 或 R 奇异，闭式仅为下界")
        if not _attach(report, sys, _si_full_witness(sys, x, fallback=False), x):
            _attach(report, sys, _si_full_witness(sys, x, fallback=True), x)
        if report.tight and report.bound_kind == BoundKind.LOWER:
            report.bound_kind = BoundKind.EXACT
            report.notes.append("见证扰动保持半正定性，升级为精确值")
        log.info(f"🕳️ 奇异距离 [{tag.value}] = {value:.6e} ({report.bound_kind.value})")
        return report

    branches = _sd_full_branches(sys, opts)
    name, rho, x = min(branches, key=lambda b: b[1])
    report = SingDistanceReport(
        value=float(np.sqrt(max(rho, 0.0))) if np.isfinite(rho) else float("inf"),
        bound_kind=BoundKind.EXACT,
        set_tag=tag,
        scope=Scope.FULL,
        heuristic=True,
        notes=[f"取值分支 {name}"],
    )
    if x is not None and not _attach(report, sys, _sd_witness(sys, x, Scope.FULL), x):
        log.warning(f"⚠️ 奇异距离见证复核失败 (分支 {name})")
    log.info(f"🕳️ 奇异距离 [{tag.value}] = {report.value:.6e}，分支 {name}")
    return report


# ==========================================
# 🕳️ 仅扰动 (J, R)
# ==========================================

def dist_sing_jr(sys: DhdaeSystem, set_tag: SetTag | str, opts: Optional[OptConfig] = None) -> SingDistanceReport:
    """
    🕳️ 仅扰动 (J, R) 时的奇异距离

    E ≻ 0 时为 +∞；否则 N 为 ker E 的正交基:
    S_d 最小化 ‖JNy‖² + (y*N*R²Ny / y*N*RNy)²，精确；
    S_i 为 √λ_min(N*(R² − J²)N)，R ≻ 0 时精确，否则为下界。
    """
    tag = SetTag(set_tag).with_scope(Scope.JR)
    opts = opts or OptConfig.from_settings()
    N = hermitian_kernel_basis(sys.E, Config.rank_tol)
    if N.shape[1] == 0:
        log.info(f"🕳️ 奇异距离 [{tag.value}] = ∞ (E 正定)")
        return SingDistanceReport(
            value=float("inf"), bound_kind=BoundKind.EXACT, set_tag=tag, scope=Scope.JR,
            notes=["E 正定，仅扰动 (J, R) 无法使矩阵束奇异"],
        )

    JJ = sys.J.conj().T @ sys.J
    if tag.is_decreasing:
        rho, x = _restricted_rayleigh(N, JJ, [(sys.R @ sys.R, sys.R)], opts)
        report = SingDistanceReport(
            value=float(np.sqrt(max(rho, 0.0))), bound_kind=BoundKind.EXACT, set_tag=tag, scope=Scope.JR,
            heuristic=True,
        )
        if x is not None and not _attach(report, sys, _sd_witness(sys, x, Scope.JR), x):
            log.warning("⚠️ 奇异距离见证复核失败 (S_d(J, R))")
    else:
        Nh = N.conj().T
        eig = hermitian_eig(Nh @ (sys.R @ sys.R + JJ) @ N)
        x = N @ eig.eigenvectors[:, 0]
        x = x / np.linalg.norm(x)
        definite = _definite(sys.R, sys)
        report = SingDistanceReport(
            value=float(np.sqrt(max(eig.lambda_min, 0.0))),
            bound_kind=BoundKind.EXACT if definite else BoundKind.LOWER,
            set_tag=tag,
            scope=Scope.JR,
        )
        if not definite:
            report.notes.append("R 奇异，闭式仅为下界")
        n = sys.n
        zero = np.zeros((n, n), dtype=np.complex128)
        dJ = min_skew_map(x, -sys.J @ x)
        for dR in (min_hermitian_map(x, -sys.R @ x), min_neg_semidef_annihilator(sys.R, x)):
            if dJ.feasible and dR.feasible:
                if _attach(report, sys, PerturbationTriple(zero, dJ.matrix, dR.matrix, tag), x):
                    break
        if report.tight and report.bound_kind == BoundKind.LOWER:
            report.bound_kind = BoundKind.EXACT
            report.notes.append("见证扰动保持半正定性，升级为精确值")
    log.info(f"🕳️ 奇异距离 [{tag.value}] = {report.value:.6e} ({report.bound_kind.value})")
    return report


def dist_sing(sys: DhdaeSystem, set_tag: Optional[SetTag | str], opts: Optional[OptConfig] = None) -> SingDistanceReport:
    """🕳️ 按集合标签分派；set_tag 为 None 时返回非结构化距离"""
    if set_tag is None:
        return dist_sing_unstructured(sys)
    tag = SetTag(set_tag)
    if tag.scope == Scope.JR:
        return dist_sing_jr(sys, tag, opts)
    return dist_sing_full(sys, tag, opts)


# ==========================================
# 🧯 聚合: 到不稳定的距离
# ==========================================

def _aggregate_kind(winner: BoundKind, kinds: list[BoundKind]) -> BoundKind:
    if all(k == BoundKind.EXACT for k in kinds):
        return BoundKind.EXACT
    if winner == BoundKind.LOWER:
        return BoundKind.LOWER
    return BoundKind.UPPER


def distance_inst(sys: DhdaeSystem, set_tag: SetTag | str, opts: Optional[OptConfig] = None) -> InstReport:
    """
    🧯 到不稳定的距离 d_inst = min{d_sing, d_hi, d_im}

    取值相同时优先非下界分量；仅当三个分量都精确时聚合结果为精确值。

    Args:
        sys: 鲁棒渐近稳定的系统
        set_tag: 扰动集合 (含作用范围)
        opts: 优化器选项

    Returns:
        InstReport: 聚合报告 (含三个分量及取得最小值的机制)

    Raises:
        NotRobustlyStableError: 系统不满足前提
    """
    from app.distance_hi import dist_hi
    from app.distance_im import dist_im

    tag = SetTag(set_tag)
    opts = opts or OptConfig.from_settings()
    im = dist_im(sys, tag, opts)
    hi = dist_hi(sys, tag, opts)
    sing = dist_sing(sys, tag, opts)

    components = [(DistanceKind.SING, sing), (DistanceKind.HI, hi), (DistanceKind.IM, im)]
    order = {DistanceKind.SING: 0, DistanceKind.HI: 1, DistanceKind.IM: 2}
    mechanism, winner = min(
        components, key=lambda c: (c[1].value, c[1].bound_kind == BoundKind.LOWER, order[c[0]])
    )
    kind = _aggregate_kind(winner.bound_kind, [r.bound_kind for _, r in components])
    notes = []
    if kind != BoundKind.EXACT:
        notes.append("分量中含非精确界，聚合结果按最小分量的界类型报告")
    log.info(f"🧯 到不稳定距离 [{tag.value}] = {winner.value:.6e}，机制 {mechanism.value}")
    return InstReport(
        set_tag=tag,
        scope=tag.scope,
        value=winner.value,
        bound_kind=kind,
        mechanism=mechanism,
        sing=sing,
        hi=hi,
        im=im,
        notes=notes,
    )


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "verify_sing_witness",
    "dist_sing_unstructured",
    "dist_sing_full",
    "dist_sing_jr",
    "dist_sing",
    "distance_inst",
]
