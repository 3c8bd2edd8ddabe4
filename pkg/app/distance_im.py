"""
=============================================
🌊 纯虚特征值距离模块
=============================================
模块名称: distance_im.py
模块功能:
    - ω 固定时的块矩阵 (M, H̃1, H̃2, G1, G2, G, H1, H2)
    - 完整扰动 (ΔE, ΔJ, ΔR) 下的距离: S_i 逐 ω 闭式 / λ_max 对偶下界，S_d 消元后的光滑最小化
    - 仅扰动 (J, R) 时的精确公式
    - Λ 分支 (iωE − J 奇异的 ω) 的特征空间处理
    - 见证扰动重构、复核与紧性判定
    - S_d 完整扰动逐 ω 目标的两种字面读法 (供预言机对照)
约定:
    - 距离 d = √ρ，ρ 为平方三元范数的下确界
    - 前提: verdict(sys).robustly_stable，否则抛出 NotRobustlyStableError
    - 见证仅在复核通过时附带: 结构保持且 (R+ΔR)x = 0、(iω(E+ΔE) − (J+ΔJ))x = 0

"""

from math import copysign
from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

# ========== 内部模块导入 ==========
from app.core.config import Config
from app.core.logger import log
from app.exceptions import (
    IndefinitenessError,
    NotRobustlyStableError,
    OmegaInLambdaError,
    ParameterError,
    SingularPencilError,
    UnboundedBelowError,
)
from app.mappings import min_hermitian_map, min_neg_semidef_annihilator, min_psd_map, min_skew_map
from app.matrix_core import hermitian_eig, nullspace_basis, pencil_finite_eigs, sigma_min
from app.models import BoundKind, Branch, ImDistanceReport, Scope, SetTag, complex_pairs
from app.optimizers import OptConfig, RayleighSumProblem, minimize_lambda_max, minimize_over_omega, minimize_rayleigh_sum
from app.staircase import verdict
from app.system import DhdaeSystem, PerturbationTriple, apply_perturbation


RESIDUAL_TOL = 1e-8       # 见证复核的相对残差
TIGHT_TOL = 1e-6          # 见证范数与报告值的相对差
LAMBDA_TOL = 1e-8         # (E, J) 特征值实部判零

ImMethod = Literal["closed_form", "lambda_max"]


class OmegaMatrices(NamedTuple):
    """🧱 ω 固定时的块矩阵"""

    M: np.ndarray
    H1_tilde: np.ndarray
    H2_tilde: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    G: np.ndarray
    H1: np.ndarray
    H2: np.ndarray


class _Candidate(NamedTuple):
    rho: float
    omega: float
    x: np.ndarray
    a: float = 0.0
    q: float = 0.0


# ==========================================
# 🔧 基础构件
# ==========================================

def _require_stable(sys: DhdaeSystem) -> None:
    v = verdict(sys)
    if not v.robustly_stable:
        raise NotRobustlyStableError(v.failed_conditions(), v.reason())


def _k(sys: DhdaeSystem, omega: float) -> np.ndarray:
    """K(ω) = iωE − J (反 Hermitian)"""
    return 1j * omega * sys.E - sys.J


def _gram(A: np.ndarray) -> np.ndarray:
    return A.conj().T @ A


def _threshold(sys: DhdaeSystem) -> float:
    return Config.rank_tol * sys.norm_scale


def build_omega_matrices(sys: DhdaeSystem, omega: float) -> OmegaMatrices:
    """
    🧱 构造 ω 处的块矩阵

    M = (iωE − J)⁻¹，u = [v_J; v_E]，L = [I, −iωI]，x = MLu。
    H̃1、H̃2 为两个映射可行性条件 Im(x*v_E) = 0、Re(x*v_J) = 0 的 Hermitian 型，
    二者满足 H̃2 = −ω·H̃1；G1 = L*M*R²ML + I 正定，G2 = L*M*ML，
    G、H1、H2 为经 G1^{−1/2} 合同变换后的矩阵。

    Args:
        sys: dHDAE 系统
        omega: 实频率

    Returns:
        OmegaMatrices: 块矩阵元组

    Raises:
        OmegaInLambdaError: iωE − J 数值奇异 (ω ∈ Λ)
    """
    n = sys.n
    K = _k(sys, omega)
    smin = sigma_min(K)
    if smin <= _threshold(sys):
        raise OmegaInLambdaError(omega, smin)
    eye = np.eye(n, dtype=np.complex128)
    zero = np.zeros((n, n), dtype=np.complex128)
    M = np.linalg.solve(K, eye)
    L = np.hstack([eye, -1j * omega * eye])
    Lh = L.conj().T
    P_J = np.hstack([eye, zero])
    P_E = np.hstack([zero, eye])

    C = Lh @ M.conj().T @ P_E
    H1_tilde = (C - C.conj().T) / 2j
    D = Lh @ M.conj().T @ P_J
    H2_tilde = (D + D.conj().T) / 2

    ML = M @ L
    G1 = _gram(sys.R @ ML) + np.eye(2 * n)
    G2 = _gram(ML)
    G1 = (G1 + G1.conj().T) / 2
    eig = hermitian_eig(G1)
    inv_sqrt = eig.eigenvectors @ np.diag(eig.eigenvalues ** -0.5) @ eig.eigenvectors.conj().T

    def congruence(X: np.ndarray) -> np.ndarray:
        Y = inv_sqrt @ X @ inv_sqrt
        return (Y + Y.conj().T) / 2

    return OmegaMatrices(M, H1_tilde, H2_tilde, G1, G2, congruence(G2), congruence(H1_tilde), congruence(H2_tilde))


def lambda_set(sys: DhdaeSystem) -> tuple[np.ndarray, bool]:
    """
    🎯 Λ = {ω : det(iωE − J) = 0}

    Returns:
        tuple: (Λ 中的 ω 升序数组, (E, J) 是否为奇异束即 Λ = ℝ)
    """
    try:
        eigs = pencil_finite_eigs(sys.E, sys.J)
    except SingularPencilError:
        return np.zeros(0), True
    omegas = [
        float(z.imag) for z in eigs
        if abs(z.real) <= LAMBDA_TOL * max(1.0, abs(z))
    ]
    return np.unique(np.round(omegas, 12)), False


def _seeds(sys: DhdaeSystem, extra: Sequence[float]) -> list[float]:
    omegas, _ = lambda_set(sys)
    seeds = list(extra) + [float(w) for w in omegas]
    seeds += [float(im) for _, im in verdict(sys).finite_eigenvalues]
    return seeds


def _eigenspace(sys: DhdaeSystem, omega: float) -> np.ndarray:
    return nullspace_basis(_k(sys, omega), Config.rank_tol, scale=sys.norm_scale)


def _sqrt(rho: float) -> float:
    return float(np.sqrt(max(rho, 0.0))) if np.isfinite(rho) else float("inf")


# ==========================================
# 📈 逐 ω 目标
# ==========================================

def _si_rho(sys: DhdaeSystem, omega: float, scope: Scope) -> tuple[float, np.ndarray]:
    """
    S_i 的逐 ω 值

    jr: λ_min(R² + K*K)；full: λ_min(R² + K*K/(1+ω²))，
    后者为 ΔE、ΔJ 在约束 iωΔEx − ΔJx = −Kx 下的最优分配
    """
    KK = _gram(_k(sys, omega))
    if scope == Scope.FULL:
        KK = KK / (1.0 + omega * omega)
    eig = hermitian_eig(sys.R @ sys.R + KK)
    return eig.lambda_min, eig.eigenvectors[:, 0]


def _sd_jr_rho(sys: DhdaeSystem, omega: float, opts: OptConfig) -> tuple[float, np.ndarray]:
    """S_d(J, R) 的逐 ω 值: min ‖Kx‖² + (x*R²x/x*Rx)²"""
    problem = RayleighSumProblem(_gram(_k(sys, omega)), sys.R @ sys.R, sys.R)
    result = minimize_rayleigh_sum(problem, opts)
    return result.value, result.minimizer


def _r_term(R: np.ndarray, x: np.ndarray) -> float:
    Rx = R @ x
    quad = float(np.vdot(x, Rx).real)
    if quad <= 1e-14 * max(np.linalg.norm(R, 2), 1e-300):
        return 0.0
    return (float(np.vdot(Rx, Rx).real) / quad) ** 2


class _SdOperators(NamedTuple):
    """S_d 完整扰动目标在固定 ω 处用到的矩阵"""

    K: np.ndarray
    KK: np.ndarray
    HK: np.ndarray
    R: np.ndarray
    R2: np.ndarray
    r_norm: float
    omega: float

    @classmethod
    def build(cls, sys: DhdaeSystem, omega: float) -> "_SdOperators":
        K = _k(sys, omega)
        HK = -1j * K
        return cls(
            K, _gram(K), (HK + HK.conj().T) / 2, sys.R, sys.R @ sys.R,
            max(float(np.linalg.norm(sys.R, 2)), 1e-300), omega,
        )


def _sd_full_value_grad(
    ops: _SdOperators,
    z: np.ndarray,
    sign: float = -1.0,
    square_j: bool = False,
) -> tuple[float, np.ndarray]:
    """
    S_d 完整扰动在 z = (Re y, Im y, a, q) 处的平方范数及梯度，x = y/‖y‖

    v_E = sign·a·x + i·sgn(ω)·q·v⊥/‖v⊥‖，v = Kx，v⊥ 为 v 去掉 x 分量。
    ‖ΔE‖² = ((a²+q²)/a)²，‖ΔJ‖² = (β + sign·ωa)² + (‖v⊥‖ − |ω|q)²，β = Im(x*Kx)。
    sign = −1 对应 ΔE ⪯ 0；square_j 时 ΔJ 项再平方一次。
    """
    n = ops.K.shape[0]
    omega = ops.omega
    y = z[:n] + 1j * z[n:2 * n]
    a, q = float(z[2 * n]), float(z[2 * n + 1])
    yy = float(np.vdot(y, y).real)
    if yy == 0.0 or a <= 0.0:
        return 1e300, np.zeros_like(z)

    HKy = ops.HK @ y
    beta = float(np.vdot(y, HKy).real) / yy
    g_beta = 2 * (HKy - beta * y) / yy
    KKy = ops.KK @ y
    kk = float(np.vdot(y, KKy).real) / yy
    p = float(np.sqrt(max(kk - beta * beta, 0.0)))
    if p > 1e-12 * max(1.0, float(np.sqrt(kk))):
        g_p = ((KKy - kk * y) / yy - beta * g_beta) / p
    else:
        g_p = np.zeros(n, dtype=np.complex128)

    h = a + q * q / a
    e_term = h * h
    e_a = 2 * h * (1 - q * q / (a * a))
    e_q = 4 * h * q / a

    d1 = beta + sign * omega * a
    d2 = p - abs(omega) * q
    j_term = d1 * d1 + d2 * d2
    j_scale = 2 * j_term if square_j else 1.0
    if square_j:
        j_term = j_term * j_term

    Ry = ops.R @ y
    den = float(np.vdot(y, Ry).real)
    if den <= 1e-14 * ops.r_norm * yy:
        r_term, g_r = 0.0, np.zeros(n, dtype=np.complex128)
    else:
        R2y = ops.R2 @ y
        ratio = float(np.vdot(y, R2y).real) / den
        r_term = ratio * ratio
        g_r = 4 * ratio * (R2y - ratio * Ry) / den

    g_y = j_scale * (2 * d1 * g_beta + 2 * d2 * g_p) + g_r
    grad = np.concatenate([
        g_y.real,
        g_y.imag,
        [e_a + j_scale * 2 * d1 * sign * omega, e_q - j_scale * 2 * abs(omega) * d2],
    ])
    return e_term + j_term + r_term, grad


def _sd_lbfgs(
    ops: _SdOperators,
    starts: Sequence[tuple[np.ndarray, float, float]],
    max_iter: int,
    sign: float = -1.0,
    square_j: bool = False,
) -> Optional[_Candidate]:
    """从给定 (x, a, q) 起点做带解析梯度的 L-BFGS-B，返回最优者"""
    n = ops.K.shape[0]
    bounds = [(None, None)] * (2 * n) + [(1e-12, None), (0.0, None)]
    best: Optional[_Candidate] = None
    for x0, a0, q0 in starts:
        z0 = np.concatenate([x0.real, x0.imag, [max(a0, 1e-12), max(q0, 0.0)]])
        res = minimize(
            lambda z: _sd_full_value_grad(ops, z, sign, square_j), z0, jac=True,
            method="L-BFGS-B", bounds=bounds, options={"maxiter": max_iter},
        )
        if best is None or res.fun < best.rho:
            x = res.x[:n] + 1j * res.x[n:2 * n]
            best = _Candidate(float(res.fun), ops.omega, x / np.linalg.norm(x), float(res.x[2 * n]), float(res.x[2 * n + 1]))
    return best


class _SdFullSearch:
    """
    S_d 完整扰动的逐 ω 求解器

    完整模式以 ΔE = 0 的 (J, R) 解为基准，再从若干起点 (含最近 ω 的解) 做 L-BFGS-B；
    单起点模式只从已求过的最近 ω 的 (x, a, q) 热启动，用于黄金分割细化。
    """

    def __init__(self, sys: DhdaeSystem, opts: OptConfig):
        self.sys = sys
        self.opts = opts
        self.history: list[_Candidate] = []

    def _nearest(self, omega: float) -> Optional[_Candidate]:
        if not self.history:
            return None
        return min(self.history, key=lambda c: abs(c.omega - omega))

    def solve(self, omega: float, single_start: bool = False) -> _Candidate:
        ops = _SdOperators.build(self.sys, omega)
        warm = self._nearest(omega)
        best: Optional[_Candidate] = None
        if single_start and warm is not None:
            best = _sd_lbfgs(ops, [(warm.x, warm.a, warm.q)], self.opts.max_iter)
        if best is None:
            rho_jr, x_jr = _sd_jr_rho(self.sys, omega, self.opts)
            best = _Candidate(rho_jr, omega, x_jr)
            norm_v = max(1.0, float(np.linalg.norm(ops.K @ x_jr)))
            starts = [(x_jr, s * norm_v, 0.0) for s in (1e-3, 0.1, 1.0)]
            starts.append((hermitian_eig(ops.KK).eigenvectors[:, 0], 0.1 * norm_v, 0.0))
            if warm is not None:
                starts.append((warm.x, warm.a, warm.q))
            found = _sd_lbfgs(ops, starts, self.opts.max_iter)
            if found is not None and found.rho < best.rho:
                best = found
        self.history.append(best)
        return best

    def __call__(self, omega: float) -> float:
        return self.solve(omega).rho

    def refine(self, omega: float) -> float:
        return self.solve(omega, single_start=True).rho


def _sd_full_rho(sys: DhdaeSystem, omega: float, opts: OptConfig) -> _Candidate:
    """S_d 完整扰动的逐 ω 值 (不热启动)"""
    return _SdFullSearch(sys, opts).solve(omega)


# ==========================================
# 📜 S_d 完整扰动的两种字面读法
# ==========================================

DisplayReading = Literal["printed", "uniform"]


def sd_display_value(sys: DhdaeSystem, omega: float, u: np.ndarray, reading: DisplayReading = "printed") -> float:
    """
    📜 按字面在 u = [v_J; v_E] 上计算 S_d 完整扰动的逐 ω 目标

    x = MLu，目标为 (‖Rx‖²/x*Rx)² + ‖v_J‖²/‖x‖² + (‖v_E‖²/x*v_E)²，
    约束 Re(v_J*x) = 0 且 x*v_E 为正实数，不满足时返回 +∞。
    reading="uniform" 时中间的 ΔJ 项与另两项一样再平方。

    Args:
        sys: dHDAE 系统
        omega: 实频率 (不在 Λ 中)
        u: 长度 2n 的复向量
        reading: printed / uniform

    Returns:
        float: 目标值
    """
    if reading not in ("printed", "uniform"):
        raise ParameterError("reading", f"未知读法 {reading!r}")
    n = sys.n
    u = np.asarray(u, dtype=np.complex128)
    v_j, v_e = u[:n], u[n:]
    x = np.linalg.solve(_k(sys, omega), v_j - 1j * omega * v_e)
    nx2 = float(np.vdot(x, x).real)
    if nx2 == 0.0:
        return float("inf")
    tol = 1e-10 * max(1.0, float(np.linalg.norm(u))) * np.sqrt(nx2)
    if abs(np.vdot(v_j, x).real) > tol:
        return float("inf")
    den_e = np.vdot(x, v_e)
    if den_e.real <= 0.0 or abs(den_e.imag) > tol:
        return float("inf")
    j_term = float(np.vdot(v_j, v_j).real) / nx2
    if reading == "uniform":
        j_term = j_term * j_term
    e_term = (float(np.vdot(v_e, v_e).real) / float(den_e.real)) ** 2
    return _r_term(sys.R, x / np.sqrt(nx2)) + j_term + e_term


def sd_display_vector(sys: DhdaeSystem, omega: float, x: np.ndarray, a: float, q: float) -> np.ndarray:
    """
    🧭 由 (x, a, q) 构造字面目标的参数 u

    v_E = a·x + i·sgn(ω)·q·v⊥/‖v⊥‖，v_J = Kx + iω·v_E
    """
    x = np.asarray(x, dtype=np.complex128)
    x = x / np.linalg.norm(x)
    v = _k(sys, omega) @ x
    perp = v - np.vdot(x, v) * x
    p = np.linalg.norm(perp)
    direction = perp / p if p > 0 else np.zeros_like(perp)
    v_e = a * x + 1j * copysign(1.0, omega) * q * direction
    return np.concatenate([v + 1j * omega * v_e, v_e])


def sd_display_rho(sys: DhdaeSystem, omega: float, reading: DisplayReading = "printed", opts: Optional[OptConfig] = None) -> float:
    """
    📜 字面读法的逐 ω 最小值

    printed 读法在 a → 0 时退化为 (J, R) 目标，因此与 S_d(J, R) 的逐 ω 值取小；
    uniform 读法只取 L-BFGS-B 的结果。
    """
    if reading not in ("printed", "uniform"):
        raise ParameterError("reading", f"未知读法 {reading!r}")
    opts = opts or OptConfig.from_settings()
    ops = _SdOperators.build(sys, omega)
    rho_jr, x_jr = _sd_jr_rho(sys, omega, opts)
    norm_v = max(1.0, float(np.linalg.norm(ops.K @ x_jr)))
    starts = [(x_jr, s * norm_v, 0.0) for s in (1e-3, 0.1, 1.0)]
    starts.append((hermitian_eig(ops.KK).eigenvectors[:, 0], 0.1 * norm_v, 0.0))
    found = _sd_lbfgs(ops, starts, opts.max_iter, sign=1.0, square_j=reading == "uniform")
    value = found.rho if found is not None else float("inf")
    if reading == "printed":
        value = min(value, rho_jr)
    return value


def omega_objective(sys: DhdaeSystem, set_tag: SetTag | str, omega: float, opts: Optional[OptConfig] = None) -> float:
    """
    📈 逐 ω 的平方距离目标 ρ(ω)

    Args:
        sys: dHDAE 系统
        set_tag: 扰动集合 (决定 S_d / S_i 与作用范围)
        omega: 实频率
        opts: 优化器选项 (S_d 需要内层优化)

    Returns:
        float: ρ(ω)
    """
    tag = SetTag(set_tag)
    opts = opts or OptConfig.from_settings()
    if not tag.is_decreasing:
        return _si_rho(sys, omega, tag.scope)[0]
    if tag.scope == Scope.JR:
        return _sd_jr_rho(sys, omega, opts)[0]
    return _sd_full_rho(sys, omega, opts).rho


# ==========================================
# 🎯 Λ 分支
# ==========================================

def _lambda_candidates(sys: DhdaeSystem, decreasing: bool, opts: OptConfig) -> list[_Candidate]:
    """
    Λ 中每个 ω 在特征空间上的取值

    S_i: λ_min(Z*R²Z)；S_d: (x*R²x/x*Rx)² 在 span(Z) 上的最小值
    """
    omegas, _ = lambda_set(sys)
    candidates = []
    R2 = sys.R @ sys.R
    for omega in omegas:
        Z = _eigenspace(sys, float(omega))
        if Z.shape[1] == 0:
            continue
        if decreasing:
            problem = RayleighSumProblem(
                np.zeros((Z.shape[1], Z.shape[1])), Z.conj().T @ R2 @ Z, Z.conj().T @ sys.R @ Z
            )
            result = minimize_rayleigh_sum(problem, opts)
            rho, y = result.value, result.minimizer
        else:
            eig = hermitian_eig(Z.conj().T @ R2 @ Z)
            rho, y = eig.lambda_min, eig.eigenvectors[:, 0]
        x = Z @ y
        candidates.append(_Candidate(float(rho), float(omega), x / np.linalg.norm(x)))
    return candidates


# ==========================================
# 🧪 见证扰动
# ==========================================

def _si_witness(sys: DhdaeSystem, c: _Candidate, scope: Scope, fallback: int) -> Optional[PerturbationTriple]:
    """
    S_i 见证

    fallback 0: 最小范数 Hermitian 映射；1: ΔR 改用半负定湮灭扰动；2: 再令 ΔE = 0
    """
    omega, x = c.omega, c.x
    n = sys.n
    v = _k(sys, omega) @ x
    if scope == Scope.FULL and fallback < 2:
        denom = 1.0 + omega * omega
        v_e = 1j * omega * v / denom
        v_j = v / denom
        dE = min_hermitian_map(x, v_e)
    else:
        v_j = v
        dE = None
    dJ = min_skew_map(x, v_j)
    dR = min_hermitian_map(x, -sys.R @ x) if fallback == 0 else min_neg_semidef_annihilator(sys.R, x)
    if not dJ.feasible or not dR.feasible or (dE is not None and not dE.feasible):
        return None
    zero = np.zeros((n, n), dtype=np.complex128)
    return PerturbationTriple(
        dE.matrix if dE is not None else zero,
        dJ.matrix,
        dR.matrix,
        SetTag.resolve("si", scope),
    )


def _sd_witness(sys: DhdaeSystem, c: _Candidate, scope: Scope, fallback: int) -> Optional[PerturbationTriple]:
    """
    S_d 见证

    ΔE = −(v_E v_E*)/(x*(−v_E))，ΔJ 为 Ŝ(x, v + iωv_E)，ΔR 为半负定湮灭扰动；
    fallback ≥ 1 时令 ΔE = 0
    """
    omega, x = c.omega, c.x
    n = sys.n
    v = _k(sys, omega) @ x
    v_e = np.zeros(n, dtype=np.complex128)
    dE = np.zeros((n, n), dtype=np.complex128)
    if scope == Scope.FULL and fallback == 0 and c.a > 0.0:
        perp = v - np.vdot(x, v) * x
        p = np.linalg.norm(perp)
        direction = perp / p if p > 0 else np.zeros_like(perp)
        v_e = -c.a * x + 1j * copysign(1.0, omega) * c.q * direction
        mapped = min_psd_map(x, -v_e)
        if not mapped.feasible:
            return None
        dE = mapped.negated().matrix
    dJ = min_skew_map(x, v + 1j * omega * v_e)
    if not dJ.feasible:
        return None
    dR = min_neg_semidef_annihilator(sys.R, x)
    return PerturbationTriple(dE, dJ.matrix, dR.matrix, SetTag.resolve("sd", scope))


def verify_im_witness(sys: DhdaeSystem, triple: PerturbationTriple, x: np.ndarray, omega: float) -> bool:
    """
    🧪 复核纯虚特征值见证

    扰动属于其集合，且 (R+ΔR)x = 0、(iω(E+ΔE) − (J+ΔJ))x = 0 (相对残差 ≤ 1e−8)，
    扰动后矩阵束在 iω 处数值奇异。
    """
    if triple.membership_violations(sys):
        return False
    perturbed = apply_perturbation(sys, triple, check=False)
    scale = max(1.0, sys.norm_scale)
    r_res = float(np.linalg.norm(perturbed.R @ x))
    k_res = float(np.linalg.norm((1j * omega * perturbed.E - perturbed.J) @ x))
    if r_res > RESIDUAL_TOL * scale or k_res > RESIDUAL_TOL * scale:
        return False
    pencil = 1j * omega * perturbed.E - perturbed.A
    return sigma_min(pencil) <= TIGHT_TOL * scale


def _attach_witness(report: ImDistanceReport, sys: DhdaeSystem, c: _Candidate, decreasing: bool) -> ImDistanceReport:
    """按回退顺序构造见证，附带第一个通过复核者并判定紧性"""
    build = _sd_witness if decreasing else _si_witness
    attempts = 2 if decreasing else 3
    for fallback in range(attempts):
        triple = build(sys, c, report.scope, fallback)
        if triple is None or not verify_im_witness(sys, triple, c.x, c.omega):
            continue
        report.witness = triple
        report.witness_vector = complex_pairs(c.x)
        report.witness_norm = triple.norm
        report.witness_verified = True
        report.tight = triple.norm <= report.value * (1 + TIGHT_TOL) + 1e-12
        if report.tight and report.bound_kind == BoundKind.LOWER:
            report.bound_kind = BoundKind.EXACT
            report.notes.append("见证扰动保持半正定性且范数达到下界，升级为精确值")
        elif not report.tight:
            report.notes.append(f"见证扰动范数 {triple.norm:.6e} 大于报告值")
        return report
    log.warning(f"⚠️ 纯虚距离见证复核失败: ω={c.omega:.6e}, 集合 {report.set_tag.value}")
    report.notes.append("未能构造通过复核的见证扰动")
    return report


# ==========================================
# 🌊 距离计算
# ==========================================

def _best_over_omega(
    sys: DhdaeSystem,
    tag: SetTag,
    opts: OptConfig,
    extra_seeds: Sequence[float],
    method: ImMethod = "closed_form",
) -> tuple[_Candidate, list[_Candidate], list[str]]:
    """外层 ω 最小化 + Λ 分支候选"""
    notes: list[str] = []
    _, everywhere = lambda_set(sys)
    if everywhere:
        notes.append("(E, J) 为奇异束，Λ = ℝ")
    seeds = _seeds(sys, extra_seeds)

    if not tag.is_decreasing:
        if method == "lambda_max" and tag.scope == Scope.FULL:
            f = lambda w: _si_lambda_max_rho(sys, w, opts)
        else:
            f = lambda w: _si_rho(sys, w, tag.scope)[0]
        result = minimize_over_omega(f, seeds, opts, reentrant=True)
        omega = result.minimizer
        rho_closed, x = _si_rho(sys, omega, tag.scope)
        generic = _Candidate(min(result.value, rho_closed), omega, x)
    elif tag.scope == Scope.JR:
        result = minimize_over_omega(
            lambda w: _sd_jr_rho(sys, w, opts)[0], seeds, opts, refine_top=opts.nested_refine_top
        )
        omega = result.minimizer
        rho, x = _sd_jr_rho(sys, omega, opts)
        generic = _Candidate(min(result.value, rho), omega, x)
    else:
        search = _SdFullSearch(sys, opts)
        result = minimize_over_omega(
            search, seeds, opts, refine_top=opts.nested_refine_top, refine_f=search.refine
        )
        generic = search.solve(result.minimizer)
    return generic, _lambda_candidates(sys, tag.is_decreasing, opts), notes


def _si_lambda_max_rho(sys: DhdaeSystem, omega: float, opts: OptConfig) -> float:
    """
    S_i 完整扰动的对偶下界 1/min_t λ_max(G + t·H1)

    ω ∈ Λ 或对偶问题退化时回到逐 ω 闭式
    """
    try:
        mats = build_omega_matrices(sys, omega)
        result = minimize_lambda_max(mats.G, [mats.H1], opts)
    except (OmegaInLambdaError, IndefinitenessError, UnboundedBelowError) as exc:
        log.debug(f"🔁 ω={omega:.6e} 处对偶下界不可用 ({exc.code})，改用闭式")
        return _si_rho(sys, omega, Scope.FULL)[0]
    if result.value <= 0.0:
        return float("inf")
    return 1.0 / result.value


def _finalize(
    sys: DhdaeSystem,
    tag: SetTag,
    generic: _Candidate,
    lambda_candidates: list[_Candidate],
    bound_kind: BoundKind,
    notes: list[str],
) -> ImDistanceReport:
    best, branch = generic, Branch.GENERIC
    for c in lambda_candidates:
        if c.rho <= best.rho:
            best, branch = c, Branch.LAMBDA
    if branch == Branch.GENERIC and sigma_min(_k(sys, best.omega)) <= _threshold(sys):
        branch = Branch.LAMBDA
    report = ImDistanceReport(
        value=_sqrt(best.rho),
        bound_kind=bound_kind,
        set_tag=tag,
        scope=tag.scope,
        omega_star=best.omega,
        branch=branch,
        heuristic=True,
        notes=list(notes),
    )
    report = _attach_witness(report, sys, best, tag.is_decreasing)
    log.info(
        f"🌊 纯虚距离 [{tag.value}] = {report.value:.6e} ({report.bound_kind.value}), "
        f"ω* = {best.omega:.6e}, 分支 {branch.value}"
    )
    return report


def dist_im_full(
    sys: DhdaeSystem,
    set_tag: SetTag | str,
    method: ImMethod = "closed_form",
    opts: Optional[OptConfig] = None,
    extra_seeds: Sequence[float] = (),
) -> ImDistanceReport:
    """
    🌊 完整扰动 (ΔE, ΔJ, ΔR) 下到纯虚特征值的距离下界

    S_i: 逐 ω 闭式 λ_min(R² + K*K/(1+ω²)) (method="lambda_max" 时改用对偶界)；
    S_d: 消去 ΔE 的方向自由度后对 (x, a, q) 做光滑最小化，与 ΔE = 0 的解取小。
    未施加 E+ΔE ≥ 0 与 R+ΔR ≥ 0 时为下界；见证满足二者且范数相符时升级为精确值。

    Args:
        sys: 鲁棒渐近稳定的系统
        set_tag: Sd / Si
        method: S_i 的取值方式
        opts: 优化器选项
        extra_seeds: 额外的 ω 种子

    Returns:
        ImDistanceReport: 距离报告

    Raises:
        NotRobustlyStableError: 系统不满足前提
    """
    _require_stable(sys)
    tag = SetTag(set_tag).with_scope(Scope.FULL)
    opts = opts or OptConfig.from_settings()
    generic, lam, notes = _best_over_omega(sys, tag, opts, extra_seeds, method)
    if method == "lambda_max" and not tag.is_decreasing:
        notes.append("S_i 使用 λ_max 对偶界，可能弱于逐 ω 闭式")
    return _finalize(sys, tag, generic, lam, BoundKind.LOWER, notes)


def dist_im_jr(
    sys: DhdaeSystem,
    set_tag: SetTag | str,
    opts: Optional[OptConfig] = None,
    extra_seeds: Sequence[float] = (),
) -> ImDistanceReport:
    """
    🌊 仅扰动 (J, R) 时到纯虚特征值的距离

    S_d: min_ω min_x ‖Kx‖² + (x*R²x/x*Rx)²，精确；
    S_i: min_ω σ_min([R; iωE − J])，R ≻ 0 时精确，否则为下界。

    Raises:
        NotRobustlyStableError: 系统不满足前提
    """
    _require_stable(sys)
    tag = SetTag(set_tag).with_scope(Scope.JR)
    opts = opts or OptConfig.from_settings()
    generic, lam, notes = _best_over_omega(sys, tag, opts, extra_seeds)
    if tag.is_decreasing:
        kind = BoundKind.EXACT
    elif hermitian_eig(sys.R).lambda_min > _threshold(sys):
        kind = BoundKind.EXACT
    else:
        kind = BoundKind.LOWER
        notes.append("R 奇异，σ_min 公式仅为下界")
    return _finalize(sys, tag, generic, lam, kind, notes)


def dist_im(sys: DhdaeSystem, set_tag: SetTag | str, opts: Optional[OptConfig] = None) -> ImDistanceReport:
    """🌊 按集合标签的作用范围分派"""
    tag = SetTag(set_tag)
    if tag.scope == Scope.JR:
        return dist_im_jr(sys, tag, opts)
    return dist_im_full(sys, tag, opts=opts)


def reduced_im_bound(sys: DhdaeSystem, opts: Optional[OptConfig] = None) -> tuple[float, str]:
    """
    📐 有限谱子束上 S_i(J, R) 的纯虚距离 (σ_min 公式)

    子束的 E 可逆，因此只需逐 ω 闭式，不做稳定性前提检查。

    Returns:
        tuple: (距离, 界类型字符串)
    """
    opts = opts or OptConfig.from_settings()
    if sys.n == 0:
        return float("inf"), BoundKind.EXACT.value
    seeds = [float(z.imag) for z in pencil_finite_eigs(sys.E, sys.J)]
    result = minimize_over_omega(lambda w: _si_rho(sys, w, Scope.JR)[0], seeds, opts, reentrant=True)
    exact = hermitian_eig(sys.R).lambda_min > _threshold(sys)
    kind = BoundKind.EXACT if exact else BoundKind.LOWER
    return _sqrt(result.value), kind.value


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "OmegaMatrices",
    "build_omega_matrices",
    "lambda_set",
    "omega_objective",
    "sd_display_value",
    "sd_display_vector",
    "sd_display_rho",
    "verify_im_witness",
    "dist_im_full",
    "dist_im_jr",
    "dist_im",
    "reduced_im_bound",
]
