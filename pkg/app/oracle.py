"""
=============================================
🔍 蛮力预言机模块
=============================================
模块名称: oracle.py
模块功能:
    - 结构化扰动集合内的随机采样 (二分裁剪保持 E+ΔE, R+ΔR 半正定)
    - 距离报告的采样证书 (预算内无退化，见证触发退化)
    - ω 稠密网格上的目标最小值，以及 S_d 完整扰动目标不同读法的对照
    - 行列式插值求有限特征值
    - 球面随机采样的 Rayleigh 和最小值
约定:
    - 所有随机性来自 numpy Generator(seed)，证书记录种子
    - 仅用于小规模 (n ≤ 4~8) 的独立复核

"""

from typing import Literal, Optional, Sequence

import numpy as np

# ========== 内部模块导入 ==========
from app.core.logger import log
from app.exceptions import DhdaeError, ParameterError, SingularPencilError
from app.matrix_core import as_matrix, hermitian_eig, hermitian_part, skew_part, spectral_norm, stacked_sigma_min
from app.models import CertificateRecord, DistanceKind, DistanceReport, SdReadingComparison, SetTag
from app.optimizers import OptConfig, RayleighSumProblem
from app.staircase import classify, compute_staircase, finite_spectrum
from app.system import DhdaeSystem, PerturbationTriple


DEGENERACY_TOL = 1e-8     # 公共核 σ_min 的相对阈值
AXIS_TOL = 1e-6           # 纯虚轴特征值的相对阈值
SHRINK = 1e-3             # 采样预算 = value·(1 − SHRINK)
TIGHT_SLACK = 1e-6        # 见证范数低于报告值的容许比例
BISECTION_STEPS = 50

OmegaObjective = Literal[
    "im_jr_si", "im_full_si", "im_jr_sd", "im_full_sd", "im_full_sd_printed", "im_full_sd_uniform"
]

_OBJECTIVE_TAGS: dict[str, SetTag] = {
    "im_jr_si": SetTag.SI_JR,
    "im_full_si": SetTag.SI,
    "im_jr_sd": SetTag.SD_JR,
    "im_full_sd": SetTag.SD,
}

_DISPLAY_READINGS: dict[str, str] = {
    "im_full_sd_printed": "printed",
    "im_full_sd_uniform": "uniform",
}


# ==========================================
# 🎲 结构化采样
# ==========================================

def _random_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def _psd_step(base: np.ndarray, direction: np.ndarray) -> float:
    """最大的 s ∈ [0, 1] 使 base + s·direction 半正定 (二分)"""
    def ok(s: float) -> bool:
        M = base + s * direction
        return hermitian_eig(M).lambda_min >= -1e-12 * max(1.0, spectral_norm(M))

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _direction(rng: np.random.Generator, n: int, decreasing: bool) -> np.ndarray:
    G = _random_complex(rng, n)
    if decreasing:
        return -hermitian_part(G @ G.conj().T)
    return hermitian_part(G)


def sample_structured_perturbations(
    sys: DhdaeSystem,
    set_tag: Optional[SetTag | str],
    norm_budget: float,
    count: int,
    rng_seed: int = 0,
) -> list[PerturbationTriple]:
    """
    🎲 在扰动集合内随机采样

    ΔJ 为随机反 Hermitian；ΔR (以及 full 范围的 ΔE) 在 S_i 中为随机 Hermitian、
    在 S_d 中为随机半负定，再沿射线二分裁剪使 R+ΔR、E+ΔE 半正定。
    三元范数 ≤ budget，半径偏向预算边界。set_tag 为 None 时采样任意复矩阵。

    Args:
        sys: 被扰动的系统
        set_tag: 扰动集合 (None 表示非结构化)
        norm_budget: 三元范数上限
        count: 采样数量
        rng_seed: 随机种子

    Returns:
        list: 通过集合归属复核的扰动

    Raises:
        ParameterError: 预算为负或数量为负
    """
    if norm_budget < 0 or not np.isfinite(norm_budget):
        raise ParameterError("norm_budget", f"预算必须为非负有限数 (收到 {norm_budget})")
    if count < 0:
        raise ParameterError("count", "采样数量不能为负")
    n = sys.n
    tag = SetTag(set_tag) if set_tag is not None else None
    if norm_budget == 0.0:
        return [PerturbationTriple.zeros(n, tag) for _ in range(count)]

    rng = np.random.default_rng(rng_seed)
    samples: list[PerturbationTriple] = []
    rejected = 0
    for _ in range(count):
        if tag is None:
            triple = PerturbationTriple(_random_complex(rng, n), _random_complex(rng, n), _random_complex(rng, n))
        else:
            dJ = skew_part(_random_complex(rng, n))
            dR = _direction(rng, n, tag.is_decreasing)
            if tag.scope.value == "jr":
                dE = np.zeros((n, n), dtype=np.complex128)
            else:
                dE = _direction(rng, n, tag.is_decreasing)
            triple = PerturbationTriple(dE, dJ, dR, tag)
        norm = triple.norm
        if norm == 0.0:
            samples.append(PerturbationTriple.zeros(n, tag))
            continue
        radius = norm_budget * rng.uniform() ** (1 / 6)
        triple = triple.scaled(radius / norm)
        if tag is not None:
            dE = triple.dE * _psd_step(sys.E, triple.dE)
            dR = triple.dR * _psd_step(sys.R, triple.dR)
            triple = PerturbationTriple(dE, triple.dJ, dR, tag)
            if triple.membership_violations(sys):
                rejected += 1
                continue
        samples.append(triple)
    if rejected:
        log.warning(f"⚠️ 采样中 {rejected} 个扰动未通过集合归属复核")
    return samples


# ==========================================
# 🚨 退化判定
# ==========================================

def _perturbed(sys: DhdaeSystem, triple: PerturbationTriple) -> DhdaeSystem:
    return DhdaeSystem(E=sys.E + triple.dE, J=sys.J + triple.dJ, R=sys.R + triple.dR)


def triggers_degeneracy(sys: DhdaeSystem, kind: DistanceKind) -> bool:
    """
    🚨 系统是否处于 kind 对应的退化边界上

    - sing: σ_min([E; J; R]) ≤ 1e−8·scale
    - hi: 矩阵束奇异或指标 ≥ 2
    - im: 矩阵束奇异或存在实部 ≈ 0 的有限特征值
    - inst: 以上任一
    """
    scale = max(1.0, sys.norm_scale)
    if kind == DistanceKind.SING:
        return stacked_sigma_min([sys.E, sys.J, sys.R]) <= DEGENERACY_TOL * scale
    if kind == DistanceKind.INST:
        return any(triggers_degeneracy(sys, k) for k in (DistanceKind.SING, DistanceKind.HI, DistanceKind.IM))
    try:
        sc = compute_staircase(sys)
    except DhdaeError:
        return False
    cls = classify(sc)
    if not cls.regular:
        return True
    if kind == DistanceKind.HI:
        return cls.index is not None and cls.index >= 2
    eigs = finite_spectrum(sc)
    return bool(np.any(np.abs(eigs.real) <= AXIS_TOL * np.maximum(1.0, np.abs(eigs))))


# ==========================================
# 📜 采样证书
# ==========================================

def certify_distance(report: DistanceReport, sys: DhdaeSystem, samples: int = 1000, seed: int = 0) -> CertificateRecord:
    """
    📜 用随机采样核验距离报告

    (a) 对精确值与下界: 范数 ≤ value·(1 − 1e−3) 的采样扰动都不触发退化；
    (b) 见证 (若有) 必须触发退化，且其范数不得小于报告值 (精确值与下界)。

    Args:
        report: 距离报告
        sys: 原系统
        samples: 采样数量
        seed: 随机种子

    Returns:
        CertificateRecord: 证书 (失败时含反例描述)
    """
    notes: list[str] = []
    counterexample: Optional[str] = None
    claims_lower = report.bound_kind.value in ("exact", "lower")

    witness_triggers: Optional[bool] = None
    witness = report.witness
    if witness is not None:
        witness_triggers = triggers_degeneracy(_perturbed(sys, witness), report.kind)
        if not witness_triggers:
            counterexample = "见证扰动没有触发退化"
        elif claims_lower and witness.norm < report.value * (1 - TIGHT_SLACK):
            counterexample = f"见证扰动范数 {witness.norm:.6e} 小于报告值 {report.value:.6e}"

    budget = report.value * (1 - SHRINK) if np.isfinite(report.value) else 0.0
    drawn = 0
    if not np.isfinite(report.value):
        notes.append("报告值为 +∞，跳过预算采样")
    elif not claims_lower:
        notes.append("上界报告不做预算采样")
    elif counterexample is None:
        batch = sample_structured_perturbations(sys, report.set_tag, budget, samples, seed)
        drawn = len(batch)
        for i, triple in enumerate(batch):
            if triggers_degeneracy(_perturbed(sys, triple), report.kind):
                counterexample = f"第 {i} 个采样 (范数 {triple.norm:.6e}) 触发退化"
                break

    passed = counterexample is None and witness_triggers is not False
    if passed:
        log.info(f"📜 证书通过: {report.kind.value}, 采样 {drawn}, 预算 {budget:.6e}")
    else:
        log.warning(f"⚠️ 证书未通过: {counterexample}")
    return CertificateRecord(
        passed=passed,
        seed=seed,
        samples=drawn,
        budget=budget,
        witness_triggers=witness_triggers,
        counterexample=counterexample,
        notes=notes,
    )


# ==========================================
# 📈 ω 网格与行列式
# ==========================================

def _omegas(grid: Sequence[float] | tuple[float, float, int]) -> np.ndarray:
    if isinstance(grid, tuple) and len(grid) == 3 and isinstance(grid[2], int):
        return np.linspace(float(grid[0]), float(grid[1]), grid[2])
    return np.asarray(list(grid), dtype=float)


def grid_omega_oracle(
    sys: DhdaeSystem,
    objective_kind: OmegaObjective,
    grid: Sequence[float] | tuple[float, float, int],
    opts: Optional[OptConfig] = None,
) -> float:
    """
    📈 在稠密 ω 网格上最小化逐 ω 目标

    Args:
        sys: 系统
        objective_kind: im_jr_si / im_full_si / im_jr_sd / im_full_sd，
            以及 S_d 完整扰动的字面读法 im_full_sd_printed / im_full_sd_uniform
        grid: ω 序列，或 (lo, hi, count) 的等距网格
        opts: S_d 内层优化选项

    Returns:
        float: 网格上的最小距离 √min ρ(ω)
    """
    from app.distance_im import omega_objective, sd_display_rho

    opts = opts or OptConfig.from_settings()
    if objective_kind in _DISPLAY_READINGS:
        reading = _DISPLAY_READINGS[objective_kind]
        f = lambda w: sd_display_rho(sys, w, reading, opts)
    elif objective_kind in _OBJECTIVE_TAGS:
        tag = _OBJECTIVE_TAGS[objective_kind]
        f = lambda w: omega_objective(sys, tag, w, opts)
    else:
        raise ParameterError("objective_kind", f"未知目标 {objective_kind!r}")
    best = min(f(float(w)) for w in _omegas(grid))
    return float(np.sqrt(max(best, 0.0)))


def compare_sd_readings(
    sys: DhdaeSystem,
    grid: Sequence[float] | tuple[float, float, int],
    opts: Optional[OptConfig] = None,
) -> SdReadingComparison:
    """
    ⚖️ 在同一 ω 网格上对照 S_d 完整扰动目标的三种取值

    eliminated 为实现所用的精确消元 (ΔE ⪯ 0)；printed 为字面读法
    (ΔJ 项不再平方，x*v_E > 0)；uniform 把 ΔJ 项也平方。

    Returns:
        SdReadingComparison: 三个网格最小距离及相对差
    """
    opts = opts or OptConfig.from_settings()
    eliminated = grid_omega_oracle(sys, "im_full_sd", grid, opts)
    printed = grid_omega_oracle(sys, "im_full_sd_printed", grid, opts)
    uniform = grid_omega_oracle(sys, "im_full_sd_uniform", grid, opts)
    scale = max(eliminated, 1e-300)
    result = SdReadingComparison(
        eliminated=eliminated,
        printed=printed,
        uniform=uniform,
        printed_gap=(printed - eliminated) / scale,
        uniform_gap=(uniform - eliminated) / scale,
    )
    log.info(
        f"⚖️ S_d 读法对照: 消元 {eliminated:.6e}, 字面 {printed:.6e} ({result.printed_gap:+.2e}), "
        f"全平方 {uniform:.6e} ({result.uniform_gap:+.2e})"
    )
    return result


def determinant_roots(E, A, radius: float = 1.0) -> np.ndarray:
    """
    🧮 det(λE − A) 的根 (有限特征值)

    在半径为 radius 的圆周上取 n+1 个点插值多项式系数 (FFT)，再求根。

    Raises:
        SingularPencilError: 行列式恒为零
    """
    E = as_matrix(E, "E")
    A = as_matrix(A, "A")
    n = E.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.complex128)
    m = n + 1
    points = radius * np.exp(2j * np.pi * np.arange(m) / m)
    values = np.array([np.linalg.det(z * E - A) for z in points])
    coeffs = np.fft.fft(values) / m / radius ** np.arange(m)
    scale = np.max(np.abs(coeffs) * radius ** np.arange(m))
    if scale == 0.0:
        raise SingularPencilError(reason="det(λE − A) 恒为零")
    significant = np.nonzero(np.abs(coeffs) * radius ** np.arange(m) > 1e-10 * scale)[0]
    degree = int(significant[-1])
    if degree == 0:
        return np.zeros(0, dtype=np.complex128)
    return np.sort_complex(np.roots(coeffs[: degree + 1][::-1]))


def sphere_sample_minimum(problem: RayleighSumProblem, count: int, seed: int = 0) -> tuple[float, np.ndarray]:
    """
    🎯 单位球面随机采样的 Rayleigh 和最小值

    Returns:
        tuple: (最小值, 对应单位向量)
    """
    rng = np.random.default_rng(seed)
    n = problem.n
    best_value, best_x = float("inf"), np.zeros(n, dtype=np.complex128)
    for _ in range(count):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x = x / np.linalg.norm(x)
        value = problem.objective(x)
        if value < best_value:
            best_value, best_x = value, x
    return best_value, best_x


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "sample_structured_perturbations",
    "triggers_degeneracy",
    "certify_distance",
    "grid_omega_oracle",
    "compare_sd_readings",
    "determinant_roots",
    "sphere_sample_minimum",
]
