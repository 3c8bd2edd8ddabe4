"""
=============================================
🧠 优化引擎模块
=============================================
模块名称: optimizers.py
模块功能:
    - (A) Rayleigh 商与平方广义 Rayleigh 商之和的单位球面最小化
          (带水平位移的自洽场迭代 + 投影梯度兜底 + 多起点)
    - (B) 双参数 Hermitian 族的 λ_max 凸最小化
    - (C) 关于 ω 的一维外层最小化 (对数网格 + 黄金分割细化)
约定:
    - 所有容差集中在 OptConfig，缺省值读取全局 Config
    - 随机起点由 numpy Generator(seed) 生成，结果可复现
    - 并发评估的结果按 (值, 序号) 确定性合并

"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from math import sqrt
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

# ========== 内部模块导入 ==========
from app.core.config import Config
from app.core.logger import log
from app.exceptions import DimensionError, IndefinitenessError, UnboundedBelowError
from app.matrix_core import hermitian_eig, hermitian_part, nullspace_basis, spectral_norm


PHI_RATIO = 2 / (1 + sqrt(5))
KERNEL_TOL = 1e-12        # 二次型判零的相对阈值


# ==========================================
# ⚙️ 优化器配置
# ==========================================

@dataclass(frozen=True)
class OptConfig:
    """
    ⚙️ 优化器选项

    Attributes:
        max_iter: 内层迭代上限
        multistarts: 多起点数量
        seed: 随机种子
        scf_shift_growth: 水平位移增长因子
        omega_grid_points: 单侧对数网格点数
        omega_span_min / omega_span_max: 对数网格跨度
        golden_xtol: 黄金分割相对宽度
        nested_refine_top: 目标函数本身需要优化时参与细化的种子数
        threads: 工作线程上限
        probes: 球面随机探针数量
    """

    max_iter: int = 500
    multistarts: int = 10
    seed: int = 0
    scf_shift_growth: float = 2.0
    omega_grid_points: int = 65
    omega_span_min: float = 1e-3
    omega_span_max: float = 1e3
    golden_xtol: float = 1e-10
    nested_refine_top: int = 8
    threads: int = 1
    probes: int = 256

    @classmethod
    def from_settings(cls, **overrides: Any) -> "OptConfig":
        """
        🔧 从全局 Config 构造，显式参数优先

        Args:
            **overrides: 需要覆盖的字段 (None 表示不覆盖)
        """
        base = cls(
            max_iter=Config.max_iter,
            multistarts=Config.multistarts,
            seed=Config.seed,
            scf_shift_growth=Config.scf_shift_growth,
            omega_grid_points=Config.omega_grid_points,
            omega_span_min=Config.omega_span_min,
            omega_span_max=Config.omega_span_max,
            golden_xtol=Config.golden_xtol,
            nested_refine_top=Config.nested_refine_top,
            threads=Config.threads,
        )
        return replace(base, **{k: v for k, v in overrides.items() if v is not None})


@dataclass
class OptResult:
    """
    📦 优化结果

    Attributes:
        value: 最优值
        minimizer: 单位向量 / (t1, t2) / ω
        iterations: 迭代次数
        converged: 是否收敛
        multistart_log: 各起点记录
        heuristic: 是否为非凸启发式结果
        details: 附加信息 (次梯度等)
    """

    value: float
    minimizer: Any
    iterations: int = 0
    converged: bool = False
    multistart_log: list = field(default_factory=list)
    heuristic: bool = False
    details: dict = field(default_factory=dict)


def _map_ordered(fn: Callable, items: Sequence, threads: int) -> list:
    """按输入顺序返回结果；threads > 1 时并发执行"""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


# ==========================================
# 🅰️ Rayleigh 商之和
# ==========================================

class RayleighSumProblem:
    """
    🅰️ 目标 f(x) = x*H1x/x*x + Σ_k (x*A_k x / x*B_k x)²

    Args:
        H1: Hermitian 半正定
        H2, H3: 第一个平方商的分子 / 分母 (可省略)
        extra_terms: 其余 (A_k, B_k) 对
        zero_over_zero: 分子分母同时为零时取 0
        exclude_kernel: 任一分母为零即视为不可行 (目标取 +∞)
    """

    def __init__(
        self,
        H1,
        H2=None,
        H3=None,
        extra_terms: Sequence[tuple] = (),
        zero_over_zero: bool = True,
        exclude_kernel: bool = False,
    ):
        self.H1 = hermitian_part(H1)
        terms = []
        if H2 is not None:
            if H3 is None:
                raise DimensionError("H2 给出时必须同时给出 H3")
            terms.append((hermitian_part(H2), hermitian_part(H3)))
        for A, B in extra_terms:
            terms.append((hermitian_part(A), hermitian_part(B)))
        n = self.H1.shape[0]
        for A, B in terms:
            if A.shape != (n, n) or B.shape != (n, n):
                raise DimensionError("Rayleigh 问题矩阵尺寸不一致", shapes=[self.H1.shape, A.shape, B.shape])
        self.terms = terms
        self.zero_over_zero = zero_over_zero
        self.exclude_kernel = exclude_kernel
        self._norms = [(max(spectral_norm(A), 1e-300), max(spectral_norm(B), 1e-300)) for A, B in terms]

    @property
    def n(self) -> int:
        return int(self.H1.shape[0])

    def quotients(self, x: np.ndarray) -> Optional[list[float]]:
        """各平方商的底数 ρ_k；不可行 (分母为零而分子非零，或排除核) 时返回 None"""
        nx2 = float(np.vdot(x, x).real)
        rhos = []
        for (A, B), (na, nb) in zip(self.terms, self._norms):
            num = float(np.vdot(x, A @ x).real)
            den = float(np.vdot(x, B @ x).real)
            if den <= KERNEL_TOL * nb * nx2:
                if self.exclude_kernel:
                    return None
                if num <= KERNEL_TOL * na * nx2 and self.zero_over_zero:
                    rhos.append(0.0)
                    continue
                return None
            rhos.append(num / den)
        return rhos

    def objective(self, x: np.ndarray) -> float:
        """📈 目标函数值 (不要求 x 归一化)"""
        nx2 = float(np.vdot(x, x).real)
        if nx2 == 0.0:
            return float("inf")
        rhos = self.quotients(x)
        if rhos is None:
            return float("inf")
        return float(np.vdot(x, self.H1 @ x).real) / nx2 + sum(r * r for r in rhos)

    def scf_matrix(self, x: np.ndarray) -> Optional[np.ndarray]:
        """
        🔁 一阶驻点条件对应的 Hermitian 矩阵

        H(x) = H1 + Σ 2ρ_k (A_k − ρ_k B_k)/(x*B_k x)，x 为单位向量
        """
        H = self.H1.copy()
        for (A, B), (_, nb) in zip(self.terms, self._norms):
            den = float(np.vdot(x, B @ x).real)
            if den <= KERNEL_TOL * nb:
                continue
            rho = float(np.vdot(x, A @ x).real) / den
            H = H + 2 * rho * (A - rho * B) / den
        return hermitian_part(H)

    def kernel_candidate(self) -> Optional[tuple[float, np.ndarray]]:
        """
        🕳️ 0/0 约定下的核内候选

        在所有分母矩阵的公共核上，目标退化为 H1 的 Rayleigh 商
        """
        if not self.terms or self.exclude_kernel or not self.zero_over_zero:
            return None
        K = nullspace_basis(np.vstack([B for _, B in self.terms]), KERNEL_TOL)
        if K.shape[1] == 0:
            return None
        eig = hermitian_eig(K.conj().T @ self.H1 @ K)
        x = K @ eig.eigenvectors[:, 0]
        return self.objective(x), x / np.linalg.norm(x)


def _normalize(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x)


def _projected_gradient(problem: RayleighSumProblem, x: np.ndarray, f: float, max_iter: int) -> tuple[np.ndarray, float, int, bool]:
    """单位球面上的投影梯度下降 (Armijo 回溯)"""
    for it in range(1, max_iter + 1):
        H = problem.scf_matrix(x)
        g = H @ x
        g = g - np.vdot(x, g) * x
        gnorm = float(np.linalg.norm(g))
        if gnorm <= 1e-10 * max(1.0, abs(f)):
            return x, f, it, True
        step = 1.0 / max(spectral_norm(H), 1e-12)
        while step > 1e-16:
            y = _normalize(x - step * g)
            fy = problem.objective(y)
            if fy <= f - 1e-4 * step * gnorm ** 2:
                break
            step /= 2
        else:
            return x, f, it, True
        x, f = y, fy
    return x, f, max_iter, False


def _scf_from(problem: RayleighSumProblem, x0: np.ndarray, opts: OptConfig) -> tuple[np.ndarray, float, int, bool]:
    """
    🔁 从单个起点出发的水平位移自洽场迭代

    每步取 H(x) + σ(I − xx*) 的最小特征向量；目标不下降时按增长因子放大 σ，
    位移失效时改用投影梯度。
    """
    n = problem.n
    eye = np.eye(n, dtype=np.complex128)
    x = _normalize(x0)
    f = problem.objective(x)
    if not np.isfinite(f):
        return x, f, 0, False

    sigma = 0.0
    for it in range(1, opts.max_iter + 1):
        H = problem.scf_matrix(x)
        base = 1e-3 * max(1.0, spectral_norm(H))
        shift = sigma
        accepted = None
        for _ in range(60):
            Hs = H + shift * (eye - np.outer(x, x.conj()))
            _, V = sla.eigh(hermitian_part(Hs))
            y = V[:, 0]
            phase = np.vdot(y, x)
            if abs(phase) > 0:
                y = y * (phase / abs(phase))
            fy = problem.objective(y)
            if fy < f:
                accepted = (y, fy)
                break
            shift = max(shift * opts.scf_shift_growth, base)
        if accepted is None:
            x, f, extra, converged = _projected_gradient(problem, x, f, max(10, opts.max_iter - it))
            return x, f, it + extra, converged
        y, fy = accepted
        decrease = f - fy
        step = float(np.linalg.norm(y - x))
        x, f = y, fy
        sigma = shift / opts.scf_shift_growth
        if step < 1e-12 or decrease < 1e-15 * max(1.0, abs(f)):
            return x, f, it, True
    return x, f, opts.max_iter, False


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    return _normalize(rng.standard_normal(n) + 1j * rng.standard_normal(n))


def minimize_rayleigh_sum(problem: RayleighSumProblem, opts: Optional[OptConfig] = None) -> OptResult:
    """
    🅰️ 单位球面上最小化 Rayleigh 商之和

    起点: H1 的特征向量、A1 − B1 的特征向量、随机向量及最优探针。
    返回值不超过任何起点与探针处的目标值。

    Args:
        problem: 优化问题
        opts: 优化器选项，缺省读取全局配置

    Returns:
        OptResult: minimizer 为单位向量
    """
    opts = opts or OptConfig.from_settings()
    n = problem.n
    if n == 0:
        return OptResult(value=float("inf"), minimizer=np.zeros(0, dtype=np.complex128), converged=True)

    rng = np.random.default_rng(opts.seed)
    starts: list[np.ndarray] = []
    h1_vecs = hermitian_eig(problem.H1).eigenvectors
    starts.extend(h1_vecs[:, i] for i in range(min(n, max(1, opts.multistarts // 3))))
    if problem.terms:
        A, B = problem.terms[0]
        ab_vecs = hermitian_eig(A - B).eigenvectors
        starts.extend(ab_vecs[:, i] for i in range(min(n, max(1, opts.multistarts // 3))))
    while len(starts) < opts.multistarts:
        starts.append(_random_unit(rng, n))

    probes = [_random_unit(rng, n) for _ in range(opts.probes)]
    probe_values = [problem.objective(p) for p in probes]
    order = np.argsort(probe_values, kind="stable")
    starts.extend(probes[i] for i in order[: max(1, opts.multistarts // 5)])

    candidates: list[tuple[float, int, np.ndarray]] = []
    for idx in order[:1]:
        candidates.append((probe_values[idx], -1, probes[idx]))
    kernel = problem.kernel_candidate()
    if kernel is not None:
        candidates.append((kernel[0], -2, kernel[1]))

    runs = _map_ordered(lambda s: _scf_from(problem, s, opts), starts, opts.threads)
    log_entries = []
    total_iter = 0
    any_converged = False
    for i, (start, (x, f, iters, converged)) in enumerate(zip(starts, runs)):
        f_start = problem.objective(start)
        if f_start < f:
            x, f = _normalize(start), f_start
        candidates.append((f, i, x))
        log_entries.append({"start": i, "value": f, "iterations": iters, "converged": converged})
        total_iter += iters
        any_converged = any_converged or converged

    best_value, _, best_x = min(candidates, key=lambda c: (c[0], c[1]))
    if not any_converged:
        log.warning(f"⚠️ Rayleigh 和最小化未收敛 (max_iter={opts.max_iter})，返回已知最优值 {best_value:.6e}")
    return OptResult(
        value=float(best_value),
        minimizer=best_x,
        iterations=total_iter,
        converged=any_converged,
        multistart_log=log_entries,
        heuristic=True,
    )


# ==========================================
# 🅱️ λ_max 凸最小化
# ==========================================

def _lambda_max(M: np.ndarray) -> tuple[float, np.ndarray]:
    w, V = sla.eigh(hermitian_part(M))
    return float(w[-1]), V[:, -1]


def _check_indefinite(Hs: Sequence[np.ndarray]) -> float:
    """检查所有非零实组合均不定；返回单位方向上 λ_max 的最小值"""
    if len(Hs) == 1:
        directions = [(1.0,), (-1.0,)]
    else:
        angles = np.linspace(0, 2 * np.pi, 32, endpoint=False)
        directions = [(float(np.cos(a)), float(np.sin(a))) for a in angles]
    worst = float("inf")
    for d in directions:
        C = sum(c * H for c, H in zip(d, Hs))
        eig = hermitian_eig(C)
        tol = 1e-12 * max(1.0, spectral_norm(C))
        if eig.lambda_min >= -tol or eig.lambda_max <= tol:
            alpha = d[0]
            beta = d[1] if len(d) > 1 else 0.0
            raise IndefinitenessError(alpha, beta)
        worst = min(worst, eig.lambda_max)
    return worst


def minimize_lambda_max(G, Hs: Sequence, opts: Optional[OptConfig] = None) -> OptResult:
    """
    🅱️ 最小化 f(t) = λ_max(G + Σ t_i H_i)，参数个数 1 或 2

    f 为凸函数；二维情形采用嵌套的有界一维最小化。

    Args:
        G: Hermitian 矩阵
        Hs: 1 或 2 个 Hermitian 矩阵，任意非零实组合必须不定
        opts: 优化器选项

    Returns:
        OptResult: minimizer 为参数元组，details 中含次梯度

    Raises:
        IndefinitenessError: 某个组合方向上半定
        UnboundedBelowError: 最小点持续落在扩张后的边界上
    """
    opts = opts or OptConfig.from_settings()
    G = hermitian_part(G)
    Hs = [hermitian_part(H) for H in Hs]
    if len(Hs) not in (1, 2):
        raise DimensionError("λ_max 最小化只支持 1 或 2 个参数")
    m = _check_indefinite(Hs)
    radius = 4 * spectral_norm(G) / m + 1.0
    calls = {"n": 0}

    def f(t: Sequence[float]) -> float:
        calls["n"] += 1
        M = G + sum(ti * H for ti, H in zip(t, Hs))
        return _lambda_max(M)[0]

    def solve(rad: float) -> tuple[tuple[float, ...], float]:
        xatol = 1e-12 * max(1.0, rad)
        bounded = {"bounds": (-rad, rad), "method": "bounded", "options": {"xatol": xatol, "maxiter": opts.max_iter}}
        if len(Hs) == 1:
            res = minimize_scalar(lambda s: f((s,)), **bounded)
            return (float(res.x),), float(res.fun)

        def inner(t1: float) -> tuple[float, float]:
            res = minimize_scalar(lambda s: f((t1, s)), **bounded)
            return float(res.x), float(res.fun)

        outer = minimize_scalar(lambda t1: inner(t1)[1], **bounded)
        t1 = float(outer.x)
        t2, value = inner(t1)
        return (t1, t2), value

    for _ in range(7):
        t, value = solve(radius)
        if max(abs(ti) for ti in t) < radius * (1 - 1e-6):
            break
        radius *= 10
    else:
        norm_t = max(np.linalg.norm(t), 1e-300)
        raise UnboundedBelowError([ti / norm_t for ti in t])

    # 与原点比较 (有界 Brent 不评估区间内部的特定点)
    origin = f(tuple(0.0 for _ in Hs))
    if origin <= value:
        t, value = tuple(0.0 for _ in Hs), origin
    _, v = _lambda_max(G + sum(ti * H for ti, H in zip(t, Hs)))
    subgradient = [float(np.vdot(v, H @ v).real) for H in Hs]
    return OptResult(
        value=value,
        minimizer=t,
        iterations=calls["n"],
        converged=True,
        details={"subgradient": subgradient, "radius": radius},
    )


def minimize_lambda_max_2d(G, H1, H2, opts: Optional[OptConfig] = None) -> OptResult:
    """🅱️ 双参数情形 min_{t1,t2} λ_max(G + t1·H1 + t2·H2)"""
    return minimize_lambda_max(G, [H1, H2], opts)


# ==========================================
# 🅲 ω 外层最小化
# ==========================================

def golden_section(f: Callable[[float], float], lo: float, hi: float, xtol: float, max_iter: int = 200) -> tuple[float, float, int, bool]:
    """
    🟡 黄金分割一维最小化

    Args:
        f: 目标函数
        lo, hi: 区间端点
        xtol: 终止宽度
        max_iter: 最大迭代

    Returns:
        tuple: (argmin, 最小值, 迭代次数, 是否收敛)
    """
    x1 = hi - PHI_RATIO * (hi - lo)
    x2 = lo + PHI_RATIO * (hi - lo)
    f1, f2 = f(x1), f(x2)
    f_lo, f_hi = f(lo), f(hi)
    lo0, hi0 = lo, hi
    iteration = 0
    while iteration < max_iter and abs(hi - lo) > xtol:
        if f2 > f1:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - PHI_RATIO * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + PHI_RATIO * (hi - lo)
            f2 = f(x2)
        iteration += 1

    x_best, f_best = (x1, f1) if f1 <= f2 else (x2, f2)
    if f_lo < f_best:
        x_best, f_best = lo0, f_lo
    if f_hi < f_best:
        x_best, f_best = hi0, f_hi
    return x_best, f_best, iteration, iteration < max_iter


def omega_grid(opts: OptConfig) -> np.ndarray:
    """对称对数网格 ±logspace(span_min, span_max) 加 0"""
    w = np.logspace(np.log10(opts.omega_span_min), np.log10(opts.omega_span_max), opts.omega_grid_points)
    return np.concatenate([-w[::-1], [0.0], w])


def minimize_over_omega(
    f: Callable[[float], float],
    seeds: Sequence[float] = (),
    opts: Optional[OptConfig] = None,
    refine_top: Optional[int] = None,
    reentrant: bool = False,
    refine_f: Optional[Callable[[float], float]] = None,
) -> OptResult:
    """
    🅲 关于 ω 的一维最小化

    候选点为种子与对称对数网格，按 ω 升序评估；离散局部极小点在相邻候选之间用黄金分割细化
    到宽度 golden_xtol·(1+|ω|)。结果始终标记为启发式。

    Args:
        f: ℝ 上处处有定义的目标 (非有限值视为 +∞)
        seeds: 种子 ω (如特征值虚部)
        opts: 优化器选项
        refine_top: 仅细化值最小的若干个局部极小点
        reentrant: 目标可并发调用时按 threads 并发评估
        refine_f: 黄金分割细化阶段改用的目标 (如单起点热启动版本)，缺省同 f

    Returns:
        OptResult: minimizer 为 ω
    """
    opts = opts or OptConfig.from_settings()
    seen: set[float] = set()
    candidates: list[float] = []
    for w in list(seeds) + list(omega_grid(opts)):
        w = float(w)
        if np.isfinite(w) and w not in seen:
            seen.add(w)
            candidates.append(w)

    candidates.sort()

    def guarded(fn: Callable[[float], float]) -> Callable[[float], float]:
        def wrapped(w: float) -> float:
            value = float(fn(w))
            return value if np.isfinite(value) else float("inf")
        return wrapped

    safe = guarded(f)
    safe_refine = guarded(refine_f) if refine_f is not None else safe

    threads = opts.threads if reentrant else 1
    values = _map_ordered(safe, candidates, threads)

    xs = np.asarray(candidates)
    fs = np.asarray(values)
    minima = []
    for k in range(len(xs)):
        left = fs[k - 1] if k > 0 else np.inf
        right = fs[k + 1] if k + 1 < len(xs) else np.inf
        if np.isfinite(fs[k]) and fs[k] <= left and fs[k] <= right:
            minima.append(k)
    minima.sort(key=lambda k: (fs[k], k))
    if refine_top is not None:
        minima = minima[:refine_top]

    def refine(k: int) -> tuple[float, float, int]:
        lo = xs[k - 1] if k > 0 else xs[k] - max(1.0, abs(xs[k]))
        hi = xs[k + 1] if k + 1 < len(xs) else xs[k] + max(1.0, abs(xs[k]))
        xtol = opts.golden_xtol * (1 + abs(xs[k]))
        w, value, iters, _ = golden_section(safe_refine, float(lo), float(hi), xtol, max_iter=opts.max_iter)
        return w, value, iters

    refined = _map_ordered(refine, minima, threads)

    results = [(values[i], i, candidates[i]) for i in range(len(candidates))]
    iterations = len(candidates)
    for j, (w, value, iters) in enumerate(refined):
        results.append((value, len(candidates) + j, w))
        iterations += iters
    best_value, _, best_w = min(results, key=lambda r: (r[0], r[1]))
    return OptResult(
        value=float(best_value),
        minimizer=float(best_w),
        iterations=iterations,
        converged=True,
        multistart_log=[{"omega": w, "value": v} for v, _, w in results[len(candidates):]],
        heuristic=True,
    )


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "OptConfig",
    "OptResult",
    "RayleighSumProblem",
    "minimize_rayleigh_sum",
    "minimize_lambda_max",
    "minimize_lambda_max_2d",
    "golden_section",
    "omega_grid",
    "minimize_over_omega",
]
