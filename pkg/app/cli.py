"""
=============================================
🖥️ 命令行入口模块
=============================================
模块名称: cli.py
模块功能:
    - check: 鲁棒渐近稳定性判定 (退出码 0 稳定 / 2 非稳定 / 1 错误)
    - distance: 三类结构化距离及 d_inst，可选采样证书与见证输出
    - homotopy: λ(E+tΔE) − (J+tΔJ − R − tΔR) 的谱轨迹 (CSV / JSON)
    - example: 生成典型算例文件
约定:
    - 全局参数 --tol/--seed/--max-iter/--threads 经 Config.override 生效
    - --json 时向 stdout 输出 {"code", "msg", "data", "schema_version"}
    - 日志走 stderr，stdout 只输出结果

"""

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np
import orjson

# ========== 内部模块导入 ==========
from app.core.config import Config
from app.core.error_handler import EXIT_NOT_STABLE, EXIT_OK, handle_exception
from app.core.logger import log, set_level
from app.exceptions import ParameterError
from app.matrix_io import load_any, read_perturbation, write_perturbation, write_system
from app.models import HomotopyRow, Scope, SetTag
from app.optimizers import OptConfig
from app.staircase import classify, compute_staircase, finite_spectrum, verdict
from app.system import DhdaeSystem, ExampleKind, PerturbationTriple, make_example


SCHEMA_VERSION = 1
PROG = "dhdae-radii"


# ==========================================
# 🔧 参数解析
# ==========================================

def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="秩容差 (默认 1e-10)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="随机种子")
    common.add_argument("--max-iter", dest="max_iter", type=int, default=argparse.SUPPRESS, help="内层迭代上限")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="工作线程上限")
    common.add_argument("--log-level", dest="log_level", default=argparse.SUPPRESS, help="日志级别")
    common.add_argument("--json", dest="json", action="store_true", default=argparse.SUPPRESS, help="结构化输出")
    return common


def _parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="dHDAE 系统的鲁棒稳定性判定与结构化距离计算",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common], help="鲁棒渐近稳定性判定")
    check.add_argument("file", type=Path)

    distance = sub.add_parser("distance", parents=[common], help="结构化距离")
    distance.add_argument("file", type=Path)
    distance.add_argument("--kind", choices=["im", "sing", "hi", "inst"], required=True)
    distance.add_argument("--set", dest="family", choices=["sd", "si"], default="si")
    distance.add_argument("--scope", choices=[s.value for s in Scope], default=Scope.FULL.value)
    distance.add_argument("--unstructured", action="store_true", help="非结构化奇异距离 (仅 --kind sing)")
    distance.add_argument("--method", choices=["closed_form", "lambda_max"], default="closed_form")
    distance.add_argument("--certify", type=int, default=0, metavar="N", help="采样证书的样本数")
    distance.add_argument("--witness-out", dest="witness_out", type=Path, help="见证扰动输出文件")

    homotopy = sub.add_parser("homotopy", parents=[common], help="同伦谱轨迹")
    homotopy.add_argument("file", type=Path)
    homotopy.add_argument("--perturbation", type=Path, required=True)
    homotopy.add_argument("--steps", type=int, default=50)
    homotopy.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    homotopy.add_argument("--output", type=Path)

    example = sub.add_parser("example", parents=[common], help="生成典型算例")
    example.add_argument("kind", choices=[k.value for k in ExampleKind])
    example.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="参数 (值为 JSON)")
    example.add_argument("--out", type=Path)

    return parser.parse_args(argv)


def _apply_global_options(args: argparse.Namespace) -> None:
    level = getattr(args, "log_level", None)
    if level:
        set_level(level)
    changes = {
        "rank_tol": getattr(args, "tol", None),
        "seed": getattr(args, "seed", None),
        "max_iter": getattr(args, "max_iter", None),
        "threads": getattr(args, "threads", None),
    }
    if any(v is not None for v in changes.values()) and not Config.override(**changes):
        raise ParameterError("options", f"命令行参数无效: {', '.join(k for k, v in changes.items() if v is not None)}")


# ==========================================
# 📤 输出
# ==========================================

def _emit(args: argparse.Namespace, data: Any, text: str, msg: str = "ok") -> None:
    if getattr(args, "json", False):
        payload = {"code": 0, "msg": msg, "data": data, "schema_version": SCHEMA_VERSION}
        sys.stdout.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2).decode() + "\n")
    else:
        sys.stdout.write(text.rstrip("\n") + "\n")


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:.10g}"


# ==========================================
# 🛡️ check
# ==========================================

def cmd_check(args: argparse.Namespace) -> int:
    """🛡️ 判定鲁棒渐近稳定性；稳定返回 0，非稳定返回 2"""
    system = load_any(args.file)
    result = verdict(system, with_reduced_bound=True)
    b = result.bounds
    lines = [
        f"robustly stable: {'yes' if result.robustly_stable else 'no'} ({result.reason()})",
        f"regular: {result.regular}, index: {result.index if result.index is not None else '-'}",
        f"block sizes (n1..n5): {result.block_sizes}",
        f"spectral abscissa: {_fmt(result.spectral_abscissa)}",
        f"finite eigenvalues: {len(result.finite_eigenvalues)}, infinite: {result.n_infinite}",
        f"d_dae: {_fmt(b.d_dae)}  d_sing_stack: {_fmt(b.d_sing_stack)}  d_hi_lower: {_fmt(b.d_hi_lower)}",
        f"d_r: {_fmt(b.d_r)}  d_reduced_im: {_fmt(b.d_reduced_im)} ({b.d_reduced_im_kind or '-'})",
    ]
    lines.extend(f"note: {note}" for note in result.notes)
    data = result.model_dump(mode="json")
    data["robustly_stable"] = result.robustly_stable
    data["reason"] = result.reason()
    _emit(args, data, "\n".join(lines))
    return EXIT_OK if result.robustly_stable else EXIT_NOT_STABLE


# ==========================================
# 📏 distance
# ==========================================

def _compute_report(system: DhdaeSystem, args: argparse.Namespace, opts: OptConfig):
    from app.distance_hi import dist_hi
    from app.distance_im import dist_im_full, dist_im_jr
    from app.distance_sing import dist_sing, dist_sing_unstructured, distance_inst

    if args.unstructured:
        if args.kind != "sing":
            raise ParameterError("--unstructured", "只适用于 --kind sing")
        return dist_sing_unstructured(system)
    tag = SetTag.resolve(args.family, Scope(args.scope))
    if args.kind == "im":
        if tag.scope == Scope.JR:
            return dist_im_jr(system, tag, opts)
        return dist_im_full(system, tag, method=args.method, opts=opts)
    if args.kind == "sing":
        return dist_sing(system, tag, opts)
    if args.kind == "hi":
        return dist_hi(system, tag, opts)
    return distance_inst(system, tag, opts)


def cmd_distance(args: argparse.Namespace) -> int:
    """📏 计算结构化距离，可选采样证书与见证输出"""
    from app.models import InstReport
    from app.oracle import certify_distance

    system = load_any(args.file)
    opts = OptConfig.from_settings()
    report = _compute_report(system, args, opts)
    data = report.model_dump(mode="json")

    component = report
    if isinstance(report, InstReport):
        component = getattr(report, report.mechanism.value)
    if args.certify > 0:
        certificate = certify_distance(component, system, samples=args.certify, seed=Config.seed)
        data["certificate"] = certificate.model_dump(mode="json")
    if args.witness_out is not None:
        if component.witness is None:
            log.warning("⚠️ 报告没有见证扰动，未写出 --witness-out")
        else:
            write_perturbation(component.witness, args.witness_out)
            data["witness_file"] = str(args.witness_out)

    tag = report.set_tag.value if report.set_tag is not None else "unstructured"
    kind = "inst" if isinstance(report, InstReport) else report.kind.value
    lines = [f"{kind} [{tag}] = {_fmt(report.value)} ({report.bound_kind.value})"]
    if isinstance(report, InstReport):
        lines.append(f"mechanism: {report.mechanism.value}")
        for name in ("sing", "hi", "im"):
            part = getattr(report, name)
            lines.append(f"  {name}: {_fmt(part.value)} ({part.bound_kind.value})")
    else:
        if getattr(report, "omega_star", None) is not None:
            lines.append(f"omega*: {_fmt(report.omega_star)}  branch: {report.branch.value}")
        lines.append(f"witness verified: {report.witness_verified}  tight: {report.tight}")
    if "certificate" in data:
        lines.append(f"certificate: {'passed' if data['certificate']['passed'] else 'FAILED'}")
    lines.extend(f"note: {note}" for note in report.notes)
    _emit(args, data, "\n".join(lines))
    return EXIT_OK


# ==========================================
# 📈 homotopy
# ==========================================

def homotopy_rows(system: DhdaeSystem, triple: PerturbationTriple, steps: int) -> list[HomotopyRow]:
    """
    📈 t ∈ [0, 1] 上 steps+1 个等距点的谱

    Raises:
        ParameterError: steps < 1
    """
    if steps < 1:
        raise ParameterError("--steps", "至少为 1")
    rows = []
    for t in np.linspace(0.0, 1.0, steps + 1):
        current = DhdaeSystem(
            E=system.E + t * triple.dE,
            J=system.J + t * triple.dJ,
            R=system.R + t * triple.dR,
        )
        sc = compute_staircase(current)
        cls = classify(sc)
        eigs = finite_spectrum(sc) if cls.regular else np.zeros(0)
        n_inf = current.n - sc.block_sizes[1] - sc.block_sizes[4]
        rows.append(HomotopyRow(
            t=float(t),
            eigenvalues=[(float(z.real), float(z.imag)) for z in eigs],
            n_inf=n_inf,
            index=cls.index,
            regular=cls.regular,
        ))
    return rows


def _rows_to_csv(rows: list[HomotopyRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["t", "n_inf", "index", "regular", "eigenvalues"])
    for row in rows:
        eigs = ";".join(f"{re!r}{im:+}j" for re, im in row.eigenvalues)
        writer.writerow([repr(row.t), row.n_inf, "" if row.index is None else row.index, row.regular, eigs])
    return buffer.getvalue()


def cmd_homotopy(args: argparse.Namespace) -> int:
    """📈 输出同伦谱轨迹 (CSV 或 JSON)"""
    system = load_any(args.file)
    triple = read_perturbation(args.perturbation, n=system.n)
    rows = homotopy_rows(system, triple, args.steps)
    data = [row.model_dump(mode="json") for row in rows]
    if args.fmt == "csv":
        text = _rows_to_csv(rows)
    else:
        text = orjson.dumps(data, option=orjson.OPT_INDENT_2).decode()
    if args.output is not None:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        args.output.write_text(text, encoding="utf-8")
        log.info(f"📈 同伦轨迹已写出: {args.output} ({len(rows)} 行)")
        _emit(args, {"output": str(args.output), "rows": len(rows)}, f"wrote {len(rows)} rows to {args.output}")
    else:
        _emit(args, data, text)
    return EXIT_OK


# ==========================================
# 🏭 example
# ==========================================

def _parse_params(pairs: list[str]) -> dict[str, Any]:
    params: dict[str, Any] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ParameterError("--param", f"格式应为 KEY=VALUE (收到 {pair!r})")
        try:
            params[key] = orjson.loads(raw)
        except orjson.JSONDecodeError:
            raise ParameterError(key, f"值不是合法的 JSON: {raw!r}")
    return params


def cmd_example(args: argparse.Namespace) -> int:
    """🏭 生成算例，写入文件或输出到 stdout"""
    system = make_example(args.kind, _parse_params(args.param))
    if args.out is not None:
        written = write_system(system, args.out)
        _emit(args, {"files": [str(p) for p in written], "n": system.n}, "\n".join(str(p) for p in written))
        return EXIT_OK
    payload = {
        "n": system.n,
        **{k: [[[float(z.real), float(z.imag)] for z in row] for row in getattr(system, k)] for k in ("E", "J", "R")},
    }
    _emit(args, payload, orjson.dumps(payload).decode())
    return EXIT_OK


# ==========================================
# 🚀 主入口
# ==========================================

COMMANDS = {
    "check": cmd_check,
    "distance": cmd_distance,
    "homotopy": cmd_homotopy,
    "example": cmd_example,
}


def main(argv: Optional[list[str]] = None) -> int:
    """
    🚀 命令行主入口

    Returns:
        int: 进程退出码
    """
    args = _parse_args(argv)
    try:
        _apply_global_options(args)
        return COMMANDS[args.command](args)
    except Exception as exc:
        payload, code = handle_exception(exc)
        if getattr(args, "json", False):
            sys.stdout.write(
                orjson.dumps({**payload, "schema_version": SCHEMA_VERSION}, option=orjson.OPT_INDENT_2).decode() + "\n"
            )
        else:
            sys.stderr.write(f"{payload['msg']}\n")
        return code


__all__ = [
    "main",
    "homotopy_rows",
    "cmd_check",
    "cmd_distance",
    "cmd_homotopy",
    "cmd_example",
]
