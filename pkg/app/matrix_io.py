"""
=============================================
💾 矩阵文件读写模块
=============================================
模块名称: matrix_io.py
模块功能:
    - JSON 系统文件: {"n", "E", "J", "R", 可选 "Q"}，元素为 [re, im]
    - Matrix Market 系统文件: <stem>.<E|J|R>.re.mtx，可选 .im.mtx
    - 扰动文件: {"n", "dE", "dJ", "dR", 可选 "set"}
约定:
    - 浮点数以最短往返表示写出，读回逐位一致
    - 任何解析失败都抛出 InputFormatError (含路径与原因)
    - 读入的系统经过结构校验；带 Q 的文件先消去 Q

"""

from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import orjson
import scipy.io

# ========== 内部模块导入 ==========
from app.core.logger import log
from app.exceptions import DhdaeError, InputFormatError
from app.models import SetTag
from app.system import DhdaeSystem, GeneralizedDhdae, PerturbationTriple, reduce_q, validate


SystemFormat = Literal["json", "mtx"]

SYSTEM_KEYS = ("E", "J", "R")
PERTURBATION_KEYS = ("dE", "dJ", "dR")


# ==========================================
# 🔧 编解码工具
# ==========================================

def _encode_matrix(M: np.ndarray) -> list[list[list[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def _decode_matrix(raw: Any, n: int, name: str, path: str) -> np.ndarray:
    """把 n 行 n 列的 [re, im] 嵌套列表解码为复矩阵"""
    if not isinstance(raw, list) or len(raw) != n:
        raise InputFormatError(path, f"{name} 必须是 {n} 行的数组")
    out = np.zeros((n, n), dtype=np.complex128)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != n:
            raise InputFormatError(path, f"{name} 第 {i} 行必须有 {n} 个元素")
        for j, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
            ):
                raise InputFormatError(path, f"{name}[{i}][{j}] 必须是 [re, im] 数对")
            out[i, j] = complex(float(entry[0]), float(entry[1]))
    return out


def _load_json(path: Path) -> dict:
    try:
        data = orjson.loads(path.read_bytes())
    except FileNotFoundError:
        raise InputFormatError(str(path), "文件不存在")
    except orjson.JSONDecodeError as exc:
        raise InputFormatError(str(path), f"JSON 解析失败: {exc}")
    if not isinstance(data, dict):
        raise InputFormatError(str(path), "顶层必须是对象")
    return data


def _read_n(data: dict, path: str) -> int:
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InputFormatError(path, "字段 n 必须是正整数")
    return n


def _dump(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2))


# ==========================================
# 📥 系统读取
# ==========================================

def _read_system_json(path: Path) -> DhdaeSystem:
    data = _load_json(path)
    where = str(path)
    n = _read_n(data, where)
    missing = [k for k in SYSTEM_KEYS if k not in data]
    if missing:
        raise InputFormatError(where, f"缺少字段 {', '.join(missing)}")
    E, J, R = (_decode_matrix(data[k], n, k, where) for k in SYSTEM_KEYS)
    if data.get("Q") is not None:
        Q = _decode_matrix(data["Q"], n, "Q", where)
        return reduce_q(GeneralizedDhdae(E=E, J=J, R=R, Q=Q))
    return validate(E, J, R)


def _mtx_path(stem: Path, name: str, part: str) -> Path:
    return stem.with_name(f"{stem.name}.{name}.{part}.mtx")


def _read_mtx_matrix(stem: Path, name: str) -> np.ndarray:
    re_path = _mtx_path(stem, name, "re")
    im_path = _mtx_path(stem, name, "im")
    try:
        M = np.asarray(scipy.io.mmread(str(re_path)), dtype=np.complex128)
        if im_path.exists():
            M = M + 1j * np.asarray(scipy.io.mmread(str(im_path)), dtype=float)
    except FileNotFoundError:
        raise InputFormatError(str(re_path), "文件不存在")
    except (ValueError, OSError) as exc:
        raise InputFormatError(str(re_path), f"Matrix Market 解析失败: {exc}")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputFormatError(str(re_path), f"{name} 必须是方阵")
    return M


def _stem(path: Path) -> Path:
    """a/b/sys.E.re.mtx 与 a/b/sys 都映射到 a/b/sys"""
    name = path.name
    for key in SYSTEM_KEYS:
        for part in ("re", "im"):
            suffix = f".{key}.{part}.mtx"
            if name.endswith(suffix):
                return path.with_name(name[: -len(suffix)])
    return path


def read_system(path: str | Path) -> DhdaeSystem:
    """
    📥 读取系统文件

    .json 按 JSON 格式解析；其余路径视为 Matrix Market 文件组的前缀
    (也接受组内任一文件的路径)。

    Args:
        path: 文件路径

    Returns:
        DhdaeSystem: 校验后的系统

    Raises:
        InputFormatError: 文件缺失或格式错误
        StructureError: 矩阵不满足 dH 结构
        QSingularError: Q 数值奇异
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        system = _read_system_json(path)
    else:
        stem = _stem(path)
        E, J, R = (_read_mtx_matrix(stem, k) for k in SYSTEM_KEYS)
        if not (E.shape == J.shape == R.shape):
            raise InputFormatError(str(path), "E、J、R 尺寸不一致")
        system = validate(E, J, R)
    log.debug(f"📥 读取系统 {path}: n={system.n}")
    return system


# ==========================================
# 📤 系统写出
# ==========================================

def write_system(sys: DhdaeSystem, path: str | Path, fmt: Optional[SystemFormat] = None) -> list[Path]:
    """
    📤 写出系统文件

    Args:
        sys: 系统
        path: JSON 文件路径或 Matrix Market 前缀
        fmt: json / mtx，缺省按扩展名判断

    Returns:
        list: 实际写出的文件
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "mtx")
    if fmt == "json":
        payload = {"n": sys.n, **{k: _encode_matrix(getattr(sys, k)) for k in SYSTEM_KEYS}}
        _dump(payload, path)
        written = [path]
    else:
        stem = _stem(path)
        stem.parent.mkdir(parents=True, exist_ok=True)
        written = []
        for key in SYSTEM_KEYS:
            M = getattr(sys, key)
            parts = [("re", M.real)]
            if np.any(M.imag):
                parts.append(("im", M.imag))
            for part, data in parts:
                target = _mtx_path(stem, key, part)
                scipy.io.mmwrite(str(target), np.ascontiguousarray(data), precision=17, symmetry="general")
                written.append(target)
    log.debug(f"📤 写出系统 {path} ({fmt})")
    return written


# ==========================================
# 🎯 扰动文件
# ==========================================

def read_perturbation(path: str | Path, n: Optional[int] = None) -> PerturbationTriple:
    """
    📥 读取扰动文件

    Args:
        path: JSON 文件路径
        n: 期望维数 (给出时检查一致)

    Raises:
        InputFormatError: 格式错误或维数不符
    """
    path = Path(path)
    where = str(path)
    data = _load_json(path)
    size = _read_n(data, where)
    if n is not None and size != n:
        raise InputFormatError(where, f"扰动维数 {size} 与系统维数 {n} 不一致")
    missing = [k for k in PERTURBATION_KEYS if k not in data]
    if missing:
        raise InputFormatError(where, f"缺少字段 {', '.join(missing)}")
    dE, dJ, dR = (_decode_matrix(data[k], size, k, where) for k in PERTURBATION_KEYS)
    tag = None
    if data.get("set") is not None:
        try:
            tag = SetTag(data["set"])
        except ValueError:
            raise InputFormatError(where, f"未知扰动集合 {data['set']!r}")
    return PerturbationTriple(dE, dJ, dR, tag)


def write_perturbation(triple: PerturbationTriple, path: str | Path) -> Path:
    """📤 写出扰动文件"""
    path = Path(path)
    payload: dict[str, Any] = {
        "n": int(triple.dE.shape[0]),
        "dE": _encode_matrix(triple.dE),
        "dJ": _encode_matrix(triple.dJ),
        "dR": _encode_matrix(triple.dR),
    }
    if triple.set_tag is not None:
        payload["set"] = triple.set_tag.value
    _dump(payload, path)
    return path


def load_any(path: str | Path) -> DhdaeSystem:
    """📥 读取系统文件，非领域异常统一包装为 InputFormatError"""
    try:
        return read_system(path)
    except DhdaeError:
        raise
    except Exception as exc:
        raise InputFormatError(str(path), f"{type(exc).__name__}: {exc}")


# ==========================================
# 📤 导出
# ==========================================

__all__ = [
    "read_system",
    "write_system",
    "read_perturbation",
    "write_perturbation",
    "load_any",
]
