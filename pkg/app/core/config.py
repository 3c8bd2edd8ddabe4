"""
=============================================
⚙️ 数值配置模块
=============================================
模块名称: config.py
模块功能:
    - 从 .env 文件 / 环境变量加载数值计算配置
    - 配置项验证和类型转换
    - 提供全局配置访问接口 (支持运行时替换)
配置原则:
    - 所有配置均有默认值，.env 文件可选
    - 环境变量统一使用 DHDAE_ 前缀
    - 使用 pydantic 进行类型验证
    - 命令行参数通过 Config.reload() 覆盖环境配置

"""

import os
import threading
from pathlib import Path
from typing import Any, Literal

# Pydantic 配置管理
from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# ========== 基础路径定义 ==========
# 项目根目录 (当前文件向上三级)
PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent

# 日志目录 (仅在开启文件日志时创建)
LOG_DIR = PROJECT_ROOT / "logs"


LogLevel = Literal["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"]


def default_threads() -> int:
    """🧵 缺省工作线程数: CPU 核数，至多 4"""
    return max(1, min(4, os.cpu_count() or 1))


class Settings(BaseSettings):
    """
    ⚙️ 数值计算配置类

    所有配置项可从 .env 文件或环境变量读取，使用 pydantic 进行验证

    配置项分类:
        - 容差配置: 秩判定容差、结构容差
        - 随机数配置: 随机种子
        - 并发配置: 工作线程上限
        - 优化器配置: 迭代上限、多起点数量、SCF 位移增长因子
        - ω 搜索配置: 网格点数、对数跨度、黄金分割精度
        - 判定配置: 主子矩阵枚举上限
        - 日志配置: 日志级别、文件日志开关

    环境变量:
        自动从 .env 文件加载，变量名不区分大小写
    """

    # ==========================================
    # 🔧 Pydantic 配置
    # ==========================================

    model_config = SettingsConfigDict(
        env_file=".env",           # .env 文件路径
        env_file_encoding="utf-8", # 文件编码
        env_ignore_empty=True,     # 忽略空环境变量
        extra="ignore",            # 忽略未定义的环境变量
        case_sensitive=False,      # 不区分大小写
        populate_by_name=True,     # 允许通过字段名赋值
    )

    # ==========================================
    # 📏 容差配置
    # ==========================================

    rank_tol: float = Field(
        default=1e-10,
        gt=0.0,
        lt=1e-2,
        alias="DHDAE_RANK_TOL",
        description="相对秩判定容差 (相对于矩阵谱范数)"
    )

    structure_tol: float = Field(
        default=1e-10,
        gt=0.0,
        lt=1e-2,
        alias="DHDAE_STRUCTURE_TOL",
        description="结构校验容差 (Hermitian / 反 Hermitian / 半正定)"
    )

    # ==========================================
    # 🎲 随机数与并发
    # ==========================================

    seed: int = Field(
        default=0,
        ge=0,
        alias="DHDAE_SEED",
        description="优化器多起点与预言机采样的随机种子"
    )

    threads: int = Field(
        default_factory=default_threads,
        ge=1,
        le=256,
        alias="DHDAE_THREADS",
        description="工作线程数上限 (缺省为 CPU 核数，至多 4)"
    )

    # ==========================================
    # 🧮 优化器配置
    # ==========================================

    max_iter: int = Field(
        default=500,
        ge=10,
        alias="DHDAE_MAX_ITER",
        description="内层迭代 (SCF / 下降法) 最大迭代次数"
    )

    multistarts: int = Field(
        default=10,
        ge=1,
        alias="DHDAE_MULTISTARTS",
        description="Rayleigh 商优化的多起点数量"
    )

    scf_shift_growth: float = Field(
        default=2.0,
        gt=1.0,
        alias="DHDAE_SCF_SHIFT_GROWTH",
        description="SCF 水平位移的增长因子"
    )

    # ==========================================
    # 🌊 ω 搜索配置
    # ==========================================

    omega_grid_points: int = Field(
        default=65,
        ge=3,
        alias="DHDAE_OMEGA_GRID_POINTS",
        description="单侧对数网格点数 (另加 0 点及对称点)"
    )

    omega_span_min: float = Field(
        default=1e-3,
        gt=0.0,
        alias="DHDAE_OMEGA_SPAN_MIN",
        description="对数网格下界"
    )

    omega_span_max: float = Field(
        default=1e3,
        gt=0.0,
        alias="DHDAE_OMEGA_SPAN_MAX",
        description="对数网格上界"
    )

    golden_xtol: float = Field(
        default=1e-10,
        gt=0.0,
        alias="DHDAE_GOLDEN_XTOL",
        description="一维细化的相对区间宽度"
    )

    nested_refine_top: int = Field(
        default=8,
        ge=1,
        alias="DHDAE_NESTED_REFINE_TOP",
        description="目标函数本身需要优化时，参与细化的最佳种子数量"
    )

    # ==========================================
    # 🧪 判定配置
    # ==========================================

    submatrix_cap: int = Field(
        default=12,
        ge=1,
        le=20,
        alias="DHDAE_SUBMATRIX_CAP",
        description="主子矩阵穷举的核维数上限 (超出则使用 N*RN>0 充分条件)"
    )

    # ==========================================
    # 📝 日志配置
    # ==========================================

    log_level: LogLevel = Field(
        default="INFO",
        alias="DHDAE_LOG_LEVEL",
        description="控制台日志级别"
    )

    log_to_file: bool = Field(
        default=False,
        alias="DHDAE_LOG_TO_FILE",
        description="是否写入按天轮转的日志文件"
    )

    # ==========================================
    # 🧠 配置验证
    # ==========================================

    @model_validator(mode="after")
    def validate_omega_span(self):
        """
        🌊 验证 ω 网格跨度

        Raises:
            ValueError: 上界不大于下界时抛出
        """
        if self.omega_span_max <= self.omega_span_min:
            raise ValueError(
                f"💥 ω 网格跨度无效: DHDAE_OMEGA_SPAN_MAX={self.omega_span_max} "
                f"必须大于 DHDAE_OMEGA_SPAN_MIN={self.omega_span_min}"
            )
        return self


# ==========================================
# 🔄 配置代理
# ==========================================

class ConfigProxy:
    """
    🔄 配置代理类

    线程安全的配置访问代理，命令行参数通过 reload() 覆盖环境配置。

    功能:
        - 线程安全的配置访问（使用 RLock）
        - 配置替换（替换底层 Settings 实例）
        - 配置版本追踪（每次替换 version +1）

    属性:
        _settings: 当前生效的 Settings 实例
        _lock: 线程安全锁（RLock 支持可重入）
        _version: 配置版本号（从 0 开始，每次替换 +1）
    """

    def __init__(self, settings: Settings):
        self._settings = settings
        self._lock = threading.RLock()
        self._version = 0

    def reload(self, new_settings: Settings) -> bool:
        """
        🔄 替换配置

        Args:
            new_settings: 新的配置实例

        Returns:
            bool: 替换成功返回 True，校验失败返回 False
        """
        with self._lock:
            try:
                Settings.model_validate(new_settings.model_dump())
            except Exception as e:
                from app.core.logger import log
                log.error(f"💥 配置替换失败: {e}")
                return False
            self._settings = new_settings
            self._version += 1
            return True

    def override(self, **changes: Any) -> bool:
        """
        🎛️ 基于当前配置覆盖部分字段

        None 值表示不覆盖，用于直接传递命令行参数。

        Args:
            **changes: 字段名 -> 新值

        Returns:
            bool: 是否替换成功
        """
        with self._lock:
            data = self._settings.model_dump()
            data.update({k: v for k, v in changes.items() if v is not None})
            try:
                new_settings = Settings(**data)
            except ValueError as e:
                from app.core.logger import log
                log.error(f"💥 配置覆盖失败: {e}")
                return False
            return self.reload(new_settings)

    @property
    def version(self) -> int:
        return self._version

    @property
    def settings(self) -> Settings:
        """当前生效的 Settings 实例"""
        with self._lock:
            return self._settings

    def __getattr__(self, name: str) -> Any:
        """
        🔍 代理所有属性访问到当前配置实例

        支持 Config.rank_tol、Config.threads 等访问方式。
        """
        with self._lock:
            return getattr(self._settings, name)

    def __repr__(self) -> str:
        return f"ConfigProxy(version={self._version})"


# ==========================================
# 🏷️ 全局配置实例
# ==========================================

try:
    Config = ConfigProxy(Settings())
except ValueError as e:
    print(f"\n{'='*60}")
    print(f"💥 配置错误，无法启动")
    print(f"{'='*60}")
    print(f"{e}")
    print(f"{'='*60}\n")
    raise


# ==========================================
# 📤 导出配置
# ==========================================

__all__ = [
    "Config",           # 全局配置实例
    "ConfigProxy",      # 配置代理类
    "Settings",         # 配置类 (用于类型注解)
    "PROJECT_ROOT",     # 项目根目录
    "LOG_DIR",          # 日志目录
    "default_threads",  # 缺省线程数
]
