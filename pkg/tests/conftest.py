"""
=============================================
🧪 pytest 配置和 fixtures
=============================================
"""

import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pytest

# 添加项目根目录到路径
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.core.config import Config, Settings
from app.optimizers import OptConfig
from app.models import BoundKind, DistanceReport
from app.oracle import triggers_degeneracy
from app.system import DhdaeSystem, apply_perturbation, make_example, random_system, validate


ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


@pytest.fixture(autouse=True)
def restore_config():
    """每个测试结束后恢复全局配置 (CLI 测试会覆盖它)"""
    saved = Config.settings
    yield
    Config.reload(saved)


@pytest.fixture
def fast_opts() -> OptConfig:
    """小网格、少起点的优化器选项"""
    return OptConfig(
        max_iter=200,
        multistarts=4,
        seed=0,
        omega_grid_points=9,
        omega_span_min=0.1,
        omega_span_max=10.0,
        golden_xtol=1e-9,
        nested_refine_top=2,
        probes=32,
    )


@pytest.fixture
def rotation_system() -> DhdaeSystem:
    """E = I, J = 旋转, R = I: 特征值 −1 ± i"""
    return validate(np.eye(2), ROT, np.eye(2))


@pytest.fixture
def parent_system() -> DhdaeSystem:
    """E = diag(1, 0), J = 旋转, R = diag(0, 1): 指标 1，有限特征值 −1"""
    return validate(np.diag([1.0, 0.0]), ROT, np.diag([0.0, 1.0]))


@pytest.fixture
def index_two_system() -> DhdaeSystem:
    """E = diag(1, 0), J = 旋转, R = 0: 指标 2，没有有限特征值"""
    return validate(np.diag([1.0, 0.0]), ROT, np.zeros((2, 2)))


@pytest.fixture
def singular_system() -> DhdaeSystem:
    """E = diag(1, 0), J = 0, R = diag(1, 0): e2 为公共核向量"""
    return validate(np.diag([1.0, 0.0]), np.zeros((2, 2)), np.diag([1.0, 0.0]))


@pytest.fixture
def dc_network_system() -> DhdaeSystem:
    """单位参数的直流电网 (n = 5，指标 1)"""
    return make_example("dc_network")


@pytest.fixture
def mechanical_system() -> DhdaeSystem:
    """单自由度无阻尼振子 M = K = 1, D = 0"""
    return make_example("mechanical")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture
def make_random_system(rng) -> Callable[..., DhdaeSystem]:
    """随机有效系统工厂，共用 rng 以保证可复现"""
    def factory(n: int, rank_e: Optional[int] = None, rank_r: Optional[int] = None) -> DhdaeSystem:
        return random_system(n, rng, rank_e=rank_e, rank_r=rank_r)

    return factory


@pytest.fixture
def fast_config(monkeypatch):
    """通过环境变量把全局配置切到小 ω 网格"""
    monkeypatch.setenv("DHDAE_OMEGA_GRID_POINTS", "9")
    monkeypatch.setenv("DHDAE_OMEGA_SPAN_MIN", "0.1")
    monkeypatch.setenv("DHDAE_OMEGA_SPAN_MAX", "10")
    monkeypatch.setenv("DHDAE_MULTISTARTS", "4")
    monkeypatch.setenv("DHDAE_MAX_ITER", "200")
    monkeypatch.setenv("DHDAE_NESTED_REFINE_TOP", "2")
    Config.reload(Settings())
    return Config


@pytest.fixture
def check_exact_witness() -> Callable[[DhdaeSystem, DistanceReport], bool]:
    """精确值报告的见证: 施加后通过结构校验并触发对应退化；返回是否做了检查"""
    def check(sys: DhdaeSystem, report: DistanceReport) -> bool:
        if report.bound_kind != BoundKind.EXACT or report.witness is None:
            return False
        perturbed = apply_perturbation(sys, report.witness)
        assert triggers_degeneracy(perturbed, report.kind), f"{report.kind.value} 见证没有触发退化"
        return True

    return check
