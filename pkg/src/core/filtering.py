"""高斯空间滤波、亚格子项提取与时间相关诊断"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .spectral import (
    ChebyshevGrid,
    Field,
    Trajectory,
    build_grid,
    interpolation_matrix,
    restriction_matrix,
)
from ..utils.errors import (
    DegenerateSignalError,
    InsufficientEnsembleError,
    ParameterError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

# 核支撑截断在 ±6δ，尾部质量 < 1e-15
SUPPORT_WIDTHS = 6.0
DEFAULT_POINTS = 4096
NORMALIZATIONS = ('unit_mass', 'paper')
DEGENERATE_RTOL = 1e-10


@dataclass(frozen=True)
class GaussianFilter:
    """
    高斯滤波核 G_δ(x) ∝ exp(-x²/δ²)

    unit_mass 归一化为单位质量；paper 使用常数 1/(πδ²)，一维质量为 1/(δ√π)。
    """
    delta: float
    normalization: str = 'unit_mass'

    def __post_init__(self):
        if not self.delta > 0:
            raise ParameterError(f"滤波宽度必须 > 0，得到 {self.delta}")
        if self.normalization not in NORMALIZATIONS:
            raise ParameterError(f"未知的归一化方式: {self.normalization}")

    @property
    def mass(self) -> float:
        if self.normalization == 'unit_mass':
            return 1.0
        return 1.0 / (self.delta * np.sqrt(np.pi))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = np.exp(-(x / self.delta) ** 2)
        if self.normalization == 'unit_mass':
            return shape / (self.delta * np.sqrt(np.pi))
        return shape / (np.pi * self.delta ** 2)


@dataclass(frozen=True)
class SgsField:
    """粗网格上的亚格子项 R(x_j, t_k)，形状 (K+1, m+1)"""
    grid: ChebyshevGrid
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.grid.size:
            raise PreconditionError(
                f"SGS 场形状 {values.shape} 与网格节点数 {self.grid.size} 不一致"
            )
        object.__setattr__(self, 'values', values)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1


@dataclass(frozen=True)
class CorrelationProfile:
    """诊断点处的平均时间相关函数 Corr(x, s)"""
    x: float
    lags: np.ndarray
    corr: np.ndarray


def _extension_matrix(grid: ChebyshevGrid, points: np.ndarray) -> np.ndarray:
    # 区间内用重心插值；区间外取对应端点的节点值（常数延拓）
    matrix = np.zeros((points.size, grid.size))
    inside = (points >= -1.0) & (points <= 1.0)
    matrix[inside] = interpolation_matrix(grid, points[inside])
    matrix[points > 1.0, 0] = 1.0
    matrix[points < -1.0, grid.n] = 1.0
    return matrix


@lru_cache(maxsize=32)
def _filter_matrix(n: int, delta: float, normalization: str, points: int) -> np.ndarray:
    grid = build_grid(n)
    kernel = GaussianFilter(delta, normalization)

    offsets = np.linspace(-SUPPORT_WIDTHS * delta, SUPPORT_WIDTHS * delta, points)
    weights = kernel(offsets)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    # 离散归一化：常数场被精确保持（乘以核质量）
    weights *= kernel.mass / weights.sum()

    matrix = np.empty((grid.size, grid.size))
    for j, x in enumerate(grid.nodes):
        # 积分变量 y = x - s，核是偶函数
        matrix[j] = weights @ _extension_matrix(grid, x - offsets)
    matrix.setflags(write=False)
    return matrix


def filter_matrix(
    grid: ChebyshevGrid,
    delta: float,
    normalization: str = 'unit_mass',
    points: int = DEFAULT_POINTS
) -> np.ndarray:
    """
    卷积 u*G_δ 在节点上的线性算子 F，filtered = F @ values

    每个节点在 [x-6δ, x+6δ] 上用 points 个等距点做复合梯形积分，
    [-1, 1] 之外的解按边界值常数延拓。

    Raises:
        ParameterError: δ <= 0 或未知归一化
    """
    GaussianFilter(delta, normalization)
    return _filter_matrix(grid.n, float(delta), normalization, int(points))


def filter_field(
    field: Field,
    delta: float,
    normalization: str = 'unit_mass',
    points: int = DEFAULT_POINTS
) -> Field:
    """
    高斯滤波 ū = u*G_δ

    Args:
        field: 输入场
        delta: 滤波宽度 δ > 0
        normalization: unit_mass 或 paper
        points: 每个节点的卷积求积点数

    Returns:
        同一网格上的滤波场
    """
    matrix = filter_matrix(field.grid, delta, normalization, points)
    return Field(field.grid, matrix @ field.values)


def filter_trajectory(
    trajectory: Trajectory,
    delta: float,
    coarse: ChebyshevGrid,
    normalization: str = 'unit_mass',
    points: int = DEFAULT_POINTS
) -> Trajectory:
    """逐步滤波并插值到粗网格，得到 ū 在粗网格上的轨迹"""
    matrix = filter_matrix(trajectory.grid, delta, normalization, points)
    restrict = restriction_matrix(trajectory.grid, coarse)
    return Trajectory(coarse, trajectory.dt, trajectory.values @ (restrict @ matrix).T)


def compute_sgs(
    fine_traj: Trajectory,
    delta: float,
    coarse: ChebyshevGrid,
    normalization: str = 'unit_mass',
    points: int = DEFAULT_POINTS
) -> SgsField:
    """
    亚格子项 R = (ū)³ - filter(u³)，限制到粗网格节点

    Args:
        fine_traj: 细网格轨迹
        delta: 滤波宽度
        coarse: 粗网格

    Returns:
        SgsField
    """
    matrix = filter_matrix(fine_traj.grid, delta, normalization, points)
    u = fine_traj.values
    ubar = u @ matrix.T
    residual = ubar ** 3 - (u ** 3) @ matrix.T
    restrict = restriction_matrix(fine_traj.grid, coarse)
    return SgsField(coarse, fine_traj.dt, residual @ restrict.T)


def _trapezoid_mean(values: np.ndarray) -> float:
    if values.size == 1:
        return float(values[0])
    weights = np.ones(values.size)
    weights[0] = weights[-1] = 0.5
    return float(weights @ values / weights.sum())


def time_correlation(
    sgs: Sequence[SgsField],
    x_index: int,
    max_lag_steps: int
) -> CorrelationProfile:
    """
    平均时间相关函数

    Corr(x,s) = 平均_t cov(R(x,t), R(x,t+s)) / (STD(R(x,t)) STD(R(x,t+s)))

    cov 和 STD 取集合统计（无偏 M-1 估计），时间平均在可用区间
    [0, T-s] 上用梯形公式。

    Args:
        sgs: 集合成员的 SgsField
        x_index: 诊断节点下标
        max_lag_steps: 最大滞后步数

    Returns:
        CorrelationProfile

    Raises:
        InsufficientEnsembleError: 成员数 < 2
        DegenerateSignalError: 某个时刻标准差不超过 1e-10 倍的场幅值
    """
    if len(sgs) < 2:
        raise InsufficientEnsembleError("相关函数需要至少 2 个集合成员")
    grid = sgs[0].grid
    dt = sgs[0].dt
    series = np.stack([member.values[:, x_index] for member in sgs])
    n_steps = series.shape[1] - 1
    max_lag = min(int(max_lag_steps), n_steps)

    anomalies = series - series.mean(axis=0)
    variance = (anomalies ** 2).sum(axis=0) / (len(sgs) - 1)
    # 相对于整个 SGS 场的幅值判断退化：对称节点上的舍入噪声不算信号
    scale = max(float(np.abs(member.values).max()) for member in sgs)
    degenerate = np.flatnonzero(variance <= (DEGENERATE_RTOL * scale) ** 2)
    if degenerate.size:
        raise DegenerateSignalError(int(degenerate[0]))

    corr = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        available = n_steps + 1 - lag
        cov = (anomalies[:, :available] * anomalies[:, lag:lag + available]).sum(axis=0)
        cov /= len(sgs) - 1
        ratio = cov / np.sqrt(variance[:available] * variance[lag:lag + available])
        corr[lag] = _trapezoid_mean(ratio)

    return CorrelationProfile(
        x=float(grid.nodes[x_index]),
        lags=np.arange(max_lag + 1) * dt,
        corr=corr,
    )
