"""Chebyshev 谱配置基础设施

网格、微分矩阵、Clenshaw-Curtis 求积和重心插值。
节点按降序排列 (x_0 = +1, x_n = -1)，边界行固定为第 0 行和第 n 行。
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from ..utils.errors import InvalidOrderError, PreconditionError


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ChebyshevGrid:
    """Chebyshev-Gauss-Lobatto 网格"""
    n: int
    nodes: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n + 1

    def nearest_index(self, x: float) -> int:
        """离 x 最近的节点下标"""
        return int(np.argmin(np.abs(self.nodes - x)))

    def __eq__(self, other) -> bool:
        return isinstance(other, ChebyshevGrid) and other.n == self.n

    def __hash__(self) -> int:
        return hash(('ChebyshevGrid', self.n))


@dataclass(frozen=True)
class DiffMatrix:
    """作用在节点值上的微分矩阵"""
    order: int
    entries: np.ndarray = field(repr=False)

    def __matmul__(self, values: np.ndarray) -> np.ndarray:
        return self.entries @ values


@dataclass(frozen=True)
class Field:
    """某一时刻的节点值"""
    grid: ChebyshevGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise PreconditionError(
                f"节点值长度 {values.shape} 与网格节点数 {self.grid.size} 不一致"
            )
        object.__setattr__(self, 'values', values)


@dataclass(frozen=True)
class Trajectory:
    """
    等步长时间序列

    values 的形状为 (K+1, n+1)，第 k 行对应 t_k = k*dt。
    """
    grid: ChebyshevGrid
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.grid.size:
            raise PreconditionError(
                f"轨迹形状 {values.shape} 与网格节点数 {self.grid.size} 不一致"
            )
        if self.dt <= 0:
            raise PreconditionError("时间步长必须 > 0")
        object.__setattr__(self, 'values', values)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def t_end(self) -> float:
        return self.n_steps * self.dt

    def field(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    @property
    def fields(self) -> Iterator[Field]:
        for k in range(self.n_steps + 1):
            yield self.field(k)


@lru_cache(maxsize=None)
def build_grid(n: int) -> ChebyshevGrid:
    """
    构建 n 阶 Chebyshev 网格

    使用 x_j = sin(pi*(n-2j)/(2n)) 计算 cos(j*pi/n)，保证节点精确反对称、
    端点精确为 ±1。

    Args:
        n: 多项式阶数（区间数）

    Returns:
        ChebyshevGrid

    Raises:
        InvalidOrderError: n < 2
    """
    if int(n) != n or n < 2:
        raise InvalidOrderError(f"多项式阶数必须是 >= 2 的整数，得到 {n}")
    n = int(n)
    nodes = np.sin(np.pi * np.arange(n, -n - 1, -2) / (2 * n))
    return ChebyshevGrid(n, _readonly(nodes))


@lru_cache(maxsize=None)
def _first_derivative(n: int) -> np.ndarray:
    x = build_grid(n).nodes
    c = np.hstack((2.0, np.ones(n - 1), 2.0)) * (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    # 负和技巧：每行之和精确为零
    d = d - np.diag(d.sum(axis=1))
    return _readonly(d)


@lru_cache(maxsize=None)
def _second_derivative(n: int) -> np.ndarray:
    d = _first_derivative(n)
    return _readonly(d @ d)


def diff_matrix(grid: ChebyshevGrid, order: int = 1) -> DiffMatrix:
    """
    Chebyshev 配置微分矩阵

    Args:
        grid: 网格
        order: 导数阶数，1 或 2

    Returns:
        DiffMatrix，对次数 <= n 的多项式精确

    Raises:
        InvalidOrderError: 不支持的导数阶数
    """
    if order == 1:
        return DiffMatrix(1, _first_derivative(grid.n))
    if order == 2:
        return DiffMatrix(2, _second_derivative(grid.n))
    raise InvalidOrderError(f"只支持一阶和二阶导数，得到 order={order}")


@lru_cache(maxsize=None)
def _clenshaw_curtis(n: int) -> np.ndarray:
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    interior = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n ** 2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k ** 2 - 1)
        v -= np.cos(n * theta[interior]) / (n ** 2 - 1)
    else:
        w[0] = w[n] = 1.0 / n ** 2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k ** 2 - 1)
    w[interior] = 2.0 * v / n
    return _readonly(w)


def quad_weights(grid: ChebyshevGrid) -> np.ndarray:
    """
    Clenshaw-Curtis 求积权重

    对次数 <= n 的多项式精确，权重之和为区间长度 2。
    """
    return _clenshaw_curtis(grid.n)


@lru_cache(maxsize=None)
def _barycentric_weights(n: int) -> np.ndarray:
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[n] *= 0.5
    return _readonly(w)


def interpolation_matrix(grid: ChebyshevGrid, points: np.ndarray) -> np.ndarray:
    """
    重心插值矩阵 P，使得 P @ values 为 points 处的插值

    与节点重合的点对应单位行，结果精确等于节点值。

    Args:
        grid: 源网格
        points: 目标点（应位于 [-1, 1] 内）

    Returns:
        形状 (len(points), n+1) 的矩阵
    """
    points = np.asarray(points, dtype=float)
    x = grid.nodes
    w = _barycentric_weights(grid.n)

    diff = points[:, None] - x[None, :]
    exact = diff == 0.0
    hit = exact.any(axis=1)

    with np.errstate(divide='ignore', invalid='ignore'):
        terms = w[None, :] / diff
        matrix = terms / terms.sum(axis=1, keepdims=True)

    matrix[hit] = exact[hit].astype(float)
    return matrix


def restriction_matrix(source: ChebyshevGrid, target: ChebyshevGrid) -> np.ndarray:
    """从源网格到目标网格节点的插值矩阵（带缓存）"""
    return _restriction(source.n, target.n)


@lru_cache(maxsize=None)
def _restriction(n_source: int, n_target: int) -> np.ndarray:
    matrix = interpolation_matrix(build_grid(n_source), build_grid(n_target).nodes)
    return _readonly(matrix)


def interpolate(field: Field, target: ChebyshevGrid) -> Field:
    """
    把节点场插值到目标网格

    对次数 <= 源阶数的多项式精确。
    """
    matrix = restriction_matrix(field.grid, target)
    return Field(target, matrix @ field.values)


def restrict_trajectory(trajectory: Trajectory, target: ChebyshevGrid) -> Trajectory:
    """逐时间步插值整条轨迹"""
    matrix = restriction_matrix(trajectory.grid, target)
    return Trajectory(target, trajectory.dt, trajectory.values @ matrix.T)
