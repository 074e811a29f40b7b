"""带记忆项的非线性积分-偏微分方程求解器

    u_t = u_xx + u - u^3 + ∫_0^t k(t-s) u(x,s) ds,  k(τ) = 1/(1+|τ|^β)

Dirichlet 边界 u(-1,t)=a, u(1,t)=b。半隐式时间推进：扩散项隐式，
反应项、记忆项、额外漂移和噪声增量显式。
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .spectral import ChebyshevGrid, Field, Trajectory, diff_matrix
from ..utils.errors import (
    FactorizationError,
    InconsistentHistoryError,
    ParameterError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

BC_TOLERANCE = 1e-12

# 额外漂移回调: (当前节点值, 步号) -> 漂移节点值
DriftFunction = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class MemoryKernel:
    """记忆核 k(τ) = 1/(1+|τ|^β)"""
    beta: float = 2.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ParameterError(f"记忆核指数必须 > 0，得到 {self.beta}")

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < 0):
            raise ParameterError("记忆核只在 τ >= 0 上定义")
        return 1.0 / (1.0 + tau ** self.beta)


@dataclass(frozen=True)
class SolverConfig:
    """时间推进配置"""
    dt: float = 1e-3
    t_end: float = 1.0
    bc_left: float = -1.0
    bc_right: float = 1.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError("时间步长必须 > 0")
        if self.t_end < self.dt:
            raise ParameterError("终止时间必须 >= dt")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ParameterError(f"t_end/dt = {steps} 不是整数步数")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def kernel_eval(kernel: MemoryKernel, tau: float) -> float:
    """
    计算记忆核 k(τ)

    Raises:
        ParameterError: τ < 0
    """
    return float(kernel(tau))


class HistoryBuffer:
    """
    完整保留的历史状态

    第 k 行存放 t_k 时刻的节点值，每步恰好追加一行。
    """

    def __init__(self, grid: ChebyshevGrid, capacity: int):
        self.grid = grid
        self._values = np.zeros((capacity, grid.size))
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def append(self, values: np.ndarray):
        if self._count == self._values.shape[0]:
            grown = np.zeros((2 * self._values.shape[0], self.grid.size))
            grown[:self._count] = self._values[:self._count]
            self._values = grown
        self._values[self._count] = values
        self._count += 1

    @property
    def values(self) -> np.ndarray:
        return self._values[:self._count]

    @property
    def tail(self) -> np.ndarray:
        if self._count == 0:
            raise InconsistentHistoryError("历史为空")
        return self._values[self._count - 1]

    @classmethod
    def from_values(cls, grid: ChebyshevGrid, values: np.ndarray) -> 'HistoryBuffer':
        values = np.atleast_2d(np.asarray(values, dtype=float))
        buffer = cls(grid, max(1, values.shape[0]))
        for row in values:
            buffer.append(row)
        return buffer


def _trapezoid_kernel_weights(kernel: MemoryKernel, k: int, dt: float) -> np.ndarray:
    # 权重按 s_i = i*dt (i = 0..k) 排列
    weights = dt * kernel((k - np.arange(k + 1)) * dt)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return weights


def memory_integral(
    history: HistoryBuffer,
    kernel: MemoryKernel,
    t: float,
    dt: float
) -> Field:
    """
    复合梯形公式计算 ∫_0^t k(t-s) u(x,s) ds（逐节点）

    Args:
        history: 覆盖 [0, t] 的历史，步长 dt
        kernel: 记忆核
        t: 当前时间
        dt: 步长

    Returns:
        记忆积分场

    Raises:
        InconsistentHistoryError: 历史不足以覆盖 [0, t]
    """
    k = int(round(t / dt))
    if abs(t - k * dt) > 1e-9 * max(dt, abs(t)):
        raise InconsistentHistoryError(f"t={t} 不在步长 {dt} 的网格上")
    if len(history) < k + 1:
        raise InconsistentHistoryError(
            f"历史只有 {len(history)} 步，无法覆盖 t={t} (需要 {k + 1} 步)"
        )
    if k == 0:
        return Field(history.grid, np.zeros(history.grid.size))

    weights = _trapezoid_kernel_weights(kernel, k, dt)
    return Field(history.grid, weights @ history.values[:k + 1])


class SemiImplicitStepper:
    """
    半隐式时间推进器

    预先对 (I - dt*D2) 做 LU 分解，边界行替换为单位行（强 Dirichlet）。
    记忆核在各滞后上的值也只计算一次。
    """

    def __init__(
        self,
        grid: ChebyshevGrid,
        config: SolverConfig,
        kernel: MemoryKernel
    ):
        self.grid = grid
        self.config = config
        self.kernel = kernel
        self.logger = logging.getLogger(__name__)

        n = grid.n
        self.d2 = diff_matrix(grid, 2).entries
        operator = np.eye(n + 1) - config.dt * self.d2
        operator[0, :] = 0.0
        operator[n, :] = 0.0
        operator[0, 0] = 1.0
        operator[n, n] = 1.0
        self.operator = operator

        lu, piv = lu_factor(operator, check_finite=True)
        if np.any(np.diag(lu) == 0.0):
            raise FactorizationError("隐式算子奇异，请检查 dt 与网格")
        self._lu = (lu, piv)

        lags = np.arange(config.n_steps + 1) * config.dt
        self._kernel_values = kernel(lags)

    def memory_term(self, history: HistoryBuffer) -> np.ndarray:
        """历史末端时刻的记忆积分（复用预先计算的核值）"""
        k = len(history) - 1
        if k < 0:
            raise InconsistentHistoryError("历史为空")
        if k == 0:
            return np.zeros(self.grid.size)
        if k >= self._kernel_values.size:
            # 历史比 config.t_end 长，缓存的核值不够用
            weights = _trapezoid_kernel_weights(self.kernel, k, self.config.dt)
        else:
            weights = self.config.dt * self._kernel_values[k::-1]
            weights[0] *= 0.5
            weights[-1] *= 0.5
        return weights @ history.values

    def advance(
        self,
        current: np.ndarray,
        history: HistoryBuffer,
        extra_drift: Optional[np.ndarray] = None,
        noise_increment: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """
        推进一步，返回新的节点值

        噪声以增量 σ(x)ΔB 形式加入，不乘 1/dt（Euler-Maruyama 形式）。
        """
        dt = self.config.dt
        rhs = current + dt * (current - current ** 3 + self.memory_term(history))
        if extra_drift is not None:
            rhs = rhs + dt * extra_drift
        if noise_increment is not None:
            rhs = rhs + noise_increment

        rhs[0] = self.config.bc_right
        rhs[-1] = self.config.bc_left
        new = lu_solve(self._lu, rhs)
        new[0] = self.config.bc_right
        new[-1] = self.config.bc_left
        return new

    def check_initial_condition(self, ic: Field):
        if ic.grid != self.grid:
            raise PreconditionError("初始条件网格与求解网格不一致")
        right, left = ic.values[0], ic.values[-1]
        if abs(right - self.config.bc_right) > BC_TOLERANCE \
                or abs(left - self.config.bc_left) > BC_TOLERANCE:
            raise PreconditionError(
                f"初始条件边界值 (u(1)={right}, u(-1)={left}) 与边界条件 "
                f"(b={self.config.bc_right}, a={self.config.bc_left}) 不一致"
            )

    def integrate(
        self,
        ic: Field,
        drift: Optional[DriftFunction] = None,
        noise_increments: Optional[np.ndarray] = None
    ) -> Trajectory:
        """
        从初始条件积分到 t_end

        Args:
            ic: 初始场，必须满足边界条件
            drift: 额外漂移回调，None 表示没有
            noise_increments: 形状 (K, n+1) 的逐步噪声增量，None 表示确定性

        Returns:
            K+1 个时刻的轨迹
        """
        self.check_initial_condition(ic)
        n_steps = self.config.n_steps
        if noise_increments is not None and noise_increments.shape != (n_steps, self.grid.size):
            raise PreconditionError(
                f"噪声增量形状 {noise_increments.shape} 应为 {(n_steps, self.grid.size)}"
            )

        history = HistoryBuffer(self.grid, n_steps + 1)
        current = ic.values.copy()
        current[0] = self.config.bc_right
        current[-1] = self.config.bc_left
        history.append(current)

        for k in range(n_steps):
            extra = drift(current, k) if drift is not None else None
            noise = noise_increments[k] if noise_increments is not None else None
            current = self.advance(current, history, extra, noise)
            history.append(current)

        self.logger.debug(f"积分完成: n={self.grid.n}, 步数={n_steps}")
        return Trajectory(self.grid, self.config.dt, history.values.copy())


def step(
    current: Field,
    history: HistoryBuffer,
    config: SolverConfig,
    kernel: MemoryKernel,
    extra_drift: Optional[Field] = None,
    noise_increment: Optional[Field] = None
) -> Field:
    """
    单步半隐式推进

    current 必须是 history 的最后一行。重复调用时应直接使用
    SemiImplicitStepper，避免重复分解矩阵。

    Raises:
        InconsistentHistoryError: current 与历史末端不一致
    """
    if len(history) == 0 or not np.array_equal(history.tail, current.values):
        raise InconsistentHistoryError("current 必须等于历史的最后一步")
    stepper = SemiImplicitStepper(current.grid, config, kernel)
    new = stepper.advance(
        current.values.copy(),
        history,
        None if extra_drift is None else extra_drift.values,
        None if noise_increment is None else noise_increment.values,
    )
    return Field(current.grid, new)


def solve(ic: Field, config: SolverConfig, kernel: MemoryKernel) -> Trajectory:
    """
    确定性求解记忆方程

    Raises:
        PreconditionError: 初始条件与边界条件不一致（超过 1e-12）
    """
    return SemiImplicitStepper(ic.grid, config, kernel).integrate(ic)


def default_initial_condition(
    grid: ChebyshevGrid,
    linear: float = 0.53,
    sine: float = 0.47,
    wavenumber: float = 1.5
) -> Field:
    """u_0(x) = linear*x - sine*sin(wavenumber*pi*x)"""
    x = grid.nodes
    return Field(grid, linear * x - sine * np.sin(wavenumber * np.pi * x))
