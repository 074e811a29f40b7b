"""
随机大涡模拟 (SLES)

    U_t = U_xx + U - U³ + ∫ k U ds + f(U) + σ(x) dB^H/dt

以及细网格解与 LES 解之间的均方根误差诊断。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .calibration import Ensemble, Provenance, SgsModel, trapezoid_weights
from .fbm import FbmConfig, wm_fbm_paths
from .memory_solver import MemoryKernel, SemiImplicitStepper, SolverConfig
from .seeding import LES_NOISE_STREAM, SHARED_PATH_STREAM, member_rng
from .spectral import ChebyshevGrid, Field, Trajectory, quad_weights
from ..utils.errors import AlignmentError, BlowUpError, ParameterError, PreconditionError

logger = logging.getLogger(__name__)

NOISE_MODES = ('per-realization-path', 'shared-path')


@dataclass(frozen=True)
class SlesConfig:
    """随机 LES 运行配置"""
    solver: SolverConfig
    kernel: MemoryKernel
    model: SgsModel
    delta: float
    fbm: FbmConfig = field(default_factory=FbmConfig)
    noise_mode: str = 'per-realization-path'
    members: int = 1
    seed: int = 0
    wm_normalization: str = 'ensemble'
    blowup_threshold: float = 10.0

    def __post_init__(self):
        if self.noise_mode not in NOISE_MODES:
            raise ParameterError(f"未知的噪声模式: {self.noise_mode}")
        if self.members < 1:
            raise ParameterError("LES 集合成员数必须 >= 1")

    @property
    def provenance(self) -> Provenance:
        return Provenance(self.fbm.hurst, self.solver.t_end, self.delta, self.kernel.beta)


@dataclass(frozen=True)
class ErrorField:
    """粗网格上的均方根误差，形状 (K+1, m+1)"""
    grid: ChebyshevGrid
    dt: float
    error: np.ndarray = field(repr=False)
    error_vs_raw: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(self.error < 0):
            raise PreconditionError("误差场必须非负")

    @property
    def n_steps(self) -> int:
        return self.error.shape[0] - 1


def _drift_function(model: SgsModel, threshold: float) -> Callable:
    zero_drift = model.drift.is_zero()

    def drift(values: np.ndarray, k: int) -> Optional[np.ndarray]:
        # 三次多项式在拟合范围之外外推不可信
        if not np.all(np.abs(values) <= threshold):
            raise BlowUpError(f"第 {k} 步 |U| 超过 {threshold}，LES 解发散")
        return None if zero_drift else model.drift(values)

    return drift


def noise_paths(config: SlesConfig) -> np.ndarray:
    """
    为每个 LES 成员生成 W-M 路径，形状 (members, K+1)

    per-realization-path 每个成员独立；shared-path 所有成员共用一条。
    """
    times = np.arange(config.solver.n_steps + 1) * config.solver.dt
    if config.noise_mode == 'shared-path':
        rngs = [member_rng(config.seed, SHARED_PATH_STREAM, 0)]
    else:
        rngs = [member_rng(config.seed, LES_NOISE_STREAM, m) for m in range(config.members)]

    paths, factor = wm_fbm_paths(times, config.fbm, rngs, config.wm_normalization)
    logger.debug(f"W-M 路径归一化因子: {factor:.6g}")
    if config.noise_mode == 'shared-path':
        paths = np.repeat(paths, config.members, axis=0)
    return paths


def solve_sles(
    ic: Field,
    config: SlesConfig,
    noise_path: Optional[np.ndarray] = None,
    stepper: Optional[SemiImplicitStepper] = None
) -> Trajectory:
    """
    求解随机 LES 方程的一个实现

    与记忆方程使用同一推进器，extra_drift = f(U_k)，
    noise_increment = σ(x)(B^H_{t_{k+1}} - B^H_{t_k})，σ 在边界节点取零。

    Args:
        ic: 滤波后插值到粗网格的初值，边界值为 (b, a)
        config: 运行配置
        noise_path: 长度 K+1 的 fBM 路径；None 时按 (seed, 0) 生成
        stepper: 可复用的推进器

    Returns:
        粗网格轨迹

    Raises:
        ProvenanceMismatchError: 模型来源参数与配置不一致
        BlowUpError: |U| 超过阈值
    """
    config.model.provenance.require(config.provenance)
    if config.model.sigma.grid != ic.grid:
        raise PreconditionError("σ 所在网格与初值网格不一致")

    stepper = stepper or SemiImplicitStepper(ic.grid, config.solver, config.kernel)
    drift = _drift_function(config.model, config.blowup_threshold)

    noise = None
    if not config.model.sigma.is_zero():
        if noise_path is None:
            noise_path = noise_paths(config)[0]
        sigma = config.model.sigma.sigma.copy()
        sigma[0] = sigma[-1] = 0.0
        noise = np.outer(np.diff(noise_path), sigma)

    trajectory = stepper.integrate(ic, drift=drift, noise_increments=noise)
    drift(trajectory.values[-1], trajectory.n_steps)
    return trajectory


def run_les_ensemble(
    ic: Field,
    config: SlesConfig,
    workers: int = 1,
    on_member_done: Optional[Callable[[int], None]] = None
) -> List[Trajectory]:
    """生成 LES 集合，成员按下标顺序返回"""
    config.model.provenance.require(config.provenance)
    stepper = SemiImplicitStepper(ic.grid, config.solver, config.kernel)
    paths = noise_paths(config)

    def solve_member(m: int) -> Trajectory:
        trajectory = solve_sles(ic, config, paths[m], stepper)
        if on_member_done is not None:
            on_member_done(m)
        return trajectory

    logger.info(f"运行随机 LES 集合: M_les={config.members}, 噪声模式={config.noise_mode}")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(solve_member, range(config.members)))


def rmse_values(reference: np.ndarray, estimate: np.ndarray) -> np.ndarray:
    """sqrt(E_m |reference_m - estimate_m|²)，成员按下标配对"""
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if reference.shape[1:] != estimate.shape[1:]:
        raise AlignmentError(
            f"时间步/节点数不对齐: {reference.shape[1:]} vs {estimate.shape[1:]}"
        )
    paired = min(reference.shape[0], estimate.shape[0])
    if reference.shape[0] != estimate.shape[0]:
        logger.warning(
            f"集合大小不同 ({reference.shape[0]} vs {estimate.shape[0]})，只配对前 {paired} 个成员"
        )
    diff = reference[:paired] - estimate[:paired]
    return np.sqrt(np.mean(diff ** 2, axis=0))


def rmse(
    fine_ensemble: Ensemble,
    les_ensemble: Sequence[Trajectory],
    delta: float,
    coarse: ChebyshevGrid
) -> ErrorField:
    """
    LES 集合相对细网格集合的均方根误差

    主误差与滤波解 ū_m 比较；同时给出与原始解 u_m 的误差。

    Raises:
        AlignmentError: 步数、网格或滤波宽度不一致
    """
    if not les_ensemble:
        raise AlignmentError("LES 集合为空")
    if fine_ensemble.coarse != coarse or any(t.grid != coarse for t in les_ensemble):
        raise AlignmentError("细网格集合与 LES 集合不在同一粗网格上")
    if not np.isclose(fine_ensemble.delta, delta, rtol=1e-12, atol=0.0):
        raise AlignmentError(f"集合滤波宽度 {fine_ensemble.delta} 与 δ={delta} 不一致")

    estimate = np.stack([t.values for t in les_ensemble])
    error = rmse_values(fine_ensemble.filtered_values(), estimate)
    raw = None
    if all(member.raw is not None for member in fine_ensemble.members):
        raw = rmse_values(fine_ensemble.raw_values(), estimate)
    return ErrorField(coarse, fine_ensemble.dt, error, raw)


def _time_averaged_l2(values: np.ndarray, grid: ChebyshevGrid, dt: float) -> float:
    n_steps = values.shape[0] - 1
    if n_steps == 0:
        return float(np.sqrt(quad_weights(grid) @ values[0] ** 2))
    spatial = (values ** 2) @ quad_weights(grid)
    horizon = n_steps * dt
    return float(np.sqrt(trapezoid_weights(n_steps, dt) @ spatial / horizon))


def summarize(error: ErrorField) -> Dict[str, float]:
    """
    误差场的标量诊断

    l2_time_avg = sqrt((1/T) ∫_0^T Σ_j w_j error(x_j,t)² dt)，
    空间 Clenshaw-Curtis、时间梯形；max_error 为 (x,t) 上的最大值。
    """
    summary = {
        'l2_time_avg': _time_averaged_l2(error.error, error.grid, error.dt),
        'max_error': float(np.max(error.error)),
    }
    if error.error_vs_raw is not None:
        summary['l2_time_avg_vs_raw'] = _time_averaged_l2(error.error_vs_raw, error.grid, error.dt)
        summary['max_error_vs_raw'] = float(np.max(error.error_vs_raw))
    return summary
