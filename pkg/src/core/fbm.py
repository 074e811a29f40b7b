"""
分数布朗运动 (fBM)

- cholesky_fbm: 协方差矩阵 Cholesky 分解的精确采样（可用于非等距时间网格）
- wm_fbm: 随机化 Weierstrass-Mandelbrot 级数近似
- 协方差、增量与 Hurst 指数诊断
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from ..utils.errors import FactorizationError, ParameterError, PreconditionError

logger = logging.getLogger(__name__)

WM_NORMALIZATIONS = ('ensemble', 'analytic', 'none')


def _check_hurst(hurst: float):
    if not 0.0 < hurst < 1.0:
        raise ParameterError(f"Hurst参数必须在 (0, 1) 内，得到 {hurst}")


@dataclass(frozen=True)
class FbmConfig:
    """W-M 级数配置"""
    hurst: float = 0.75
    r: float = 0.9
    j_min: int = -48
    j_max: int = 48
    seed: int = 0
    zero_adjust: bool = True

    def __post_init__(self):
        _check_hurst(self.hurst)
        if not 0.0 < self.r < 1.0:
            raise ParameterError(f"W-M 底数 r 必须在 (0, 1) 内，得到 {self.r}")
        if not self.j_min <= 0 <= self.j_max:
            raise ParameterError(
                f"截断范围必须满足 j_min <= 0 <= j_max，得到 [{self.j_min}, {self.j_max}]"
            )

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)


@dataclass(frozen=True)
class FbmPath:
    """均匀（或任意递增）时间网格上的 fBM 样本"""
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class WeierstrassTerms:
    """W-M 级数的随机系数: C_j ~ N(0,1), d_j ~ U[0, 2π)"""
    j: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray = field(repr=False)


def fbm_covariance(hurst: float, s, t):
    """
    fBM 协方差 ½(|t|^{2H} + |s|^{2H} - |t-s|^{2H})

    Raises:
        ParameterError: H 不在 (0, 1) 内
    """
    _check_hurst(hurst)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    two_h = 2.0 * hurst
    value = 0.5 * (np.abs(t) ** two_h + np.abs(s) ** two_h - np.abs(t - s) ** two_h)
    return float(value) if value.ndim == 0 else value


def covariance_matrix(times: np.ndarray, hurst: float) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    return fbm_covariance(hurst, times[:, None], times[None, :])


def _validate_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise PreconditionError("时间网格必须是非空一维数组")
    if times[0] < 0:
        raise PreconditionError("时间必须非负")
    if np.any(np.diff(times) <= 0):
        raise PreconditionError("时间网格必须严格递增")
    return times


def _cholesky_factor(times: np.ndarray, hurst: float, jitter: float) -> np.ndarray:
    cov = covariance_matrix(times, hurst)
    if jitter:
        cov = cov + jitter * np.eye(times.size)
    try:
        return cholesky(cov, lower=True)
    except LinAlgError as e:
        raise FactorizationError(
            f"fBM 协方差矩阵数值上非正定 ({times.size} 个时间点, H={hurst})，"
            f"请增加 jitter 或减少时间点: {e}"
        ) from e


def cholesky_fbm_paths(
    times,
    hurst: float,
    n_paths: int,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    jitter: float = 0.0
) -> np.ndarray:
    """
    Cholesky 方法批量精确采样

    t = 0 的行列不参与分解，该处取值精确为 0。

    Args:
        times: 严格递增的非负时间点（可非等距）
        hurst: Hurst 参数
        n_paths: 路径数
        seed: 随机种子（rng 为 None 时使用）
        rng: 随机数生成器
        jitter: 协方差对角线扰动

    Returns:
        形状 (n_paths, len(times)) 的数组

    Raises:
        FactorizationError: 协方差矩阵数值上非正定
    """
    _check_hurst(hurst)
    times = _validate_times(times)
    rng = rng if rng is not None else np.random.default_rng(seed)

    paths = np.zeros((n_paths, times.size))
    start = 1 if times[0] == 0.0 else 0
    if start == times.size:
        return paths

    lower = _cholesky_factor(times[start:], hurst, jitter)
    normals = rng.standard_normal((n_paths, times.size - start))
    paths[:, start:] = normals @ lower.T
    return paths


def cholesky_fbm(times, hurst: float, seed: Optional[int] = None, jitter: float = 0.0) -> FbmPath:
    """单条 Cholesky 精确 fBM 路径"""
    times = _validate_times(times)
    values = cholesky_fbm_paths(times, hurst, 1, seed=seed, jitter=jitter)[0]
    return FbmPath(times, values)


def draw_wm_terms(config: FbmConfig, rng: Optional[np.random.Generator] = None) -> WeierstrassTerms:
    """按配置抽取 W-M 级数的随机系数"""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    j = config.indices
    amplitudes = rng.standard_normal(j.size)
    phases = rng.uniform(0.0, 2.0 * np.pi, j.size)
    return WeierstrassTerms(j, amplitudes, phases)


def wm_series(times, config: FbmConfig, terms: WeierstrassTerms) -> np.ndarray:
    """w(t) = Σ_j C_j r^{jH} sin(2π r^{-j} t + d_j)，按 zero_adjust 减去 w(0)"""
    times = np.asarray(times, dtype=float)
    scale = config.r ** (terms.j * config.hurst)
    frequency = 2.0 * np.pi * config.r ** (-terms.j.astype(float))
    weights = terms.amplitudes * scale
    values = np.sin(np.outer(times, frequency) + terms.phases) @ weights
    if config.zero_adjust:
        values = values - np.sin(terms.phases) @ weights
        values[times == 0.0] = 0.0
    return values


def wm_fbm(times, config: FbmConfig, terms: Optional[WeierstrassTerms] = None) -> FbmPath:
    """
    随机化 Weierstrass-Mandelbrot 近似的 fBM 路径（未做方差归一化）

    Args:
        times: 时间点
        config: 级数配置（含随机种子）
        terms: 显式给定的级数系数，None 时按 config.seed 抽取

    Returns:
        FbmPath；zero_adjust 时 values[0] 对应 w(t_0) - w(0)
    """
    times = np.asarray(times, dtype=float)
    terms = terms if terms is not None else draw_wm_terms(config)
    return FbmPath(times, wm_series(times, config, terms))


def wm_analytic_variance(t: float, config: FbmConfig) -> float:
    """截断随机级数在 t 处的方差 Σ_j r^{2jH} (1 - cos(2π r^{-j} t))"""
    j = config.indices
    return float(np.sum(
        config.r ** (2.0 * j * config.hurst)
        * (1.0 - np.cos(2.0 * np.pi * config.r ** (-j.astype(float)) * t))
    ))


def wm_fbm_paths(
    times,
    config: FbmConfig,
    rngs: Sequence[np.random.Generator],
    normalization: str = 'ensemble'
) -> Tuple[np.ndarray, float]:
    """
    批量生成 W-M 路径并归一化

    ensemble: 缩放使集合在 T 处的样本方差等于 T^{2H}（少于 2 条路径时退化为 analytic）；
    analytic: 用截断级数的理论方差缩放；none: 原始级数。

    Args:
        times: 时间点，最后一个为 T
        config: 级数配置
        rngs: 每条路径一个随机数生成器
        normalization: 归一化方式

    Returns:
        (形状 (len(rngs), len(times)) 的路径, 使用的缩放因子)
    """
    if normalization not in WM_NORMALIZATIONS:
        raise ParameterError(f"未知的 W-M 归一化方式: {normalization}")
    times = np.asarray(times, dtype=float)
    paths = np.stack([wm_series(times, config, draw_wm_terms(config, rng)) for rng in rngs])

    horizon = times[-1]
    target = horizon ** (2.0 * config.hurst)
    if normalization == 'ensemble' and len(rngs) < 2:
        logger.debug("路径数不足 2，改用理论方差归一化")
        normalization = 'analytic'

    if normalization == 'none' or horizon == 0.0:
        factor = 1.0
    elif normalization == 'ensemble':
        sample_variance = np.var(paths[:, -1], ddof=1)
        factor = np.sqrt(target / sample_variance) if sample_variance > 0 else 1.0
    else:
        factor = np.sqrt(target / wm_analytic_variance(horizon, config))

    return paths * factor, float(factor)


def increments(path: FbmPath) -> np.ndarray:
    """
    逐步增量 ΔB^H

    Raises:
        PreconditionError: 路径少于 2 个点
    """
    values = np.asarray(path.values)
    if values.shape[-1] < 2:
        raise PreconditionError("路径至少需要 2 个点才能计算增量")
    return np.diff(values, axis=-1)


def estimate_hurst(paths: np.ndarray, lags: Sequence[int]) -> float:
    """
    方差标度法估计 Hurst 指数

    对每个滞后 Δ 计算 E|w(t+Δ) - w(t)|²（跨路径和起点平均），
    在对数坐标下线性回归，斜率的一半即 H。

    Args:
        paths: 形状 (路径数, 时间点数) 的等步长样本
        lags: 以步数计的滞后

    Returns:
        Hurst 指数估计
    """
    paths = np.atleast_2d(paths)
    lags = np.asarray(lags, dtype=int)
    if lags.size < 2 or np.any(lags < 1) or np.any(lags >= paths.shape[1]):
        raise PreconditionError("至少需要两个合法滞后 (1 <= lag < 时间点数)")
    msd = np.array([np.mean((paths[:, lag:] - paths[:, :-lag]) ** 2) for lag in lags])
    slope, _ = np.polyfit(np.log(lags), np.log(msd), 1)
    return float(slope / 2.0)
