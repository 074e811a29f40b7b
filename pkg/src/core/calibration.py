"""
亚格子项参数化的标定

扰动初值生成细网格集合，拟合 SGS 均值漂移 f(ū) = a0 + a1 ū + a2 ū² + a3 ū³，
并由 σ(x) = T^{-H} sqrt(E(∫_0^T [R - E R] dt)²) 估计噪声强度。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .filtering import SgsField, compute_sgs, filter_trajectory, DEFAULT_POINTS
from .memory_solver import MemoryKernel, SemiImplicitStepper, SolverConfig
from .seeding import PERTURBATION_STREAM, member_rng
from .spectral import ChebyshevGrid, Field, Trajectory, quad_weights, restrict_trajectory
from ..utils.errors import (
    AlignmentError,
    DegenerateFitError,
    InsufficientEnsembleError,
    ParameterError,
    PreconditionError,
    ProvenanceMismatchError,
)

logger = logging.getLogger(__name__)

GRAM_CONDITION_LIMIT = 1e12
PERTURBATION_MODES = ('sine',)


def trapezoid_weights(n_steps: int, dt: float) -> np.ndarray:
    """等步长复合梯形权重，长度 n_steps+1"""
    weights = np.full(n_steps + 1, dt)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    if n_steps == 0:
        weights[:] = 0.0
    return weights


@dataclass(frozen=True)
class PerturbationSpec:
    """初值扰动: epsilon * ξ_m * sin(πx)，ξ_m ~ U(-1, 1)"""
    epsilon: float = 0.01
    mode: str = 'sine'
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ParameterError("扰动幅度必须 >= 0")
        if self.mode not in PERTURBATION_MODES:
            raise ParameterError(f"未知的扰动形状: {self.mode}")

    def amplitude(self, member: int) -> float:
        return float(member_rng(self.seed, PERTURBATION_STREAM, member).uniform(-1.0, 1.0))

    def perturbation(self, grid: ChebyshevGrid, member: int) -> np.ndarray:
        shape = np.sin(np.pi * grid.nodes)
        # sin(πx) 在 ±1 处解析为零
        shape[0] = shape[-1] = 0.0
        return self.epsilon * self.amplitude(member) * shape


@dataclass
class EnsembleMember:
    """单个集合成员：SGS 场、粗网格上的 ū 与 u，可选保留细网格轨迹"""
    index: int
    sgs: Optional[SgsField]
    filtered: Trajectory
    raw: Optional[Trajectory] = None
    fine: Optional[Trajectory] = None


@dataclass
class Ensemble:
    """共享网格、时间步和物理参数的集合"""
    members: List[EnsembleMember]
    coarse: ChebyshevGrid
    dt: float
    t_end: float
    beta: float
    delta: float
    fine: Optional[ChebyshevGrid] = None

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def sgs_fields(self) -> List[SgsField]:
        if any(member.sgs is None for member in self.members):
            raise PreconditionError("集合中缺少 SGS 场")
        return [member.sgs for member in self.members]

    def filtered_values(self) -> np.ndarray:
        return np.stack([member.filtered.values for member in self.members])

    def raw_values(self) -> np.ndarray:
        if any(member.raw is None for member in self.members):
            raise PreconditionError("集合中缺少粗网格上的原始解")
        return np.stack([member.raw.values for member in self.members])

    def mean_filtered(self) -> Trajectory:
        """集合平均的 ū（粗网格）"""
        return Trajectory(self.coarse, self.dt, self.filtered_values().mean(axis=0))


def generate_ensemble(
    base_ic: Field,
    spec: PerturbationSpec,
    members: int,
    config: SolverConfig,
    kernel: MemoryKernel,
    delta: float,
    coarse: ChebyshevGrid,
    normalization: str = 'unit_mass',
    points: int = DEFAULT_POINTS,
    workers: int = 1,
    keep_fine: bool = True,
    on_member_done: Optional[Callable[[int], None]] = None
) -> Ensemble:
    """
    用扰动初值求解 M 个细网格成员，并提取各自的 SGS 场

    成员 m 只取决于 (spec.seed, m)，线程调度不影响结果。

    Args:
        base_ic: 满足边界条件的基准初值
        spec: 扰动设置
        members: 成员数 M >= 2
        config: 求解配置
        kernel: 记忆核
        delta: 滤波宽度
        coarse: 粗网格
        normalization: 滤波核归一化
        points: 卷积求积点数
        workers: 线程数
        keep_fine: 是否保留细网格轨迹
        on_member_done: 每个成员完成后的回调

    Returns:
        Ensemble
    """
    if members < 2:
        raise InsufficientEnsembleError("集合成员数必须 >= 2")

    stepper = SemiImplicitStepper(base_ic.grid, config, kernel)

    def solve_member(m: int) -> EnsembleMember:
        values = base_ic.values + spec.perturbation(base_ic.grid, m)
        ic = Field(base_ic.grid, values)
        assert values[0] == base_ic.values[0] and values[-1] == base_ic.values[-1], \
            "扰动破坏了边界条件"
        trajectory = stepper.integrate(ic)
        member = EnsembleMember(
            index=m,
            sgs=compute_sgs(trajectory, delta, coarse, normalization, points),
            filtered=filter_trajectory(trajectory, delta, coarse, normalization, points),
            raw=restrict_trajectory(trajectory, coarse),
            fine=trajectory if keep_fine else None,
        )
        logger.debug(f"集合成员 {m} 完成")
        if on_member_done is not None:
            on_member_done(m)
        return member

    logger.info(f"生成细网格集合: M={members}, n={base_ic.grid.n}, 线程数={workers}")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        solved = list(pool.map(solve_member, range(members)))

    return Ensemble(
        members=solved,
        coarse=coarse,
        dt=config.dt,
        t_end=config.t_end,
        beta=kernel.beta,
        delta=delta,
        fine=base_ic.grid,
    )


def _sgs_list(source: Union[Ensemble, Sequence[SgsField]]) -> List[SgsField]:
    return source.sgs_fields if isinstance(source, Ensemble) else list(source)


def mean_sgs(source: Union[Ensemble, Sequence[SgsField]]) -> SgsField:
    """
    逐点集合平均 E R(x, t)

    Raises:
        InsufficientEnsembleError: 集合为空
    """
    fields = _sgs_list(source)
    if not fields:
        raise InsufficientEnsembleError("集合为空")
    _check_aligned(fields)
    stacked = np.stack([f.values for f in fields])
    return SgsField(fields[0].grid, fields[0].dt, stacked.mean(axis=0))


def _check_aligned(fields: Sequence[SgsField]):
    first = fields[0]
    for f in fields[1:]:
        if f.grid != first.grid or f.values.shape != first.values.shape or f.dt != first.dt:
            raise AlignmentError("集合成员的网格或时间步不一致")


@dataclass(frozen=True)
class DriftFit:
    """三次漂移 f(u) = a0 + a1 u + a2 u² + a3 u³"""
    a0: float
    a1: float
    a2: float
    a3: float
    condition_number: float = float('nan')

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.a2, self.a3])

    def __call__(self, u):
        return np.polynomial.polynomial.polyval(u, self.coefficients)

    def is_zero(self) -> bool:
        return not np.any(self.coefficients)

    def to_dict(self) -> dict:
        return asdict(self)


def _fit_system(meanR: SgsField, ubar: Trajectory):
    if meanR.grid != ubar.grid or meanR.values.shape != ubar.values.shape:
        raise AlignmentError(
            f"E R {meanR.values.shape} 与 ū {ubar.values.shape} 不在同一网格/时间步上"
        )
    weights = np.outer(trapezoid_weights(ubar.n_steps, ubar.dt), quad_weights(ubar.grid)).ravel()
    basis = np.vander(ubar.values.ravel(), 4, increasing=True)
    return basis, meanR.values.ravel(), weights


def weighted_residual_norm(fit: DriftFit, meanR: SgsField, ubar: Trajectory) -> float:
    """sqrt(∫∫ [f(ū) - E R]² dx dt)"""
    basis, target, weights = _fit_system(meanR, ubar)
    residual = basis @ fit.coefficients - target
    return float(np.sqrt(weights @ residual ** 2))


def fit_drift(meanR: SgsField, ubar: Trajectory) -> DriftFit:
    """
    加权最小二乘拟合三次漂移

    权重 = Clenshaw-Curtis 空间权重 × 梯形时间权重，即离散化的
    ∫_0^T ∫_D [f(ū) - E R]² dx dt。

    Args:
        meanR: 集合平均 SGS 场
        ubar: 同一粗网格和时间步上的集合平均 ū

    Returns:
        DriftFit

    Raises:
        AlignmentError: 两者不对齐
        DegenerateFitError: 基函数 Gram 矩阵秩亏
    """
    basis, target, weights = _fit_system(meanR, ubar)
    gram = basis.T @ (weights[:, None] * basis)
    condition = float(np.linalg.cond(gram))
    if not np.isfinite(condition) or condition > GRAM_CONDITION_LIMIT:
        raise DegenerateFitError("漂移拟合的法方程秩亏（ū 可能近似为常数）", condition)

    root = np.sqrt(weights)
    coefficients, *_ = np.linalg.lstsq(basis * root[:, None], target * root, rcond=None)
    fit = DriftFit(*(float(c) for c in coefficients), condition_number=condition)
    logger.info(
        f"漂移拟合: a0={fit.a0:.6g}, a1={fit.a1:.6g}, a2={fit.a2:.6g}, "
        f"a3={fit.a3:.6g}, 条件数={condition:.3e}"
    )
    return fit


@dataclass(frozen=True)
class SigmaProfile:
    """噪声强度 σ(x_j) >= 0"""
    grid: ChebyshevGrid
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (self.grid.size,):
            raise PreconditionError("σ 长度与网格节点数不一致")
        if np.any(sigma < 0):
            raise PreconditionError("σ 必须非负")
        object.__setattr__(self, 'sigma', sigma)

    def is_zero(self) -> bool:
        return not np.any(self.sigma)


def estimate_sigma(
    source: Union[Ensemble, Sequence[SgsField]],
    meanR: SgsField,
    t_end: float,
    hurst: float
) -> SigmaProfile:
    """
    σ(x) = T^{-H} sqrt(E(∫_0^T [R - E R] dt)²)

    每个成员先做梯形时间积分，再取无偏 (M-1) 集合均方。

    Raises:
        InsufficientEnsembleError: M < 2
        PreconditionError: T 与集合时间窗不一致
    """
    fields = _sgs_list(source)
    if len(fields) < 2:
        raise InsufficientEnsembleError("估计 σ 至少需要 2 个集合成员")
    _check_aligned(fields)
    if meanR.values.shape != fields[0].values.shape:
        raise AlignmentError("E R 与集合成员形状不一致")
    window = fields[0].n_steps * fields[0].dt
    if abs(window - t_end) > 1e-9 * max(1.0, t_end):
        raise PreconditionError(f"T={t_end} 与集合时间窗 {window} 不一致")

    weights = trapezoid_weights(fields[0].n_steps, fields[0].dt)
    integrals = np.stack([weights @ (f.values - meanR.values) for f in fields])
    mean_square = (integrals ** 2).sum(axis=0) / (len(fields) - 1)
    sigma = np.sqrt(mean_square) / t_end ** hurst
    return SigmaProfile(fields[0].grid, sigma)


@dataclass(frozen=True)
class Provenance:
    """模型的来源参数 (H, T, δ, β)"""
    hurst: float
    t_end: float
    delta: float
    beta: float

    def mismatches(self, other: 'Provenance') -> List[str]:
        return [
            name for name in ('hurst', 't_end', 'delta', 'beta')
            if not np.isclose(getattr(self, name), getattr(other, name), rtol=1e-12, atol=0.0)
        ]

    def require(self, other: 'Provenance'):
        """
        Raises:
            ProvenanceMismatchError: 来源参数不一致
        """
        diff = self.mismatches(other)
        if diff:
            detail = ", ".join(f"{k}: 模型={getattr(self, k)}, 运行={getattr(other, k)}" for k in diff)
            raise ProvenanceMismatchError(f"SGS 模型来源参数与运行参数不一致 ({detail})")


@dataclass(frozen=True)
class SgsModel:
    """标定好的闭合模型: 漂移 + 噪声强度 + 来源参数"""
    drift: DriftFit
    sigma: SigmaProfile
    provenance: Provenance

    @classmethod
    def zero(cls, grid: ChebyshevGrid, provenance: Provenance) -> 'SgsModel':
        return cls(DriftFit(0.0, 0.0, 0.0, 0.0), SigmaProfile(grid, np.zeros(grid.size)), provenance)


def calibrate(ensemble: Ensemble, hurst: float) -> SgsModel:
    """由集合标定 SgsModel"""
    meanR = mean_sgs(ensemble)
    drift = fit_drift(meanR, ensemble.mean_filtered())
    sigma = estimate_sigma(ensemble, meanR, ensemble.t_end, hurst)
    logger.info(f"σ 标定完成: max σ = {sigma.sigma.max():.3e}")
    return SgsModel(
        drift=drift,
        sigma=sigma,
        provenance=Provenance(hurst, ensemble.t_end, ensemble.delta, ensemble.beta),
    )
