"""工作流编排 - 每个命令对应一个方法"""

import logging
from typing import Any, Dict, Optional

import numpy as np

from .artifacts import ArtifactStore
from .calibration import (
    DriftFit,
    Ensemble,
    EnsembleMember,
    PerturbationSpec,
    Provenance,
    SgsModel,
    SigmaProfile,
    calibrate as calibrate_model,
    generate_ensemble,
)
from .fbm import FbmConfig, estimate_hurst, wm_fbm_paths
from .filtering import SgsField, filter_field, time_correlation
from .manifest import RunManifest
from .memory_solver import MemoryKernel, SolverConfig, default_initial_condition, solve
from .seeding import FBM_SAMPLE_STREAM, member_rng
from .sles import ErrorField, SlesConfig, rmse, rmse_values, run_les_ensemble, summarize
from .spectral import ChebyshevGrid, Field, Trajectory, build_grid, interpolate
from ..cli import RichInterface
from ..utils.config import RunParameters
from ..utils.errors import AlignmentError, DegenerateSignalError


class PipelineWorkflow:
    """随机 LES 流水线"""

    def __init__(
        self,
        params: RunParameters,
        interface: RichInterface,
        store: Optional[ArtifactStore] = None
    ):
        """
        初始化工作流

        Args:
            params: 已校验的运行参数
            interface: 用户界面
            store: 产物存储，默认使用 params.out_dir
        """
        self.params = params
        self.ui = interface
        self.store = store or ArtifactStore(params.out_dir)
        self.manifest = RunManifest.load_or_create(self.store.path('manifest'))
        self.logger = logging.getLogger(__name__)

    # ---------- 公共构件 ----------

    @property
    def fine_grid(self) -> ChebyshevGrid:
        return build_grid(self.params.n_fine)

    @property
    def coarse_grid(self) -> ChebyshevGrid:
        return build_grid(self.params.n_coarse)

    @property
    def solver_config(self) -> SolverConfig:
        p = self.params
        return SolverConfig(dt=p.dt, t_end=p.t_end, bc_left=p.bc_left, bc_right=p.bc_right)

    @property
    def kernel(self) -> MemoryKernel:
        return MemoryKernel(self.params.beta)

    @property
    def fbm_config(self) -> FbmConfig:
        p = self.params
        return FbmConfig(
            hurst=p.hurst, r=p.r, j_min=p.j_min, j_max=p.j_max,
            seed=p.seed, zero_adjust=p.wm_zero_adjust,
        )

    def base_ic(self, grid: ChebyshevGrid) -> Field:
        p = self.params
        return default_initial_condition(grid, p.ic_linear, p.ic_sine, p.ic_wavenumber)

    def filtered_ic(self) -> Field:
        """U(x,0) = ū_0(x)：细网格初值滤波后插值到粗网格，边界值取 (b, a)"""
        p = self.params
        filtered = filter_field(
            self.base_ic(self.fine_grid), p.delta, p.filter_normalization, p.filter_points
        )
        values = interpolate(filtered, self.coarse_grid).values.copy()
        values[0] = p.bc_right
        values[-1] = p.bc_left
        return Field(self.coarse_grid, values)

    def _finish(self, command: str, artifacts: Dict[str, str]):
        artifacts = dict(artifacts)
        artifacts['manifest'] = self.store.relative('manifest')
        self.manifest.record(command, self.params, artifacts)
        self.manifest.save(self.store.path('manifest'))
        self.ui.show_artifacts(artifacts)

    # ---------- 命令 ----------

    def run_benchmark(self) -> Dict[str, str]:
        """细网格集合 + SGS 场 + 相关诊断"""
        p = self.params
        coarse = self.coarse_grid
        spec = PerturbationSpec(epsilon=p.epsilon, seed=p.seed)

        with self.ui.progress(p.members, "细网格集合求解") as advance:
            ensemble = generate_ensemble(
                self.base_ic(self.fine_grid), spec, p.members, self.solver_config,
                self.kernel, p.delta, coarse, p.filter_normalization, p.filter_points,
                workers=p.workers, keep_fine=p.write_fine_trajectories,
                on_member_done=advance,
            )

        artifacts = {}
        if p.write_fine_trajectories:
            fine = np.stack([m.fine.values for m in ensemble.members])
            artifacts['fine_trajectories'] = self.store.write_fields(
                'fine_trajectories', self.fine_grid, p.dt, fine)
        sgs = np.stack([m.sgs.values for m in ensemble.members])
        artifacts['sgs_fields'] = self.store.write_fields('sgs_fields', coarse, p.dt, sgs)
        artifacts['filtered_coarse'] = self.store.write_fields(
            'filtered_coarse', coarse, p.dt, ensemble.filtered_values())
        artifacts['raw_coarse'] = self.store.write_fields(
            'raw_coarse', coarse, p.dt, ensemble.raw_values())

        node = coarse.nearest_index(p.corr_x)
        try:
            profile = time_correlation(ensemble.sgs_fields, node, p.max_lag_steps)
            artifacts['sgs_correlation'] = self.store.write_profile('sgs_correlation', {
                'lag': np.arange(profile.lags.size),
                's': profile.lags,
                'corr': profile.corr,
            })
        except DegenerateSignalError as e:
            self.logger.warning(f"x={coarse.nodes[node]:.4f} 处的相关诊断跳过: {e}")
            self.ui.show_warning(f"相关诊断跳过: {e}")

        self._finish('run-benchmark', artifacts)
        return artifacts

    def _load_ensemble(self, with_sgs: bool) -> Ensemble:
        p = self.params
        coarse = self.coarse_grid
        filtered = self.store.read_fields('filtered_coarse', coarse)
        raw = self.store.read_fields('raw_coarse', coarse)
        sgs = self.store.read_fields('sgs_fields', coarse) if with_sgs else None

        members = []
        for m in range(filtered.shape[0]):
            members.append(EnsembleMember(
                index=m,
                sgs=SgsField(coarse, p.dt, sgs[m]) if sgs is not None else None,
                filtered=Trajectory(coarse, p.dt, filtered[m]),
                raw=Trajectory(coarse, p.dt, raw[m]),
            ))
        return Ensemble(members, coarse, p.dt, p.t_end, p.beta, p.delta)

    def calibrate(self) -> Dict[str, str]:
        """由基准集合标定漂移和 σ"""
        p = self.params
        self.manifest.require_stage('run-benchmark', p)
        ensemble = self._load_ensemble(with_sgs=True)
        model = calibrate_model(ensemble, p.hurst)

        drift = model.drift.to_dict()
        drift.update({
            'hurst': p.hurst, 't_end': p.t_end, 'delta': p.delta, 'beta': p.beta,
        })
        artifacts = {
            'drift': self.store.write_json('drift', drift),
            'sigma': self.store.write_profile('sigma', {
                'x': self.coarse_grid.nodes, 'sigma': model.sigma.sigma,
            }),
        }
        self._finish('calibrate', artifacts)
        return artifacts

    def load_model(self) -> SgsModel:
        """读取标定产物"""
        data = self.store.read_json('drift')
        sigma = self.store.read_profile('sigma')
        grid = self.coarse_grid
        if len(sigma) != grid.size:
            raise AlignmentError(f"sigma.csv 有 {len(sigma)} 个节点，粗网格有 {grid.size} 个")
        return SgsModel(
            drift=DriftFit(data['a0'], data['a1'], data['a2'], data['a3'],
                           data.get('condition_number', float('nan'))),
            sigma=SigmaProfile(grid, sigma['sigma'].to_numpy()),
            provenance=Provenance(data['hurst'], data['t_end'], data['delta'], data['beta']),
        )

    def sles_config(self, model: SgsModel) -> SlesConfig:
        p = self.params
        return SlesConfig(
            solver=self.solver_config,
            kernel=self.kernel,
            model=model,
            delta=p.delta,
            fbm=self.fbm_config,
            noise_mode=p.noise_mode,
            members=p.les_members,
            seed=p.seed,
            wm_normalization=p.wm_normalization,
            blowup_threshold=p.blowup_threshold,
        )

    def run_sles(self) -> Dict[str, str]:
        """求解随机 LES 集合"""
        p = self.params
        self.manifest.require_stage('calibrate', p)
        config = self.sles_config(self.load_model())

        with self.ui.progress(p.les_members, "随机 LES 求解") as advance:
            trajectories = run_les_ensemble(
                self.filtered_ic(), config, workers=p.workers, on_member_done=advance)

        values = np.stack([t.values for t in trajectories])
        artifacts = {
            'les_trajectories': self.store.write_fields(
                'les_trajectories', self.coarse_grid, p.dt, values),
        }
        self._finish('run-sles', artifacts)
        return artifacts

    def compare(self, baseline: bool = False) -> Dict[str, Any]:
        """
        LES 集合与细网格集合的均方根误差

        Args:
            baseline: 是否同时计算无参数化粗网格解的误差

        Returns:
            摘要字典
        """
        p = self.params
        self.manifest.require_stage('run-sles', p)
        coarse = self.coarse_grid
        ensemble = self._load_ensemble(with_sgs=False)
        les = self.store.read_fields('les_trajectories', coarse)
        trajectories = [Trajectory(coarse, p.dt, values) for values in les]

        error = rmse(ensemble, trajectories, p.delta, coarse)
        summary: Dict[str, Any] = dict(summarize(error))
        artifacts = {'error': self.store.write_error(coarse, p.dt, error.error, error.error_vs_raw)}

        if baseline:
            reference = solve(self.base_ic(coarse), self.solver_config, self.kernel)
            artifacts['baseline_trajectory'] = self.store.write_fields(
                'baseline_trajectory', coarse, p.dt, reference.values, with_member=False)
            repeated = np.repeat(reference.values[None], ensemble.size, axis=0)
            baseline_error = ErrorField(
                coarse, p.dt,
                rmse_values(ensemble.filtered_values(), repeated),
                rmse_values(ensemble.raw_values(), repeated),
            )
            for key, value in summarize(baseline_error).items():
                summary[f'baseline_{key}'] = value
            summary['improvement'] = summary['baseline_l2_time_avg'] - summary['l2_time_avg']
            self.logger.info(
                f"LES L2={summary['l2_time_avg']:.6e}, 基线 L2={summary['baseline_l2_time_avg']:.6e}"
            )

        artifacts['summary'] = self.store.write_json('summary', summary)
        self._finish('compare', artifacts)
        self.ui.show_summary(summary)
        return summary

    def fbm_sample(self, paths: int = 1) -> Dict[str, Any]:
        """生成 W-M fBM 样本路径并估计 Hurst 指数"""
        p = self.params
        times = np.arange(p.n_steps + 1) * p.dt
        rngs = [member_rng(p.seed, FBM_SAMPLE_STREAM, i) for i in range(paths)]
        values, factor = wm_fbm_paths(times, self.fbm_config, rngs, p.wm_normalization)

        artifacts = {'fbm_paths': self.store.write_paths(times, values)}
        max_lag = max(2, p.n_steps // 16)
        lags = np.unique(np.geomspace(1, max_lag, num=5).astype(int))
        if lags.size >= 2 and p.n_steps > max_lag:
            estimate = estimate_hurst(values, lags)
            self.logger.info(f"方差标度 Hurst 估计: {estimate:.4f} (H={p.hurst}, 缩放因子={factor:.4g})")
            self.ui.show_info(f"Hurst 估计 {estimate:.4f}（设定 H={p.hurst}）")

        self._finish('fbm-sample', artifacts)
        return artifacts

