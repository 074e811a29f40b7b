"""随机 LES 求解与误差诊断"""

import numpy as np
import pytest

from src.core.calibration import (
    DriftFit,
    Ensemble,
    EnsembleMember,
    Provenance,
    SgsModel,
    SigmaProfile,
)
from src.core.fbm import FbmConfig
from src.core.memory_solver import (
    MemoryKernel,
    SemiImplicitStepper,
    SolverConfig,
    default_initial_condition,
    solve,
)
from src.core.sles import (
    ErrorField,
    SlesConfig,
    noise_paths,
    rmse,
    rmse_values,
    run_les_ensemble,
    solve_sles,
    summarize,
)
from src.core.spectral import Trajectory, build_grid
from src.utils.errors import AlignmentError, BlowUpError, ParameterError, ProvenanceMismatchError

SOLVER = SolverConfig(dt=0.01, t_end=0.1)
KERNEL = MemoryKernel(2.0)
FBM = FbmConfig(hurst=0.75, j_min=-12, j_max=12)
PROVENANCE = Provenance(0.75, 0.1, 0.05, 2.0)


def _config(model, **kwargs) -> SlesConfig:
    options = dict(
        solver=SOLVER, kernel=KERNEL, model=model, delta=0.05, fbm=FBM, members=3, seed=11,
    )
    options.update(kwargs)
    return SlesConfig(**options)


def _model(grid, drift=(0.0, 0.0, 0.0, 0.0), sigma=0.0) -> SgsModel:
    return SgsModel(DriftFit(*drift), SigmaProfile(grid, np.full(grid.size, sigma)), PROVENANCE)


class TestSolveSles:
    def test_zero_model_reduces_to_deterministic_solve(self, coarse_grid):
        ic = default_initial_condition(coarse_grid)
        trajectory = solve_sles(ic, _config(SgsModel.zero(coarse_grid, PROVENANCE)))
        assert np.array_equal(trajectory.values, solve(ic, SOLVER, KERNEL).values)

    def test_boundary_values_fixed_with_noise(self, coarse_grid):
        ic = default_initial_condition(coarse_grid)
        trajectory = solve_sles(ic, _config(_model(coarse_grid, (0.0, -0.1, 0.0, 0.2), sigma=0.3)))
        assert np.all(trajectory.values[:, 0] == 1.0)
        assert np.all(trajectory.values[:, -1] == -1.0)

    def test_noise_changes_solution(self, coarse_grid):
        ic = default_initial_condition(coarse_grid)
        noisy = solve_sles(ic, _config(_model(coarse_grid, sigma=0.5)))
        assert not np.array_equal(noisy.values, solve(ic, SOLVER, KERNEL).values)

    def test_constant_drift_shifts_interior(self, coarse_grid):
        ic = default_initial_condition(coarse_grid)
        pushed = solve_sles(ic, _config(_model(coarse_grid, (1.0, 0.0, 0.0, 0.0))))
        reference = solve(ic, SOLVER, KERNEL)
        center = coarse_grid.size // 2
        assert pushed.values[-1, center] > reference.values[-1, center]

    def test_constant_drift_matches_stepper_with_extra_drift(self, coarse_grid):
        ic = default_initial_condition(coarse_grid)
        pushed = solve_sles(ic, _config(_model(coarse_grid, (0.5, 0.0, 0.0, 0.0))))
        stepper = SemiImplicitStepper(coarse_grid, SOLVER, KERNEL)
        expected = stepper.integrate(ic, drift=lambda values, k: np.full(coarse_grid.size, 0.5))
        np.testing.assert_allclose(pushed.values, expected.values, rtol=0.0, atol=1e-14)

    @pytest.mark.slow
    def test_small_noise_mean_tracks_deterministic_solution(self, coarse_grid):
        ic = default_initial_condition(coarse_grid)
        config = _config(_model(coarse_grid, sigma=1e-3), members=200)
        values = np.stack([t.values for t in run_les_ensemble(ic, config)])
        reference = solve(ic, SOLVER, KERNEL).values

        sem = values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])
        # 边界节点和 t = 0 上 SEM 为零，两边也都精确相等
        assert np.all(np.abs(values.mean(axis=0) - reference) <= 3.0 * sem + 1e-14)

    def test_provenance_mismatch(self, coarse_grid):
        model = SgsModel.zero(coarse_grid, Provenance(0.5, 0.1, 0.05, 2.0))
        with pytest.raises(ProvenanceMismatchError):
            solve_sles(default_initial_condition(coarse_grid), _config(model))

    def test_blow_up_detected(self, coarse_grid):
        ic = default_initial_condition(coarse_grid)
        config = _config(_model(coarse_grid, (50.0, 0.0, 0.0, 0.0)), blowup_threshold=1.5)
        with pytest.raises(BlowUpError):
            solve_sles(ic, config)

    def test_unknown_noise_mode(self, coarse_grid):
        with pytest.raises(ParameterError):
            _config(SgsModel.zero(coarse_grid, PROVENANCE), noise_mode='other')


class TestNoisePaths:
    def test_per_realization_paths_are_independent(self, coarse_grid):
        paths = noise_paths(_config(_model(coarse_grid, sigma=0.1)))
        assert paths.shape == (3, SOLVER.n_steps + 1)
        assert np.all(paths[:, 0] == 0.0)
        assert not np.array_equal(paths[0], paths[1])

    def test_shared_path(self, coarse_grid):
        paths = noise_paths(_config(_model(coarse_grid, sigma=0.1), noise_mode='shared-path'))
        assert np.array_equal(paths[0], paths[1])
        assert np.array_equal(paths[1], paths[2])

    def test_reproducible_for_seed(self, coarse_grid):
        config = _config(_model(coarse_grid, sigma=0.1))
        assert np.array_equal(noise_paths(config), noise_paths(config))


class TestLesEnsemble:
    def test_ordered_and_thread_independent(self, coarse_grid):
        ic = default_initial_condition(coarse_grid)
        config = _config(_model(coarse_grid, sigma=0.2))
        serial = run_les_ensemble(ic, config, workers=1)
        threaded = run_les_ensemble(ic, config, workers=3)
        assert len(serial) == 3
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.values, b.values)

    def test_callback_per_member(self, coarse_grid):
        done = []
        run_les_ensemble(default_initial_condition(coarse_grid),
                         _config(SgsModel.zero(coarse_grid, PROVENANCE)),
                         on_member_done=done.append)
        assert sorted(done) == [0, 1, 2]


def _fine_ensemble(grid, values, raw=None) -> Ensemble:
    members = []
    for m, v in enumerate(values):
        raw_traj = Trajectory(grid, 0.1, raw[m]) if raw is not None else None
        members.append(EnsembleMember(m, None, Trajectory(grid, 0.1, v), raw_traj))
    return Ensemble(members, grid, 0.1, 0.1 * (values.shape[1] - 1), 2.0, 0.05)


class TestRmse:
    def test_identical_inputs_give_zero(self, coarse_grid, rng):
        values = rng.normal(size=(4, 6, coarse_grid.size))
        ensemble = _fine_ensemble(coarse_grid, values, raw=values)
        les = [Trajectory(coarse_grid, 0.1, v) for v in values]
        error = rmse(ensemble, les, 0.05, coarse_grid)
        assert np.all(error.error == 0.0)
        summary = summarize(error)
        assert summary['l2_time_avg'] == 0.0
        assert summary['max_error'] == 0.0
        assert summary['l2_time_avg_vs_raw'] == 0.0

    def test_pointwise_formula(self):
        reference = np.array([[[0.0, 0.0]], [[0.0, 0.0]]])
        estimate = np.array([[[3.0, 1.0]], [[4.0, 1.0]]])
        np.testing.assert_allclose(rmse_values(reference, estimate), [[np.sqrt(12.5), 1.0]])

    def test_pairs_shorter_ensemble(self, caplog):
        reference = np.zeros((4, 2, 3))
        estimate = np.ones((2, 2, 3))
        with caplog.at_level('WARNING'):
            result = rmse_values(reference, estimate)
        np.testing.assert_allclose(result, 1.0)
        assert '只配对前 2 个成员' in caplog.text

    def test_misaligned_steps(self, coarse_grid):
        ensemble = _fine_ensemble(coarse_grid, np.zeros((2, 6, coarse_grid.size)))
        les = [Trajectory(coarse_grid, 0.1, np.zeros((5, coarse_grid.size)))]
        with pytest.raises(AlignmentError):
            rmse(ensemble, les, 0.05, coarse_grid)

    def test_filter_width_must_match(self, coarse_grid):
        ensemble = _fine_ensemble(coarse_grid, np.zeros((2, 6, coarse_grid.size)))
        les = [Trajectory(coarse_grid, 0.1, np.zeros((6, coarse_grid.size)))]
        with pytest.raises(AlignmentError):
            rmse(ensemble, les, 0.1, coarse_grid)

    def test_summary_of_constant_error(self):
        grid = build_grid(6)
        error = ErrorField(grid, 0.1, np.full((11, grid.size), 0.5))
        summary = summarize(error)
        # sqrt((1/T) ∫∫ 0.25 dx dt) = sqrt(0.5)
        assert summary['l2_time_avg'] == pytest.approx(np.sqrt(0.5), rel=1e-13)
        assert summary['max_error'] == 0.5
        assert 'l2_time_avg_vs_raw' not in summary
