"""高斯滤波、SGS 提取与相关函数"""

import numpy as np
import pytest
from scipy.integrate import quad, trapezoid

from src.core.calibration import PerturbationSpec, generate_ensemble
from src.core.filtering import (
    GaussianFilter,
    SgsField,
    compute_sgs,
    filter_field,
    filter_matrix,
    filter_trajectory,
    time_correlation,
)
from src.core.memory_solver import MemoryKernel, SolverConfig, default_initial_condition
from src.core.spectral import Field, Trajectory, build_grid
from src.utils.errors import DegenerateSignalError, InsufficientEnsembleError, ParameterError


class TestGaussianFilter:
    def test_unit_mass(self):
        kernel = GaussianFilter(0.1)
        mass, _ = quad(lambda s: float(kernel(s)), -1.0, 1.0, points=[0.0])
        assert mass == pytest.approx(1.0, rel=1e-10)

    def test_literal_constant_normalization_mass(self):
        kernel = GaussianFilter(0.1, 'paper')
        assert kernel.mass == pytest.approx(1.0 / (0.1 * np.sqrt(np.pi)))
        assert kernel(0.0) == pytest.approx(1.0 / (np.pi * 0.01))

    @pytest.mark.parametrize("delta", [0.0, -0.1])
    def test_invalid_width(self, delta):
        with pytest.raises(ParameterError):
            GaussianFilter(delta)

    def test_unknown_normalization(self):
        with pytest.raises(ParameterError):
            GaussianFilter(0.1, 'other')

    def test_even(self):
        kernel = GaussianFilter(0.05)
        s = np.linspace(0.0, 0.3, 61)
        assert np.array_equal(kernel(s), kernel(-s))


class TestFilterField:
    def test_constant_field_preserved(self):
        grid = build_grid(16)
        result = filter_field(Field(grid, np.full(grid.size, 0.7)), 0.1, points=512)
        np.testing.assert_allclose(result.values, 0.7, rtol=1e-12)

    def test_literal_constant_normalization_scales_constant_by_mass(self):
        grid = build_grid(16)
        result = filter_field(Field(grid, np.ones(grid.size)), 0.1, 'paper', points=512)
        np.testing.assert_allclose(result.values, 1.0 / (0.1 * np.sqrt(np.pi)), rtol=1e-12)

    def test_linear_field_unchanged_away_from_boundary(self):
        grid = build_grid(16)
        result = filter_field(Field(grid, grid.nodes.copy()), 0.05, points=1024)
        interior = np.abs(grid.nodes) < 1 - 6 * 0.05
        np.testing.assert_allclose(result.values[interior], grid.nodes[interior], atol=1e-13)

    def test_damps_high_wavenumbers(self):
        grid = build_grid(64)
        u = np.sin(8 * np.pi * grid.nodes)
        result = filter_field(Field(grid, u), 0.15, points=2048)
        # 傅里叶因子 exp(-(kδ)²/4) 约为 0.03
        center = np.abs(grid.nodes) < 0.1
        assert np.max(np.abs(result.values[center])) < 0.1

    def test_small_width_approaches_identity(self):
        grid = build_grid(12)
        u = np.cos(2 * grid.nodes)
        result = filter_field(Field(grid, u), 1e-4, points=256)
        # 常数延拓使边界节点有 O(δ) 偏差，只比较内部节点
        np.testing.assert_allclose(result.values[1:-1], u[1:-1], atol=1e-7)

    def test_vanishing_width_is_identity_inside(self):
        grid = build_grid(12)
        u = np.sin(2 * np.pi * grid.nodes)
        result = filter_field(Field(grid, u), 1e-6, points=256)
        np.testing.assert_allclose(result.values[1:-1], u[1:-1], atol=1e-8)

    def test_matches_fourier_multiplier_inside(self):
        grid = build_grid(32)
        delta = 0.1
        u = np.sin(2 * np.pi * grid.nodes)
        result = filter_field(Field(grid, u), delta)
        j = grid.nearest_index(0.25)
        # 单位质量高斯核的傅里叶因子 exp(-(kδ)²/4)
        expected = np.exp(-(2 * np.pi * delta) ** 2 / 4) * u[j]
        assert result.values[j] == pytest.approx(expected, abs=1e-6)

    def test_linear(self, rng):
        grid = build_grid(16)
        u, v = rng.normal(size=(2, grid.size))
        combined = filter_field(Field(grid, 2.5 * u - 0.7 * v), 0.1, points=512).values
        separate = (2.5 * filter_field(Field(grid, u), 0.1, points=512).values
                    - 0.7 * filter_field(Field(grid, v), 0.1, points=512).values)
        np.testing.assert_allclose(combined, separate, atol=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 4])
    def test_smoothing_never_amplifies_inside(self, k):
        grid = build_grid(32)
        u = np.sin(k * np.pi * grid.nodes)
        result = filter_field(Field(grid, u), 0.1, points=1024)
        interior = np.abs(grid.nodes) < 1 - 6 * 0.1
        # sin(kπx) 的振幅为 1
        assert np.max(np.abs(result.values[interior])) <= 1.0 + 1e-9

    def test_matrix_cached_and_read_only(self):
        grid = build_grid(8)
        first = filter_matrix(grid, 0.1, points=128)
        assert filter_matrix(grid, 0.1, points=128) is first
        assert not first.flags.writeable


class TestSgs:
    def test_constant_field_has_no_subgrid_term(self):
        fine = build_grid(16)
        coarse = build_grid(8)
        trajectory = Trajectory(fine, 0.1, np.full((3, fine.size), 0.5))
        sgs = compute_sgs(trajectory, 0.1, coarse, points=512)
        assert sgs.values.shape == (3, coarse.size)
        np.testing.assert_allclose(sgs.values, 0.0, atol=1e-13)

    def test_definition(self):
        fine = build_grid(16)
        coarse = build_grid(8)
        values = np.stack([np.sin(np.pi * fine.nodes), 0.3 * fine.nodes ** 3])
        trajectory = Trajectory(fine, 0.1, values)
        sgs = compute_sgs(trajectory, 0.1, coarse, points=512)
        ubar = filter_trajectory(trajectory, 0.1, coarse, points=512)
        cubed = filter_trajectory(Trajectory(fine, 0.1, values ** 3), 0.1, coarse, points=512)
        # 粗网格节点是细网格节点的子集
        np.testing.assert_allclose(sgs.values, ubar.values ** 3 - cubed.values, atol=1e-12)

    def test_matches_direct_quadrature(self):
        fine = build_grid(48)
        coarse = build_grid(8)
        delta = 0.1
        trajectory = Trajectory(fine, 0.1, np.sin(2 * np.pi * fine.nodes)[None, :])
        sgs = compute_sgs(trajectory, delta, coarse)

        # 粗网格节点 x = cos(3π/8)，积分窗口完全在区间内
        x0 = coarse.nodes[3]
        y = np.linspace(x0 - 6 * delta, x0 + 6 * delta, 10001)
        kernel = GaussianFilter(delta)(x0 - y)
        ubar = trapezoid(kernel * np.sin(2 * np.pi * y), y)
        cubed = trapezoid(kernel * np.sin(2 * np.pi * y) ** 3, y)
        assert sgs.values[0, 3] == pytest.approx(ubar ** 3 - cubed, abs=1e-6)


def _ensemble(series: np.ndarray, grid) -> list:
    # series 形状 (M, K+1)，放在中间节点
    fields = []
    for row in series:
        values = np.zeros((row.size, grid.size))
        values[:, grid.size // 2] = row
        fields.append(SgsField(grid, 0.1, values))
    return fields


class TestTimeCorrelation:
    def test_lag_zero_is_one(self, coarse_grid, rng):
        sgs = _ensemble(rng.normal(size=(20, 11)), coarse_grid)
        profile = time_correlation(sgs, coarse_grid.size // 2, 5)
        assert profile.corr[0] == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(profile.lags, np.arange(6) * 0.1)
        assert np.all(np.abs(profile.corr) <= 1 + 1e-12)

    def test_time_constant_signal_is_fully_correlated(self, coarse_grid, rng):
        amplitudes = rng.normal(size=20)
        sgs = _ensemble(np.repeat(amplitudes[:, None], 11, axis=1), coarse_grid)
        profile = time_correlation(sgs, coarse_grid.size // 2, 10)
        np.testing.assert_allclose(profile.corr, 1.0, atol=1e-12)

    def test_lag_truncated_to_window(self, coarse_grid, rng):
        sgs = _ensemble(rng.normal(size=(5, 4)), coarse_grid)
        assert time_correlation(sgs, coarse_grid.size // 2, 100).corr.size == 4

    def test_degenerate_signal(self, coarse_grid):
        sgs = _ensemble(np.ones((4, 6)), coarse_grid)
        with pytest.raises(DegenerateSignalError) as excinfo:
            time_correlation(sgs, coarse_grid.size // 2, 2)
        assert excinfo.value.time_index == 0

    def test_needs_two_members(self, coarse_grid, rng):
        sgs = _ensemble(rng.normal(size=(1, 6)), coarse_grid)
        with pytest.raises(InsufficientEnsembleError):
            time_correlation(sgs, coarse_grid.size // 2, 2)

    def test_roundoff_level_signal_is_degenerate(self, coarse_grid, rng):
        # 其他节点有信号，中心节点只剩舍入噪声
        center = coarse_grid.size // 2
        fields = []
        for _ in range(6):
            values = rng.normal(size=(5, coarse_grid.size))
            values[:, center] = 1e-18 * rng.normal(size=5)
            fields.append(SgsField(coarse_grid, 0.1, values))
        with pytest.raises(DegenerateSignalError):
            time_correlation(fields, center, 2)

    def test_odd_ensemble_is_degenerate_at_center(self):
        fine = build_grid(16)
        coarse = build_grid(8)
        center = coarse.nearest_index(0.0)
        config = SolverConfig(dt=0.01, t_end=0.05)
        ensemble = generate_ensemble(
            default_initial_condition(fine), PerturbationSpec(0.01, seed=4), 4, config,
            MemoryKernel(2.0), 0.05, coarse, points=256,
        )
        with pytest.raises(DegenerateSignalError):
            time_correlation(ensemble.sgs_fields, center, 2)
        off_center = time_correlation(ensemble.sgs_fields, coarse.nearest_index(0.5), 2)
        assert off_center.corr[0] == pytest.approx(1.0)

    @pytest.mark.slow
    def test_white_noise_is_uncorrelated(self, coarse_grid, rng):
        members = 500
        sgs = _ensemble(rng.normal(size=(members, 41)), coarse_grid)
        profile = time_correlation(sgs, coarse_grid.size // 2, 10)
        assert np.all(np.abs(profile.corr[1:]) < 4 / np.sqrt(members))
