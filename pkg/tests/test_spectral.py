"""Chebyshev 网格、微分矩阵、求积与插值"""

import numpy as np
import pytest

from src.core.spectral import (
    Field,
    Trajectory,
    build_grid,
    diff_matrix,
    interpolate,
    interpolation_matrix,
    quad_weights,
    restrict_trajectory,
)
from src.utils.errors import InvalidOrderError, PreconditionError


class TestGrid:
    def test_endpoints_and_order(self):
        grid = build_grid(16)
        assert grid.size == 17
        assert grid.nodes[0] == 1.0
        assert grid.nodes[-1] == -1.0
        assert np.all(np.diff(grid.nodes) < 0)

    def test_nodes_exactly_antisymmetric(self):
        for n in (5, 16, 33):
            nodes = build_grid(n).nodes
            assert np.array_equal(nodes, -nodes[::-1])

    def test_matches_cosine_formula(self):
        n = 12
        expected = np.cos(np.pi * np.arange(n + 1) / n)
        np.testing.assert_allclose(build_grid(n).nodes, expected, atol=1e-15)

    @pytest.mark.parametrize("n", [0, 1, 2.5, -3])
    def test_invalid_order(self, n):
        with pytest.raises(InvalidOrderError):
            build_grid(n)

    def test_nodes_are_read_only(self):
        with pytest.raises(ValueError):
            build_grid(8).nodes[0] = 0.0

    def test_nearest_index(self):
        grid = build_grid(8)
        assert grid.nearest_index(1.0) == 0
        assert grid.nearest_index(-1.0) == 8
        assert grid.nearest_index(0.0) == 4


class TestDiffMatrix:
    def test_rows_sum_to_zero(self):
        d = diff_matrix(build_grid(20), 1).entries
        np.testing.assert_allclose(d.sum(axis=1), 0.0, atol=1e-12)

    def test_exact_on_polynomials(self):
        grid = build_grid(10)
        x = grid.nodes
        d1 = diff_matrix(grid, 1)
        d2 = diff_matrix(grid, 2)
        u = x ** 5 - 2 * x ** 3 + x
        np.testing.assert_allclose(d1 @ u, 5 * x ** 4 - 6 * x ** 2 + 1, atol=1e-11)
        np.testing.assert_allclose(d2 @ u, 20 * x ** 3 - 12 * x, atol=1e-10)

    def test_spectral_accuracy_on_smooth_function(self):
        grid = build_grid(24)
        x = grid.nodes
        np.testing.assert_allclose(diff_matrix(grid, 1) @ np.sin(x), np.cos(x), atol=1e-10)

    def test_unsupported_order(self):
        with pytest.raises(InvalidOrderError):
            diff_matrix(build_grid(8), 3)


class TestQuadrature:
    @pytest.mark.parametrize("n", [4, 7, 16, 64])
    def test_weights_sum_to_interval_length(self, n):
        assert quad_weights(build_grid(n)).sum() == pytest.approx(2.0, abs=1e-13)

    def test_exact_for_polynomials(self):
        grid = build_grid(8)
        w = quad_weights(grid)
        x = grid.nodes
        assert w @ x ** 2 == pytest.approx(2.0 / 3.0, abs=1e-14)
        assert w @ x ** 8 == pytest.approx(2.0 / 9.0, abs=1e-14)
        assert w @ x ** 3 == pytest.approx(0.0, abs=1e-15)

    def test_weights_positive(self):
        assert np.all(quad_weights(build_grid(31)) > 0)


class TestInterpolation:
    def test_exact_for_polynomials_up_to_order(self):
        fine = build_grid(6)
        coarse = build_grid(4)
        u = Field(fine, 3 * fine.nodes ** 6 - fine.nodes ** 2 + 0.5)
        points = np.linspace(-1, 1, 11)
        result = interpolation_matrix(fine, points) @ u.values
        np.testing.assert_allclose(result, 3 * points ** 6 - points ** 2 + 0.5, atol=1e-13)
        restricted = interpolate(u, coarse)
        assert restricted.grid == coarse

    def test_smooth_function_interpolates_to_finer_grid(self):
        coarse = build_grid(32)
        fine = build_grid(48)
        result = interpolate(Field(coarse, np.sin(np.pi * coarse.nodes)), fine)
        np.testing.assert_allclose(result.values, np.sin(np.pi * fine.nodes), atol=1e-8)

    def test_nodes_are_reproduced_exactly(self):
        grid = build_grid(9)
        values = np.cos(3 * grid.nodes)
        matrix = interpolation_matrix(grid, grid.nodes)
        assert np.array_equal(matrix @ values, values)

    def test_restrict_trajectory_shape(self):
        fine = build_grid(16)
        coarse = build_grid(8)
        values = np.tile(fine.nodes, (4, 1))
        trajectory = Trajectory(fine, 0.1, values)
        restricted = restrict_trajectory(trajectory, coarse)
        assert restricted.values.shape == (4, coarse.size)
        np.testing.assert_allclose(restricted.values[2], coarse.nodes, atol=1e-14)


class TestContainers:
    def test_field_length_mismatch(self):
        with pytest.raises(PreconditionError):
            Field(build_grid(4), np.zeros(3))

    def test_trajectory_times(self):
        trajectory = Trajectory(build_grid(4), 0.25, np.zeros((5, 5)))
        assert trajectory.n_steps == 4
        assert trajectory.t_end == pytest.approx(1.0)
        np.testing.assert_allclose(trajectory.times, [0, 0.25, 0.5, 0.75, 1.0])
        assert len(list(trajectory.fields)) == 5
