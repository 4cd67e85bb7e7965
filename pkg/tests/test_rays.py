import numpy as np
import pytest
from hypothesis import given, strategies as st

from rayquad import (
    EPS_OPACITY,
    OPAQUE,
    ColorTrace,
    FarConvention,
    ModelKind,
    OpacityTrace,
    RaySegment,
    SampleGrid,
    apply_far_convention,
    check_model_grid,
    floor_opacity,
    make_stratified_grid,
    make_uniform_grid,
)


class TestRaySegment:
    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            RaySegment(1.0, 1.0)

    def test_rejects_reversed_and_nonfinite(self):
        with pytest.raises(ValueError):
            RaySegment(2.0, 1.0)
        with pytest.raises(ValueError):
            RaySegment(0.0, np.inf)
        with pytest.raises(ValueError):
            RaySegment(-0.5, 1.0)


class TestUniformGrid:
    def test_equal_spacing(self):
        grid = make_uniform_grid(RaySegment(0.0, 4.0), 3)
        np.testing.assert_allclose(grid.interior, [1.0, 2.0, 3.0])

    def test_single_sample_is_midpoint(self):
        grid = make_uniform_grid(RaySegment(0.0, 1.0), 1)
        np.testing.assert_allclose(grid.interior, [0.5])

    def test_zero_samples_rejected(self):
        with pytest.raises(ValueError):
            make_uniform_grid(RaySegment(0.0, 1.0), 0)

    def test_points_include_bounds(self):
        grid = make_uniform_grid(RaySegment(0.5, 2.5), 3)
        assert grid.points[0] == 0.5 and grid.points[-1] == 2.5
        assert grid.n == 3 and grid.widths.size == 4


class TestGridValidation:
    def test_rejects_non_increasing(self):
        seg = RaySegment(0.0, 2.0)
        with pytest.raises(ValueError):
            SampleGrid(np.array([0.5, 0.5]), seg)
        with pytest.raises(ValueError):
            SampleGrid(np.array([1.5, 1.0]), seg)

    def test_rejects_samples_on_bounds(self):
        seg = RaySegment(0.0, 2.0)
        with pytest.raises(ValueError):
            SampleGrid(np.array([0.0, 1.0]), seg)
        with pytest.raises(ValueError):
            SampleGrid(np.array([1.0, 2.0]), seg)

    def test_accepted_grid_strictly_increasing_everywhere(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 20))
            interior = np.sort(rng.uniform(0.01, 1.99, n))
            if np.any(np.diff(interior) <= 0):
                continue
            grid = SampleGrid(interior, RaySegment(0.0, 2.0))
            assert np.all(np.diff(grid.points) > 0)


class TestStratifiedGrid:
    def test_samples_stay_in_their_strata(self):
        seg = RaySegment(1.0, 3.0)
        for seed in range(25):
            grid = make_stratified_grid(seg, 8, rng_seed=seed)
            width = seg.span / 8
            lo = seg.near + width * np.arange(8)
            assert np.all(grid.interior > lo)
            assert np.all(grid.interior < lo + width)

    def test_deterministic_per_seed(self):
        a = make_stratified_grid(RaySegment(0.0, 1.0), 16, rng_seed=7)
        b = make_stratified_grid(RaySegment(0.0, 1.0), 16, rng_seed=7)
        np.testing.assert_array_equal(a.interior, b.interior)

    def test_single_stratum_mean_near_half(self):
        draws = [
            make_stratified_grid(RaySegment(0.0, 1.0), 1, rng_seed=s).interior[0]
            for s in range(10_000)
        ]
        assert abs(np.mean(draws) - 0.5) < 0.02


class TestFloorOpacity:
    def test_floors_interior_only(self):
        trace = OpacityTrace(np.array([0.0, 0.0, 5.0, 0.0]))
        out = floor_opacity(trace, 1e-6)
        np.testing.assert_allclose(out.interior, [1e-6, 5.0])
        assert out.values[0] == 0.0 and out.values[-1] == 0.0

    def test_identity_when_already_floored(self):
        trace = OpacityTrace(np.array([0.0, 0.5, 5.0, 0.0]))
        np.testing.assert_array_equal(floor_opacity(trace).values, trace.values)

    def test_negative_interior_clamped(self):
        out = floor_opacity(OpacityTrace(np.array([0.0, -3.0, 1.0, 0.0])))
        assert out.interior[0] == EPS_OPACITY

    def test_rejects_nonpositive_floor(self):
        with pytest.raises(ValueError):
            floor_opacity(OpacityTrace(np.array([0.0, 1.0, 0.0])), 0.0)

    @given(
        st.lists(
            st.floats(min_value=-10, max_value=10, allow_nan=False),
            min_size=3,
            max_size=12,
        )
    )
    def test_idempotent(self, values):
        once = floor_opacity(OpacityTrace(np.array(values)))
        twice = floor_opacity(once)
        np.testing.assert_array_equal(once.values, twice.values)


class TestFarConvention:
    def test_opaque_far_overrides_bounds(self):
        trace = OpacityTrace(np.array([2.0, 3.0, 4.0, 5.0]))
        out = apply_far_convention(trace, FarConvention.OPAQUE_FAR)
        assert out.values[0] == 0.0
        assert out.values[-1] == OPAQUE
        np.testing.assert_array_equal(out.values[1:-1], [3.0, 4.0])

    def test_open_far_is_identity(self):
        trace = OpacityTrace(np.array([2.0, 3.0, 4.0, 5.0]))
        out = apply_far_convention(trace, FarConvention.OPEN_FAR)
        np.testing.assert_array_equal(out.values, trace.values)


class TestModelGridCompatibility:
    def test_quadratic_rejects_even_interior_count(self):
        grid = make_uniform_grid(RaySegment(0.0, 1.0), 4)
        with pytest.raises(ValueError):
            check_model_grid(ModelKind.QUADRATIC, grid)

    def test_quadratic_accepts_odd(self):
        grid = make_uniform_grid(RaySegment(0.0, 1.0), 5)
        check_model_grid(ModelKind.QUADRATIC, grid)

    def test_other_models_unconstrained(self):
        grid = make_uniform_grid(RaySegment(0.0, 1.0), 4)
        check_model_grid(ModelKind.CONSTANT, grid)
        check_model_grid(ModelKind.LINEAR, grid)


class TestColorTrace:
    def test_rejects_out_of_range_channels(self):
        with pytest.raises(ValueError):
            ColorTrace(np.array([[0.5], [1.5]]))
        with pytest.raises(ValueError):
            ColorTrace(np.array([[-0.1], [0.5]]))

    def test_scalar_colors_get_channel_axis(self):
        trace = ColorTrace(np.array([0.25, 0.75]))
        assert trace.values.shape == (2, 1)
        assert trace.channels == 1
