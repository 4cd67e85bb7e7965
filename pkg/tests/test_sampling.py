import numpy as np
import pytest

from rayquad import (
    ContinuousRayCdf,
    DiscreteRayCdf,
    FarConvention,
    ModelKind,
    OpacityTrace,
    RaySegment,
    SampleGrid,
    hierarchical_samples,
    interval_pmf,
    ks_critical,
    ks_statistic,
    make_uniform_grid,
    stratified_unit_samples,
)
from rayquad import fixtures
from rayquad.quadrature import RayDistribution

from conftest import random_instance


def rect_distribution():
    """Two equal-mass bins over [0, 1] and [1, 2]."""
    grid = SampleGrid(np.array([1.0]), RaySegment(0.0, 2.0))
    pmf = np.array([0.5, 0.5])
    dist = RayDistribution(
        model=ModelKind.CONSTANT,
        transmittance=np.array([1.0, 0.5, 0.0]),
        pmf=pmf,
        cumulative=np.array([0.0, 0.5, 1.0]),
    )
    return DiscreteRayCdf(grid, dist)


class TestSurrogateSampler:
    def test_interpolates_within_bin(self):
        cdf = rect_distribution()
        assert cdf.surrogate_sample(0.25) == pytest.approx(0.5)

    def test_zero_draw_returns_first_positive_bin_edge(self):
        grid = SampleGrid(np.array([1.0, 1.5]), RaySegment(0.0, 2.0))
        dist = RayDistribution(
            model=ModelKind.CONSTANT,
            transmittance=np.array([1.0, 1.0, 0.5, 0.0]),
            pmf=np.array([0.0, 0.5, 0.5]),
            cumulative=np.array([0.0, 0.0, 0.5, 1.0]),
        )
        cdf = DiscreteRayCdf(grid, dist)
        assert cdf.surrogate_sample(0.0) == pytest.approx(1.0)

    def test_draw_at_cumulative_value_returns_grid_point(self):
        cdf = rect_distribution()
        assert cdf.surrogate_sample(0.5) == pytest.approx(1.0)

    def test_rejects_draws_outside_unit_interval(self):
        cdf = rect_distribution()
        with pytest.raises(ValueError):
            cdf.surrogate_sample(-0.1)
        with pytest.raises(ValueError):
            cdf.surrogate_sample(1.0)

    def test_monotone_in_draw(self, rng):
        grid, tau = random_instance(rng, convention=FarConvention.OPAQUE_FAR)
        cdf = DiscreteRayCdf(grid, interval_pmf(ModelKind.CONSTANT, grid, tau))
        u = np.sort(rng.random(500) * cdf.cumulative[-1] * (1 - 1e-12))
        s = cdf.surrogate_sample(u)
        assert np.all(np.diff(s) >= 0)

    def test_piecewise_linear_in_draw_within_bin(self):
        cdf = rect_distribution()
        u = np.array([0.1, 0.2, 0.3])
        s = cdf.surrogate_sample(u)
        assert s[1] - s[0] == pytest.approx(s[2] - s[1], rel=1e-12)


def linear_cdf_simple():
    grid = SampleGrid(np.array([1.0]), RaySegment(0.0, 2.0))
    tau = OpacityTrace(np.array([1.0, 3.0, 5.0]))
    return ContinuousRayCdf(grid, tau)


class TestCdfEval:
    def test_grid_points_hit_cumulative_values(self, rng):
        grid, tau = random_instance(rng, convention=FarConvention.OPAQUE_FAR)
        cdf = ContinuousRayCdf(grid, tau)
        np.testing.assert_allclose(
            cdf.cdf_eval(grid.points), cdf.cumulative, rtol=0, atol=1e-12
        )

    def test_far_bound_has_unit_mass_under_opaque_far(self, rng):
        grid, tau = random_instance(rng, convention=FarConvention.OPAQUE_FAR)
        cdf = ContinuousRayCdf(grid, tau)
        assert cdf.cdf_eval(grid.segment.far) == pytest.approx(1.0, abs=1e-12)

    def test_quadratic_in_bin_cumulative(self):
        cdf = linear_cdf_simple()
        t = (np.sqrt(5.0) - 1.0) / 2.0  # in-bin opacity integral equals 1
        assert cdf.cdf_eval(t) == pytest.approx(1.0 - np.exp(-1.0), abs=1e-12)
        assert cdf.cdf_eval(0.618034) == pytest.approx(0.6321206, abs=1e-5)

    def test_rejects_points_outside_segment(self):
        cdf = linear_cdf_simple()
        with pytest.raises(ValueError):
            cdf.cdf_eval(-0.01)
        with pytest.raises(ValueError):
            cdf.cdf_eval(2.01)


class TestPreciseSampler:
    def test_golden_ratio_inverse(self):
        cdf = linear_cdf_simple()
        u = 1.0 - np.exp(-1.0)
        assert cdf.precise_sample(u) == pytest.approx(
            (np.sqrt(5.0) - 1.0) / 2.0, abs=1e-12
        )

    def test_draw_at_bin_edge_returns_grid_point(self, rng):
        grid, tau = random_instance(rng, convention=FarConvention.OPAQUE_FAR)
        cdf = ContinuousRayCdf(grid, tau)
        k = grid.n // 2
        u = float(cdf.cumulative[k])
        assert cdf.precise_sample(u) == pytest.approx(grid.points[k], abs=1e-12)

    def test_flat_bin_matches_exponential_inverse(self):
        grid = SampleGrid(np.array([1.0]), RaySegment(0.0, 2.0))
        tau = OpacityTrace(np.array([2.0, 2.0, 2.0]))
        cdf = ContinuousRayCdf(grid, tau)
        u = 0.3
        expected = -np.log1p(-u) / 2.0
        assert cdf.precise_sample(u) == pytest.approx(expected, rel=1e-13)

    def test_roundtrip_inversion(self, rng):
        for _ in range(20):
            grid, tau = random_instance(rng, convention=FarConvention.OPAQUE_FAR)
            cdf = ContinuousRayCdf(grid, tau)
            u = rng.random(200) * (1.0 - 1e-9)
            s = cdf.precise_sample(u)
            np.testing.assert_allclose(cdf.cdf_eval(s), u, rtol=0, atol=1e-9)

    def test_monotone_in_draw(self, rng):
        grid, tau = random_instance(rng, convention=FarConvention.OPAQUE_FAR)
        cdf = ContinuousRayCdf(grid, tau)
        u = np.sort(rng.random(500))
        s = cdf.precise_sample(np.minimum(u, 1 - 1e-9))
        assert np.all(np.diff(s) >= 0)

    def test_samples_stay_in_located_bin(self, rng):
        for _ in range(10):
            grid, tau = random_instance(rng, convention=FarConvention.OPAQUE_FAR)
            cdf = ContinuousRayCdf(grid, tau)
            u = rng.random(300) * (1.0 - 1e-9)
            s = cdf.precise_sample(u)
            k = np.minimum(
                np.searchsorted(cdf.cumulative[1:], u, side="right"), grid.n
            )
            pts = grid.points
            assert np.all(s >= pts[k] - 1e-12)
            assert np.all(s <= pts[k + 1] + 1e-12)

    def test_near_unit_draw_clamps_to_far_with_flag(self):
        cdf = linear_cdf_simple()
        value, clamped = cdf.precise_sample(1.0 - 1e-13, return_clamped=True)
        assert clamped and value == cdf.grid.segment.far

    def test_rejects_invalid_draws(self):
        cdf = linear_cdf_simple()
        with pytest.raises(ValueError):
            cdf.precise_sample(-0.2)
        with pytest.raises(ValueError):
            cdf.precise_sample(1.2)

    def test_requires_floored_opacity(self):
        grid = SampleGrid(np.array([1.0]), RaySegment(0.0, 2.0))
        with pytest.raises(ValueError):
            ContinuousRayCdf(grid, OpacityTrace(np.array([1.0, 0.0, 1.0])))

    def test_continuous_in_draw_and_opacity(self):
        cdf = linear_cdf_simple()
        u = 0.4
        base = cdf.precise_sample(u)
        assert abs(cdf.precise_sample(u + 1e-9) - base) < 1e-7
        bumped = ContinuousRayCdf(
            cdf.grid, OpacityTrace(np.array([1.0, 3.0 + 1e-9, 5.0]))
        )
        assert abs(bumped.precise_sample(u) - base) < 1e-7


class TestDistributionalCorrectness:
    def test_precise_samples_pass_ks(self, rng):
        grid, tau = random_instance(rng, n_max=16, convention=FarConvention.OPAQUE_FAR)
        cdf = ContinuousRayCdf(grid, tau)
        n = 100_000
        s = np.sort(cdf.precise_sample(rng.random(n)))
        assert ks_statistic(s, cdf.cdf_eval) < ks_critical(n)

    def test_surrogate_uniform_within_bin(self):
        grid, tau = fixtures.steep_sampler_fixture()
        _, surrogate = fixtures.precise_and_surrogate(grid, tau)
        rng = np.random.default_rng(4)
        k = 2
        n = 50_000
        c = surrogate.cumulative
        u = c[k] + (c[k + 1] - c[k]) * rng.random(n)
        s = np.sort(surrogate.surrogate_sample(u))
        lo, hi = grid.points[k], grid.points[k + 1]
        stat = ks_statistic(s, lambda x: (x - lo) / (hi - lo))
        assert stat < ks_critical(n)

    def test_surrogate_fails_against_continuous_cdf_on_steep_instance(self):
        grid, tau = fixtures.steep_sampler_fixture()
        continuous, surrogate = fixtures.precise_and_surrogate(grid, tau)
        rng = np.random.default_rng(4)
        n = 50_000
        u = rng.random(n) * surrogate.cumulative[-1] * (1 - 1e-12)
        s = np.sort(surrogate.surrogate_sample(u))
        assert ks_statistic(s, continuous.cdf_eval) > ks_critical(n)

    def test_true_in_bin_density_nonuniform_when_tau_varies(self):
        grid, tau = fixtures.steep_sampler_fixture()
        continuous, _ = fixtures.precise_and_surrogate(grid, tau)
        k = 2
        c = continuous.cumulative
        lo, hi = grid.points[k], grid.points[k + 1]
        mid_mass = (continuous.cdf_eval(0.5 * (lo + hi)) - c[k]) / (c[k + 1] - c[k])
        assert abs(mid_mass - 0.5) > 0.05


class TestHierarchicalSampling:
    def test_default_budget_bounds_merged_size(self):
        grid = make_uniform_grid(fixtures.SHIFT_SEGMENT, 128)
        _, tau = fixtures.wall_distribution(ModelKind.LINEAR, grid)
        cdf = ContinuousRayCdf(grid, tau)
        merged = hierarchical_samples(cdf, 64, seed=3)
        assert merged.n <= 192
        assert np.all(np.diff(merged.points) > 0)

    def test_deterministic_per_seed(self):
        grid = make_uniform_grid(fixtures.SHIFT_SEGMENT, 32)
        _, tau = fixtures.wall_distribution(ModelKind.LINEAR, grid)
        cdf = ContinuousRayCdf(grid, tau)
        a = hierarchical_samples(cdf, 16, seed=5)
        b = hierarchical_samples(cdf, 16, seed=5)
        np.testing.assert_array_equal(a.interior, b.interior)

    def test_fine_samples_concentrate_in_heavy_bin(self):
        # steep middle trace puts nearly all mass in [0.8, 1.2]
        grid = SampleGrid(np.array([0.8, 1.2]), RaySegment(0.0, 2.0))
        steep = OpacityTrace(np.array([1e-6, 1e-6, 5e3, 1e-6]))
        cdf = ContinuousRayCdf(grid, steep)
        merged = hierarchical_samples(cdf, 32, seed=1)
        fine = np.setdiff1d(merged.interior, grid.interior)
        assert np.all((fine >= 0.8) & (fine <= 1.2))

    def test_surrogate_mode_uses_discrete_cdf(self):
        grid = make_uniform_grid(fixtures.SHIFT_SEGMENT, 32)
        dist, _ = fixtures.wall_distribution(ModelKind.CONSTANT, grid)
        merged = hierarchical_samples(DiscreteRayCdf(grid, dist), 16, seed=2)
        assert merged.n <= 48

    def test_rejects_zero_fine_samples(self):
        grid = make_uniform_grid(fixtures.SHIFT_SEGMENT, 8)
        dist, _ = fixtures.wall_distribution(ModelKind.CONSTANT, grid)
        with pytest.raises(ValueError):
            hierarchical_samples(DiscreteRayCdf(grid, dist), 0, seed=2)

    def test_stratified_unit_samples_cover_strata(self):
        u = stratified_unit_samples(64, seed=8)
        assert np.all((u >= np.arange(64) / 64) & (u < (np.arange(64) + 1) / 64))
