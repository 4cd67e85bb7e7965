import numpy as np
import pytest

from rayquad import (
    OpacityTrace,
    RaySegment,
    SampleGrid,
    apply_far_convention,
    floor_opacity,
)


def random_instance(rng, n_max=64, tau_lo=1e-6, tau_hi=10.0, convention=None):
    """One random grid + floored opacity trace; log-uniform opacities."""
    n = int(rng.integers(1, n_max + 1))
    near = float(rng.uniform(0.0, 0.5))
    far = near + float(rng.uniform(0.5, 4.0))
    segment = RaySegment(near, far)
    interior = np.sort(rng.uniform(near + 1e-4, far - 1e-4, n))
    while np.any(np.diff(interior) <= 1e-9):
        interior = np.sort(rng.uniform(near + 1e-4, far - 1e-4, n))
    grid = SampleGrid(interior, segment)
    tau_values = 10.0 ** rng.uniform(np.log10(tau_lo), np.log10(tau_hi), n + 2)
    trace = OpacityTrace(tau_values)
    if convention is not None:
        trace = apply_far_convention(trace, convention)
    return grid, floor_opacity(trace)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
