"""Core ray-domain types: segments, sample grids, and sampled optical traces.

Grids carry the boundary convention that the first grid point is the near
bound and the last is the far bound, so a grid with ``n`` interior samples
has ``n + 2`` points and ``n + 1`` intervals.  All values are float64 and
all containers are immutable after construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Interior opacities below this floor make the continuous CDF non-invertible.
EPS_OPACITY = 1e-6

# Opacity assigned to the far bound under the opaque-far convention; large
# enough that the final interval absorbs all remaining probability mass.
OPAQUE = 1e10


class ModelKind(enum.Enum):
    """Per-interval opacity model used by the quadrature formulas."""

    CONSTANT = "constant"
    LINEAR = "linear"
    QUADRATIC = "quadratic"


class FarConvention(enum.Enum):
    """Boundary handling at the segment ends.

    OPAQUE_FAR zeroes the near-bound opacity and assigns ``OPAQUE`` at the
    far bound, which normalizes the interval probabilities to sum to one.
    OPEN_FAR keeps the sampled boundary values, leaving the raw integral
    over the segment; convergence studies need this mode.
    """

    OPAQUE_FAR = "opaque_far"
    OPEN_FAR = "open_far"


def _frozen(values, dtype=np.float64) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RaySegment:
    """Parameter range of one viewing ray, ``0 <= near < far``."""

    near: float
    far: float

    def __post_init__(self):
        if not (np.isfinite(self.near) and np.isfinite(self.far)):
            raise ValueError("segment bounds must be finite")
        if self.near < 0:
            raise ValueError(f"near bound must be nonnegative, got {self.near}")
        if not self.near < self.far:
            raise ValueError(f"degenerate segment [{self.near}, {self.far}]")

    @property
    def span(self) -> float:
        return self.far - self.near


@dataclass(frozen=True)
class SampleGrid:
    """Strictly increasing sample distances on a ray segment.

    ``interior`` holds the n free samples; the segment bounds are implicit
    grid points, so ``points`` has length n + 2.
    """

    interior: np.ndarray
    segment: RaySegment

    def __post_init__(self):
        interior = _frozen(np.atleast_1d(self.interior))
        object.__setattr__(self, "interior", interior)
        if interior.ndim != 1 or interior.size < 1:
            raise ValueError("grid needs at least one interior sample")
        pts = self.points
        if not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing between near and far")

    @property
    def n(self) -> int:
        """Number of interior samples."""
        return int(self.interior.size)

    @property
    def points(self) -> np.ndarray:
        """All grid points including the near and far bounds."""
        return np.concatenate(
            ([self.segment.near], self.interior, [self.segment.far])
        )

    @property
    def widths(self) -> np.ndarray:
        """Interval widths, length n + 1."""
        return np.diff(self.points)


@dataclass(frozen=True)
class OpacityTrace:
    """Opacity (1/distance) at every grid point, length n + 2."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(np.atleast_1d(self.values))
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 3:
            raise ValueError("opacity trace needs one value per grid point (>= 3)")
        if not np.all(np.isfinite(values)):
            raise ValueError("opacity values must be finite")

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]


@dataclass(frozen=True)
class ColorTrace:
    """Per-interval emitted colors, shape (n + 1, channels), values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if values.ndim == 1:
            values = values[:, None]
        values = _frozen(values)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] < 2:
            raise ValueError("need one color per interval (>= 2 intervals)")
        if np.any(values < 0) or np.any(values > 1):
            raise ValueError("color channels must lie in [0, 1]")

    @property
    def channels(self) -> int:
        return int(self.values.shape[1])


def make_uniform_grid(segment: RaySegment, n: int) -> SampleGrid:
    """Place ``n`` interior samples equally spaced strictly inside the segment."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    pts = np.linspace(segment.near, segment.far, n + 2)
    return SampleGrid(interior=pts[1:-1], segment=segment)


def make_stratified_grid(segment: RaySegment, n: int, rng_seed: int) -> SampleGrid:
    """Draw one uniform sample per equal-width stratum; deterministic per seed."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    rng = np.random.default_rng(rng_seed)
    width = segment.span / n
    lo = segment.near + width * np.arange(n)
    samples = lo + width * rng.random(n)
    # Guard against draws landing exactly on a stratum edge, which would
    # violate strict ordering against the bounds.
    samples = np.clip(
        samples,
        np.nextafter(lo, np.inf),
        np.nextafter(lo + width, -np.inf),
    )
    return SampleGrid(interior=samples, segment=segment)


def floor_opacity(trace: OpacityTrace, eps: float = EPS_OPACITY) -> OpacityTrace:
    """Clamp interior opacities up to ``eps``; boundary entries pass through."""
    if eps <= 0:
        raise ValueError(f"floor must be positive, got {eps}")
    values = np.array(trace.values)
    values[1:-1] = np.maximum(values[1:-1], eps)
    return OpacityTrace(values)


def apply_far_convention(
    trace: OpacityTrace, convention: FarConvention
) -> OpacityTrace:
    """Override the boundary opacities according to the far-plane convention."""
    if convention is FarConvention.OPEN_FAR:
        return trace
    values = np.array(trace.values)
    values[0] = 0.0
    values[-1] = OPAQUE
    return OpacityTrace(values)


def check_model_grid(model: ModelKind, grid: SampleGrid) -> None:
    """Reject model/grid pairings the quadrature formulas cannot represent.

    The quadratic model fits one parabola across each pair of adjacent
    intervals, which requires an odd interior sample count.
    """
    if model is ModelKind.QUADRATIC and grid.n % 2 == 0:
        raise ValueError(
            f"quadratic model needs an odd interior sample count, got {grid.n}"
        )
