"""Closed-form 1D opacity and color fields used as ground truth.

Each field pairs a density profile with a color profile, both plain
functions of distance along the ray.  Profiles report their breakpoints
(jumps or kinks) so numerical integration can split panels there, and
their local polynomial degree when the density is piecewise polynomial,
which lets the integration oracle tabulate it exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rays import ColorTrace, OpacityTrace, RaySegment, SampleGrid


class DensityProfile:
    """Nonnegative opacity as a function of distance."""

    #: Local polynomial degree of the profile between breakpoints, or None
    #: when the profile is not piecewise polynomial.
    polynomial_degree: int | None = None

    def tau(self, s):
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)


@dataclass(frozen=True)
class ConstantSlab(DensityProfile):
    """Opacity ``tau0`` inside [start, end], zero outside."""

    tau0: float
    start: float
    end: float
    polynomial_degree = 0

    def __post_init__(self):
        if self.tau0 < 0:
            raise ValueError("slab opacity must be nonnegative")
        if not self.start < self.end:
            raise ValueError("slab needs start < end")

    def tau(self, s):
        s = np.asarray(s, dtype=np.float64)
        return np.where((s >= self.start) & (s <= self.end), self.tau0, 0.0)

    def breakpoints(self) -> np.ndarray:
        return np.array([self.start, self.end])


@dataclass(frozen=True)
class LinearRamp(DensityProfile):
    """Opacity varying linearly from (start, tau_start) to (end, tau_end).

    Values are clamped to the endpoint opacities outside [start, end].
    """

    tau_start: float
    tau_end: float
    start: float
    end: float
    polynomial_degree = 1

    def __post_init__(self):
        if self.tau_start < 0 or self.tau_end < 0:
            raise ValueError("ramp opacities must be nonnegative")
        if not self.start < self.end:
            raise ValueError("ramp needs start < end")

    def tau(self, s):
        s = np.asarray(s, dtype=np.float64)
        frac = np.clip((s - self.start) / (self.end - self.start), 0.0, 1.0)
        return self.tau_start + frac * (self.tau_end - self.tau_start)

    def breakpoints(self) -> np.ndarray:
        return np.array([self.start, self.end])


@dataclass(frozen=True)
class GaussianBump(DensityProfile):
    """Smooth bell of height ``amplitude`` centered at ``center``."""

    amplitude: float
    center: float
    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("bump width must be positive")
        if self.amplitude < 0:
            raise ValueError("bump amplitude must be nonnegative")

    def tau(self, s):
        s = np.asarray(s, dtype=np.float64)
        z = (s - self.center) / self.width
        return self.amplitude * np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class LogisticStep(DensityProfile):
    """Sigmoid rise from 0 to ``amplitude`` around ``center``.

    ``steepness`` is the logistic rate; tau at the center is amplitude/2.
    """

    amplitude: float
    steepness: float
    center: float

    def __post_init__(self):
        if self.steepness <= 0:
            raise ValueError("step steepness must be positive")
        if self.amplitude < 0:
            raise ValueError("step amplitude must be nonnegative")

    def tau(self, s):
        s = np.asarray(s, dtype=np.float64)
        # exp of the negated |argument| only, so large z cannot overflow
        z = self.steepness * (s - self.center)
        e = np.exp(-np.abs(z))
        sig = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        return self.amplitude * sig


@dataclass(frozen=True)
class SampledDensity(DensityProfile):
    """Density reconstructed from opacities at fixed knots.

    ``degree=0`` holds each knot's value until the next knot (left-sample
    rule); ``degree=1`` interpolates linearly between knots.  Outside the
    knot range the first/last value is used.
    """

    knots: np.ndarray
    values: np.ndarray
    degree: int = 1

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        knots.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        if knots.size != values.size or knots.size < 2:
            raise ValueError("need matching knots and values (>= 2)")
        if not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        if self.degree not in (0, 1):
            raise ValueError("sampled density supports degree 0 or 1")
        if np.any(values < 0):
            raise ValueError("sampled opacities must be nonnegative")

    @property
    def polynomial_degree(self) -> int:
        return self.degree

    def tau(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.degree == 1:
            return np.interp(s, self.knots, self.values)
        idx = np.searchsorted(self.knots, s, side="right") - 1
        idx = np.clip(idx, 0, self.knots.size - 2)
        return self.values[idx]

    def breakpoints(self) -> np.ndarray:
        return np.array(self.knots)


class ColorProfile:
    """Emitted color as a function of distance, channels in [0, 1]."""

    channels: int = 1

    def color(self, s) -> np.ndarray:
        """Colors for distances ``s``; shape (len(s), channels)."""
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)


@dataclass(frozen=True)
class UniformColor(ColorProfile):
    value: np.ndarray

    def __post_init__(self):
        value = np.atleast_1d(np.asarray(self.value, dtype=np.float64))
        value.setflags(write=False)
        object.__setattr__(self, "value", value)
        if np.any(value < 0) or np.any(value > 1):
            raise ValueError("color channels must lie in [0, 1]")

    @property
    def channels(self) -> int:
        return int(self.value.size)

    def color(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        return np.broadcast_to(self.value, (s.size, self.value.size)).copy()


@dataclass(frozen=True)
class GradientColor(ColorProfile):
    """Linear blend from ``start_value`` at start to ``end_value`` at end."""

    start_value: np.ndarray
    end_value: np.ndarray
    start: float
    end: float

    def __post_init__(self):
        for name in ("start_value", "end_value"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=np.float64))
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if self.start_value.size != self.end_value.size:
            raise ValueError("gradient endpoints need matching channel counts")
        if not self.start < self.end:
            raise ValueError("gradient needs start < end")

    @property
    def channels(self) -> int:
        return int(self.start_value.size)

    def color(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        frac = np.clip((s - self.start) / (self.end - self.start), 0.0, 1.0)
        return self.start_value + frac[:, None] * (self.end_value - self.start_value)


@dataclass(frozen=True)
class TwoToneColor(ColorProfile):
    """``before`` color up to the boundary, ``after`` color past it."""

    before: np.ndarray
    after: np.ndarray
    boundary: float

    def __post_init__(self):
        for name in ("before", "after"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=np.float64))
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if self.before.size != self.after.size:
            raise ValueError("two-tone colors need matching channel counts")

    @property
    def channels(self) -> int:
        return int(self.before.size)

    def color(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        mask = (s >= self.boundary)[:, None]
        return np.where(mask, self.after, self.before)

    def breakpoints(self) -> np.ndarray:
        return np.array([self.boundary])


@dataclass(frozen=True)
class PiecewiseConstantColor(ColorProfile):
    """One color per knot interval, held constant (left-sample rule)."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        knots.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        if values.shape[0] != knots.size - 1:
            raise ValueError("need one color per knot interval")

    @property
    def channels(self) -> int:
        return int(self.values.shape[1])

    def color(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        idx = np.searchsorted(self.knots, s, side="right") - 1
        idx = np.clip(idx, 0, self.knots.size - 2)
        return self.values[idx]

    def breakpoints(self) -> np.ndarray:
        return np.array(self.knots)


@dataclass(frozen=True)
class AnalyticField:
    """A density profile paired with a color profile along one ray."""

    density: DensityProfile
    color: ColorProfile = UniformColor(np.array([1.0]))

    def tau(self, s):
        return self.density.tau(s)

    def color_at(self, s) -> np.ndarray:
        return self.color.color(s)

    def breakpoints(self, segment: RaySegment) -> np.ndarray:
        """Sorted interior discontinuities/kinks of either profile."""
        pts = np.concatenate(
            [self.density.breakpoints(), self.color.breakpoints()]
        )
        pts = pts[(pts > segment.near) & (pts < segment.far)]
        return np.unique(pts)


def sample_field(
    field: AnalyticField, grid: SampleGrid, color_at: str = "left"
) -> tuple[OpacityTrace, ColorTrace]:
    """Evaluate a field on a grid: opacities at points, colors per interval.

    ``color_at`` selects which point owns each interval's color: the left
    sample (matching the classical quadrature's indexing) or the interval
    midpoint.
    """
    pts = grid.points
    tau = OpacityTrace(field.tau(pts))
    if color_at == "left":
        query = pts[:-1]
    elif color_at == "midpoint":
        query = 0.5 * (pts[:-1] + pts[1:])
    else:
        raise ValueError(f"unknown color convention {color_at!r}")
    colors = ColorTrace(field.color_at(query))
    return tau, colors


def shifted_grid(grid: SampleGrid, offset: float) -> SampleGrid:
    """Translate every interior sample by ``offset`` (used by shift sweeps)."""
    if offset == 0.0:
        return grid
    gaps = np.diff(grid.points)
    if not 0.0 <= offset < gaps.min():
        raise ValueError(f"offset {offset} outside [0, min gap {gaps.min()})")
    interior = grid.interior + offset
    if interior[-1] >= grid.segment.far:
        raise ValueError("shifted samples must stay inside the segment")
    return SampleGrid(interior=interior, segment=grid.segment)


@dataclass(frozen=True)
class GrazingRig:
    """Rays crossing a planar logistic wall at shallow angles.

    The wall density rises along the perpendicular depth coordinate.  A
    ray at angle ``theta`` to the wall plane advances through depth at
    rate sin(theta), so its 1D profile is the wall profile stretched by
    1/sin(theta).
    """

    wall_amplitude: float
    wall_steepness: float
    wall_depth: float
    angles: np.ndarray
    color: ColorProfile | None = None

    def __post_init__(self):
        angles = np.atleast_1d(np.asarray(self.angles, dtype=np.float64))
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)
        if angles.size == 0:
            raise ValueError("grazing rig needs at least one angle")
        if np.any(angles <= 0) or np.any(angles > np.pi / 2):
            raise ValueError("angles must lie in (0, pi/2]")

    def ray_field(self, angle: float, offset: float = 0.0) -> AnalyticField:
        """Field seen along a ray entering at ``offset`` perpendicular depth."""
        sin = float(np.sin(angle))
        center = (self.wall_depth - offset) / sin
        density = LogisticStep(
            amplitude=self.wall_amplitude,
            steepness=self.wall_steepness * sin,
            center=center,
        )
        if self.color is not None:
            color = self.color
        else:
            color = TwoToneColor(
                before=np.array([0.1]), after=np.array([0.9]), boundary=center
            )
        return AnalyticField(density=density, color=color)


@dataclass(frozen=True)
class MultiDistanceRig:
    """The same field viewed over proportionally rescaled segments."""

    base_segment: RaySegment
    scales: np.ndarray

    def __post_init__(self):
        scales = np.atleast_1d(np.asarray(self.scales, dtype=np.float64))
        scales.setflags(write=False)
        object.__setattr__(self, "scales", scales)
        if scales.size == 0:
            raise ValueError("rig needs at least one scale factor")
        if np.any(scales <= 0) or np.any(scales > 1):
            raise ValueError("scale factors must lie in (0, 1]")

    def segment_for(self, scale: float) -> RaySegment:
        return RaySegment(self.base_segment.near * scale, self.base_segment.far * scale)


_DENSITY_KINDS = {
    "constant_slab": lambda p: ConstantSlab(p["tau"], p["start"], p["end"]),
    "linear_ramp": lambda p: LinearRamp(p["tau_start"], p["tau_end"], p["start"], p["end"]),
    "gaussian_bump": lambda p: GaussianBump(p["amplitude"], p["center"], p["width"]),
    "logistic_step": lambda p: LogisticStep(p["amplitude"], p["steepness"], p["center"]),
}

_COLOR_KINDS = {
    "uniform": lambda p: UniformColor(np.asarray(p["value"], dtype=np.float64)),
    "gradient": lambda p: GradientColor(
        np.asarray(p["start_value"], dtype=np.float64),
        np.asarray(p["end_value"], dtype=np.float64),
        p["start"],
        p["end"],
    ),
    "two_tone": lambda p: TwoToneColor(
        np.asarray(p["before"], dtype=np.float64),
        np.asarray(p["after"], dtype=np.float64),
        p["boundary"],
    ),
}


def load_scene(path: str | Path) -> tuple[AnalyticField, RaySegment]:
    """Read a scene file: JSON with ``field``, ``segment``, optional ``color``.

    See docs/scene-format.md for the schema.
    """
    spec = json.loads(Path(path).read_text())
    fspec = dict(spec["field"])
    kind = fspec.pop("kind")
    if kind not in _DENSITY_KINDS:
        raise ValueError(f"unknown field kind {kind!r}")
    density = _DENSITY_KINDS[kind](fspec)

    if "color" in spec:
        cspec = dict(spec["color"])
        ckind = cspec.pop("kind")
        if ckind not in _COLOR_KINDS:
            raise ValueError(f"unknown color kind {ckind!r}")
        color = _COLOR_KINDS[ckind](cspec)
    else:
        color = UniformColor(np.array([1.0]))

    segment = RaySegment(spec["segment"]["near"], spec["segment"]["far"])
    return AnalyticField(density=density, color=color), segment
