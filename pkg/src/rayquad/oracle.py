"""Independent numerical ground truth for the closed-form quadrature.

Nothing in this module uses the per-interval exponential formulas under
test.  The expected color integral

    integral of tau(s) * exp(-O(s)) * c(s) over the segment,
    O(s) = cumulative opacity from the near bound,

is evaluated by (1) tabulating O on a dense grid, one cubic Hermite piece
per sub-panel built from generic Simpson panel integrals, and (2) driving
an adaptive Simpson rule over the outer integrand between field
breakpoints.  For densities that are piecewise polynomial of degree <= 1
the tabulation is exact (Simpson integrates cubics exactly and the
Hermite piece reproduces the quadratic antiderivative), so the only error
is the outer adaptive tolerance.  For smooth densities the tabulation is
refined by doubling until the result stabilizes.  The documented error
budget of every oracle value is ten times the requested tolerance.

Field evaluations that land exactly on a panel edge are nudged one ulp
into the panel, so piecewise integrands are integrated with one-sided
limits and jump discontinuities cost no accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    AnalyticField,
    ConstantSlab,
    DensityProfile,
    LinearRamp,
    UniformColor,
)
from .rays import RaySegment

_SMIRNOV_COEFF = {0.10: 1.22, 0.05: 1.36, 0.01: 1.63}


@dataclass(frozen=True)
class IntegrationResult:
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error estimate must be nonnegative")
        if self.evaluations < 3:
            raise ValueError("a Simpson estimate needs at least three evaluations")


class NoConvergenceError(RuntimeError):
    """Adaptive integration hit the depth limit; carries the partial result."""

    def __init__(self, message: str, partial: IntegrationResult):
        super().__init__(message)
        self.partial = partial


def integrate_adaptive(
    f,
    a: float,
    b: float,
    tol: float = 1e-10,
    rtol: float = 0.0,
    max_depth: int = 48,
) -> IntegrationResult:
    """Adaptive Simpson integration of a scalar function on [a, b].

    Panels are split until the Richardson error estimate of each panel
    drops below its share of ``tol`` (or ``rtol`` times the running value,
    whichever is larger); the extrapolated correction is folded into the
    result.  Raises NoConvergenceError with the partial result attached
    if any panel is still failing at ``max_depth``.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integration bounds must be finite")
    if a > b:
        raise ValueError(f"reversed bounds [{a}, {b}]")

    evals = 0

    def call(x: float) -> float:
        nonlocal evals
        evals += 1
        y = float(f(x))
        if not np.isfinite(y):
            raise ValueError(f"integrand is not finite at {x}")
        return y

    def simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 6.0 * (fa + 4.0 * fm + fb)

    fa, fm, fb = call(a), call(0.5 * (a + b)), call(b)
    whole = simpson(fa, fm, fb, b - a)
    budget = max(tol, rtol * abs(whole))
    # Halving the budget per level must stop at rounding scale, or panels
    # whose error estimate is pure float noise can never be accepted.
    budget_floor = max(1e-300, 0.25 * np.finfo(float).eps * abs(whole))

    failed = False

    def recurse(a, b, fa, fm, fb, whole, budget, depth):
        nonlocal failed
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = call(lm), call(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        err = (left + right - whole) / 15.0
        if abs(err) <= budget or a == b or not (a < lm < m < rm < b):
            return left + right + err, abs(err)
        if depth >= max_depth:
            failed = True
            return left + right + err, abs(err)
        half = max(budget / 2.0, budget_floor)
        lv, le = recurse(a, m, fa, flm, fm, left, half, depth + 1)
        rv, re = recurse(m, b, fm, frm, fb, right, half, depth + 1)
        return lv + rv, le + re

    value, err = recurse(a, b, fa, fm, fb, whole, budget, 0)
    result = IntegrationResult(value=value, error_estimate=err, evaluations=evals)
    if failed:
        raise NoConvergenceError(
            f"adaptive Simpson did not converge on [{a}, {b}] at depth {max_depth}",
            partial=result,
        )
    return result


class CumulativeOpacityTable:
    """Dense tabulation of the cumulative opacity with Hermite interpolation.

    The segment is split at the density's breakpoints and each base panel
    into ``n_sub`` sub-panels.  Per sub-panel the opacity integral comes
    from a refined Simpson pair with Richardson correction; the cumulative
    values and the one-sided endpoint opacities then define one cubic
    Hermite piece per sub-panel.
    """

    def __init__(
        self,
        density: DensityProfile,
        segment: RaySegment,
        extra_breaks: np.ndarray | None = None,
        n_sub: int = 64,
    ):
        breaks = density.breakpoints()
        if extra_breaks is not None:
            breaks = np.concatenate([breaks, np.asarray(extra_breaks, dtype=np.float64)])
        breaks = breaks[(breaks > segment.near) & (breaks < segment.far)]
        base = np.unique(np.concatenate(([segment.near], breaks, [segment.far])))

        # Piecewise constant/linear densities are tabulated exactly with a
        # single Simpson panel per base panel.
        if density.polynomial_degree is not None and density.polynomial_degree <= 1:
            n_sub = 1
        edges = np.concatenate(
            [
                np.linspace(base[i], base[i + 1], n_sub + 1)[: -1 if i < base.size - 2 else None]
                for i in range(base.size - 1)
            ]
        )
        widths = np.diff(edges)

        # One-sided endpoint opacities: one ulp inside each sub-panel.
        left_in = np.nextafter(edges[:-1], np.inf)
        right_in = np.nextafter(edges[1:], -np.inf)
        q1 = edges[:-1] + 0.25 * widths
        mid = edges[:-1] + 0.50 * widths
        q3 = edges[:-1] + 0.75 * widths

        f0 = density.tau(left_in)
        f1 = density.tau(right_in)
        fq1, fmid, fq3 = density.tau(q1), density.tau(mid), density.tau(q3)

        coarse = widths / 6.0 * (f0 + 4.0 * fmid + f1)
        fine = widths / 12.0 * (f0 + 4.0 * fq1 + 2.0 * fmid + 4.0 * fq3 + f1)
        err = (fine - coarse) / 15.0
        panel = fine + err

        self.density = density
        self.segment = segment
        self.base = base
        self.edges = edges
        self.widths = widths
        self.cumulative_at_edges = np.concatenate(([0.0], np.cumsum(panel)))
        self.tab_error = float(np.sum(np.abs(err)))
        self.n_sub = n_sub

        # Hermite coefficients h(t) = O0 + d0 t + a2 t^2 + a3 t^3 on [0, w].
        d0, d1 = f0, f1
        dO = np.diff(self.cumulative_at_edges)
        w = widths
        self._a2 = (3.0 * dO / w - 2.0 * d0 - d1) / w
        self._a3 = (d0 + d1 - 2.0 * dO / w) / (w * w)
        self._d0 = d0

    def cumulative(self, s):
        """Cumulative opacity from the near bound to ``s`` (vectorized)."""
        s = np.asarray(s, dtype=np.float64)
        idx = np.searchsorted(self.edges, s, side="right") - 1
        idx = np.clip(idx, 0, self.edges.size - 2)
        t = s - self.edges[idx]
        return self.cumulative_at_edges[idx] + t * (
            self._d0[idx] + t * (self._a2[idx] + t * self._a3[idx])
        )

    @property
    def total(self) -> float:
        return float(self.cumulative_at_edges[-1])

    def refined(self) -> "CumulativeOpacityTable":
        extra = self.base[1:-1]
        return CumulativeOpacityTable(
            self.density, self.segment, extra_breaks=extra, n_sub=self.n_sub * 2
        )


def _nudged(f, a: float, b: float):
    """Clamp evaluations into the open panel so edges use one-sided limits."""
    lo = np.nextafter(a, b)
    hi = np.nextafter(b, a)

    def g(x: float) -> float:
        return f(min(max(x, lo), hi))

    return g


def _is_exact_class(density: DensityProfile) -> bool:
    return density.polynomial_degree is not None and density.polynomial_degree <= 1


def _render_pass(
    field: AnalyticField,
    segment: RaySegment,
    table: CumulativeOpacityTable,
    tol: float,
    weight=None,
) -> tuple[np.ndarray, float, int]:
    """Integrate tau * exp(-O) * c (optionally * weight) panel by panel."""
    channels = field.color.channels
    base = np.unique(
        np.concatenate(
            [table.base, field.color.breakpoints().clip(segment.near, segment.far)]
        )
    )
    span = segment.span
    out = np.zeros(channels)
    err_total = 0.0
    evals = 0
    for lo, hi in zip(base[:-1], base[1:]):
        panel_tol = max(tol * (hi - lo) / span, 1e-300)
        for ch in range(channels):

            def integrand(x: float, ch=ch) -> float:
                w = 1.0 if weight is None else weight(x)
                return (
                    float(field.tau(x))
                    * np.exp(-table.cumulative(x))
                    * float(field.color_at(x)[0, ch])
                    * w
                )

            res = integrate_adaptive(_nudged(integrand, lo, hi), lo, hi, tol=panel_tol)
            out[ch] += res.value
            err_total += res.error_estimate
            evals += res.evaluations
    return out, err_total, evals


def true_render(
    field: AnalyticField, segment: RaySegment, tol: float = 1e-10
) -> np.ndarray:
    """Expected color of the ray by direct numerical integration.

    The error budget is 10 * tol: the outer adaptive tolerance plus the
    tabulation error of the cumulative opacity, which is driven below tol
    by doubling the tabulation density until the result stabilizes.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    table = CumulativeOpacityTable(field.density, segment)
    value, _, _ = _render_pass(field, segment, table, tol)
    if _is_exact_class(field.density):
        return value
    for _ in range(8):
        table = table.refined()
        refined_value, _, _ = _render_pass(field, segment, table, tol)
        if np.max(np.abs(refined_value - value)) <= 3.0 * tol:
            return refined_value
        value = refined_value
    raise NoConvergenceError(
        "cumulative opacity tabulation did not stabilize",
        partial=IntegrationResult(float(value[0]), np.inf, 3),
    )


def _batched_simpson(fvec, lo: np.ndarray, hi: np.ndarray, rtol: float) -> np.ndarray:
    """Composite Simpson over many panels at once, doubled until converged.

    ``fvec`` maps an array of points to integrand values.  Each panel is
    re-evaluated on a twice-finer uniform grid until the Richardson error
    estimate drops below ``rtol`` times its integral; converged panels
    drop out of further refinement.  Endpoint evaluations are nudged one
    ulp inward so jumps at panel edges resolve to one-sided limits.
    """
    n_panels = lo.size
    out = np.zeros(n_panels)
    active = np.arange(n_panels)
    prev = None
    m = 2
    for level in range(14):
        pts = 2 * m + 1
        frac = np.linspace(0.0, 1.0, pts)
        x = lo[active, None] + (hi[active] - lo[active])[:, None] * frac
        x[:, 0] = np.nextafter(lo[active], hi[active])
        x[:, -1] = np.nextafter(hi[active], lo[active])
        fx = fvec(x.ravel()).reshape(x.shape)
        w = np.full(pts, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        h = (hi[active] - lo[active]) / (2 * m)
        s = (fx @ w) * h / 3.0
        if prev is not None:
            err = (s - prev) / 15.0
            value = s + err
            done = np.abs(err) <= rtol * np.abs(value) + 1e-300
            out[active[done]] = value[done]
            active = active[~done]
            if active.size == 0:
                return out
            s = s[~done]
        prev = s
        m *= 2
    raise NoConvergenceError(
        "batched Simpson did not converge",
        partial=IntegrationResult(float(np.sum(out)), np.inf, 3),
    )


def true_interval_probabilities(
    field: AnalyticField,
    segment: RaySegment,
    edges: np.ndarray,
    rtol: float = 1e-12,
) -> np.ndarray:
    """Termination probability of each interval, accurate in relative terms.

    Each interval integral is rescaled by the transmittance at its left
    edge before integrating, so narrow or deeply occluded intervals keep
    ``rtol`` relative accuracy instead of inheriting an absolute floor.
    """
    edges = np.asarray(edges, dtype=np.float64)
    table = CumulativeOpacityTable(
        field.density, segment, extra_breaks=edges[1:-1]
    )
    if not _is_exact_class(field.density):
        while table.tab_error > rtol / 8.0 and table.n_sub < 8192:
            table = table.refined()
    prefix = table.cumulative(edges)
    lo, hi = edges[:-1], edges[1:]

    def fvec(x: np.ndarray) -> np.ndarray:
        j = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, lo.size - 1)
        return field.tau(x) * np.exp(-(table.cumulative(x) - prefix[j]))

    q = _batched_simpson(fvec, lo, hi, rtol)
    return np.exp(-prefix[:-1]) * q


def true_mean_termination(
    field: AnalyticField,
    segment: RaySegment,
    tol: float = 1e-10,
    opaque_far: bool = True,
) -> float:
    """Expected termination distance; an opaque far plane absorbs the rest."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")

    def once(table):
        value, _, _ = _render_pass(
            _unit_color(field), segment, table, tol, weight=lambda x: x
        )
        mean = float(value[0])
        if opaque_far:
            mean += segment.far * np.exp(-table.total)
        return mean

    table = CumulativeOpacityTable(field.density, segment)
    value = once(table)
    if _is_exact_class(field.density):
        return value
    for _ in range(8):
        table = table.refined()
        refined = once(table)
        if abs(refined - value) <= 3.0 * tol:
            return refined
        value = refined
    raise NoConvergenceError(
        "cumulative opacity tabulation did not stabilize",
        partial=IntegrationResult(value, np.inf, 3),
    )


def _unit_color(field: AnalyticField) -> AnalyticField:
    return AnalyticField(density=field.density, color=UniformColor(np.array([1.0])))


def slab_transmittance(slab: ConstantSlab, segment: RaySegment, s) -> np.ndarray:
    """Closed-form transmittance for a constant slab: exp(-tau0 * overlap)."""
    s = np.asarray(s, dtype=np.float64)
    overlap = np.clip(np.minimum(s, slab.end) - max(segment.near, slab.start), 0.0, None)
    return np.exp(-slab.tau0 * overlap)


def ramp_transmittance(ramp: LinearRamp, segment: RaySegment, s) -> np.ndarray:
    """Closed-form transmittance for a linear ramp spanning the segment.

    Valid when [near, s] lies inside the ramp's [start, end] range, where
    the cumulative opacity is the exact trapezoid.
    """
    s = np.asarray(s, dtype=np.float64)
    if segment.near < ramp.start or np.any(s > ramp.end):
        raise ValueError("closed form requires the query range inside the ramp")
    depth = 0.5 * (ramp.tau(segment.near) + ramp.tau(s)) * (s - segment.near)
    return np.exp(-depth)


def ks_statistic(samples: np.ndarray, cdf) -> float:
    """One-sample Kolmogorov-Smirnov statistic of sorted samples against cdf."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size < 1:
        raise ValueError("need a one-dimensional sample array")
    if np.any(np.diff(samples) < 0):
        raise ValueError("samples must be sorted ascending")
    n = samples.size
    f = np.asarray(cdf(samples), dtype=np.float64)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_critical(n: int, alpha: float = 0.05) -> float:
    """Asymptotic KS critical value; the 5% level is 1.36 / sqrt(n)."""
    if n < 8:
        raise ValueError("asymptotic critical values need n >= 8")
    try:
        coeff = _SMIRNOV_COEFF[alpha]
    except KeyError:
        raise ValueError(f"unsupported significance level {alpha}") from None
    return coeff / np.sqrt(n)


def convergence_slope(errors) -> float:
    """Least-squares slope of log(error) against log(N)."""
    pairs = np.asarray(errors, dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or pairs.shape[0] < 4:
        raise ValueError("need at least four (N, error) pairs")
    if np.any(pairs <= 0):
        raise ValueError("sample counts and errors must be positive")
    slope, _ = np.polyfit(np.log(pairs[:, 0]), np.log(pairs[:, 1]), 1)
    return float(slope)
