"""Drawing ray termination distances from coarse ray distributions.

Two samplers are provided.  The classical surrogate linearly interpolates
the discrete cumulative values between grid points, which makes every
sample uniform within its bin regardless of how opacity varies there.
The precise sampler inverts the continuous CDF available under the linear
opacity model, where the in-bin cumulative opacity is the quadratic

    (tau_{k+1} - tau_k) * t^2 / (2 * delta) + tau_k * t,    t = s - s_k,

so inverse transform sampling reduces to one stable quadratic root per
draw.  The root is evaluated in the conjugate form

    t = 2 q / (tau_k + sqrt(tau_k^2 + 2 a q / delta)),

which degrades gracefully to the exponential inverse ``q / tau_k`` as the
endpoint opacities approach each other; the textbook form loses all
precision there to cancellation.  ``q = ln T(s_k) - ln(1 - u)`` uses the
identity ``T(s_k) - (u - C_k) = 1 - u``, valid because the cumulative
values telescope against transmittance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .rays import ModelKind, OpacityTrace, SampleGrid

# Draws above 1 - EPS_UNIT carry no invertible information and are clamped
# to the far bound.
EPS_UNIT = 1e-12

# Merged sample grids drop points closer than this.
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteRayCdf:
    """Piecewise-linear surrogate over the discrete interval CDF.

    Built from any ray distribution (classically the constant-model one,
    whose true CDF is a step function and cannot be inverted directly).
    """

    grid: SampleGrid
    dist: quadrature.RayDistribution

    def __post_init__(self):
        if self.dist.cumulative.size != self.grid.n + 2:
            raise ValueError("distribution does not match grid size")

    @property
    def edges(self) -> np.ndarray:
        return self.grid.points

    @property
    def cumulative(self) -> np.ndarray:
        return self.dist.cumulative

    def surrogate_sample(self, u):
        """Invert the interpolated CDF at ``u``; uniform within each bin.

        Zero-probability bins are skipped: the located bin is the smallest
        k with ``C_{k+1} > u``, so ``u == C_k`` returns ``s_k`` exactly.
        """
        u = np.asarray(u, dtype=np.float64)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        if np.any(u < 0.0) or np.any(u >= 1.0):
            raise ValueError("surrogate draws must lie in [0, 1)")
        c = self.cumulative
        total = c[-1]
        if np.any(u > total):
            raise ValueError("draw exceeds the total probability mass of the ray")
        k = np.searchsorted(c[1:], u, side="right")
        k = np.minimum(k, self.grid.n)
        pts = self.edges
        span = c[k + 1] - c[k]
        frac = np.where(span > 0.0, (u - c[k]) / np.where(span > 0.0, span, 1.0), 0.0)
        s = pts[k] + frac * (pts[k + 1] - pts[k])
        s = np.minimum(s, self.grid.segment.far)
        return float(s[0]) if scalar else s


@dataclass(frozen=True)
class ContinuousRayCdf:
    """Continuous, strictly increasing CDF under the linear opacity model.

    Holds the precomputed distribution and log-transmittance so repeated
    evaluation and sampling touch no exponentials of sums.
    """

    grid: SampleGrid
    tau: OpacityTrace
    dist: quadrature.RayDistribution = field(init=False)
    log_transmittance: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.tau.values.size != self.grid.n + 2:
            raise ValueError("opacity trace does not match grid size")
        if np.any(self.tau.interior <= 0.0):
            raise ValueError("interior opacities must be floored positive before sampling")
        dist = quadrature.interval_pmf(ModelKind.LINEAR, self.grid, self.tau)
        log_t = quadrature.log_transmittance(ModelKind.LINEAR, self.grid, self.tau)
        log_t.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "log_transmittance", log_t)

    @property
    def cumulative(self) -> np.ndarray:
        return self.dist.cumulative

    def _locate(self, u: np.ndarray) -> np.ndarray:
        k = np.searchsorted(self.cumulative[1:], u, side="right")
        return np.minimum(k, self.grid.n)

    def cdf_eval(self, t):
        """Probability of terminating before distance ``t``."""
        t = np.asarray(t, dtype=np.float64)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        seg = self.grid.segment
        if np.any(t < seg.near) or np.any(t > seg.far):
            raise ValueError("evaluation point outside the ray segment")
        pts = self.grid.points
        k = np.searchsorted(pts, t, side="right") - 1
        k = np.clip(k, 0, self.grid.n)
        tp = t - pts[k]
        delta = self.grid.widths[k]
        tau = self.tau.values
        depth = (tau[k + 1] - tau[k]) * tp * tp / (2.0 * delta) + tau[k] * tp
        trans = self.dist.transmittance
        f = self.cumulative[k] + trans[k] * -np.expm1(-depth)
        f = np.clip(f, 0.0, 1.0)
        return float(f[0]) if scalar else f

    def precise_sample(self, u, return_clamped: bool = False):
        """Exact inverse of the CDF at ``u``.

        Draws at or above ``1 - EPS_UNIT`` (or beyond the total mass of an
        unnormalized ray) are clamped to the far bound; pass
        ``return_clamped=True`` to receive the mask of clamped entries.
        """
        u = np.asarray(u, dtype=np.float64)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        if np.any(u < 0.0) or np.any(u > 1.0):
            raise ValueError("draws must lie in [0, 1)")
        total = self.cumulative[-1]
        clamped = (u >= 1.0 - EPS_UNIT) | (u >= total)
        u = np.where(clamped, 0.0, u)

        k = self._locate(u)
        q = self.log_transmittance[k] - np.log1p(-u)
        if not np.all(np.isfinite(q)):
            raise ArithmeticError("non-finite log mass while inverting the CDF")
        tau = self.tau.values
        delta = self.grid.widths[k]
        a = tau[k + 1] - tau[k]
        disc = tau[k] * tau[k] + 2.0 * a * q / delta
        # The discriminant lies between tau_k^2 and tau_{k+1}^2; rounding can
        # push it a hair negative when q sits at the bin boundary.
        root = np.sqrt(np.maximum(disc, 0.0))
        denom = tau[k] + root
        t = np.where(denom > 0.0, 2.0 * q / np.where(denom > 0.0, denom, 1.0), 0.0)
        t = np.clip(t, 0.0, delta)

        s = self.grid.points[k] + t
        s = np.where(clamped, self.grid.segment.far, s)
        if scalar:
            s_out = float(s[0])
            return (s_out, bool(clamped[0])) if return_clamped else s_out
        return (s, clamped) if return_clamped else s


def stratified_unit_samples(n: int, seed: int) -> np.ndarray:
    """One uniform draw per equal-width stratum of [0, 1); deterministic."""
    if n < 1:
        raise ValueError("need at least one stratum")
    rng = np.random.default_rng(seed)
    return (np.arange(n) + rng.random(n)) / n


def hierarchical_samples(
    cdf: DiscreteRayCdf | ContinuousRayCdf,
    n_fine: int,
    seed: int,
    stratified: bool = True,
) -> SampleGrid:
    """Merge fine importance samples from ``cdf`` into its coarse grid.

    The sampler is chosen by the CDF type: a DiscreteRayCdf draws through
    the surrogate, a ContinuousRayCdf through the exact inverse.  Unit
    draws are stratified by default; pass ``stratified=False`` for i.i.d.
    draws when independence matters (e.g. distribution tests).
    """
    if n_fine < 1:
        raise ValueError("need at least one fine sample")
    if stratified:
        u = stratified_unit_samples(n_fine, seed)
    else:
        u = np.random.default_rng(seed).random(n_fine)
    u = np.minimum(u, cdf.cumulative[-1] * (1.0 - 1e-15))

    if isinstance(cdf, ContinuousRayCdf):
        fine = cdf.precise_sample(u)
    elif isinstance(cdf, DiscreteRayCdf):
        fine = cdf.surrogate_sample(u)
    else:
        raise TypeError(f"unknown cdf type {type(cdf).__name__}")

    seg = cdf.grid.segment
    lo = np.nextafter(seg.near, np.inf)
    hi = np.nextafter(seg.far, -np.inf)
    fine = np.clip(fine, lo, hi)

    merged = np.sort(np.concatenate([cdf.grid.interior, fine]))
    keep = np.concatenate(([True], np.diff(merged) > MERGE_TOL))
    # Also drop fine samples that collide with the segment bounds.
    merged = merged[keep]
    merged = merged[(merged - seg.near > MERGE_TOL) & (seg.far - merged > MERGE_TOL)]
    return SampleGrid(interior=merged, segment=seg)
