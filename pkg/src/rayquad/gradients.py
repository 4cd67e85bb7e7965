"""Hand-derived first derivatives of the quadrature outputs.

The rendered scalar is rewritten by summation by parts as

    y = c_0 + sum_k (c_k - c_{k-1}) T_k - c_N T_{N+1},

so every partial with respect to an opacity value reduces to suffix sums
of (color difference) * T weighted by the sensitivity of log T, which is
just interval widths.  Derivatives of the exact inverse-CDF sample
differentiate the stable quadratic root directly.  A central-difference
checker keeps the derivations honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature
from .rays import ColorTrace, ModelKind, OpacityTrace, SampleGrid
from .sampling import ContinuousRayCdf

# Denominator floor for relative errors, so exact zeros do not blow up.
REL_ERR_FLOOR = 1e-12


@dataclass(frozen=True)
class GradReport:
    """Analytic partials next to their central-difference estimates."""

    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_err: float

    def __post_init__(self):
        if self.analytic.shape != self.numeric.shape:
            raise ValueError("analytic and numeric partials must align")
        if self.max_rel_err < 0:
            raise ValueError("relative error cannot be negative")


def _interval_colors(colors) -> np.ndarray:
    if isinstance(colors, ColorTrace):
        if colors.channels != 1:
            raise ValueError("select a single color channel for gradients")
        return colors.values[:, 0]
    return np.asarray(colors, dtype=np.float64)


def grad_render_wrt_tau(
    model: ModelKind,
    grid: SampleGrid,
    tau: OpacityTrace,
    colors,
) -> np.ndarray:
    """Exact partials of the rendered scalar w.r.t. every opacity value.

    Returns one partial per grid point (length n + 2).  Under the constant
    model the far-bound opacity never enters, so its partial is zero.
    """
    c = _interval_colors(colors)
    if c.size != grid.n + 1:
        raise ValueError(f"{c.size} colors for {grid.n + 1} intervals")
    if tau.values.size != grid.n + 2:
        raise ValueError("opacity trace does not match grid size")

    log_t = quadrature.log_transmittance(model, grid, tau)
    trans = np.exp(log_t)
    widths = grid.widths
    n_pts = grid.n + 2

    # u[k] = d y / d T_k for k = 1..n+1 (k = 0 has T_0 fixed at 1).
    u = np.empty(n_pts)
    u[0] = 0.0
    u[1:-1] = (c[1:] - c[:-1]) * trans[1:-1]
    u[-1] = -c[-1] * trans[-1]

    # suffix[m] = sum_{k >= m} u[k]; suffix[n_pts] = 0.
    suffix = np.zeros(n_pts + 1)
    suffix[:-1] = np.cumsum(u[::-1])[::-1]

    grad = np.zeros(n_pts)
    if model is ModelKind.CONSTANT:
        # tau_m scales interval m, entering every T_k with k > m.
        grad[:-1] = -widths * suffix[1:-1]
    elif model is ModelKind.LINEAR:
        # tau_m enters interval m-1 (weight width/2) for T_k with k >= m,
        # and interval m (weight width/2) for T_k with k > m.
        grad[1:] -= 0.5 * widths * suffix[1:-1]
        grad[:-1] -= 0.5 * widths * suffix[1:-1]
    else:
        raise ValueError(f"no closed-form gradient for model {model}")
    return grad


@dataclass(frozen=True)
class SampleGradient:
    """Partials of one inverse-CDF sample w.r.t. its bin's opacities."""

    bin: int
    d_tau_left: float
    d_tau_right: float


def grad_sample_wrt_tau(
    cdf: ContinuousRayCdf, u: float, full_chain: bool = True
) -> SampleGradient:
    """Differentiate the exact inverse-CDF sample at draw ``u``.

    ``full_chain`` includes the dependence of the log mass on the bin's
    left opacity through the transmittance prefix; with it disabled the
    prefix is treated as frozen (the stop-gradient variant).  The draw
    must fall strictly inside a bin: at a bin edge the derivative is only
    one-sided and this raises instead of picking a side.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise ValueError("draw must lie strictly inside (0, 1)")
    c = cdf.cumulative
    k = int(np.searchsorted(c[1:], u, side="right"))
    k = min(k, cdf.grid.n)
    if u == c[k] or u == c[k + 1]:
        raise ValueError(f"draw {u} sits on a bin edge; derivative is one-sided")

    tau = cdf.tau.values
    widths = cdf.grid.widths
    tau_l, tau_r = float(tau[k]), float(tau[k + 1])
    delta = float(widths[k])
    a = tau_r - tau_l
    q = float(cdf.log_transmittance[k]) - float(np.log1p(-u))
    root = np.sqrt(max(tau_l * tau_l + 2.0 * a * q / delta, 0.0))
    denom = tau_l + root
    if root == 0.0 or denom == 0.0:
        raise ArithmeticError("degenerate bin: opacity not floored positive")

    dt_da = -2.0 * q * q / (delta * root * denom * denom)
    dt_dq = 2.0 / denom - 2.0 * q * a / (delta * root * denom * denom)
    dt_dtau_direct = -2.0 * q * (1.0 + tau_l / root) / (denom * denom)

    d_left = dt_dtau_direct - dt_da
    if full_chain and k >= 1:
        # log T_k carries -width_{k-1}/2 per unit of tau_k.
        d_left += dt_dq * (-0.5 * float(widths[k - 1]))
    return SampleGradient(bin=k, d_tau_left=float(d_left), d_tau_right=float(dt_da))


def finite_diff_check(f, x: np.ndarray, analytic: np.ndarray, h: float = 1e-6) -> GradReport:
    """Central-difference check of supplied partials of a scalar function."""
    if h <= 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(analytic, dtype=np.float64)
    if analytic.shape != x.shape:
        raise ValueError("one analytic partial per parameter required")

    numeric = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        hi = float(f(x + step))
        lo = float(f(x - step))
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValueError("function is not finite near the check point")
        numeric[i] = (hi - lo) / (2.0 * h)

    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_ERR_FLOOR)
    max_rel_err = float(np.max(np.abs(analytic - numeric) / scale))
    return GradReport(analytic=analytic, numeric=numeric, max_rel_err=max_rel_err)
