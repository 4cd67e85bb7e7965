"""Convergence of the two models against the integration oracle.

The oracle shares no formulas with the library: it tabulates cumulative
opacity with Hermite pieces over generic Simpson panels and drives an
adaptive Simpson rule over the outer integrand.  On a smooth off-center
bump the constant model converges at first order and the linear model at
second order.
"""

from rayquad import (
    ModelKind,
    convergence_slope,
    interval_pmf,
    make_uniform_grid,
    render,
    sample_field,
    true_render,
)
from rayquad import fixtures

scene = fixtures.convergence_scene()
segment = fixtures.CONVERGENCE_SEGMENT
truth = true_render(scene, segment, 1e-12)[0]
print(f"oracle rendered value: {truth:.12f}")

print(f"\n{'n':>5} {'constant err':>14} {'linear err':>14}")
table = {m: [] for m in (ModelKind.CONSTANT, ModelKind.LINEAR)}
for n in (8, 16, 32, 64, 128, 256):
    row = []
    for model in table:
        grid = make_uniform_grid(segment, n)
        tau, colors = sample_field(scene, grid)
        err = abs(render(interval_pmf(model, grid, tau), colors)[0] - truth)
        table[model].append((n, err))
        row.append(err)
    print(f"{n:>5} {row[0]:>14.3e} {row[1]:>14.3e}")

for model, errors in table.items():
    print(f"fitted log-log slope, {model.value}: {convergence_slope(errors):+.3f}")
print("(a slope of -1 is first order, -2 is second order)")
