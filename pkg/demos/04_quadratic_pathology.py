"""Why the quadratic opacity model is a trap.

Fitting parabolas through opacity samples yields closed-form integrals,
but they are rational in the knot gaps and can go negative when a sharp
opacity rise meets nearly coincident samples.  A negative opacity
integral means a transmittance factor above one, which no survival
probability can have.
"""

import numpy as np

from rayquad import (
    PATHOLOGICAL_PATCH,
    OpacityTrace,
    RaySegment,
    SampleGrid,
    instability_threshold,
    integrate_adaptive,
    quad_eval,
    quad_integral_left,
    quad_integral_right,
    transmittance_quadratic,
)

patch = PATHOLOGICAL_PATCH
print("knots:", patch.knots, " opacities:", patch.taus)
print("gap widths: alpha", patch.alpha, "beta", patch.beta)

left = quad_integral_left(patch)
right = quad_integral_right(patch)
print(f"\nleft-subinterval opacity integral:  {left:+.6f}   <-- negative")
print(f"right-subinterval opacity integral: {right:+.6f}")

check = integrate_adaptive(lambda s: quad_eval(patch, s), 0.0, 1.0, 1e-12)
print(f"numeric check of the left integral: {check.value:+.6f} "
      f"({check.evaluations} evaluations)")

# The interpolated parabola itself dips far below zero between the knots,
# even though every sampled opacity is nonnegative.
s = np.linspace(0.0, 1.01, 9)
print("\ninterpolated opacity along the patch:")
for si, ti in zip(s, quad_eval(patch, s)):
    print(f"  tau({si:5.3f}) = {ti:+9.3f}")

slope = (patch.taus[2] - patch.taus[1]) / patch.beta
limit = instability_threshold(patch.taus[0], patch.taus[1], patch.alpha)
print(f"\nempirical opacity slope at the middle knot: {slope:.0f}")
print(f"stability threshold for this patch:         {limit:.0f}")
print("slope exceeds the threshold, so the negative integral is expected")

grid = SampleGrid(np.array([1.0]), RaySegment(0.0, 1.01))
trans = transmittance_quadratic(grid, OpacityTrace(patch.taus))
print(f"\ntransmittance sequence: {trans}")
print(f"the middle factor is {trans[1]:.3g}, a 'survival probability' above one")
