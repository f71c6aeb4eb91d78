"""Hermite-smoothed phi used by the bias-corrected plugin branch.

phi is kept on [knot, 1], blended to a constant over [knot/2, knot] and
[1, 2], and constant outside. The fourth derivative stays bounded by a power
of the knot instead of blowing up at zero.
"""
import numpy as np

from addfunc.phi_models import eval_phi, power_alpha
from addfunc.smoothing import SmoothedPhi, hermite_eval, smoothed_eval

spec = power_alpha(0.5)
n = 10_000
knot = 1.5 * np.log(n) / n
sp = SmoothedPhi(spec, knot)
print(sp)

# endpoint matching of the degree-4 Hermite blend
a, b = knot, knot / 2
for i in range(5):
    print(f"order {i}: H(a) = {hermite_eval(spec, a, b, a, i):+.6e}  phi(a) = {eval_phi(spec, a, i):+.6e}"
          f"  H(b) = {hermite_eval(spec, a, b, b, i):+.2e}")

# values across the five pieces
p = np.array([0.0, knot / 4, 0.75 * knot, knot, 0.5, 1.0, 1.5, 2.0, 3.0])
print("p          ", np.array2string(p, precision=4))
print("smoothed   ", np.array2string(smoothed_eval(sp, p), precision=4))
print("phi(min(p,1))", np.array2string(eval_phi(spec, np.minimum(p, 1.0)), precision=4))

# curvature envelope: sup p^2 |phi_bar''''| scales like knot^(alpha - 2)
knots = np.logspace(-5, -2, 4)
for kn in knots:
    s = SmoothedPhi(spec, kn)
    grid = np.geomspace(kn / 2, 2, 4000)
    print(f"knot {kn:.0e}: sup p^2 |d4| = {np.max(grid ** 2 * np.abs(smoothed_eval(s, grid, 4))):.3e}"
          f"   knot^-1.5 = {kn ** -1.5:.3e}")
