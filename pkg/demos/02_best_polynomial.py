"""Best uniform polynomial approximation of p^alpha near zero.

Shows the equioscillation certificate, the E_L ~ L^(-2 alpha) decay and the
factorial-moment coefficients that make the polynomial unbiasedly estimable
from Poisson counts.
"""
import numpy as np

from addfunc.estimator import FactorialPoly
from addfunc.phi_models import power_alpha
from addfunc.poly_approx import best_approx, monomial_to_factorial

sqrt = power_alpha(0.5)

# the degree-one anchor: sqrt(p) on [0, 1] is best matched by p + 1/8
poly = best_approx(sqrt, 1, 1.0)
print("L=1 coefficients", poly.monomial_coeffs, "error", poly.uniform_error)

# equioscillation: L+2 points where the error reaches +-E with alternating sign
poly = best_approx(sqrt, 6, 0.01)
print("L=6 on [0, 0.01]: E =", poly.uniform_error)
for x, r in zip(poly.equioscillation_points, poly.residuals):
    print(f"   x = {x:.6f}   phi - P = {r:+.3e}")

# decay in the degree for three exponents
Ls = np.array([4, 8, 16, 32, 64])
for alpha in (0.3, 0.5, 0.7):
    E = np.array([best_approx(power_alpha(alpha), int(L), 1.0).uniform_error for L in Ls])
    slope = np.polyfit(np.log(Ls), np.log(E), 1)[0]
    print(f"alpha={alpha}: E_L = {np.array2string(E, formatter={'float_kind': '{:.2e}'.format})}  log-log slope {slope:.3f}")

# unbiased estimation: E[g(N)] = P(p) for N ~ Poisson(n p)
n, p = 2000, 0.003
poly = best_approx(sqrt, 5, 8 * np.log(n) / n)
g = FactorialPoly(monomial_to_factorial(poly.monomial_mp, n))
N = np.random.default_rng(0).poisson(n * p, size=200_000)
vals = g(N)
print(f"P(p) = {poly(p):.5f}   mean g(N) = {vals.mean():.5f} +- {vals.std() / np.sqrt(N.size):.5f}"
      f"   sqrt(p) = {np.sqrt(p):.5f}")
