"""Two-point Hermite interpolation and the piecewise smoothed phi.

H_L(p; phi, a, b) matches phi and its first L derivatives at ``a`` and has
vanishing derivatives of order 1..L at ``b``::

    H_L(p) = phi(a) + sum_{m=1}^{L} phi^(m)(a)/m! (p-a)^m
                      * sum_{l=0}^{L-m} (L+1)/(L+l+1) B_{l,L+l+1}((p-a)/(b-a))

with B_{v,n} the Bernstein basis. The smoothed function glues phi on
[knot, 1] to H_4 blends on [knot/2, knot] and [1, 2] and constants outside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P

from .phi_models import PhiSpec, eval_phi

HERMITE_ORDER = 4


def bernstein(nu: int, n: int, x, deriv: int = 0):
    """d^deriv/dx^deriv of B_{nu,n}(x), via B' _{nu,n} = n (B_{nu-1,n-1} - B_{nu,n-1})."""
    x = np.asarray(x, dtype=float)
    if nu < 0 or nu > n:
        return np.zeros_like(x)
    if deriv == 0:
        return math.comb(n, nu) * x ** nu * (1.0 - x) ** (n - nu)
    if n == 0:
        return np.zeros_like(x)
    return n * (bernstein(nu - 1, n - 1, x, deriv - 1) - bernstein(nu, n - 1, x, deriv - 1))


def _blend(L, m, x, deriv):
    # S_m(x) = sum_l (L+1)/(L+l+1) B_{l,L+l+1}(x)
    total = np.zeros_like(np.asarray(x, dtype=float))
    for l in range(L - m + 1):
        total = total + (L + 1) / (L + l + 1) * bernstein(l, L + l + 1, x, deriv)
    return total


def _taylor_data(spec, a, L=HERMITE_ORDER):
    """(phi(a), phi'(a)/1!, ..., phi^(L)(a)/L!)."""
    return tuple(float(eval_phi(spec, a, m)) / math.factorial(m) for m in range(L + 1))


def _hermite_from_taylor(taylor, a, b, p, order):
    L = len(taylor) - 1
    p = np.asarray(p, dtype=float)
    h = b - a
    t = p - a
    x = t / h
    out = np.full(p.shape, taylor[0] if order == 0 else 0.0)
    for m in range(1, L + 1):
        # Leibniz rule on (p-a)^m * S_m((p-a)/h)
        acc = np.zeros(p.shape)
        for s in range(min(order, m) + 1):
            mono = math.factorial(m) / math.factorial(m - s) * t ** (m - s)
            acc = acc + math.comb(order, s) * mono * _blend(L, m, x, order - s) / h ** (order - s)
        out = out + taylor[m] * acc
    return out


def hermite_eval(spec: PhiSpec, a: float, b: float, p, order: int = 0, L: int = HERMITE_ORDER):
    """Evaluate H_L(p; phi, a, b) or its ``order``-th derivative in p."""
    if a == b:
        raise ValueError("Hermite blend needs a != b")
    if not 0 <= order <= 4:
        raise ValueError("order must be in 0..4")
    out = _hermite_from_taylor(_taylor_data(spec, a, L), a, b, p, order)
    return float(out) if out.ndim == 0 else out


def _segment_poly(taylor, h, dps=60):
    """Monomial coefficients of H_L in x = (p - a)/h, computed exactly in mpmath
    from the Bernstein form."""
    L = len(taylor) - 1
    ctx = mpmath.MPContext()
    ctx.dps = dps

    def mul(u, v):
        out = [ctx.mpf(0)] * (len(u) + len(v) - 1)
        for i, ui in enumerate(u):
            for j, vj in enumerate(v):
                out[i + j] += ui * vj
        return out

    def power(u, k):
        out = [ctx.mpf(1)]
        for _ in range(k):
            out = mul(out, u)
        return out

    one_minus_x = [ctx.mpf(1), ctx.mpf(-1)]
    total = [ctx.mpf(0)] * (2 * L + 2)
    total[0] = ctx.mpf(taylor[0])
    for m in range(1, L + 1):
        scale = ctx.mpf(taylor[m]) * ctx.mpf(h) ** m
        for l in range(L - m + 1):
            n = L + l + 1
            w = ctx.mpf(L + 1) / (L + l + 1) * math.comb(n, l)
            term = [ctx.mpf(0)] * (m + l) + power(one_minus_x, n - l)
            for i, c in enumerate(term):
                total[i] += scale * w * c
    return ctx, total


def _shift(ctx, coeffs, t):
    """Coefficients of q(u) = P(t + u) (Taylor shift, exact in ctx)."""
    n = len(coeffs)
    out = [ctx.mpf(0)] * n
    for j, c in enumerate(coeffs):
        for i in range(j + 1):
            out[i] += c * math.comb(j, i) * ctx.mpf(t) ** (j - i)
    return out


@dataclass(frozen=True, eq=False)
class _Segment:
    """H_4 on [a, b] stored as monomial expansions about both endpoints.

    Each point uses the expansion about the nearer end, so the matched
    derivatives at ``a`` and the vanishing derivatives at ``b`` are reproduced
    without cancellation.
    """

    a: float
    b: float
    near_a: np.ndarray
    near_b: np.ndarray

    @classmethod
    def build(cls, spec, a, b):
        ctx, coeffs = _segment_poly(_taylor_data(spec, a), b - a)
        near_b = _shift(ctx, coeffs, 1)
        return cls(a, b, np.array([float(c) for c in coeffs]), np.array([float(c) for c in near_b]))

    def __call__(self, p, order):
        h = self.b - self.a
        x = (np.asarray(p, dtype=float) - self.a) / h
        use_a = np.abs(x) <= np.abs(x - 1.0)
        out = np.empty(x.shape)
        for mask, coeffs, shift in ((use_a, self.near_a, 0.0), (~use_a, self.near_b, 1.0)):
            if mask.any():
                c = P.polyder(coeffs, order) if order else coeffs
                out[mask] = P.polyval(x[mask] - shift, c)
        return out / h ** order


class SmoothedPhi:
    """phi flattened below knot/2 and above 2, equal to phi on [knot, 1]."""

    def __init__(self, spec: PhiSpec, knot: float):
        if not 0 < knot <= 1:
            raise ValueError("knot must lie in (0, 1]")
        self.spec = spec
        self.knot = float(knot)
        self.low = _Segment.build(spec, self.knot, self.knot / 2)
        self.high = _Segment.build(spec, 1.0, 2.0)
        self.low_const = float(self.low(self.knot / 2, 0))
        self.high_const = float(self.high(2.0, 0))

    def __call__(self, p, order: int = 0):
        return smoothed_eval(self, p, order)

    def __repr__(self):
        return f"SmoothedPhi({self.spec.name}, knot={self.knot:g})"


def smoothed_eval(sphi: SmoothedPhi, p, order: int = 0):
    """Piecewise value (order 0) or derivative (orders 1..4) of the smoothed phi."""
    if not 0 <= order <= 4:
        raise ValueError("order must be in 0..4")
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0):
        raise ValueError("p must be >= 0")
    flat = np.atleast_1d(arr)
    out = np.zeros(flat.shape)
    lo_cut, knot = sphi.knot / 2, sphi.knot

    below = flat <= lo_cut
    blend_lo = (flat > lo_cut) & (flat < knot)
    middle = (flat >= knot) & (flat <= 1.0)
    blend_hi = (flat > 1.0) & (flat < 2.0)
    above = flat >= 2.0

    if order == 0:
        out[below] = sphi.low_const
        out[above] = sphi.high_const
    if blend_lo.any():
        out[blend_lo] = sphi.low(flat[blend_lo], order)
    if middle.any():
        out[middle] = eval_phi(sphi.spec, flat[middle], order)
    if blend_hi.any():
        out[blend_hi] = sphi.high(flat[blend_hi], order)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)
