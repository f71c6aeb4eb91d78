"""Best uniform polynomial approximation on [0, Delta] and basis conversions.

The Remez exchange runs in the Chebyshev basis on x in [-1, 1] with
p = Delta (x + 1) / 2. Extrema of the error are located on a Chebyshev-spaced
candidate grid and then polished with a bounded scalar search, so the
returned error is the continuous minimax error rather than a grid one.

Monomial coefficients of a degree-L best approximation grow like 2^(3L);
conversions are carried out with mpmath and kept alongside the float copies.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import optimize

from .phi_models import PhiSpec, eval_phi

REMEZ_TOL = 1e-6
MAX_ITERS = 100
GRID_FACTOR = 64
DEFAULT_DPS = 60


class RemezError(RuntimeError):
    """Exchange did not reach the equioscillation tolerance."""

    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap


class PrecisionError(ArithmeticError):
    """Extended-precision conversion failed its round-trip check."""


@dataclass(frozen=True, eq=False)
class ApproxPoly:
    degree: int
    interval_right: float
    cheb_coeffs: np.ndarray
    monomial_coeffs: np.ndarray
    uniform_error: float
    equioscillation_points: np.ndarray
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    monomial_mp: tuple = ()

    def __call__(self, p):
        x = 2.0 * np.asarray(p, dtype=float) / self.interval_right - 1.0
        return C.chebval(x, self.cheb_coeffs)

    def eval_monomial(self, p):
        return np.polynomial.polynomial.polyval(np.asarray(p, dtype=float), self.monomial_coeffs)

    def alternation_count(self, rel_tol: float = 1e-3) -> int:
        """Length of the longest sign-alternating run among stored residuals
        whose magnitude is within rel_tol of the certified error."""
        r = self.residuals
        if r.size == 0 or self.uniform_error == 0:
            return 0
        keep = np.abs(np.abs(r) - self.uniform_error) <= rel_tol * self.uniform_error
        s = np.sign(r[keep])
        if s.size == 0:
            return 0
        return int(1 + np.count_nonzero(s[1:] != s[:-1]))

    def to_json(self, basis: str = "chebyshev") -> str:
        if basis == "chebyshev":
            coeffs = [float(c) for c in self.cheb_coeffs]
        elif basis == "monomial":
            coeffs = [mpmath.nstr(c, 40) for c in self.monomial_mp] or [float(c) for c in self.monomial_coeffs]
        else:
            raise ValueError(f"unknown basis {basis!r}")
        return json.dumps({
            "degree": self.degree,
            "interval": [0.0, self.interval_right],
            "basis": basis,
            "coefficients": coeffs,
            "certified_error": self.uniform_error,
            "equioscillation_points": [float(x) for x in self.equioscillation_points],
        })

    @classmethod
    def from_json(cls, text: str) -> "ApproxPoly":
        d = json.loads(text)
        lo, hi = d["interval"]
        if lo != 0.0:
            raise ValueError("only intervals of the form [0, Delta] are supported")
        if d["basis"] == "chebyshev":
            cheb = np.asarray(d["coefficients"], dtype=float)
            mono_mp = cheb_to_monomial(cheb, hi, as_mp=True)
        elif d["basis"] == "monomial":
            with mpmath.workdps(DEFAULT_DPS):
                mono_mp = tuple(mpmath.mpf(c) for c in d["coefficients"])
            cheb = monomial_to_cheb(mono_mp, hi)
        else:
            raise ValueError(f"unknown basis {d['basis']!r}")
        return cls(
            degree=int(d["degree"]), interval_right=float(hi), cheb_coeffs=cheb,
            monomial_coeffs=np.array([float(c) for c in mono_mp]),
            uniform_error=float(d["certified_error"]),
            equioscillation_points=np.asarray(d.get("equioscillation_points", []), dtype=float),
            monomial_mp=tuple(mono_mp))


# ---------------------------------------------------------------------------
# basis conversions


def _cheb_power_table(n):
    """Integer monomial coefficients of T_0..T_n."""
    rows = [[1], [0, 1]]
    for j in range(2, n + 1):
        prev, prev2 = rows[j - 1], rows[j - 2]
        row = [0] * (j + 1)
        for i, v in enumerate(prev):
            row[i + 1] += 2 * v
        for i, v in enumerate(prev2):
            row[i] -= v
        rows.append(row)
    return rows[: n + 1]


def cheb_to_monomial(cheb_coeffs, delta: Optional[float] = None, as_mp: bool = False, dps: int = DEFAULT_DPS):
    """Monomial coefficients in p of sum_j c_j T_j(2p/delta - 1).

    With ``delta=None`` the conversion is done in the native Chebyshev
    variable x on [-1, 1].
    """
    cheb = list(cheb_coeffs)
    L = len(cheb) - 1
    for attempt in range(3):
        prec = dps * (2 ** attempt)
        with mpmath.workdps(prec):
            table = _cheb_power_table(L)
            # coefficients in x
            xs = [mpmath.mpf(0)] * (L + 1)
            for j, cj in enumerate(cheb):
                cj = mpmath.mpf(cj)
                for i, t in enumerate(table[j]):
                    if t:
                        xs[i] += cj * t
            if delta is None:
                out = xs
            else:
                scale = mpmath.mpf(2) / mpmath.mpf(delta)
                out = [mpmath.mpf(0)] * (L + 1)
                for j, bj in enumerate(xs):
                    if bj == 0:
                        continue
                    for m in range(j + 1):
                        out[m] += bj * math.comb(j, m) * scale ** m * (-1) ** (j - m)
            if _roundtrip_ok(cheb, out, delta):
                out = tuple(+v for v in out)
                return out if as_mp else np.array([float(v) for v in out])
    raise PrecisionError("monomial conversion lost precision even at extended precision")


def _roundtrip_ok(cheb, mono, delta):
    width = 2.0 if delta is None else float(delta)
    lo = -1.0 if delta is None else 0.0
    scale = 1.0 + sum(abs(float(c)) for c in cheb)
    for t in np.linspace(0.0, 1.0, 7):
        pt = mpmath.mpf(lo + width * t)
        x = pt if delta is None else 2 * pt / delta - 1
        ref = C.chebval(float(x), np.asarray(cheb, dtype=float))
        val = mpmath.polyval(list(reversed(mono)), pt)
        if not mpmath.isfinite(val) or abs(float(val) - ref) > 1e-9 * scale:
            return False
    return True


def monomial_to_cheb(monomial_coeffs, delta: Optional[float] = None):
    """Inverse of :func:`cheb_to_monomial`, evaluated in extended precision."""
    mono = list(monomial_coeffs)
    L = len(mono) - 1
    with mpmath.workdps(DEFAULT_DPS):
        # p = delta (x + 1) / 2 ; expand in x first
        if delta is None:
            xs = [mpmath.mpf(a) for a in mono]
        else:
            half = mpmath.mpf(delta) / 2
            xs = [mpmath.mpf(0)] * (L + 1)
            for m, a in enumerate(mono):
                a = mpmath.mpf(a) * half ** m
                for i in range(m + 1):
                    xs[i] += a * math.comb(m, i)
        # x^i = sum_j w_ij T_j  via repeated multiplication by x in the T basis
        out = [mpmath.mpf(0)] * (L + 1)
        power = [mpmath.mpf(1)] + [mpmath.mpf(0)] * L   # x^0 in T basis
        for i in range(L + 1):
            for j in range(L + 1):
                out[j] += xs[i] * power[j]
            nxt = [mpmath.mpf(0)] * (L + 1)
            for j, v in enumerate(power):
                if v == 0:
                    continue
                # x T_j = (T_{j+1} + T_{|j-1|}) / 2, x T_0 = T_1
                if j == 0:
                    if L >= 1:
                        nxt[1] += v
                else:
                    if j + 1 <= L:
                        nxt[j + 1] += v / 2
                    nxt[j - 1] += v / 2
            power = nxt
        return np.array([float(v) for v in out])


def monomial_to_factorial(monomial_coeffs, n: int):
    """b_m = a_m / n^m so that E[sum_m b_m (N)_m] = sum_m a_m p^m for N ~ Poisson(n p).

    Returns floats for float input and mpmath numbers for mpmath input.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    coeffs = list(monomial_coeffs)
    if coeffs and isinstance(coeffs[0], mpmath.mpf):
        with mpmath.workdps(DEFAULT_DPS):
            nn = mpmath.mpf(n)
            return tuple(a / nn ** m for m, a in enumerate(coeffs))
    a = np.asarray(coeffs, dtype=float)
    return a / float(n) ** np.arange(a.size)


# ---------------------------------------------------------------------------
# Remez exchange


def _as_function(target, delta):
    if isinstance(target, PhiSpec):
        fn = lambda p: eval_phi(target, p, 0)
    else:
        fn = target
    return lambda x: np.asarray(fn(delta * (np.asarray(x, dtype=float) + 1.0) / 2.0), dtype=float)


def _candidate_grid(L):
    m = GRID_FACTOR * (L + 1)
    return np.sort(-np.cos(np.pi * np.arange(m + 1) / m))


def _solve_reference(f, ref, L):
    V = C.chebvander(ref, L)
    signs = (-1.0) ** np.arange(ref.size)
    A = np.hstack([V, signs[:, None]])
    sol = np.linalg.solve(A, f(ref))
    return sol[:-1], sol[-1]


def _polish(err_fn, a, b, sign):
    """Maximise sign * err on [a, b]."""
    res = optimize.minimize_scalar(lambda x: -sign * err_fn(x), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-15})
    x = float(res.x)
    # the bounded search never evaluates the endpoints themselves
    cands = [(x, sign * err_fn(x)), (a, sign * err_fn(a)), (b, sign * err_fn(b))]
    return max(cands, key=lambda t: t[1])[0]


def _new_reference(err_fn, grid, L):
    e = err_fn(grid)
    scale = np.max(np.abs(e))
    s = np.sign(e)
    # zeros inherit the sign of the left neighbour
    for i in range(1, s.size):
        if s[i] == 0:
            s[i] = s[i - 1]
    if s[0] == 0:
        nz = np.flatnonzero(s)
        s[0] = s[nz[0]] if nz.size else 1.0
        for i in range(1, s.size):
            if s[i] == 0:
                s[i] = s[i - 1]
    breaks = np.flatnonzero(s[1:] != s[:-1]) + 1
    starts = np.concatenate([[0], breaks])
    ends = np.concatenate([breaks, [s.size]])
    pts, vals = [], []
    for a, b in zip(starts, ends):
        seg = slice(a, b)
        i = a + int(np.argmax(np.abs(e[seg])))
        sign = s[i]
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        x = _polish(err_fn, lo, hi, sign) if hi > lo else grid[i]
        pts.append(x)
        vals.append(float(err_fn(x)))
    pts, vals = np.array(pts), np.array(vals)
    n_ref = L + 2
    if pts.size < n_ref:
        return None, scale
    if pts.size > n_ref:
        mags = np.abs(vals)
        g = int(np.argmax(mags))
        best, best_start = -1.0, 0
        for start in range(max(0, g - n_ref + 1), min(g, pts.size - n_ref) + 1):
            v = mags[start:start + n_ref].min()
            if v > best:
                best, best_start = v, start
        pts, vals = pts[best_start:best_start + n_ref], vals[best_start:best_start + n_ref]
    return (pts, vals), scale


def best_approx(target, L: int, delta: float = 1.0, tol: float = REMEZ_TOL,
                max_iters: int = MAX_ITERS) -> ApproxPoly:
    """Degree-L minimax approximation of ``target`` on [0, delta].

    ``target`` is a PhiSpec or any vectorised callable on [0, delta].
    """
    if L < 0 or int(L) != L:
        raise ValueError("L must be a nonnegative integer")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    L = int(L)
    f = _as_function(target, delta)
    grid = _candidate_grid(L)
    fscale = 1.0 + float(np.max(np.abs(f(grid))))
    ref = np.sort(-np.cos(np.pi * np.arange(L + 2) / (L + 1)))
    best = None
    for it in range(1, max_iters + 1):
        coeffs, _ = _solve_reference(f, ref, L)
        err_fn = lambda x, c=coeffs: f(x) - C.chebval(x, c)
        new, scale = _new_reference(err_fn, grid, L)
        if scale <= 1e-13 * fscale:
            # exact representation
            pts = ref
            return _package(coeffs, delta, L, 0.0, pts, err_fn(pts), it)
        if new is None:
            raise RemezError("error curve lost alternation", best=best, gap=None)
        pts, vals = new
        mags = np.abs(vals)
        gap = (mags.max() - mags.min()) / mags.max()
        cand = (coeffs, pts, vals, gap)
        if best is None or gap < best[3]:
            best = cand
        if gap <= tol:
            return _package(coeffs, delta, L, float(mags.max()), pts, vals, it)
        ref = pts
    coeffs, pts, vals, gap = best
    raise RemezError(f"no convergence after {max_iters} iterations (gap {gap:.3g})",
                     best=_package(coeffs, delta, L, float(np.abs(vals).max()), pts, vals, max_iters),
                     gap=gap)


def _package(coeffs, delta, L, err, xs, vals, iters):
    mono_mp = cheb_to_monomial(coeffs, delta, as_mp=True)
    return ApproxPoly(
        degree=L, interval_right=float(delta), cheb_coeffs=np.asarray(coeffs, dtype=float),
        monomial_coeffs=np.array([float(v) for v in mono_mp]), uniform_error=err,
        equioscillation_points=delta * (np.asarray(xs) + 1.0) / 2.0,
        residuals=np.asarray(vals, dtype=float), iterations=iters, monomial_mp=mono_mp)


def uniform_error(poly: ApproxPoly, target, grid_size: int = 4096) -> float:
    """max |phi - poly| over a Chebyshev-node grid on [0, Delta] (endpoints included)."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    x = -np.cos(np.pi * np.arange(grid_size) / (grid_size - 1))
    f = _as_function(target, poly.interval_right)
    return float(np.max(np.abs(f(x) - C.chebval(x, poly.cheb_coeffs))))
