"""Scalar maps phi with derivatives, divergence-speed certificates and the
additive functional theta(P; phi) = sum_i phi(p_i).

Built-in catalog
----------------
power_alpha(a)      p**a                     Class B
cos_power(c, a)     cos(c p) p**a            Class B
exp_power(c, a)     exp(c p) p**a            Class B
shannon_phi()       -p ln p                  Class C (baselines only)
log_phi()           -ln p                    Class A (no consistent estimator)

Catalog entries are addressable by string, e.g. ``"power:0.5"`` or
``"cos_power:1.0:0.5"``; see :func:`get_spec`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

CLASS_A = "ClassA"
CLASS_B = "ClassB"
CLASS_C = "ClassC"

# Log grid used to fit and audit the divergence-speed constants.
DEFAULT_GRID = np.logspace(-4, 0, 2001)


class PhiDomainError(ValueError):
    """Raised when phi or a derivative is requested outside its domain."""


class ThetaBoundsError(RuntimeError):
    """Numeric search for theta_inf / theta_sup did not converge."""

    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


def alpha_factor(alpha: float, m: int) -> float:
    """alpha_0 = 1, alpha_m = prod_{j=1..m} (j - alpha)."""
    out = 1.0
    for j in range(1, m + 1):
        out *= j - alpha
    return out


@dataclass(frozen=True, eq=False)
class PhiSpec:
    """A member of the function class together with its certificate.

    ``value_fn`` and ``deriv_fns[m-1]`` are vectorised maps on (0, 1].
    ``zero_value`` is the right limit of phi at 0, or None when phi blows up.
    """

    name: str
    alpha: float
    W: float
    c: tuple
    c_prime: tuple
    value_fn: Callable
    deriv_fns: tuple
    class_tag: str = CLASS_B
    zero_value: Optional[float] = 0.0
    params: tuple = field(default=())

    def __post_init__(self):
        if self.class_tag not in (CLASS_A, CLASS_B, CLASS_C):
            raise ValueError(f"unknown class tag {self.class_tag!r}")
        if self.class_tag == CLASS_B and not 0.0 < self.alpha < 1.0:
            raise ValueError("Class B requires alpha in (0, 1)")
        if self.W <= 0:
            raise ValueError("W must be positive")
        if len(self.c) != 4 or len(self.c_prime) != 4 or len(self.deriv_fns) != 4:
            raise ValueError("need four offsets and four derivative maps")

    def __call__(self, p):
        return eval_phi(self, p, 0)

    def with_certificate(self, **changes) -> "PhiSpec":
        """Copy with a different (alpha, W, c, c_prime) certificate."""
        for key in ("c", "c_prime"):
            if key in changes:
                changes[key] = tuple(float(v) for v in changes[key])
        return replace(self, **changes)


def eval_phi(spec: PhiSpec, p, order: int = 0):
    """Evaluate phi or one of its derivatives (order 0..4).

    Order 0 at p = 0 returns the right limit. Works on scalars and arrays.
    """
    if not isinstance(order, (int, np.integer)) or not 0 <= order <= 4:
        raise ValueError(f"order must be an integer in 0..4, got {order!r}")
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise PhiDomainError(f"{spec.name}: p must be finite and >= 0")
    at_zero = arr == 0
    if np.any(at_zero):
        if order > 0:
            raise PhiDomainError(f"{spec.name}: derivative of order {order} undefined at p=0")
        if spec.zero_value is None:
            raise PhiDomainError(f"{spec.name}: unbounded at p=0")
    safe = np.where(at_zero, 1.0, arr)
    fn = spec.value_fn if order == 0 else spec.deriv_fns[order - 1]
    out = np.asarray(fn(safe), dtype=float)
    if np.any(at_zero):
        out = np.where(at_zero, spec.zero_value, out)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class DistributionModel:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError("probs must be a nonempty 1-d array")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probs sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> int:
        return int(self.probs.size)


def theta_of(spec: PhiSpec, P) -> float:
    """theta(P; phi) = sum_i phi(p_i)."""
    probs = P.probs if isinstance(P, DistributionModel) else np.asarray(P, dtype=float)
    return float(np.sum(eval_phi(spec, probs, 0)))


# ---------------------------------------------------------------------------
# theta_inf / theta_sup over the simplex


def _exchangeable_curve(spec, k, t):
    big = 1.0 - (k - 1) * t
    return eval_phi(spec, np.clip(big, 0.0, 1.0), 0) + (k - 1) * eval_phi(spec, t, 0)


def _numeric_theta_bounds(spec, k):
    # Candidates: (1-(k-1)t, t, ..., t) for t in [0, 1/k], plus flat
    # distributions on m atoms. Heuristic; exact for the built-in classes.
    t_hi = 1.0 / k
    ts = np.unique(np.concatenate([[0.0], t_hi * np.logspace(-8, 0, 400),
                                   np.linspace(0.0, t_hi, 401)]))
    vals = _exchangeable_curve(spec, k, ts)
    m = np.unique(np.round(np.geomspace(1, k, min(k, 200))).astype(int))
    flat = m * eval_phi(spec, 1.0 / m, 0)
    lo, hi = min(vals.min(), flat.min()), max(vals.max(), flat.max())

    def refine(sign):
        idx = int(np.argmin(sign * vals))
        left, right = ts[max(idx - 1, 0)], ts[min(idx + 1, ts.size - 1)]
        if right <= left:
            return sign * vals[idx]
        res = optimize.minimize_scalar(
            lambda t: sign * float(_exchangeable_curve(spec, k, t)),
            bounds=(left, right), method="bounded",
            options={"xatol": 1e-14 * max(t_hi, 1e-300)})
        if not res.success:
            raise ThetaBoundsError(f"{spec.name}: golden-section search failed",
                                   bracket=(lo, hi))
        return res.fun

    lo = min(lo, refine(+1.0))
    hi = max(hi, -refine(-1.0))
    return float(lo), float(hi)


def theta_bounds(spec: PhiSpec, k: int):
    """Return (theta_inf, theta_sup) over all distributions on k symbols."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        v = float(eval_phi(spec, 1.0, 0))
        return v, v
    kind = spec.params[0] if spec.params else None
    if kind == "power":
        return 1.0, float(k ** (1.0 - spec.alpha))
    if kind == "shannon":
        return 0.0, math.log(k)
    if kind == "log":
        return k * math.log(k), math.inf
    return _numeric_theta_bounds(spec, k)


# ---------------------------------------------------------------------------
# Certificates


@dataclass
class DivergenceReport:
    """Signed slacks per derivative order; negative entries are violations."""

    orders: tuple
    upper_slack: np.ndarray   # (4, len(grid)): alpha_{m-1} W p^(a-m) + c_m - |phi^(m)|
    lower_slack: np.ndarray   # (4, len(grid)): |phi^(m)| - alpha_{m-1} W p^(a-m) - c'_m

    @property
    def max_upper_violation(self):
        return np.minimum(self.upper_slack.min(axis=1), 0.0)

    @property
    def max_lower_violation(self):
        return np.minimum(self.lower_slack.min(axis=1), 0.0)

    def ok(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.upper_slack >= -tol) and np.all(self.lower_slack >= -tol))

    def as_dict(self):
        return {
            f"m={m}": {
                "max_upper_violation": float(self.max_upper_violation[i]),
                "max_lower_violation": float(self.max_lower_violation[i]),
                "min_upper_slack": float(self.upper_slack[i].min()),
                "min_lower_slack": float(self.lower_slack[i].min()),
            }
            for i, m in enumerate(self.orders)
        }


def _envelope(alpha, W, m, p):
    return alpha_factor(alpha, m - 1) * W * p ** (alpha - m)


def verify_divergence_speed(spec: PhiSpec, grid=None) -> DivergenceReport:
    """Audit alpha_{m-1} W p^(a-m) + c'_m <= |phi^(m)(p)| <= alpha_{m-1} W p^(a-m) + c_m."""
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid > 1):
        raise ValueError("grid must be nonempty with values in (0, 1]")
    upper, lower = [], []
    for m in range(1, 5):
        mag = np.abs(eval_phi(spec, grid, m))
        env = _envelope(spec.alpha, spec.W, m, grid)
        # slacks are normalised by 1 + max(|phi^(m)|, envelope); near p = 1e-4
        # the fourth-order envelope is ~1e14 and absolute rounding dominates
        scale = 1.0 + np.maximum(mag, env)
        upper.append((env + spec.c[m - 1] - mag) / scale)
        lower.append((mag - env - spec.c_prime[m - 1]) / scale)
    return DivergenceReport((1, 2, 3, 4), np.array(upper), np.array(lower))


def fit_offsets(value_fn, deriv_fns, alpha, W, grid=None):
    """Tightest (c, c') making the sandwich hold on ``grid``."""
    grid = DEFAULT_GRID if grid is None else grid
    c, cp = [], []
    for m in range(1, 5):
        gap = np.abs(deriv_fns[m - 1](grid)) - _envelope(alpha, W, m, grid)
        c.append(float(gap.max()))
        cp.append(float(gap.min()))
    return tuple(c), tuple(cp)


def holder_check(spec: PhiSpec, pairs, tol: float = 1e-9) -> bool:
    """|phi(p) - phi(p')| <= (W/alpha)|p - p'|^alpha + |c_1 (p - p')| for every pair."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    p, q = pairs[:, 0], pairs[:, 1]
    lhs = np.abs(eval_phi(spec, p, 0) - eval_phi(spec, q, 0))
    d = np.abs(p - q)
    rhs = spec.W / spec.alpha * d ** spec.alpha + np.abs(spec.c[0] * d)
    return bool(np.all(lhs <= rhs + tol))


# ---------------------------------------------------------------------------
# Built-ins


def _falling(a, j):
    out = 1.0
    for i in range(j):
        out *= a - i
    return out


def _power_derivs(alpha):
    def make(m):
        coef = _falling(alpha, m)
        return lambda p: coef * p ** (alpha - m)
    return tuple(make(m) for m in range(1, 5))


def power_alpha(alpha: float) -> PhiSpec:
    """phi(p) = p**alpha; the sandwich holds with equality for W = alpha, c = c' = 0."""
    alpha = float(alpha)
    return PhiSpec(
        name=f"power:{alpha:g}", alpha=alpha, W=alpha, c=(0.0,) * 4, c_prime=(0.0,) * 4,
        value_fn=lambda p: p ** alpha, deriv_fns=_power_derivs(alpha),
        class_tag=CLASS_B, zero_value=0.0, params=("power", alpha))


def _leibniz_product(g_derivs, alpha):
    """Derivatives of g(p) * p**alpha given g_derivs[j](p) = g^(j)(p)."""
    def make(m):
        def d(p):
            total = 0.0
            for j in range(m + 1):
                total = total + math.comb(m, j) * g_derivs[j](p) * _falling(alpha, m - j) * p ** (alpha - m + j)
            return total
        return d
    return tuple(make(m) for m in range(1, 5))


def _product_spec(name, kind, g_derivs, c_param, alpha):
    value_fn = lambda p: g_derivs[0](p) * p ** alpha
    derivs = _leibniz_product(g_derivs, alpha)
    # leading behaviour near 0 is g(0) * p**alpha with g(0) = 1
    W = alpha
    c, cp = fit_offsets(value_fn, derivs, alpha, W)
    return PhiSpec(name=name, alpha=alpha, W=W, c=c, c_prime=cp, value_fn=value_fn,
                   deriv_fns=derivs, class_tag=CLASS_B, zero_value=0.0,
                   params=(kind, c_param, alpha))


def cos_power(c: float, alpha: float) -> PhiSpec:
    """phi(p) = cos(c p) p**alpha, offsets fitted on DEFAULT_GRID."""
    c, alpha = float(c), float(alpha)
    g = tuple((lambda j: (lambda p: c ** j * np.cos(c * p + j * np.pi / 2)))(j) for j in range(5))
    return _product_spec(f"cos_power:{c:g}:{alpha:g}", "cos_power", g, c, alpha)


def exp_power(c: float, alpha: float) -> PhiSpec:
    """phi(p) = exp(c p) p**alpha, offsets fitted on DEFAULT_GRID."""
    c, alpha = float(c), float(alpha)
    g = tuple((lambda j: (lambda p: c ** j * np.exp(c * p)))(j) for j in range(5))
    return _product_spec(f"exp_power:{c:g}:{alpha:g}", "exp_power", g, c, alpha)


def shannon_phi() -> PhiSpec:
    """phi(p) = -p ln p. Fourth derivative diverges like p^-3, i.e. alpha = 1."""
    derivs = (
        lambda p: -np.log(p) - 1.0,
        lambda p: -1.0 / p,
        lambda p: 1.0 / p ** 2,
        lambda p: -2.0 / p ** 3,
    )
    value_fn = lambda p: -p * np.log(p)
    c, cp = fit_offsets(value_fn, derivs, 1.0, 1.0)
    return PhiSpec(name="shannon", alpha=1.0, W=1.0, c=c, c_prime=cp, value_fn=value_fn,
                   deriv_fns=derivs, class_tag=CLASS_C, zero_value=0.0, params=("shannon",))


def log_phi() -> PhiSpec:
    """phi(p) = -ln p; |phi'| = 1/p, so alpha = 0 and no consistent estimator exists."""
    derivs = (
        lambda p: -1.0 / p,
        lambda p: 1.0 / p ** 2,
        lambda p: -2.0 / p ** 3,
        lambda p: 6.0 / p ** 4,
    )
    return PhiSpec(name="log", alpha=0.0, W=1.0, c=(0.0,) * 4, c_prime=(0.0,) * 4,
                   value_fn=lambda p: -np.log(p), deriv_fns=derivs, class_tag=CLASS_A,
                   zero_value=None, params=("log",))


_CATALOG = {
    "power": (power_alpha, 1),
    "cos_power": (cos_power, 2),
    "exp_power": (exp_power, 2),
    "shannon": (shannon_phi, 0),
    "log": (log_phi, 0),
}

_SPEC_CACHE: dict = {}


def get_spec(name: str) -> PhiSpec:
    """Resolve a catalog string such as ``"power:0.5"`` or ``"cos_power:1:0.5"``."""
    if name in _SPEC_CACHE:
        return _SPEC_CACHE[name]
    kind, *args = name.strip().split(":")
    if kind not in _CATALOG:
        raise KeyError(f"unknown phi {kind!r}; known: {sorted(_CATALOG)}")
    factory, nargs = _CATALOG[kind]
    if len(args) != nargs:
        raise ValueError(f"{kind} takes {nargs} parameter(s), got {len(args)}")
    spec = factory(*(float(a) for a in args))
    _SPEC_CACHE[name] = spec
    return spec


def catalog_names() -> Sequence[str]:
    return tuple(_CATALOG)
