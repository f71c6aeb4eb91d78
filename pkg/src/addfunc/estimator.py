"""Split-sample hybrid estimator of theta(P; phi) and simple baselines.

For each symbol the second histogram N~' picks a branch: the unbiased
best-polynomial estimator when N~'_i < 2 Delta, the bias-corrected plug-in on
the smoothed phi otherwise. Values are computed from the first histogram N~
only, summed, and clamped to [theta_inf, theta_sup].
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import mpmath
import numpy as np
from scipy import optimize

from .phi_models import PhiSpec, eval_phi, get_spec, shannon_phi, theta_bounds
from .poly_approx import ApproxPoly, PrecisionError, best_approx, monomial_to_factorial
from .sampling import Histogram, SplitHistograms, split_counts
from .smoothing import SmoothedPhi, smoothed_eval

TUNED_C1 = 0.8
TUNED_C2 = 1.5


@dataclass(frozen=True)
class EstimatorConfig:
    C1: float = TUNED_C1
    C2: float = TUNED_C2
    mode: str = "tuned"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("tuned", "theory"):
            raise ValueError("mode must be 'tuned' or 'theory'")
        if self.C1 <= 0 or self.C2 <= 0:
            raise ValueError("C1 and C2 must be positive")


@dataclass
class ConfigReport:
    valid: bool
    delta: float
    degree: int
    constraint_value: float
    reasons: list = field(default_factory=list)


def constraint_value(C1: float, C2: float) -> float:
    """Left side of 6 C1 ln2 + 4 sqrt(C1 C2)(1 + ln2) < 1."""
    return 6 * C1 * math.log(2) + 4 * math.sqrt(C1 * C2) * (1 + math.log(2))


def config_validate(cfg: EstimatorConfig, n: int) -> ConfigReport:
    if n < 2:
        raise ValueError("n must be >= 2")
    delta = cfg.C2 * math.log(n)
    degree = int(math.floor(cfg.C1 * math.log(n)))
    cv = constraint_value(cfg.C1, cfg.C2)
    reasons = []
    if cfg.mode == "theory":
        if not cv < 1:
            reasons.append(f"6 C1 ln2 + 4 sqrt(C1 C2)(1+ln2) = {cv:.4g} >= 1")
        if not cfg.C2 > 16:
            reasons.append(f"C2 = {cfg.C2:g} <= 16")
    else:
        if delta < 1:
            reasons.append(f"Delta = {delta:.4g} < 1")
        if degree < 1:
            reasons.append(f"L = {degree} < 1")
    return ConfigReport(not reasons, delta, degree, cv, reasons)


def falling_factorial(N: int, m: int) -> int:
    """(N)_m = N (N-1) ... (N-m+1); 0 when m > N."""
    if N < 0 or m < 0:
        raise ValueError("N and m must be nonnegative")
    if m > N:
        return 0
    return math.perm(N, m)


def phi_range(spec: PhiSpec, right: float):
    """(inf, sup) of phi over [0, right]: dense grid, endpoints, bounded refinement."""
    grid = np.unique(np.concatenate([[0.0], right * np.logspace(-12, 0, 200),
                                     np.linspace(0.0, right, 201)]))
    vals = eval_phi(spec, grid, 0)
    out = []
    for sign in (1.0, -1.0):
        i = int(np.argmin(sign * vals))
        best = sign * vals[i]
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        if hi > lo:
            res = optimize.minimize_scalar(lambda p: sign * float(eval_phi(spec, p, 0)),
                                           bounds=(lo, hi), method="bounded")
            best = min(best, res.fun)
        out.append(sign * best)
    return float(out[0]), float(out[1])


# ---------------------------------------------------------------------------
# per-symbol estimators


class FactorialPoly:
    """g(N) = sum_m b_m (N)_m evaluated exactly in extended precision."""

    def __init__(self, factorial_coeffs, dps: int = 60):
        # private context: mpmath.workdps mutates global state and is not thread safe
        self._ctx = mpmath.MPContext()
        self._ctx.dps = dps
        self.coeffs = tuple(self._ctx.mpf(b) for b in factorial_coeffs)
        self._cache: dict = {}

    def value(self, N: int) -> float:
        N = int(N)
        if N not in self._cache:
            ctx = self._ctx
            total = ctx.mpf(0)
            for m, b in enumerate(self.coeffs):
                if m > N:
                    break
                total += b * math.perm(N, m)
            v = float(total)
            if not math.isfinite(v):
                raise PrecisionError(f"non-finite polynomial estimate at N={N}")
            self._cache[N] = v
        return self._cache[N]

    def __call__(self, counts):
        counts = np.asarray(counts, dtype=np.int64)
        uniq, inv = np.unique(counts, return_inverse=True)
        table = np.array([self.value(u) for u in uniq])
        return table[inv].reshape(counts.shape)


def phi_poly_est(N_i, poly, clamp, n: Optional[int] = None):
    """Clamped unbiased polynomial estimate.

    ``poly`` is a FactorialPoly or an ApproxPoly (then ``n`` is required).
    """
    if isinstance(poly, ApproxPoly):
        if n is None:
            raise ValueError("n is required to convert an ApproxPoly")
        poly = FactorialPoly(monomial_to_factorial(poly.monomial_mp or poly.monomial_coeffs, n))
    raw = poly(N_i)
    return np.clip(raw, clamp[0], clamp[1])


def phi_plugin_est(N_i, sphi: SmoothedPhi, n: int):
    """phibar(N/n) - N/(2 n^2) phibar''(N/n)."""
    N = np.asarray(N_i, dtype=float)
    p = N / n
    return smoothed_eval(sphi, p, 0) - N / (2.0 * n * n) * smoothed_eval(sphi, p, 2)


# ---------------------------------------------------------------------------
# hybrid


@dataclass
class ThetaEstimate:
    theta_hat: float
    theta_tilde: float
    per_symbol_branch: np.ndarray   # "poly" / "plugin"
    diagnostics: dict

    @property
    def branch_counts(self):
        return {"poly": int(np.count_nonzero(self.per_symbol_branch == "poly")),
                "plugin": int(np.count_nonzero(self.per_symbol_branch == "plugin"))}


class HybridEstimator:
    """All (spec, n, k, config)-dependent pieces, built once and reused."""

    def __init__(self, spec: PhiSpec, n: int, k: int, cfg: EstimatorConfig = EstimatorConfig()):
        report = config_validate(cfg, n)
        if not report.valid:
            raise ValueError("invalid estimator config: " + "; ".join(report.reasons))
        self.spec, self.n, self.k, self.cfg = spec, int(n), int(k), cfg
        self.delta = report.delta
        self.degree = report.degree
        # intervals are capped at 1 where phi stops being defined
        self.poly_right = min(4 * self.delta / n, 1.0)
        self.clamp_right = min(self.delta / n, 1.0)
        self.poly = _cached_best_approx(spec, self.degree, self.poly_right)
        self.gpoly = FactorialPoly(monomial_to_factorial(self.poly.monomial_mp, self.n))
        self.clamp = phi_range(spec, self.clamp_right)
        self.sphi = SmoothedPhi(spec, self.clamp_right)
        self.theta_inf, self.theta_sup = theta_bounds(spec, k)

    def __call__(self, split: SplitHistograms) -> ThetaEstimate:
        if split.k != self.k:
            raise ValueError(f"histogram has k={split.k}, estimator built for k={self.k}")
        N = split.first.counts
        use_poly = split.second.counts < 2 * self.delta
        values = np.empty(N.size)
        if use_poly.any():
            values[use_poly] = np.clip(self.gpoly(N[use_poly]), *self.clamp)
        if (~use_poly).any():
            values[~use_poly] = phi_plugin_est(N[~use_poly], self.sphi, self.n)
        tilde = float(values.sum())
        hat = min(max(tilde, self.theta_inf), self.theta_sup)
        branches = np.where(use_poly, "poly", "plugin")
        return ThetaEstimate(hat, tilde, branches, self.diagnostics())

    def diagnostics(self):
        return {
            "n": self.n, "k": self.k, "delta": self.delta, "degree": self.degree,
            "poly_interval": [0.0, self.poly_right],
            "poly_uniform_error": self.poly.uniform_error,
            "phi_clamp": list(self.clamp),
            "theta_bounds": [self.theta_inf, self.theta_sup],
        }


@lru_cache(maxsize=256)
def _cached_best_approx(spec, L, right):
    return best_approx(spec, L, right)


@lru_cache(maxsize=64)
def hybrid_for(spec: PhiSpec, n: int, k: int, cfg: EstimatorConfig) -> HybridEstimator:
    return HybridEstimator(spec, n, k, cfg)


def estimate_theta(split: SplitHistograms, spec: PhiSpec,
                   cfg: EstimatorConfig = EstimatorConfig()) -> ThetaEstimate:
    return hybrid_for(spec, split.n_nominal, split.k, cfg)(split)


# ---------------------------------------------------------------------------
# baselines


def plugin_baseline(N: Histogram, spec: PhiSpec) -> float:
    """sum_i phi(N_i / n) with n the nominal sample size."""
    if N.total < 1:
        raise ValueError("plugin baseline needs at least one sample")
    return float(np.sum(eval_phi(spec, N.counts / N.n_nominal, 0)))


_SHANNON = shannon_phi()


def miller_madow_baseline(N: Histogram) -> float:
    """Shannon plug-in plus (observed support - 1) / (2n)."""
    support = int(np.count_nonzero(N.counts))
    return plugin_baseline(N, _SHANNON) + (support - 1) / (2.0 * N.n_nominal)


# ---------------------------------------------------------------------------
# JSON request / response


def estimate_request(request: dict) -> dict:
    """Run the estimator on a JSON-style request.

    Request keys: ``spec`` (catalog name), ``config`` (C1, C2, mode, seed) and
    either ``split`` ({first, second}) or ``histogram`` ({k, n_nominal, counts}).
    A single histogram is split by fair coins, giving nominal size total / 2.
    """
    spec = get_spec(request["spec"])
    cfg = EstimatorConfig(**request.get("config", {}))
    if "split" in request:
        split = SplitHistograms.from_dict(request["split"])
        merged = Histogram(split.first.counts + split.second.counts, 2 * split.n_nominal)
    else:
        merged = Histogram.from_dict(request["histogram"])
        split = split_counts(merged, cfg.seed)
    baselines = {"plugin": plugin_baseline(merged, spec)}
    if spec.params and spec.params[0] == "shannon":
        baselines["miller_madow"] = miller_madow_baseline(merged)
    out = {"spec": spec.name, "config": asdict(cfg), "baselines": baselines,
           "n_nominal": split.n_nominal, "k": split.k}
    report = config_validate(cfg, max(split.n_nominal, 2))
    out["validation"] = asdict(report)
    if split.n_nominal < 2 or not report.valid:
        out["theta_hat"] = None
        out["error"] = "invalid config for this sample size"
        return out
    est = estimate_theta(split, spec, cfg)
    out.update({
        "theta_hat": est.theta_hat,
        "theta_tilde": est.theta_tilde,
        "branch_counts": est.branch_counts,
        "per_symbol_branch": est.per_symbol_branch.tolist(),
        "diagnostics": est.diagnostics,
    })
    return out
