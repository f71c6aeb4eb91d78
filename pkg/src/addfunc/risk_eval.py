"""Monte Carlo risk, worst case over finite families, Le Cam bound, rate fits."""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .estimator import (EstimatorConfig, hybrid_for, miller_madow_baseline,
                        plugin_baseline)
from .phi_models import DistributionModel, PhiSpec, theta_of
from .sampling import (DEFAULT_FAMILIES, family_members, sample_multinomial,
                       sample_poisson_split, trial_seed, two_point_pair)

Z95 = 1.959963984540054
ESTIMATORS = ("hybrid", "plugin", "miller_madow", "oracle")


class RateFitError(ValueError):
    pass


@dataclass
class NamedEstimator:
    """``fn`` maps the sampled data to an estimate; ``sampling`` is
    "split" (two Poisson(n p) histograms) or "multinomial" (n draws)."""

    name: str
    sampling: str
    fn: Callable


SAMPLINGS = ("split", "multinomial")


def make_estimator(name: str, spec: PhiSpec, n: int, k: int,
                   cfg: EstimatorConfig = EstimatorConfig(), P: DistributionModel = None,
                   sampling: str = "split"):
    """Build a named estimator.

    With ``sampling="split"`` every estimator sees the same Poissonized pair, so
    runs sharing a seed are paired draw for draw; the baselines use the first
    histogram, exactly the data the hybrid estimates from. ``"multinomial"``
    feeds the baselines n i.i.d. draws instead (not available for the hybrid).
    """
    if sampling not in SAMPLINGS:
        raise ValueError(f"sampling must be one of {SAMPLINGS}")
    if name == "hybrid":
        if sampling != "split":
            raise ValueError("the hybrid estimator needs split Poisson samples")
        est = hybrid_for(spec, n, k, cfg)
        return NamedEstimator(name, sampling, lambda s: est(s).theta_hat)
    pick = (lambda s: s.first) if sampling == "split" else (lambda h: h)
    if name == "plugin":
        return NamedEstimator(name, sampling, lambda d: plugin_baseline(pick(d), spec))
    if name == "miller_madow":
        return NamedEstimator(name, sampling, lambda d: miller_madow_baseline(pick(d)))
    if name == "oracle":
        if P is None:
            raise ValueError("oracle estimator needs the true distribution")
        truth = theta_of(spec, P)
        return NamedEstimator(name, sampling, lambda _d: truth)
    raise KeyError(f"unknown estimator {name!r}; known: {ESTIMATORS}")


@dataclass
class RiskResult:
    mse: float
    ci_halfwidth: float
    trials: int
    failures: int = 0
    errors: Optional[np.ndarray] = field(default=None, repr=False)


def _one_trial(est: NamedEstimator, P, n, seed, t, truth):
    ss = trial_seed(seed, t)
    data = sample_poisson_split(P, n, ss) if est.sampling == "split" else sample_multinomial(P, n, ss)
    return float(est.fn(data)) - truth


def mc_risk(estimator, P: DistributionModel, spec: PhiSpec, n: int, trials: int = 200,
            seed=0, cfg: EstimatorConfig = EstimatorConfig(), max_trials: Optional[int] = None,
            rel_ci: float = 0.1, workers: int = 1, sampling: str = "split") -> RiskResult:
    """Mean squared error of ``estimator`` over ``trials`` seeded draws.

    Trial t always uses stream trial_seed(seed, t), so two estimators run with
    the same seed see paired data. With ``max_trials`` the run is extended in
    chunks of ``trials`` until the 95% half-width is below ``rel_ci * mse``.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    if isinstance(estimator, str):
        estimator = make_estimator(estimator, spec, n, P.k, cfg, P, sampling)
    truth = theta_of(spec, P)
    errors, failures = [], 0
    done = 0
    target = trials
    while True:
        idx = range(done, target)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(lambda t: _safe(estimator, P, n, seed, t, truth), idx))
        else:
            results = [_safe(estimator, P, n, seed, t, truth) for t in idx]
        for r in results:
            if r is None:
                failures += 1
            else:
                errors.append(r)
        done = target
        err = np.asarray(errors)
        mse, half = _mse_ci(err)
        if max_trials is None or done >= max_trials or half <= rel_ci * mse:
            break
        target = min(done + trials, max_trials)
    if failures:
        warnings.warn(f"{failures} trial(s) failed and were excluded", RuntimeWarning)
    return RiskResult(mse, half, len(errors), failures, err)


def _safe(est, P, n, seed, t, truth):
    try:
        return _one_trial(est, P, n, seed, t, truth)
    except (ArithmeticError, ValueError):
        return None


def _mse_ci(err):
    if err.size == 0:
        return math.nan, math.nan
    sq = err ** 2
    mse = float(sq.mean())
    half = float(Z95 * sq.std(ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else math.inf
    return mse, half


@dataclass
class WorstCase:
    worst_family: str
    mse: float
    ci_halfwidth: float
    entries: dict


def worst_case_risk(estimator_name: str, families: Sequence[str], spec: PhiSpec, n: int, k: int,
                    trials: int = 200, seed=0, cfg: EstimatorConfig = EstimatorConfig(),
                    max_trials: Optional[int] = None) -> WorstCase:
    """Largest mc_risk over the members of ``families``."""
    if not families:
        raise ValueError("family list is empty")
    entries = {}
    for fam in families:
        for label, P in family_members(fam, k, n):
            entries[label] = mc_risk(estimator_name, P, spec, n, trials, seed, cfg, max_trials)
    label = max(entries, key=lambda lab: entries[lab].mse)
    return WorstCase(label, entries[label].mse, entries[label].ci_halfwidth, entries)


# ---------------------------------------------------------------------------
# Le Cam


@dataclass
class LeCamBound:
    bound: float
    kl: float
    theta_gap: float
    eps: float


def kl_divergence(P: DistributionModel, Q: DistributionModel) -> float:
    p, q = P.probs, Q.probs
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def lecam_two_point_bound(spec: PhiSpec, n: int, k: int, eps: Optional[float] = None) -> LeCamBound:
    """1/4 (theta(P) - theta(Q))^2 exp(-n KL(P, Q)) for the two-point pair.

    KL(P, Q) = -1/2 ln(1 - eps^2); eps defaults to 1/sqrt(n).
    """
    if k < 3:
        raise ValueError("k must be >= 3")
    if eps is None:
        eps = 1.0 / math.sqrt(n)
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    P, Q = two_point_pair(k, eps)
    kl = -0.5 * math.log1p(-eps * eps)
    gap = theta_of(spec, Q) - theta_of(spec, P)
    return LeCamBound(0.25 * gap * gap * math.exp(-n * kl), kl, gap, eps)


# ---------------------------------------------------------------------------
# reports and rate fits


CSV_FIELDS = ("n", "k", "spec", "estimator", "family", "mse", "ci", "trials", "seed")


@dataclass
class RiskEntry:
    n: int
    k: int
    spec: str
    estimator: str
    family: str
    mse: float
    ci: float
    trials: int
    seed: int


@dataclass
class RateFit:
    predicted_rate_formula: str
    slope: float
    intercept: float
    r_squared: float
    cells: int


@dataclass
class RiskReport:
    entries: list = field(default_factory=list)
    rate_fit: Optional[RateFit] = None
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for e in self.entries:
            w.writerow([e.n, e.k, e.spec, e.estimator, e.family, repr(e.mse), repr(e.ci),
                        e.trials, e.seed])
        return buf.getvalue()

    def to_json(self) -> str:
        d = {"config": self.config, "entries": [asdict(e) for e in self.entries]}
        if self.rate_fit is not None:
            d["rate_fit"] = asdict(self.rate_fit)
        return json.dumps(d, indent=2, sort_keys=True)

    def worst_by_cell(self, estimator: Optional[str] = None):
        """{(n, k): max mse} over families (optionally for one estimator)."""
        cells = {}
        for e in self.entries:
            if estimator is not None and e.estimator != estimator:
                continue
            key = (e.n, e.k)
            if key not in cells or e.mse > cells[key].mse:
                cells[key] = e
        return cells


def predicted_rate(n, k, alpha):
    """k^2 / (n ln n)^(2 alpha) + k^(2 - 2 alpha) / n."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return k ** 2 / (n * np.log(n)) ** (2 * alpha) + k ** (2 - 2 * alpha) / n


def rate_fit(report: RiskReport, alpha: float, estimator: Optional[str] = None) -> RateFit:
    """OLS of log(worst mse per cell) on log(predicted rate)."""
    cells = report.worst_by_cell(estimator)
    if len(cells) < 4:
        raise RateFitError(f"need at least 4 distinct (n, k) cells, got {len(cells)}")
    keys = sorted(cells)
    x = np.log(predicted_rate([c[0] for c in keys], [c[1] for c in keys], alpha))
    mse = np.array([cells[c].mse for c in keys])
    if not np.all(np.isfinite(mse) & (mse > 0)):
        raise RateFitError("mse must be positive and finite in every cell")
    y = np.log(mse)
    if np.ptp(x) == 0:
        raise RateFitError("predicted rate is constant across cells")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    formula = f"k^2/(n ln n)^{2 * alpha:g} + k^{2 - 2 * alpha:g}/n"
    fit = RateFit(formula, float(slope), float(intercept), float(r2), len(keys))
    report.rate_fit = fit
    return fit


def run_grid(ns, ks, estimators, families, spec: PhiSpec, trials=200, seed=0,
             cfg: EstimatorConfig = EstimatorConfig(), alpha: Optional[float] = None,
             max_trials: Optional[int] = None, workers: int = 1) -> RiskReport:
    """One entry per (n, k, estimator, family member); failed cells are skipped
    and listed under config["failures"]."""
    report = RiskReport(config={
        "n": list(ns), "k": list(ks), "estimators": list(estimators),
        "families": list(families), "spec": spec.name, "trials": trials, "seed": seed,
        "C1": cfg.C1, "C2": cfg.C2, "mode": cfg.mode, "max_trials": max_trials,
    })
    failures = []
    for n in ns:
        for k in ks:
            for est in estimators:
                for fam in families:
                    try:
                        members = family_members(fam, k, n)
                    except ValueError as exc:
                        failures.append({"n": n, "k": k, "estimator": est, "family": fam, "error": str(exc)})
                        continue
                    for label, P in members:
                        try:
                            r = mc_risk(est, P, spec, n, trials, seed, cfg, max_trials,
                                        workers=workers)
                        except (ArithmeticError, ValueError, KeyError) as exc:
                            failures.append({"n": n, "k": k, "estimator": est, "family": label,
                                             "error": str(exc)})
                            continue
                        report.entries.append(RiskEntry(n, k, spec.name, est, label, r.mse,
                                                        r.ci_halfwidth, r.trials, seed))
    report.config["failures"] = failures
    if alpha is not None:
        rate_fit(report, alpha)
    return report
