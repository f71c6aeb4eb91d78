"""Distribution families, histograms and seeded samplers.

Seeding contract: a master seed (int or SeedSequence) spawns one stream per
trial (:func:`trial_seed`), and inside a trial one stream per block of
``BLOCK`` symbols. Draws therefore do not depend on how trials are scheduled.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .phi_models import DistributionModel

BLOCK = 1 << 16

SeedLike = Union[int, np.random.SeedSequence, None]


class DistributionParseError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


# ---------------------------------------------------------------------------
# histograms


@dataclass(frozen=True, eq=False)
class Histogram:
    counts: np.ndarray
    n_nominal: int

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise ValueError("counts must be 1-d")
        if counts.size and (not np.all(np.isfinite(counts)) or np.any(counts < 0)
                            or np.any(counts != np.round(counts))):
            raise ValueError("counts must be nonnegative integers")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "n_nominal", int(self.n_nominal))

    @property
    def k(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self):
        return {"k": self.k, "n_nominal": self.n_nominal, "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, d):
        if "counts" not in d:
            raise DistributionParseError("histogram JSON needs a 'counts' array")
        counts = np.asarray(d["counts"])
        if counts.size == 0:
            raise DistributionParseError("histogram has no counts")
        if "k" in d and int(d["k"]) != counts.size:
            raise DistributionParseError(f"k={d['k']} but {counts.size} counts given")
        n = d.get("n_nominal", d.get("n", int(counts.sum())))
        return cls(counts, int(n))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Histogram":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DistributionParseError(str(exc), line=exc.lineno) from exc
        return cls.from_dict(d)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# n_nominal={self.n_nominal}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["symbol", "count"])
        for i, c in enumerate(self.counts, start=1):
            w.writerow([i, int(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Histogram":
        n_nominal = None
        rows = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "n_nominal=" in line:
                    n_nominal = int(line.split("n_nominal=")[1])
                continue
            if line.lower().startswith("symbol"):
                continue
            parts = line.split(",")
            try:
                value = float(parts[-1])
            except ValueError:
                raise DistributionParseError(f"not a count: {raw!r}", line=lineno) from None
            if value < 0 or value != int(value):
                raise DistributionParseError(f"not a nonnegative integer: {raw!r}", line=lineno)
            rows.append(int(value))
        if not rows:
            raise DistributionParseError("no counts found")
        counts = np.array(rows)
        return cls(counts, n_nominal if n_nominal is not None else int(counts.sum()))


@dataclass(frozen=True, eq=False)
class SplitHistograms:
    """(N~, N~') pair; estimates use ``first``, branch selection ``second``."""

    first: Histogram
    second: Histogram
    n_nominal: int

    def __post_init__(self):
        if self.first.k != self.second.k:
            raise ValueError("split histograms must share k")

    @property
    def k(self) -> int:
        return self.first.k

    def to_dict(self):
        return {"n_nominal": self.n_nominal, "first": self.first.to_dict(),
                "second": self.second.to_dict()}

    @classmethod
    def from_dict(cls, d):
        first = Histogram.from_dict(d["first"])
        second = Histogram.from_dict(d["second"])
        return cls(first, second, int(d.get("n_nominal", first.n_nominal)))


def split_counts(hist: Histogram, seed: SeedLike = 0) -> SplitHistograms:
    """Assign each observed sample to one half by a fair coin.

    The nominal size of each half is total / 2, so for Poisson(2n) input the
    halves are independent Poisson(n p_i) histograms.
    """
    rng = np.random.default_rng(_as_seedseq(seed))
    first = rng.binomial(hist.counts, 0.5)
    second = hist.counts - first
    n = max(hist.total // 2, 1)
    return SplitHistograms(Histogram(first, n), Histogram(second, n), n)


def samples_to_histogram(samples, k=None) -> Histogram:
    """Histogram of raw symbols in 1..k."""
    samples = np.asarray(samples)
    if samples.size == 0:
        raise DistributionParseError("no samples")
    if np.any(samples < 1) or (k is not None and np.any(samples > k)):
        raise DistributionParseError(f"samples must lie in 1..{k if k is not None else 'k'}")
    k = int(samples.max()) if k is None else int(k)
    counts = np.bincount(samples.astype(np.int64) - 1, minlength=k)
    return Histogram(counts, int(samples.size))


def read_samples(text: str):
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        for tok in raw.replace(",", " ").split():
            try:
                values.append(int(tok))
            except ValueError:
                raise DistributionParseError(f"not an integer symbol: {tok!r}", line=lineno) from None
    if not values:
        raise DistributionParseError("no samples found")
    return np.array(values)


# ---------------------------------------------------------------------------
# distribution families


def _zipf(k, s):
    w = 1.0 / np.arange(1, k + 1) ** s
    return w / w.sum()


def two_point_pair(k: int, eps: float):
    """The Le Cam pair P = (1/2, 1/(2(k-1)), ...), Q = ((1+eps)/2, (1-eps)/(2(k-1)), ...)."""
    if k < 2:
        raise ValueError("two_point needs k >= 2")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    tail = np.full(k - 1, 1.0 / (2 * (k - 1)))
    P = np.concatenate([[0.5], tail])
    Q = np.concatenate([[0.5 * (1 + eps)], tail * (1 - eps)])
    return DistributionModel(P / P.sum()), DistributionModel(Q / Q.sum())


def read_custom(path) -> np.ndarray:
    text = Path(path).read_text()
    weights = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            w = float(line)
        except ValueError:
            raise DistributionParseError(f"not a number: {line!r}", line=lineno) from None
        if not np.isfinite(w) or w < 0:
            raise DistributionParseError(f"negative or non-finite weight {line!r}", line=lineno)
        weights.append(w)
    weights = np.array(weights)
    if weights.size == 0 or weights.sum() <= 0:
        raise DistributionParseError("weights cannot be normalised")
    return weights / weights.sum()


def make_distribution(family: str, k: int = None, param: float = None):
    """Build a distribution from a family name.

    ``family`` may carry its parameter inline (``"zipf:1"``, ``"two_point:0.1"``,
    ``"custom:path.txt"``). ``two_point`` returns the (P, Q) pair; every other
    family returns one DistributionModel.
    """
    name, _, inline = family.partition(":")
    if inline and name != "custom":
        param = float(inline)
    if name == "custom":
        probs = read_custom(inline or param)
        if k is not None and probs.size != k:
            raise DistributionParseError(f"custom file has {probs.size} entries, expected k={k}")
        return DistributionModel(probs)
    if k is None or k < 1:
        raise ValueError("k must be >= 1")
    if name == "uniform":
        return DistributionModel(np.full(k, 1.0 / k))
    if name == "zipf":
        s = 1.0 if param is None else param
        if s <= 0:
            raise ValueError("zipf exponent must be > 0")
        return DistributionModel(_zipf(k, s))
    if name == "dirac":
        probs = np.zeros(k)
        probs[0] = 1.0
        return DistributionModel(probs)
    if name == "two_point":
        return two_point_pair(k, param)
    if name == "half_mass":
        if k == 1:
            return make_distribution("dirac", 1)
        return DistributionModel(np.concatenate([[0.5], np.full(k - 1, 0.5 / (k - 1))]))
    if name == "half_support":
        m = (k + 1) // 2
        probs = np.zeros(k)
        probs[:m] = 1.0 / m
        return DistributionModel(probs)
    raise ValueError(f"unknown family {family!r}")


def family_members(family: str, k: int, n: int):
    """Expand a family name into labelled distributions.

    ``two_point`` without a parameter uses eps = 1/sqrt(n) and yields both
    members of the pair.
    """
    name, _, inline = family.partition(":")
    if name == "two_point":
        eps = float(inline) if inline else 1.0 / np.sqrt(n)
        eps = min(eps, 0.5 - 1e-12)
        P, Q = two_point_pair(k, eps)
        return [(f"two_point:{eps:g}:P", P), (f"two_point:{eps:g}:Q", Q)]
    return [(family, make_distribution(family, k))]


DEFAULT_FAMILIES = ("uniform", "zipf:0.5", "zipf:1", "zipf:2", "two_point",
                    "half_mass", "half_support", "dirac")


# ---------------------------------------------------------------------------
# seeding and sampling


def _as_seedseq(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def trial_seed(seed: SeedLike, trial: int) -> np.random.SeedSequence:
    root = _as_seedseq(seed)
    return np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + (int(trial),))


def _child(root: np.random.SeedSequence, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + tuple(key))
    return np.random.default_rng(ss)


def sample_multinomial(P: DistributionModel, n: int, seed: SeedLike = None) -> Histogram:
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = _child(_as_seedseq(seed), 0)
    return Histogram(rng.multinomial(n, P.probs), n)


def sample_poisson_split(P: DistributionModel, n: int, seed: SeedLike = None,
                         method: str = "direct") -> SplitHistograms:
    """Two independent Poisson(n p_i) histograms.

    ``method="direct"`` draws each count per symbol block; ``"thinning"``
    draws n' ~ Poisson(2n) samples and splits them with fair coins.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    root = _as_seedseq(seed)
    probs = P.probs
    if method == "direct":
        first = np.empty(probs.size, dtype=np.int64)
        second = np.empty(probs.size, dtype=np.int64)
        lam = n * probs
        for b, start in enumerate(range(0, probs.size, BLOCK)):
            rng = _child(root, 1, b)
            sl = slice(start, start + BLOCK)
            first[sl] = rng.poisson(lam[sl])
            second[sl] = rng.poisson(lam[sl])
    elif method == "thinning":
        rng = _child(root, 2)
        n_prime = rng.poisson(2 * n)
        total = rng.multinomial(n_prime, probs)
        first = rng.binomial(total, 0.5)
        second = total - first
    else:
        raise ValueError(f"unknown method {method!r}")
    return SplitHistograms(Histogram(first, n), Histogram(second, n), n)
