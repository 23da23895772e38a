"""Numerics: the exponent function f, tail bounds, and log-log fits."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import UsageError

GRID_POINTS = 10_001
_INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class FLambdaResult:
    lam: float
    value: float
    argmax_phi: float
    tolerance: float


def ratio(phi, lam):
    """log((1-phi)/(lam+phi)) / log((1-phi)/phi); works on scalars and arrays."""
    return np.log((1 - phi) / (lam + phi)) / np.log((1 - phi) / phi)


def golden_max(fn, lo: float, hi: float, tol: float) -> float:
    """Golden-section search for the maximizer of a unimodal ``fn`` on [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
    return (a + b) / 2


def f_lambda(lam: float, tol: float = 1e-9) -> FLambdaResult:
    """Maximize the ratio over phi in [tol, (1-lam)/2].

    A dense grid locates the peak, then golden-section search narrows the
    bracket around it to width ``tol``.  The ratio tends to 0 as phi -> 0,
    so cutting the interval at ``tol`` loses nothing.
    """
    lam = float(lam)
    if not 0 < lam < 1:
        raise UsageError(f"lambda must lie in (0, 1), got {lam}")
    if tol <= 0:
        raise UsageError("tol must be positive")
    hi = (1 - lam) / 2
    lo = min(tol, hi / GRID_POINTS)
    grid = np.linspace(lo, hi, GRID_POINTS)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = ratio(grid, lam)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    phi = golden_max(lambda x: float(ratio(x, lam)), a, b, tol)
    value = float(ratio(phi, lam))
    if value < vals[i]:
        phi, value = float(grid[i]), float(vals[i])
    return FLambdaResult(lam, value, phi, tol)


def f_composite(lam: float, tol: float = 1e-9) -> FLambdaResult:
    """f evaluated at 2*lam/(1-lam), the parameter seen by the embedded instance."""
    lam = float(lam)
    if not 0 < lam < 1 / 3:
        raise UsageError(f"lambda must lie in (0, 1/3), got {lam}")
    inner = 2 * lam / (1 - lam)
    if not 0 < inner < 1:
        raise UsageError("2*lambda/(1-lambda) left (0, 1)")
    return f_lambda(inner, tol)


def chernoff_tail(k: int, eps: float) -> float:
    """2*exp(-eps^2 k / 6): bound on Pr(|X - k/2| >= eps*k/2) for X ~ Bin(k, 1/2)."""
    if k < 1:
        raise UsageError("k must be at least 1")
    if not 0 < eps < 1:
        raise UsageError("eps must lie in (0, 1)")
    return 2 * math.exp(-eps * eps * k / 6)


def _balanced_range(k: int, eps) -> tuple[int, int]:
    eps = Fraction(eps) if not isinstance(eps, float) else Fraction(eps).limit_denominator(10**9)
    lo = (Fraction(1, 2) - eps) * k
    hi = (Fraction(1, 2) + eps) * k
    return max(0, math.ceil(lo)), min(k, math.floor(hi))


def exact_balanced_probability(set_size: int, eps) -> float:
    """Pr(white count in [(1/2-eps)k, (1/2+eps)k]) by summing the binomial pmf."""
    if set_size < 1:
        raise UsageError("set_size must be positive")
    lo, hi = _balanced_range(set_size, eps)
    if lo > hi:
        return 0.0
    total = sum(math.comb(set_size, w) for w in range(lo, hi + 1))
    return float(Fraction(total, 2 ** set_size))


def balanced_probability_estimate(set_size: int, eps, trials: int, seed: int) -> float:
    """Monte Carlo estimate of the probability a uniform coloring is eps-balanced."""
    if set_size < 1:
        raise UsageError("set_size must be positive")
    if trials < 1:
        raise UsageError("trials must be positive")
    if eps < 0:
        raise UsageError("eps must be nonnegative")
    lo, hi = _balanced_range(set_size, eps)
    rng = np.random.default_rng(seed)
    whites = rng.binomial(set_size, 0.5, size=trials)
    return float(np.mean((whites >= lo) & (whites <= hi)))


# -- experiment reports and fits --------------------------------------------
@dataclass
class ScalingFit:
    slope: float
    intercept: float
    band: float
    interval: tuple[float, float]


@dataclass
class ExperimentReport:
    family: str
    sizes: list[int]
    records: list[dict] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    fit: ScalingFit | None = None

    def lengths(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {s: [] for s in self.sizes}
        for r in self.records:
            out.setdefault(r["size"], []).append(r["steps"])
        return out

    def aggregates(self) -> dict[int, dict]:
        agg = {}
        for size, ls in self.lengths().items():
            if not ls:
                continue
            a = np.asarray(ls, dtype=float)
            q = np.quantile(a, [0.1, 0.5, 0.9])
            agg[size] = {"count": len(ls), "mean": float(a.mean()), "min": int(a.min()),
                         "max": int(a.max()), "q10": float(q[0]), "median": float(q[1]),
                         "q90": float(q[2])}
        return agg

    def to_json_dict(self) -> dict:
        return {"family": self.family, "sizes": self.sizes, "params": self.params,
                "records": self.records,
                "aggregates": {str(k): v for k, v in self.aggregates().items()},
                "fit": None if self.fit is None else asdict(self.fit)}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "n", "seed", "steps", "stabilized"])
        for r in self.records:
            w.writerow([self.family, r["n"], r["seed"], r["steps"], str(r["stabilized"]).lower()])
        return buf.getvalue()


def _fit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)


def scaling_fit(report: ExperimentReport, boot: int = 2000, seed: int = 0) -> ScalingFit:
    """Least squares of log(max length per size) on log(size), with a bootstrap band.

    The bootstrap resamples seeds within each size and refits; ``band`` is
    half the width of the central 95% interval of the resampled slopes.
    """
    groups = {s: np.asarray(ls, dtype=float) for s, ls in report.lengths().items() if ls}
    if len(groups) < 3:
        raise UsageError("a scaling fit needs at least 3 distinct sizes")
    if any(len(v) < 5 for v in groups.values()):
        raise UsageError("a scaling fit needs at least 5 seeds per size")
    if any(v.max() <= 0 for v in groups.values()):
        raise UsageError("every size needs at least one positive length")
    sizes = sorted(groups)
    xs = np.log(np.asarray(sizes, dtype=float))
    ys = np.log([groups[s].max() for s in sizes])
    slope, intercept = _fit(xs, ys)
    rng = np.random.default_rng(seed)
    slopes = np.empty(boot)
    for b in range(boot):
        maxima = []
        for s in sizes:
            v = groups[s]
            pick = v[rng.integers(0, len(v), size=len(v))]
            maxima.append(max(pick.max(), 1.0))
        slopes[b] = _fit(xs, np.log(maxima))[0]
    lo, hi = np.quantile(slopes, [0.025, 0.975])
    return ScalingFit(slope, intercept, float((hi - lo) / 2), (float(lo), float(hi)))
