"""Income distribution statistics.

Weighted empirical CCDFs with the survival convention Q(x) = P(X >= x),
binned densities, Pareto-tail fits (Hill maximum likelihood and log-log
least squares of Q = A * x**-alpha), tail-onset selection, relative CCDFs
against a reference sample, Gini, mode counting and tail-exponent series.

Zero incomes are meaningful (the unemployed): they count in every
normalisation total but never in a survival numerator at x > 0, and they are
excluded from densities, reported instead as a zero-mass fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .engine import Snapshot
from .errors import (
    EmptyInputError,
    InsufficientTailError,
    NoOverlapError,
    ParameterError,
    UndefinedMeasureError,
)


@dataclass
class Sample:
    """Income observations with positive weights (default: unit weights)."""

    values: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ParameterError("sample values must be a 1-d sequence")
        if self.values.size and self.values.min() < 0:
            raise ParameterError("sample values must be non-negative")
        if self.weights is None:
            self.weights = np.ones_like(self.values)
        else:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != self.values.shape:
                raise ParameterError("weights length must match values")
            if self.weights.size and self.weights.min() <= 0:
                raise ParameterError("weights must be positive")

    @classmethod
    def from_snapshot(cls, snap: Snapshot) -> "Sample":
        return cls(snap.incomes.copy())

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def zero_mass_fraction(self) -> float:
        if self.size == 0:
            raise EmptyInputError("empty sample")
        return float(self.weights[self.values == 0].sum()) / self.total_weight


@dataclass
class Ccdf:
    """Survival curve Q over the distinct positive sample values.

    ``evaluate`` continues Q between grid points the way the underlying
    sample does: Q(x) equals Q at the smallest grid point >= x, and 0 beyond
    the largest, matching P(X >= x) exactly at and between sample values.
    """

    xs: np.ndarray
    q: np.ndarray
    normalized: bool
    total_weight: float

    def evaluate(self, x):
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        idx = np.searchsorted(self.xs, x, side="left")
        out = np.zeros(x.shape)
        hit = idx < self.xs.size
        out[hit] = self.q[idx[hit]]
        return float(out[0]) if scalar else out

    @property
    def points(self):
        return list(zip(self.xs.tolist(), self.q.tolist()))


@dataclass
class Histogram:
    """Density per unit income over positive values; zeros reported aside."""

    edges: np.ndarray
    densities: np.ndarray
    scheme: str
    zero_mass_fraction: float = 0.0


@dataclass(frozen=True)
class TailFit:
    alpha: float
    amplitude: float
    x_min: float
    n_tail: int
    stderr: float
    method: str


@dataclass
class RelativeCurve:
    """R(x) = Q_t(x) / Q_ref(x) on the reference grid."""

    grid: np.ndarray
    ratios: np.ndarray
    reference_tag: str = "reference"
    dropped_points: int = 0


@dataclass(frozen=True)
class FitConfig:
    """How the tail-exponent series picks x_min and fits each element."""

    method: str = "hill"  # hill | loglog-ls
    xmin_method: str = "top-fraction"  # top-fraction | ks-min
    top_fraction: float = 0.01
    min_tail: int = 2


@dataclass
class AlphaPoint:
    t: int
    fit: TailFit | None
    note: str = ""


def ccdf(sample: Sample, normalized: bool = True) -> Ccdf:
    """Empirical survival curve at the distinct positive sample values."""
    if sample.size == 0:
        raise EmptyInputError("cannot build a CCDF from an empty sample")
    pos = sample.values > 0
    values = sample.values[pos]
    weights = sample.weights[pos]
    total = sample.total_weight
    order = np.argsort(values, kind="stable")
    values = values[order]
    weights = weights[order]
    xs, start = np.unique(values, return_index=True)
    # suffix weight sums: weight of all observations >= each distinct value
    suffix = np.cumsum(weights[::-1])[::-1]
    tail_weight = suffix[start]
    q = tail_weight / total if normalized else tail_weight
    return Ccdf(xs=xs, q=q, normalized=normalized, total_weight=total)


def pdf_histogram(sample: Sample, scheme: str = "linear", bins: int = 50,
                  include_zeros_in_norm: bool = False) -> Histogram:
    """Binned density of the positive incomes.

    Linear or logarithmic bin edges span the positive support.  Densities
    integrate to 1 over the binned range (over the full weight instead when
    include_zeros_in_norm is set).
    """
    if bins < 2:
        raise ParameterError("bin count must be at least 2")
    if scheme not in ("linear", "logarithmic"):
        raise ParameterError(f"unknown binning scheme {scheme!r}")
    if sample.size == 0:
        raise EmptyInputError("cannot bin an empty sample")
    pos = sample.values > 0
    if not pos.any():
        raise EmptyInputError("no positive incomes to bin")
    values = sample.values[pos]
    weights = sample.weights[pos]
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = 0.5 * lo, 1.5 * hi
    if scheme == "linear":
        edges = np.linspace(lo, hi, bins + 1)
    else:
        edges = np.geomspace(lo, hi, bins + 1)
    counts, _ = np.histogram(values, bins=edges, weights=weights)
    denom = sample.total_weight if include_zeros_in_norm else float(weights.sum())
    densities = counts / (denom * np.diff(edges))
    return Histogram(
        edges=edges,
        densities=densities,
        scheme=scheme,
        zero_mass_fraction=sample.zero_mass_fraction(),
    )


def fit_pareto_hill(sample: Sample, x_min: float) -> TailFit:
    """Maximum-likelihood survival exponent of the tail at and above x_min.

    alpha = W_tail / sum(w * ln(x / x_min)); the amplitude pins the fitted
    power law to the empirical CCDF at x_min.
    """
    if not x_min > 0:
        raise ParameterError("x_min must be positive")
    in_tail = sample.values >= x_min
    n_tail = int(in_tail.sum())
    if n_tail < 2:
        raise InsufficientTailError(f"only {n_tail} tail points at x_min={x_min!r}")
    xs = sample.values[in_tail]
    ws = sample.weights[in_tail]
    w_tail = float(ws.sum())
    log_sum = float(np.sum(ws * np.log(xs / x_min)))
    if log_sum <= 0:
        raise InsufficientTailError("tail has no spread above x_min")
    alpha = w_tail / log_sum
    q_at_xmin = w_tail / sample.total_weight
    return TailFit(
        alpha=alpha,
        amplitude=q_at_xmin * x_min**alpha,
        x_min=x_min,
        n_tail=n_tail,
        stderr=alpha / math.sqrt(w_tail),
        method="hill",
    )


def fit_pareto_ls(curve: Ccdf, x_min: float) -> TailFit:
    """Least-squares line through (ln x, ln Q) for the tail of a CCDF."""
    if not x_min > 0:
        raise ParameterError("x_min must be positive")
    keep = (curve.xs >= x_min) & (curve.q > 0)
    m = int(keep.sum())
    if m < 2:
        raise InsufficientTailError(f"only {m} CCDF points at x_min={x_min!r}")
    lx = np.log(curve.xs[keep])
    ly = np.log(curve.q[keep])
    lx_c = lx - lx.mean()
    slope = float(np.dot(lx_c, ly) / np.dot(lx_c, lx_c))
    intercept = float(ly.mean() - slope * lx.mean())
    if m == 2:
        stderr = 0.0  # exact interpolation, by convention
    else:
        resid = ly - (intercept + slope * lx)
        stderr = math.sqrt(float(np.dot(resid, resid)) / (m - 2) / float(np.dot(lx_c, lx_c)))
    return TailFit(
        alpha=-slope,
        amplitude=math.exp(intercept),
        x_min=x_min,
        n_tail=m,
        stderr=stderr,
        method="loglog-ls",
    )


def select_xmin(sample: Sample, method: str = "top-fraction",
                top_fraction: float = 0.01, min_tail: int = 10) -> float:
    """Pick the tail onset.

    top-fraction: the value where the upper fraction q of the sample begins
    (by count for unit weights, by cumulative weight otherwise).
    ks-min: among sample values leaving at least ``min_tail`` points above,
    the candidate whose Hill fit has the smallest KS distance to its tail.
    """
    pos = sample.values > 0
    values = sample.values[pos]
    weights = sample.weights[pos]
    if values.size < 2:
        raise EmptyInputError("need at least 2 positive values")
    order = np.argsort(values, kind="stable")
    x = values[order]
    w = weights[order]
    starts = np.unique(x, return_index=True)[1]
    sw = np.cumsum(w[::-1])[::-1]  # sw[k] = weight of observations >= x[k]
    if method == "top-fraction":
        q = top_fraction
        if not 0 < q <= 1:
            raise ParameterError("top fraction must lie in (0, 1]")
        if np.all(w == w[0]):
            rank = math.ceil(q * x.size)
            return float(x[x.size - rank])
        frac = sw[starts] / float(w.sum())
        ok = np.nonzero(frac <= q)[0]  # frac decreases along ascending distinct x
        return float(x[starts[ok[0]]]) if ok.size else float(x[-1])
    if method == "ks-min":
        n = x.size
        swl = np.cumsum((w * np.log(x))[::-1])[::-1]
        best_x, best_d = None, np.inf
        for pos_k, k in enumerate(starts):
            if n - k < max(min_tail, 2):
                break
            log_sum = swl[k] - math.log(x[k]) * sw[k]
            if log_sum <= 0:
                continue
            alpha = sw[k] / log_sum
            tail_pts = starts[pos_k:]
            emp = sw[tail_pts] / sw[k]
            theory = (x[tail_pts] / x[k]) ** (-alpha)
            emp_after = np.append(emp[1:], 0.0)
            d = float(np.maximum(np.abs(emp - theory), np.abs(emp_after - theory)).max())
            if d < best_d:
                best_x, best_d = float(x[k]), d
        if best_x is None:
            raise EmptyInputError(f"no candidate x_min leaves {min_tail} tail points")
        return best_x
    raise ParameterError(f"unknown x_min method {method!r}")


def relative_ccdf(sample_t: Sample, sample_ref: Sample, grid=None,
                  reference_tag: str = "reference") -> RelativeCurve:
    """Ratio of the two normalized survival curves on the reference grid.

    Grid points where the reference curve vanishes are dropped and counted.
    """
    q_t = ccdf(sample_t, normalized=True)
    q_ref = ccdf(sample_ref, normalized=True)
    if grid is None:
        grid = q_ref.xs
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise EmptyInputError("empty evaluation grid")
    ref_vals = q_ref.evaluate(grid)
    keep = ref_vals > 0
    if not keep.any():
        raise NoOverlapError("reference curve vanishes on the whole grid")
    ratios = q_t.evaluate(grid[keep]) / ref_vals[keep]
    return RelativeCurve(
        grid=grid[keep],
        ratios=ratios,
        reference_tag=reference_tag,
        dropped_points=int((~keep).sum()),
    )


def gini(sample: Sample) -> float:
    """Weighted Gini coefficient via the sorted single-pass form."""
    if sample.size == 0:
        raise EmptyInputError("empty sample")
    total = sample.total_weight
    mean = float(np.dot(sample.values, sample.weights)) / total
    if mean <= 0:
        raise UndefinedMeasureError("Gini undefined for zero mean income")
    order = np.argsort(sample.values, kind="stable")
    x = sample.values[order]
    w = sample.weights[order]
    cum = np.cumsum(w)
    # sum_ij w_i w_j |x_i - x_j| = 2 * sum_i w_i x_i (2 cum_i - w_i - W)
    num = float(np.sum(w * x * (2.0 * cum - w - total)))
    return max(0.0, num / (total * float(np.dot(x, w))))


def count_modes(hist: Histogram, min_prominence: float = 0.05) -> int:
    """Prominent local maxima of the smoothed density sequence.

    The density is smoothed with a 3-point moving average (edge bins
    replicated).  A maximal plateau counts as one mode when no neighbouring
    value is higher and its prominence, the height above the higher of its
    flanking minima, exceeds min_prominence times the peak density.
    """
    d = np.asarray(hist.densities, dtype=np.float64)
    if d.size == 0:
        return 0
    padded = np.concatenate([d[:1], d, d[-1:]])
    s = (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0
    peak = float(s.max())
    if peak <= 0:
        return 0

    modes = 0
    n = s.size
    i = 0
    while i < n:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        left_higher = i > 0 and s[i - 1] > s[i]
        right_higher = j + 1 < n and s[j + 1] > s[i]
        if not left_higher and not right_higher:
            flanks = []
            if i > 0:
                flanks.append(float(s[:i].min()))
            if j + 1 < n:
                flanks.append(float(s[j + 1:].min()))
            prominence = s[i] - max(flanks) if flanks else float(s[i])
            if prominence > min_prominence * peak:
                modes += 1
        i = j + 1
    return modes


def ks_distance(a: Ccdf, b: Ccdf) -> float:
    """Sup distance between two normalized survival curves."""
    if not (a.normalized and b.normalized):
        raise ParameterError("KS distance requires normalized CCDFs")
    xs = np.union1d(a.xs, b.xs)
    if xs.size == 0:
        return 0.0
    return float(np.abs(a.evaluate(xs) - b.evaluate(xs)).max())


def _as_samples(items: Iterable) -> list[tuple[int, Sample]]:
    out = []
    for k, item in enumerate(items):
        if isinstance(item, Snapshot):
            out.append((item.sweep_index, Sample.from_snapshot(item)))
        elif isinstance(item, Sample):
            out.append((k, item))
        else:
            t, sample = item
            out.append((int(t), sample))
    return out


def alpha_timeseries(items: Sequence, fit: FitConfig = FitConfig()) -> list[AlphaPoint]:
    """Tail exponent per snapshot/sample; failed fits become recorded gaps."""
    series: list[AlphaPoint] = []
    ok = 0
    for t, sample in _as_samples(items):
        try:
            x_min = select_xmin(sample, fit.xmin_method, fit.top_fraction)
            if fit.method == "hill":
                tail = fit_pareto_hill(sample, x_min)
            elif fit.method == "loglog-ls":
                tail = fit_pareto_ls(ccdf(sample), x_min)
            else:
                raise ParameterError(f"unknown fit method {fit.method!r}")
            if tail.n_tail < fit.min_tail:
                raise InsufficientTailError(
                    f"{tail.n_tail} tail points, need {fit.min_tail}"
                )
            series.append(AlphaPoint(t=t, fit=tail))
            ok += 1
        except (EmptyInputError, InsufficientTailError) as exc:
            series.append(AlphaPoint(t=t, fit=None, note=str(exc)))
    if ok == 0:
        raise EmptyInputError("every element failed the tail fit")
    return series
