"""One-way ANOVA and error-distribution tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AnovaResult",
    "DistributionTable",
    "betainc",
    "f_cdf",
    "f_sf",
    "one_way_anova",
    "offset_anova",
    "histogram",
    "cdf",
]

_TINY = 1e-300


def _betacf(a: float, b: float, x: float, tol: float = 1e-15, max_iter: int = 10_000) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    # the fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_cdf(f: float, d1: float, d2: float) -> float:
    if f <= 0:
        return 0.0
    if math.isinf(f):
        return 1.0
    return betainc(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2))


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail P(F > f), computed directly to keep small p-values accurate."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float
    group_means: tuple
    grand_mean: float
    ss_between: float
    ss_within: float
    degenerate: bool = False
    labels: tuple = ()

    def to_text(self, prefix: str = "") -> str:
        rows = [
            ("f_statistic", repr(self.f_statistic)),
            ("df_between", str(self.df_between)),
            ("df_within", str(self.df_within)),
            ("p_value", repr(self.p_value)),
            ("ss_between", repr(self.ss_between)),
            ("ss_within", repr(self.ss_within)),
            ("grand_mean", repr(self.grand_mean)),
            ("degenerate", str(self.degenerate).lower()),
        ]
        for lab, m in zip(self.labels or range(len(self.group_means)), self.group_means):
            rows.append((f"group_mean[{lab}]", repr(m)))
        return "".join(f"{prefix}{k}={v}\n" for k, v in rows)


def one_way_anova(groups, labels=()) -> AnovaResult:
    """F test for equal group means.

    If every group is constant: equal means give F = 0, p = 1; unequal
    means give F = inf, p = 0 and ``degenerate=True``.
    """
    gs = [np.asarray(g, dtype=float).ravel() for g in groups]
    k = len(gs)
    if k < 2:
        raise ValueError("need at least two groups")
    if any(g.size < 2 for g in gs):
        raise ValueError("every group needs at least two observations")
    n = sum(g.size for g in gs)
    means = [float(g.mean()) for g in gs]
    grand = float(np.concatenate(gs).mean())
    ssb = float(sum(g.size * (m - grand) ** 2 for g, m in zip(gs, means)))
    ssw = float(sum(((g - m) ** 2).sum() for g, m in zip(gs, means)))
    dfb, dfw = k - 1, n - k
    if ssw == 0.0:
        if ssb == 0.0 or all(m == means[0] for m in means):
            return AnovaResult(0.0, dfb, dfw, 1.0, tuple(means), grand, ssb, ssw, False, tuple(labels))
        return AnovaResult(math.inf, dfb, dfw, 0.0, tuple(means), grand, ssb, ssw, True, tuple(labels))
    F = (ssb / dfb) / (ssw / dfw)
    p = min(1.0, max(0.0, f_sf(F, dfb, dfw)))
    return AnovaResult(F, dfb, dfw, p, tuple(means), grand, ssb, ssw, False, tuple(labels))


def _grouped(values, factor):
    levels = np.unique(factor)
    return [values[factor == l] for l in levels], tuple(float(l) for l in levels)


def offset_anova(table) -> tuple[AnovaResult, AnovaResult]:
    """Position error grouped by each offset factor separately.

    ``table`` is the mapping returned by ``simulate.run_offset_experiment``.
    Rows are sorted first so the result does not depend on row order.
    """
    err = np.asarray(table["position_error_m"], dtype=float)
    o2 = np.asarray(table["offset2_level"], dtype=float)
    o3 = np.asarray(table["offset3_level"], dtype=float)
    if err.size == 0:
        raise ValueError("empty table")
    order = np.lexsort((err, o3, o2))
    err, o2, o3 = err[order], o2[order], o3[order]
    out = []
    for fac in (o2, o3):
        groups, labels = _grouped(err, fac)
        out.append(one_way_anova(groups, labels))
    return out[0], out[1]


@dataclass(frozen=True)
class DistributionTable:
    """Histogram (``edges``, ``counts``) or CDF (``values``, ``fractions``)."""

    kind: str
    edges: np.ndarray | None = None
    counts: np.ndarray | None = None
    values: np.ndarray | None = None
    fractions: np.ndarray | None = None

    def to_csv(self, column: str = "value") -> str:
        if self.kind == "histogram":
            lines = ["bin_lo,bin_hi,count"]
            lines += [f"{float(lo)!r},{float(hi)!r},{int(c)}"
                      for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)]
        else:
            lines = [f"{column},cumulative_fraction"]
            lines += [f"{float(v)!r},{float(f)!r}" for v, f in zip(self.values, self.fractions)]
        return "\n".join(lines) + "\n"


def histogram(values, bin_width: float, start: float | None = None) -> DistributionTable:
    """Fixed-width bins ``[lo, lo + w)`` aligned to multiples of ``bin_width``."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("need at least one value")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    lo = math.floor(v[0] / bin_width) * bin_width if start is None else float(start)
    if v[0] < lo:
        raise ValueError("start lies above the smallest value")
    idx = np.floor((v - lo) / bin_width).astype(np.int64)
    nb = int(idx[-1]) + 1
    counts = np.bincount(idx, minlength=nb)
    edges = lo + bin_width * np.arange(nb + 1)
    return DistributionTable("histogram", edges=edges, counts=counts)


def cdf(values) -> DistributionTable:
    """Empirical CDF at each distinct sample value."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("need at least one value")
    uniq, counts = np.unique(v, return_counts=True)
    return DistributionTable("cdf", values=uniq, fractions=np.cumsum(counts) / v.size)
