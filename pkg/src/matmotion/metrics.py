"""Binary classification metrics and the statistics used for reporting.

FM+ is the positive class throughout. Rates with a zero denominator are
reported as None ("undefined") rather than coerced to zero so small smoke
datasets cannot silently corrupt aggregates.

The t machinery (two-sided p-values, 97.5% quantiles) is self-contained:
p-values come from the regularized incomplete beta evaluated by Lentz's
continued fraction, quantiles from a fixed table up to 30 degrees of
freedom and from CDF bisection beyond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    """Confusion counts and the derived rates for one evaluation."""

    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def tpr(self) -> float | None:
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def tnr(self) -> float | None:
        neg = self.tn + self.fp
        return self.tn / neg if neg else None

    @property
    def balanced_accuracy(self) -> float | None:
        if self.tpr is None or self.tnr is None:
            return None
        return (self.tpr + self.tnr) / 2.0

    @property
    def defined(self) -> bool:
        return self.balanced_accuracy is not None

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn,
            "tpr": self.tpr, "tnr": self.tnr,
            "balanced_accuracy": self.balanced_accuracy,
        }


def confusion(predictions, labels) -> Metrics:
    """Counts from 0/1 predictions and labels; 1 = FM+ = positive."""
    pred = np.asarray(predictions).astype(int)
    y = np.asarray(labels).astype(int)
    if pred.shape != y.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {y.shape}")
    return Metrics(
        tp=int(np.sum((pred == 1) & (y == 1))),
        tn=int(np.sum((pred == 0) & (y == 0))),
        fp=int(np.sum((pred == 1) & (y == 0))),
        fn=int(np.sum((pred == 0) & (y == 1))),
    )


# two-sided 95% Student t quantiles (0.975), df 1..30
T_TABLE_975 = {
    1: 12.7062, 2: 4.3027, 3: 3.1824, 4: 2.7764, 5: 2.5706,
    6: 2.4469, 7: 2.3646, 8: 2.3060, 9: 2.2622, 10: 2.2281,
    11: 2.2010, 12: 2.1788, 13: 2.1604, 14: 2.1448, 15: 2.1314,
    16: 2.1199, 17: 2.1098, 18: 2.1009, 19: 2.0930, 20: 2.0860,
    21: 2.0796, 22: 2.0739, 23: 2.0687, 24: 2.0639, 25: 2.0595,
    26: 2.0555, 27: 2.0518, 28: 2.0484, 29: 2.0452, 30: 2.0423,
}


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T_df| >= |t|) via the incomplete beta identity."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if not math.isfinite(t):
        return 0.0
    x = df / (df + t * t)
    return reg_inc_beta(df / 2.0, 0.5, x)


def t_quantile_975(df: int) -> float:
    """0.975 quantile of Student t; table up to df 30, bisection beyond."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if df <= 30:
        return T_TABLE_975[df]
    lo, hi = 1.5, 13.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_two_sided_p(mid, df) > 0.05:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ci95_mean(values) -> tuple[float, float]:
    """95% t interval for the mean, sample (n-1) standard deviation."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need at least two values for a confidence interval")
    n = v.size
    mean = float(v.mean())
    sd = float(v.std(ddof=1))
    half = t_quantile_975(n - 1) * sd / math.sqrt(n)
    return mean - half, mean + half


MODE_PAIRED = "paired"
MODE_WELCH = "welch"


def t_test(a, b, mode: str = MODE_PAIRED) -> float:
    """Two-sided p-value comparing two samples.

    paired: Student t on elementwise differences (samples indexed by
    fold). Zero-variance differences degenerate to p = 0 for a nonzero
    mean difference and p = 1 otherwise. welch: unequal-variance t with
    Welch-Satterthwaite degrees of freedom, same degenerate convention.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mode == MODE_PAIRED:
        if a.shape != b.shape:
            raise ValueError("paired test needs equal-length samples")
        d = a - b
        n = d.size
        if n < 2:
            raise ValueError("need at least two pairs")
        sd = d.std(ddof=1)
        if sd == 0.0:
            return 1.0 if d.mean() == 0.0 else 0.0
        t = d.mean() / (sd / math.sqrt(n))
        return t_two_sided_p(t, n - 1)
    if mode == MODE_WELCH:
        na, nb = a.size, b.size
        if na < 2 or nb < 2:
            raise ValueError("need at least two values per sample")
        va, vb = a.var(ddof=1), b.var(ddof=1)
        se2 = va / na + vb / nb
        if se2 == 0.0:
            return 1.0 if a.mean() == b.mean() else 0.0
        t = (a.mean() - b.mean()) / math.sqrt(se2)
        df = se2 ** 2 / (
            (va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)
        )
        return t_two_sided_p(t, df)
    raise ValueError(f"mode must be {MODE_PAIRED!r} or {MODE_WELCH!r}")
