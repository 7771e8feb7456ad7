"""Paired t-tests and one-way repeated-measures ANOVA with generalized eta squared.

p-values come from the regularized incomplete beta function, evaluated with a
modified-Lentz continued fraction (double precision, relative error well below
1e-12), so the analysis pipeline carries no statistics dependency. Degenerate
inputs are hard errors, never silent NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_CF_MAX_ITER = 300
_CF_EPS = 1e-16
_CF_TINY = 1e-300


class DegenerateDataError(ValueError):
    """Input has no variance where the statistic needs some."""


class MissingCellError(ValueError):
    """The subjects-by-conditions matrix is incomplete; no imputation is done."""


@dataclass(frozen=True)
class StatResult:
    statistic: float
    df1: float
    df2: float | None
    p_value: float
    effect: float  # mean difference for t, generalized eta squared for F


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast only on one side of the mean.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided p for a t statistic."""
    if df <= 0:
        raise ValueError(f"df must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def f_sf(f: float, df1: float, df2: float) -> float:
    """Upper tail P(F >= f)."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError(f"dfs must be positive, got {df1}, {df2}")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def paired_t(x: Sequence[float], y: Sequence[float]) -> StatResult:
    """Two-sided paired-samples t-test; effect is the mean difference."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d sequences of equal length")
    n = x.size
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("inputs must be finite")
    d = x - y
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateDataError("differences have zero variance")
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    return StatResult(statistic=t, df1=float(df), df2=None, p_value=t_sf_two_sided(t, df), effect=mean)


def rm_anova(values: Sequence[Sequence[float]]) -> StatResult:
    """One-way within-subjects ANOVA on a complete subjects x conditions matrix.

    Decomposes SS_total = SS_subject + SS_condition + SS_error; reports
    F = MS_condition / MS_error with df (c-1, (c-1)(s-1)) and generalized eta
    squared SS_condition / (SS_condition + SS_subject + SS_error).
    """
    m = np.asarray(values, dtype=float)
    if m.ndim != 2:
        raise ValueError("values must be a 2-d subjects x conditions matrix")
    s, c = m.shape
    if s < 2 or c < 2:
        raise ValueError(f"need >= 2 subjects and >= 2 conditions, got {s} x {c}")
    if not np.isfinite(m).all():
        bad = [tuple(idx) for idx in np.argwhere(~np.isfinite(m))]
        raise MissingCellError(f"matrix has missing/non-finite cells at {bad}")
    if bool((m == m[:, :1]).all()):
        # Conditions identical within every subject: F is 0 by definition.
        # Short-circuit before any arithmetic so one-ulp rounding dust in the
        # grand mean cannot masquerade as an effect.
        return StatResult(statistic=0.0, df1=float(c - 1), df2=float((c - 1) * (s - 1)), p_value=1.0, effect=0.0)

    grand = m.mean()
    subj_means = m.mean(axis=1)
    cond_means = m.mean(axis=0)
    ss_subject = float(c * ((subj_means - grand) ** 2).sum())
    ss_condition = float(s * ((cond_means - grand) ** 2).sum())
    resid = m - subj_means[:, None] - cond_means[None, :] + grand
    ss_error = float((resid**2).sum())

    df1 = c - 1
    df2 = (c - 1) * (s - 1)
    if ss_condition == 0.0:
        # No effect at all; F is 0 by convention even if the error term is 0.
        return StatResult(statistic=0.0, df1=float(df1), df2=float(df2), p_value=1.0, effect=0.0)
    if ss_error == 0.0:
        raise DegenerateDataError("zero error variance with a nonzero condition effect")
    f = (ss_condition / df1) / (ss_error / df2)
    eta_g = ss_condition / (ss_condition + ss_subject + ss_error)
    return StatResult(statistic=f, df1=float(df1), df2=float(df2), p_value=f_sf(f, df1, df2), effect=eta_g)
