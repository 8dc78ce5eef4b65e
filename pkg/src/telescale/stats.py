"""Paired comparisons for study summaries.

The two-sided paired t-test is implemented from first principles: the
Student-t tail probability comes from the regularized incomplete beta
function, evaluated with a Lentz-style continued fraction. No scipy at
runtime; the test suite pins the results against an independent reference.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

_FPMIN = 1e-300
_MAX_ITER = 400


def _betacf(a: float, b: float, x: float, tol: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError("incomplete beta continued fraction failed to converge")


def regularized_incomplete_beta(a: float, b: float, x: float, tol: float = 1e-10) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    # choose the representation whose continued fraction converges fast
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x, tol) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x, tol) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for T Student-t with df degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 1.0
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


class TTestResult(NamedTuple):
    t: float
    p: float
    df: int
    degenerate: bool = False


def paired_t_test(x: Sequence[float], y: Sequence[float]) -> TTestResult:
    """Two-sided paired t-test on matched samples.

    Degenerate inputs follow fixed conventions rather than raising: if every
    difference is identical the statistic has no spread, so identical samples
    report (t=0, p=1) and a constant nonzero shift reports (t=+/-inf, p=0),
    both with the degenerate flag set.
    """
    n = len(x)
    if n != len(y):
        raise ValueError(f"paired samples differ in length: {n} vs {len(y)}")
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    df = n - 1
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, df, True)
        return TTestResult(math.copysign(math.inf, mean), 0.0, df, True)
    t = mean / math.sqrt(var / n)
    return TTestResult(t, student_t_two_sided_p(t, df), df, False)


def mean_sample_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and n-1 standard deviation; std is 0.0 for a single value."""
    n = len(values)
    if n == 0:
        raise ValueError("no values")
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)
