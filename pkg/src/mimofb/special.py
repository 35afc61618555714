"""Incomplete gamma machinery: series / continued-fraction evaluation and inversion.

The upper tail Gamma(a, x) drives every power-budget threshold equation in the
package, so both tails are computed unnormalized (lower + upper == Gamma(a)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EULER_GAMMA = 0.5772156649015328606

_MAX_ITER = 500
_EPS = 1e-16


@dataclass(frozen=True)
class IncompleteGammaPair:
    """Unnormalized lower/upper incomplete gamma values at (a, x)."""

    a: float
    x: float
    lower: float
    upper: float


def _lower_series(a: float, x: float) -> float:
    # gamma_lower(a, x) = x^a e^-x * sum_n x^n / (a (a+1) ... (a+n)),
    # good for x < a + 1.
    term = 1.0 / a
    total = term
    for n in range(1, _MAX_ITER):
        term *= x / (a + n)
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return math.exp(a * math.log(x) - x) * total


def _upper_cf(a: float, x: float) -> float:
    # Modified Lentz continued fraction for Gamma(a, x), good for x >= a + 1.
    # Also valid at a = 0, where it evaluates the exponential integral E1(x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(a * math.log(x) - x) * h


def incomplete_gamma(a: float, x: float) -> IncompleteGammaPair:
    """Return the unnormalized (lower, upper) incomplete gamma pair at (a, x)."""
    if a <= 0:
        raise ValueError(f"shape a must be positive, got {a}")
    if x < 0:
        raise ValueError(f"argument x must be nonnegative, got {x}")
    g = math.gamma(a)
    if x == 0.0:
        return IncompleteGammaPair(a, x, 0.0, g)
    if math.isinf(x):
        return IncompleteGammaPair(a, x, g, 0.0)
    if x < a + 1.0:
        lo = _lower_series(a, x)
        up = g - lo
    else:
        up = _upper_cf(a, x)
        lo = g - up
    return IncompleteGammaPair(a, x, lo, up)


def gamma_lower(a: float, x: float) -> float:
    return incomplete_gamma(a, x).lower


def gamma_upper(a: float, x: float) -> float:
    return incomplete_gamma(a, x).upper


def reg_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) in [0, 1]."""
    return incomplete_gamma(a, x).lower / math.gamma(a)


def inverse_upper(a: float, target: float) -> float:
    """Solve Gamma(a, x) = target for x.

    The upper tail decreases strictly from Gamma(a) at x = 0, so a target above
    Gamma(a) has no finite solution; that situation is the zero-outage regime
    of the threshold equations and is reported as an error here.
    """
    if a <= 0:
        raise ValueError(f"shape a must be positive, got {a}")
    if target <= 0:
        raise ValueError(f"target must be positive, got {target}")
    g = math.gamma(a)
    if target > g * (1.0 + 1e-12):
        raise ValueError("no finite threshold: target exceeds Gamma(a)")
    if target >= g:
        return 0.0
    hi = max(a, 1.0)
    while gamma_upper(a, hi) > target:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("inverse_upper failed to bracket")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gamma_upper(a, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * (1.0 + hi) + 1e-300:
            break
    return 0.5 * (lo + hi)


def exp1(x: float) -> float:
    """Exponential integral E1(x) = Gamma(0, x) for x > 0."""
    if x <= 0:
        raise ValueError(f"E1 requires x > 0, got {x}")
    if x < 1.0:
        total = -EULER_GAMMA - math.log(x)
        term = 1.0
        for k in range(1, _MAX_ITER):
            term *= -x / k
            dt = -term / k
            total += dt
            if abs(dt) < abs(total) * _EPS:
                break
        return total
    return _upper_cf(0.0, x)
