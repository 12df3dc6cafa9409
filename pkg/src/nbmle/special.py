"""Scalar special-function kernels and their finite-sum counterparts.

The count-regression likelihood only ever needs gamma functions through the
ratio Gamma(y + a) / Gamma(a) with integer y, so every such ratio admits an
exact finite-sum form:

    ln[Gamma(y+a)/Gamma(a)]   = sum_{j=0}^{y-1} ln(j + a)
    Psi(y+a)  - Psi(a)        = sum_{j=0}^{y-1} 1/(j + a)
    Psi'(y+a) - Psi'(a)       = -sum_{j=0}^{y-1} 1/(j + a)^2

The finite sums are the canonical evaluation path here; the gamma-function
forms exist so the two routes can be checked against each other.  For very
large counts the sums fall back to the gamma-difference forms (O(1) instead
of O(y)); the equalities above make the switch exact up to rounding.

All functions are pure and reentrant.
"""

from __future__ import annotations

import math

from .exceptions import DomainError

# Upward recurrence is applied until the argument reaches this threshold,
# after which the asymptotic (de Moivre) expansions below are accurate to
# well under 1e-14 relative.
_ASYMPTOTIC_THRESHOLD = 10.0

# Bernoulli-number coefficients of the asymptotic expansions, highest kept
# order chosen so the first omitted term is < 5e-17 at the threshold.
#   ln Gamma(x):  sum c_k / x^(2k-1),  c_k = B_2k / (2k (2k-1))
_LN_GAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)
#   Psi(x):  ln x - 1/(2x) - sum c_k / x^(2k),  c_k = B_2k / (2k)
_DIGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
#   Psi'(x):  1/x + 1/(2x^2) + sum c_k / x^(2k+1),  c_k = B_2k
_TRIGAMMA_SERIES = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)

_LN_SQRT_2PI = 0.9189385332046727417803297364  # ln(2*pi)/2

# Counts above this switch the finite sums to the gamma-difference forms.
LARGE_COUNT_SWITCH = 1_000_000


def _require_positive(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} must be a positive finite real, got {x!r}")
    return x


def _require_count(y, name: str = "y") -> int:
    if isinstance(y, bool):
        raise DomainError(f"{name} must be a non-negative integer, got {y!r}")
    iy = int(y)
    if iy != y or iy < 0:
        raise DomainError(f"{name} must be a non-negative integer, got {y!r}")
    return iy


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0.

    Upward recurrence ln Gamma(x) = ln Gamma(x+1) - ln x to the asymptotic
    threshold, then the de Moivre series.
    """
    x = _require_positive(x, "x")
    shift = 0.0
    while x < _ASYMPTOTIC_THRESHOLD:
        shift -= math.log(x)
        x += 1.0
    inv = 1.0 / x
    inv_sq = inv * inv
    series = 0.0
    power = inv
    for c in _LN_GAMMA_SERIES:
        series += c * power
        power *= inv_sq
    return (x - 0.5) * math.log(x) - x + _LN_SQRT_2PI + series + shift


def digamma(x: float) -> float:
    """Digamma Psi(x) = d/dx ln Gamma(x) for x > 0."""
    x = _require_positive(x, "x")
    acc = 0.0
    while x < _ASYMPTOTIC_THRESHOLD:
        acc -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv_sq = inv * inv
    series = 0.0
    power = inv_sq
    for c in _DIGAMMA_SERIES:
        series += c * power
        power *= inv_sq
    return acc + math.log(x) - 0.5 * inv - series


def trigamma(x: float) -> float:
    """Trigamma Psi'(x), the derivative of the digamma, for x > 0."""
    x = _require_positive(x, "x")
    acc = 0.0
    while x < _ASYMPTOTIC_THRESHOLD:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv_sq = inv * inv
    series = 0.0
    power = inv_sq * inv
    for c in _TRIGAMMA_SERIES:
        series += c * power
        power *= inv_sq
    return acc + inv + 0.5 * inv_sq + series


def sum_log_shifted(y: int, a: float) -> float:
    """sum_{j=0}^{y-1} ln(j + a); equals ln Gamma(y+a) - ln Gamma(a).

    Empty sum (exactly 0.0) for y = 0.
    """
    y = _require_count(y)
    a = _require_positive(a, "a")
    if y > LARGE_COUNT_SWITCH:
        return ln_gamma(y + a) - ln_gamma(a)
    total = 0.0
    for j in range(y):
        total += math.log(j + a)
    return total


def sum_recip_shifted(y: int, theta: float) -> float:
    """sum_{j=0}^{y-1} 1/(j + 1/theta); equals Psi(y + 1/theta) - Psi(1/theta)."""
    y = _require_count(y)
    theta = _require_positive(theta, "theta")
    a = 1.0 / theta
    if y > LARGE_COUNT_SWITCH:
        return digamma(y + a) - digamma(a)
    total = 0.0
    for j in range(y):
        total += 1.0 / (j + a)
    return total


def sum_recip_sq_shifted(y: int, a: float) -> float:
    """sum_{j=0}^{y-1} 1/(j + a)^2; equals -[Psi'(y+a) - Psi'(a)]."""
    y = _require_count(y)
    a = _require_positive(a, "a")
    if y > LARGE_COUNT_SWITCH:
        return -(trigamma(y + a) - trigamma(a))
    total = 0.0
    for j in range(y):
        total += 1.0 / ((j + a) * (j + a))
    return total


def sum_trigamma_weights(y: int, theta: float) -> float:
    """sum_{j=0}^{y-1} (2j + 1/theta) / (j + 1/theta)^2.

    The summand decomposes as 2/(j+u) - u/(j+u)^2 with u = 1/theta, so the
    sum equals 2*sum_recip_shifted(y, theta) - u*sum_recip_sq_shifted(y, u).
    """
    y = _require_count(y)
    theta = _require_positive(theta, "theta")
    u = 1.0 / theta
    if y > LARGE_COUNT_SWITCH:
        return 2.0 * sum_recip_shifted(y, theta) - u * sum_recip_sq_shifted(y, u)
    total = 0.0
    for j in range(y):
        d = j + u
        total += (2.0 * j + u) / (d * d)
    return total
