"""NB2 probability model: p.d.f., link, log-likelihood, tail probabilities.

The model for counts y_i with regressors x_i is

    Pr(Y = y | lambda, alpha) = Gamma(y + alpha) / (Gamma(y+1) Gamma(alpha))
                                * (lambda / (lambda + alpha))^y
                                * (alpha / (lambda + alpha))^alpha

with conditional mean lambda_i = exp(x_i' beta) and gamma shape alpha, or
equivalently the dispersion parameter theta = 1/alpha.  Mean is lambda and
variance lambda * (1 + theta * lambda); theta -> 0 recovers Poisson.

The log-likelihood is evaluated in the finite-sum ("gamma-free") form

    sum_i { sum_{j=0}^{y_i - 1} ln(j + 1/theta) - ln(y_i!) + y_i x_i'beta
            + y_i ln theta - (1/theta + y_i) ln(1 + theta e^{x_i'beta}) }

with ln(1 + theta*lambda) computed through log1p.

All operations are pure; Dataset and Params are immutable after
construction.  Per-observation reductions use numpy's pairwise summation,
so results are bit-reproducible for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DomainError,
    LinearPredictorOverflow,
    TruncationCapExceeded,
)
from .special import (
    LARGE_COUNT_SWITCH,
    _require_count,
    _require_positive,
    digamma,
    ln_gamma,
    sum_log_shifted,
    trigamma,
)

# exp() overflows double precision just above 709, and an exp() this large
# poisons the likelihood silently; fail loudly instead.
MAX_LINEAR_PREDICTOR = 700.0

DEFAULT_EPS_TAIL = 1e-12
TRUNCATION_HARD_CAP = 10_000_000


@dataclass(frozen=True)
class Dataset:
    """Response counts plus design matrix.

    Attributes:
        y: integer counts, length n.
        X: design matrix, shape (n, p).  By CSV-ingestion convention the
            first column is an all-ones intercept unless disabled.
        names: p column labels.
    """

    y: np.ndarray
    X: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y)
        X = np.asarray(self.X, dtype=float)
        if y.ndim != 1:
            raise DomainError("y must be one-dimensional")
        if X.ndim != 2:
            raise DomainError("X must be two-dimensional")
        if not np.all(np.isfinite(y)):
            raise DomainError("y contains non-finite entries")
        if np.any(y < 0) or np.any(y != np.floor(y)):
            raise DomainError("y must contain non-negative integers")
        if not np.all(np.isfinite(X)):
            raise DomainError("X contains non-finite entries")
        n, p = X.shape
        if len(y) != n:
            raise DomainError(f"y has {len(y)} rows but X has {n}")
        if not (n >= p >= 1):
            raise DomainError(f"need n >= p >= 1, got n={n}, p={p}")
        constant_cols = [j for j in range(p) if np.ptp(X[:, j]) == 0.0]
        if len(constant_cols) > 1:
            raise DomainError(
                f"columns {constant_cols} are all constant; at most one "
                f"(the intercept) is allowed"
            )
        names = tuple(self.names) if self.names else tuple(f"x{j}" for j in range(p))
        if len(names) != p:
            raise DomainError(f"got {len(names)} names for {p} columns")
        object.__setattr__(self, "y", y.astype(np.int64))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Params:
    """Regression coefficients beta and dispersion theta > 0."""

    beta: np.ndarray
    theta: float

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise DomainError("beta must be a finite vector")
        theta = _require_positive(self.theta, "theta")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "theta", theta)

    @property
    def alpha(self) -> float:
        """Gamma shape parameter, the reciprocal of the dispersion."""
        return 1.0 / self.theta


@dataclass(frozen=True)
class LinkValues:
    """Conditional means lambda_i = exp(x_i' beta)."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
            raise DomainError("lam must be positive and finite")
        object.__setattr__(self, "lam", lam)


def link_mean(X: np.ndarray, beta: np.ndarray) -> LinkValues:
    """Evaluate the exponential link lambda_i = exp(x_i' beta).

    Raises LinearPredictorOverflow naming the first offending row when any
    |x_i' beta| exceeds MAX_LINEAR_PREDICTOR or is non-finite.
    """
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    eta = X @ beta
    bad = ~np.isfinite(eta) | (np.abs(eta) > MAX_LINEAR_PREDICTOR)
    if np.any(bad):
        row = int(np.argmax(bad))
        raise LinearPredictorOverflow(row, float(eta[row]))
    return LinkValues(np.exp(eta))


def nb_logpmf(y: int, lam: float, alpha: float) -> float:
    """Log of the NB2 probability mass at count y."""
    y = _require_count(y)
    lam = _require_positive(lam, "lam")
    alpha = _require_positive(alpha, "alpha")
    return (
        sum_log_shifted(y, alpha)
        - ln_gamma(y + 1.0)
        + y * (math.log(lam) - math.log(lam + alpha))
        - alpha * math.log1p(lam / alpha)
    )


def nb_pmf(y: int, lam: float, alpha: float) -> float:
    """NB2 probability mass at count y, computed in log space."""
    return math.exp(nb_logpmf(y, lam, alpha))


def nb_pmf_binomial_form(y: int, lam: float, alpha: int) -> float:
    """Binomial-coefficient form of the p.m.f., defined for integer alpha.

    C(y + alpha - 1, y) * r^y * (1 - r)^alpha with r = lam / (lam + alpha).
    The factorials only make sense for integer alpha; fractional shapes must
    use nb_pmf.
    """
    y = _require_count(y)
    lam = _require_positive(lam, "lam")
    if isinstance(alpha, bool) or int(alpha) != alpha or alpha < 1:
        raise DomainError(f"alpha must be a positive integer, got {alpha!r}")
    a = int(alpha)
    log_comb = ln_gamma(y + a) - ln_gamma(y + 1.0) - ln_gamma(float(a))
    log_r = math.log(lam) - math.log(lam + a)
    log_1mr = math.log(a) - math.log(lam + a)
    return math.exp(log_comb + y * log_r + a * log_1mr)


def _per_obs_sums(y: np.ndarray, u: float, *, want_log=False, want_recip=False,
                  want_weights=False) -> dict:
    """Per-observation finite sums over j = 0..y_i-1, vectorised.

    Returns the requested arrays keyed "log" (sum ln(j+u)), "recip"
    (sum 1/(j+u)) and "weights" (sum (2j+u)/(j+u)^2).  Built from cumulative
    tables of length max(y); for counts beyond LARGE_COUNT_SWITCH the exact
    gamma-difference forms are used instead.
    """
    out = {}
    max_y = int(y.max()) if len(y) else 0
    if max_y > LARGE_COUNT_SWITCH:
        uniq, inv = np.unique(y, return_inverse=True)
        if want_log:
            vals = np.array([ln_gamma(v + u) - ln_gamma(u) for v in uniq])
            out["log"] = vals[inv]
        if want_recip:
            vals = np.array([digamma(v + u) - digamma(u) if v else 0.0 for v in uniq])
            out["recip"] = vals[inv]
        if want_weights:
            rec = np.array([digamma(v + u) - digamma(u) if v else 0.0 for v in uniq])
            sq = np.array([-(trigamma(v + u) - trigamma(u)) if v else 0.0 for v in uniq])
            out["weights"] = (2.0 * rec - u * sq)[inv]
        return out
    j = np.arange(max_y, dtype=float)
    shifted = j + u
    if want_log:
        table = np.concatenate(([0.0], np.cumsum(np.log(shifted))))
        out["log"] = table[y]
    if want_recip:
        table = np.concatenate(([0.0], np.cumsum(1.0 / shifted)))
        out["recip"] = table[y]
    if want_weights:
        table = np.concatenate(([0.0], np.cumsum((2.0 * j + u) / shifted**2)))
        out["weights"] = table[y]
    return out


def _ln_factorial(y: np.ndarray) -> np.ndarray:
    """ln(y!) = ln Gamma(y+1), via an exact cumulative table of logs."""
    return _per_obs_sums(y, 1.0, want_log=True)["log"]


def loglik(ds: Dataset, p: Params) -> float:
    """Log-likelihood in the dispersion parameterisation (beta, theta)."""
    theta = p.theta
    u = 1.0 / theta
    lam = link_mean(ds.X, p.beta).lam
    eta = ds.X @ p.beta
    y = ds.y
    sums = _per_obs_sums(y, u, want_log=True)["log"]
    terms = (
        sums
        - _ln_factorial(y)
        + y * eta
        + y * math.log(theta)
        - (u + y) * np.log1p(theta * lam)
    )
    return float(np.sum(terms))


def loglik_alpha(ds: Dataset, alpha: float, beta: np.ndarray) -> float:
    """Log-likelihood in the gamma-shape parameterisation (beta, alpha).

    sum_i { sum_{j<y_i} ln(j + alpha) - ln(y_i!) + y_i ln lambda_i
            - y_i ln alpha - (alpha + y_i) ln(1 + lambda_i / alpha) }
    """
    alpha = _require_positive(alpha, "alpha")
    lam = link_mean(ds.X, beta).lam
    y = ds.y
    sums = _per_obs_sums(y, alpha, want_log=True)["log"]
    terms = (
        sums
        - _ln_factorial(y)
        + y * np.log(lam)
        - y * math.log(alpha)
        - (alpha + y) * np.log1p(lam / alpha)
    )
    return float(np.sum(terms))


def _pmf_iter(lam: float, alpha: float):
    """Yield (y, pmf(y)) forever, via the stable pmf ratio recurrence.

    pmf(y+1)/pmf(y) = r * (y + alpha) / (y + 1) with r = lam/(lam+alpha).
    """
    r = lam / (lam + alpha)
    pmf = math.exp(-alpha * math.log1p(lam / alpha))  # pmf(0)
    y = 0
    while True:
        yield y, pmf
        pmf *= r * (y + alpha) / (y + 1.0)
        y += 1


def tail_prob(j: int, lam: float, theta: float) -> float:
    """Pr(Y >= j) for Y ~ NB2(lam, alpha = 1/theta), clamped to [0, 1]."""
    j = _require_count(j, "j")
    lam = _require_positive(lam, "lam")
    theta = _require_positive(theta, "theta")
    alpha = 1.0 / theta
    tail = 1.0
    for y, pmf in _pmf_iter(lam, alpha):
        if y >= j:
            break
        tail -= pmf
    return min(1.0, max(0.0, tail))


def truncation_floor(lam: float, theta: float) -> float:
    """Minimum cutoff for series over the count support.

    lam + 10*sqrt(lam*(1+theta*lam)) keeps the moment mass inside the
    truncation regardless of how quickly the partial sum stabilises.
    """
    return lam + 10.0 * math.sqrt(lam * (1.0 + theta * lam))


@dataclass(frozen=True)
class TruncatedSum:
    """A pmf-weighted series value with its truncation diagnostics."""

    value: float
    cutoff: int
    tail_bound: float
    weight_sum: float


def truncated_pmf_sum(f, lam: float, theta: float, eps_tail: float = DEFAULT_EPS_TAIL,
                      hard_cap: int = TRUNCATION_HARD_CAP) -> TruncatedSum:
    """sum_y f(y) * pmf(y) truncated by the tail rule.

    Terms accumulate until the first Y* past the moment floor where
    Pr(Y >= Y*) < eps_tail * (|partial sum| + 1).  Raises
    TruncationCapExceeded past hard_cap terms.
    """
    lam = _require_positive(lam, "lam")
    theta = _require_positive(theta, "theta")
    if eps_tail <= 0.0:
        raise DomainError("eps_tail must be positive")
    alpha = 1.0 / theta
    floor = truncation_floor(lam, theta)
    total = 0.0
    weight = 0.0
    tail = 1.0
    for y, pmf in _pmf_iter(lam, alpha):
        if y >= floor and tail < eps_tail * (abs(total) + 1.0):
            return TruncatedSum(total, y, max(tail, 0.0), weight)
        if y > hard_cap:
            raise TruncationCapExceeded(
                f"series not converged after {hard_cap} terms "
                f"(lam={lam}, theta={theta}, tail={tail:.3e})"
            )
        total += f(y) * pmf
        weight += pmf
        tail -= pmf
