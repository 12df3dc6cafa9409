"""Observed and expected (Fisher) information matrices.

The expected information element for the dispersion requires the
pmf-weighted mean of the per-observation weighted sum
sum_{j<y} (2j+u)/(j+u)^2, u = 1/theta.  Interchanging the order of
summation turns it into a tail-probability series

    sum_y pmf(y) sum_{j<y} w_j  =  sum_j w_j Pr(Y >= j+1)

but the source material for this quantity is ambiguous between
Pr(Y >= j+1) and Pr(Y >= j), which differ by sum_j w_j pmf(j).  Both
conventions are therefore computed side by side, the direct double sum is
treated as definitional, and the element actually returned is the
convention that matches the brute-force pmf-weighted negative Hessian.

Standard errors default to the observed information (the negative analytic
Hessian), which needs no infinite sums at fit time; the expected matrix is
available behind a flag.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .derivatives import grad_hess
from .exceptions import DomainError, TruncationCapExceeded
from .model import (
    DEFAULT_EPS_TAIL,
    TRUNCATION_HARD_CAP,
    Dataset,
    Params,
    TruncatedSum,
    _pmf_iter,
    link_mean,
    truncated_pmf_sum,
    truncation_floor,
)
from .special import _require_positive, sum_trigamma_weights


class InfoKind(enum.Enum):
    OBSERVED = "observed"
    EXPECTED = "expected"


@dataclass(frozen=True)
class ThetaTruncationReport:
    """Truncation diagnostics for the expected dispersion-information element."""

    eps_tail: float
    cutoffs: tuple           # per-observation tail cutoff J*_i
    tail_bounds: tuple       # per-observation Pr(Y >= J*_i) at the cutoff
    survivor_at_j_total: float        # element using Pr(Y >= j)
    survivor_at_j_plus_1_total: float  # element using Pr(Y >= j+1)
    brute_force_total: float
    chosen: str              # which convention the returned element used

    def to_dict(self) -> dict:
        return {
            "eps_tail": self.eps_tail,
            "cutoffs": list(self.cutoffs),
            "tail_bounds": list(self.tail_bounds),
            "survivor_at_j_total": self.survivor_at_j_total,
            "survivor_at_j_plus_1_total": self.survivor_at_j_plus_1_total,
            "brute_force_total": self.brute_force_total,
            "chosen": self.chosen,
        }


@dataclass(frozen=True)
class InfoMatrix:
    """(p+1) x (p+1) information matrix with beta block, cross vector, theta scalar."""

    kind: InfoKind
    m: np.ndarray
    truncation: ThetaTruncationReport | None = None

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("information matrix must be square")
        if not np.all(np.isfinite(m)):
            raise DomainError("information matrix must be finite")
        if not np.allclose(m, m.T, atol=1e-12 * (1.0 + np.abs(m).max())):
            raise DomainError("information matrix must be symmetric")
        object.__setattr__(self, "m", 0.5 * (m + m.T))

    @property
    def beta_block(self) -> np.ndarray:
        return self.m[:-1, :-1]

    @property
    def cross_block(self) -> np.ndarray:
        return self.m[:-1, -1]

    @property
    def theta_element(self) -> float:
        return float(self.m[-1, -1])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "matrix": self.m.tolist(),
            "truncation": self.truncation.to_dict() if self.truncation else None,
        }


def _theta_bracket_scalar(y: float, lam: float, theta: float) -> float:
    t = theta * lam
    one = 1.0 + t
    return (theta * (1.0 + 2.0 * t) * (y - lam) - t * one) / (one * one) \
        + 2.0 * math.log1p(t)


def brute_force_expected_neg_hessian(lam: float, theta: float,
                                     eps_tail: float = DEFAULT_EPS_TAIL) -> TruncatedSum:
    """E[-d2 lnL/dtheta2] for one observation, by direct pmf-weighted summation.

    This is the verification oracle for the tail-probability formulas; it
    never touches them.  The per-count weighted sum is maintained
    incrementally so the whole series costs O(cutoff).
    """
    lam = _require_positive(lam, "lam")
    theta = _require_positive(theta, "theta")
    if eps_tail <= 0.0:
        raise DomainError("eps_tail must be positive")
    u = 1.0 / theta
    u3 = u * u * u
    floor = truncation_floor(lam, theta)
    cum_w = 0.0  # sum_{j<y} (2j+u)/(j+u)^2, grown as y advances
    total = 0.0
    weight = 0.0
    tail = 1.0
    for y, pmf in _pmf_iter(lam, u):
        if y >= floor and tail < eps_tail * (abs(total) + 1.0):
            return TruncatedSum(total, y, max(tail, 0.0), weight)
        if y > TRUNCATION_HARD_CAP:
            raise TruncationCapExceeded(
                f"expectation not converged after {TRUNCATION_HARD_CAP} terms "
                f"(lam={lam}, theta={theta})"
            )
        h_tt = u3 * cum_w - u3 * _theta_bracket_scalar(y, lam, theta)
        total += -h_tt * pmf
        weight += pmf
        tail -= pmf
        cum_w += (2.0 * y + u) / ((y + u) * (y + u))


def _tail_weighted_sums(lam: float, theta: float, eps_tail: float):
    """sum_j w_j Pr(Y>=j) and sum_j w_j Pr(Y>=j+1), truncated by the tail rule.

    Returns (sum_at_j, sum_at_j_plus_1, cutoff, tail_bound).
    """
    u = 1.0 / theta
    floor = truncation_floor(lam, theta)
    sum_a = 0.0
    sum_b = 0.0
    surv = 1.0  # Pr(Y >= j)
    for j, pmf in _pmf_iter(lam, u):
        if j >= floor and surv < eps_tail * (abs(sum_b) + 1.0):
            return sum_a, sum_b, j, max(surv, 0.0)
        if j > TRUNCATION_HARD_CAP:
            raise TruncationCapExceeded(
                f"tail series not converged after {TRUNCATION_HARD_CAP} terms "
                f"(lam={lam}, theta={theta})"
            )
        w = (2.0 * j + u) / ((j + u) * (j + u))
        surv_next = surv - pmf
        sum_a += w * surv
        sum_b += w * max(surv_next, 0.0)
        surv = surv_next


@dataclass(frozen=True)
class TailExpectation:
    """Both tail-index conventions of the expected weighted sum, plus the
    definitional double sum."""

    survivor_at_j: float         # (1/theta^3) sum_j w_j Pr(Y >= j)
    survivor_at_j_plus_1: float  # (1/theta^3) sum_j w_j Pr(Y >= j+1)
    double_sum: float            # (1/theta^3) sum_y pmf(y) sum_{j<y} w_j
    cutoff: int
    tail_bound: float

    def to_dict(self) -> dict:
        return {
            "survivor_at_j": self.survivor_at_j,
            "survivor_at_j_plus_1": self.survivor_at_j_plus_1,
            "double_sum": self.double_sum,
            "cutoff": self.cutoff,
            "tail_bound": self.tail_bound,
        }


def expected_trigamma_tail(lam: float, theta: float,
                           eps_tail: float = DEFAULT_EPS_TAIL) -> TailExpectation:
    """Expected weighted sum in all three formulations, for adjudication."""
    lam = _require_positive(lam, "lam")
    theta = _require_positive(theta, "theta")
    u3 = (1.0 / theta) ** 3
    sum_a, sum_b, cutoff, bound = _tail_weighted_sums(lam, theta, eps_tail)
    direct = truncated_pmf_sum(
        lambda y: sum_trigamma_weights(y, theta), lam, theta, eps_tail
    )
    return TailExpectation(
        survivor_at_j=u3 * sum_a,
        survivor_at_j_plus_1=u3 * sum_b,
        double_sum=u3 * direct.value,
        cutoff=cutoff,
        tail_bound=bound,
    )


def expected_info_theta(ds: Dataset, p: Params,
                        eps_tail: float = DEFAULT_EPS_TAIL):
    """Expected information element for theta, with truncation report.

    Per observation: (1/theta^3) [ 2 ln(1+theta*lam) - theta*lam/(1+theta*lam)
    - sum_j w_j T(j) ], computed under both tail-index conventions; the
    brute-force pmf-weighted negative Hessian arbitrates which convention
    the returned value uses.

    Returns (element, ThetaTruncationReport).
    """
    theta = p.theta
    u = 1.0 / theta
    u3 = u * u * u
    lam = link_mean(ds.X, p.beta).lam
    total_a = 0.0
    total_b = 0.0
    total_bf = 0.0
    cutoffs = []
    bounds = []
    for lam_i in lam:
        t = theta * lam_i
        smooth = 2.0 * math.log1p(t) - t / (1.0 + t)
        sum_a, sum_b, cutoff, bound = _tail_weighted_sums(lam_i, theta, eps_tail)
        total_a += u3 * (smooth - sum_a)
        total_b += u3 * (smooth - sum_b)
        total_bf += brute_force_expected_neg_hessian(lam_i, theta, eps_tail).value
        cutoffs.append(cutoff)
        bounds.append(bound)
    if abs(total_b - total_bf) <= abs(total_a - total_bf):
        chosen, element = "survivor_at_j_plus_1", total_b
    else:
        chosen, element = "survivor_at_j", total_a
    report = ThetaTruncationReport(
        eps_tail=eps_tail,
        cutoffs=tuple(cutoffs),
        tail_bounds=tuple(bounds),
        survivor_at_j_total=total_a,
        survivor_at_j_plus_1_total=total_b,
        brute_force_total=total_bf,
        chosen=chosen,
    )
    return element, report


def expected_info_beta(ds: Dataset, p: Params) -> np.ndarray:
    """E[-d2 lnL/dbeta dbeta'] = sum_i lam_i/(1+theta*lam_i) x_i x_i'."""
    lam = link_mean(ds.X, p.beta).lam
    w = lam / (1.0 + p.theta * lam)
    m = (ds.X.T * w) @ ds.X
    return 0.5 * (m + m.T)


def expected_info_cross(ds: Dataset, p: Params,
                        eps_tail: float = DEFAULT_EPS_TAIL):
    """The beta/theta cross block of the expected information.

    Analytically zero because E[y_i] = lam_i; the brute-force pmf-weighted
    version is returned alongside for verification.

    Returns (zero vector, numeric vector).
    """
    theta = p.theta
    lam = link_mean(ds.X, p.beta).lam
    numeric = np.zeros(ds.p)
    for i, lam_i in enumerate(lam):
        coef = lam_i / (1.0 + theta * lam_i) ** 2
        mean_dev = truncated_pmf_sum(lambda y: y - lam_i, lam_i, theta, eps_tail)
        numeric += coef * mean_dev.value * ds.X[i]
    return np.zeros(ds.p), numeric


def observed_info(ds: Dataset, p: Params) -> InfoMatrix:
    """Negative analytic Hessian assembled into a (p+1) x (p+1) matrix."""
    gh = grad_hess(ds, p)
    k = ds.p + 1
    m = np.empty((k, k))
    m[:-1, :-1] = -gh.h_bb
    m[:-1, -1] = -gh.h_bt
    m[-1, :-1] = -gh.h_bt
    m[-1, -1] = -gh.h_tt
    return InfoMatrix(kind=InfoKind.OBSERVED, m=m)


def expected_info(ds: Dataset, p: Params,
                  eps_tail: float = DEFAULT_EPS_TAIL) -> InfoMatrix:
    """Expected information matrix: PSD beta block, zero cross block,
    adjudicated theta element."""
    k = ds.p + 1
    m = np.zeros((k, k))
    m[:-1, :-1] = expected_info_beta(ds, p)
    element, report = expected_info_theta(ds, p, eps_tail)
    m[-1, -1] = element
    return InfoMatrix(kind=InfoKind.EXPECTED, m=m, truncation=report)
