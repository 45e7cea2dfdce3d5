"""Explicit evaluation of the moment and tail bounds.

Every bound is built from concrete chains (gluing counts, loop
multiplicities, cluster sums, the two-regime split on the maximal cluster
power) instead of unspecified constants, so each value can be compared with
the exact moments of :mod:`dilute_wigner.walks`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .ensemble import EntryDistribution, SparseSymmetricMatrix
from .errors import InvalidParameterError
from .trees import catalan, sum_sq_power_totals

CHI = 1.0 / (math.log(4) - math.log(3))
EXACT_CENSUS_MAX_K = 10


def _logsumexp(terms: list[float]) -> float:
    finite = [t for t in terms if t > -math.inf]
    if not finite:
        return -math.inf
    top = max(finite)
    if top == math.inf:
        return math.inf
    return top + math.log(math.fsum(math.exp(t - top) for t in finite))


def _log(x) -> float:
    if x == 0:
        return -math.inf
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


@dataclass
class BoundParams:
    n: int
    p: float
    k: int
    epsilon: float = 0.5
    dist: EntryDistribution = field(default_factory=EntryDistribution.rademacher)
    use_exact_census: bool = False
    chi: float = CHI

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidParameterError("epsilon must be positive")
        if self.chi != CHI:
            raise InvalidParameterError("chi is fixed at 1 / (log 4 - log 3)")


@dataclass
class BoundReport:
    params: dict[str, Any]
    bound_name: str
    value: float
    certified_premises: list[str] = field(default_factory=list)
    oracle_value: float | None = None
    dominance_ok: bool | None = None

    def to_json(self) -> str:
        d = asdict(self)
        d = {key: val for key, val in d.items() if val is not None or key in ("params", "bound_name", "value")}
        return json.dumps(d, sort_keys=True)


# -- gluing counts -------------------------------------------------------------------

def ordinary_gluing_bound(k: int, r: int) -> float:
    """k^{2r} / (2^r r!): ways to make r ordinary gluings in a k-edge tree."""
    if r < 0:
        raise InvalidParameterError("r must be non-negative")
    return float(Fraction(k ** (2 * r), 2**r * math.factorial(r)))


def loop_multiplicity_bound(k: int, r: int) -> float:
    """(4k)^r: partitions sharing one glued graph because of correct loops."""
    if r < 0:
        raise InvalidParameterError("r must be non-negative")
    return float((4 * k) ** r)


def cluster_gluing_bound(k: int, s: int, dist: EntryDistribution, use_exact_census: bool = False) -> float:
    """Weighted count of s cluster gluings.

    Crude: (4k^2)^s / s! * V_{4s}, per tree. Exact: sum over all trees of
    (sum_i m_i^2)^s / s! * V_{4s}, which needs k <= 10.
    """
    if s < 0:
        raise InvalidParameterError("s must be non-negative")
    v = dist.even_moment(2 * s)
    if use_exact_census:
        _need_census(k)
        return float(sum_sq_power_totals(k, s)[s] * v / math.factorial(s))
    return float(Fraction((4 * k * k) ** s, math.factorial(s)) * v)


def _need_census(k: int) -> None:
    if k > EXACT_CENSUS_MAX_K:
        raise InvalidParameterError(f"exact tree census only up to k={EXACT_CENSUS_MAX_K}")


# -- moment bound ------------------------------------------------------------------------

def log_moment_upper_bound(n: int, p: float, k: int, dist: EntryDistribution, use_exact_census: bool = False) -> float:
    if k < 0 or n < 1 or p <= 0:
        raise InvalidParameterError("need k >= 0, n >= 1, p > 0")
    # log of the r-dependent factor: N^-r k^{2r}/(2^r r!) (4k)^r
    log_r = [
        -r * math.log(n) + 2 * r * math.log(max(k, 1)) - r * math.log(2) - math.lgamma(r + 1) + r * math.log(4 * max(k, 1))
        for r in range(k + 1)
    ]
    if use_exact_census:
        _need_census(k)
        totals = sum_sq_power_totals(k, k)
        log_s = [
            -s * math.log(p) + dist.log_even_moment(2 * s) - math.lgamma(s + 1) + _log(totals[s])
            for s in range(k + 1)
        ]
    else:
        log_tk = _log(catalan(k))
        log_s = [
            log_tk - s * math.log(p) + s * math.log(4 * k * k if k else 1) - math.lgamma(s + 1) + dist.log_even_moment(2 * s)
            for s in range(k + 1)
        ]
    return _logsumexp([log_r[r] + log_s[q - r] for q in range(k + 1) for r in range(q + 1)])


def moment_upper_bound(n: int, p: float, k: int, dist: EntryDistribution, use_exact_census: bool = False) -> float:
    """Upper bound on E (1/N) Tr A^{2k}.

    Sums over q = r + s <= k of
    N^-r [k^{2r}/(2^r r!)] (4k)^r p^-s [cluster gluing weight for s], with
    the t_k tree count as a prefactor (crude) or absorbed in the census sum.
    """
    return math.exp(log_moment_upper_bound(n, p, k, dist, use_exact_census))


# -- cluster sums ----------------------------------------------------------------------

@dataclass(frozen=True)
class QBound:
    value: float
    closed_form: float
    exact: float | None


def q_bound(k: int, s: int, p: float, dist: EntryDistribution) -> QBound:
    """Bound on V_{4s}/(s! p^s) * sum over T_k of (sum_i m_i^2)^s.

    Uses (sum m_i^2)^s <= (2k)^s mhat^s and splits trees at maximal cluster
    power mhat = chi log k: below, at most t_k (chi log k)^s; above, each power
    m contributes m^s k t_k (3/4)^{m-2}. ``closed_form`` replaces the second
    part by t_k e^2 (s+1)! (chi log k)^s.
    """
    if k < 2:
        raise InvalidParameterError("k >= 2 needed so that log k > 0")
    if s < 0 or p <= 0:
        raise InvalidParameterError("need s >= 0 and p > 0")
    tk = catalan(k)
    exact = None
    if k <= EXACT_CENSUS_MAX_K:
        exact = float(Fraction(sum_sq_power_totals(k, s)[s], math.factorial(s)) * dist.even_moment(2 * s) / Fraction(p) ** s)
    if s == 0:
        return QBound(float(tk), float(tk), exact)
    cut = CHI * math.log(k)
    head = tk * cut**s
    tail = sum(m**s * k * tk * 0.75 ** (m - 2) for m in range(math.floor(cut) + 1, k + 1))
    closed_tail = tk * math.e**2 * math.factorial(s + 1) * cut**s
    pref = float(dist.even_moment(2 * s)) / (math.factorial(s) * p**s) * (2 * k) ** s
    return QBound(pref * (head + tail), pref * (head + closed_tail), exact)


# -- tail bounds --------------------------------------------------------------------------

@dataclass(frozen=True)
class TailBound:
    value: float
    premise_certified: bool
    log_moment_bound: float


def norm_tail_bound(
    n: int, p: float, k: int, epsilon: float, dist: EntryDistribution | None = None
) -> TailBound:
    """min(1, N ((1+eps)/(1+2eps))^{2k}) bounding P(||A|| > 2(1+2eps)).

    The Markov step is valid only when M_{2k} <= (1+eps)^{2k} 4^k;
    ``premise_certified`` says whether :func:`moment_upper_bound` proves it.
    """
    if epsilon <= 0:
        raise InvalidParameterError("epsilon must be positive")
    dist = dist or EntryDistribution.rademacher()
    log_val = math.log(n) + 2 * k * (math.log1p(epsilon) - math.log1p(2 * epsilon))
    value = 1.0 if log_val >= 0 else math.exp(log_val)
    log_m = log_moment_upper_bound(n, p, k, dist)
    certified = log_m <= 2 * k * math.log1p(epsilon) + k * math.log(4)
    return TailBound(value, certified, log_m)


def poisson_max_tail(n: int, p: float, r: float) -> float:
    """[1 - e^-p p^j / j!]^{N/2} with j = floor(p R)."""
    if r <= 0:
        raise InvalidParameterError("R must be positive")
    if p <= 0:
        raise InvalidParameterError("p must be positive")
    j = math.floor(p * r)
    pmf = math.exp(-p + j * math.log(p) - math.lgamma(j + 1))
    return math.exp(n / 2 * math.log1p(-pmf)) if pmf < 1 else 0.0


def rowsum_norm_lower_bound(m: SparseSymmetricMatrix) -> float:
    """sqrt(max_j sum_y M(j, y)^2), a lower bound on the spectral norm."""
    if m.nnz == 0:
        return 0.0
    a = m.to_csr()
    return float(np.sqrt(a.multiply(a).sum(axis=1).max()))
