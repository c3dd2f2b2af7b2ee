"""Log-domain combinatorics, binomial tails, entropies and tail-bound primitives.

Everything information-theoretic here is in bits unless a name says ``nat``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

LN2 = math.log(2.0)

_EXACT_CHOOSE_MAX_N = 64
_PRODUCT_CHOOSE_MAX_K = 1000


@dataclass(frozen=True)
class LogDomainValue:
    """A nonnegative quantity stored as its base-2 logarithm (-inf encodes 0)."""

    log2_value: float

    def to_linear(self) -> float:
        if self.log2_value >= 1024:
            return math.inf
        return 2.0 ** self.log2_value

    def to_probability(self) -> float:
        """Linear value clamped to [0, 1]."""
        if self.log2_value >= 0:
            return 1.0
        return 2.0 ** self.log2_value


@dataclass(frozen=True)
class BinomialSpec:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"binomial trial count must be >= 0, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"binomial probability must lie in [0, 1], got {self.p}")


def _check_probability(name: str, t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {t}")


def exact_choose(n: int, k: int) -> int:
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return math.comb(n, k)


def log2_choose(n: int, k: int) -> float:
    """log2 of C(n, k).

    Small n goes through exact integers. For larger n the shorter side of
    the product n(n-1).../k! is summed with fsum while it has at most 1000
    factors; beyond that log-gamma is used, where the result is large enough
    that its absolute rounding error is negligible in relative terms.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if n <= _EXACT_CHOOSE_MAX_N:
        return math.log2(math.comb(n, k))
    if k <= _PRODUCT_CHOOSE_MAX_K:
        return math.fsum(math.log2((n - i) / (i + 1)) for i in range(k))
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / LN2


def ln_choose(n: int, k: int) -> float:
    return log2_choose(n, k) * LN2


def _ln_pmf(n: int, p: float, d: int) -> float:
    # Caller guarantees 0 < p < 1 and 0 <= d <= n.
    return ln_choose(n, d) + d * math.log(p) + (n - d) * math.log1p(-p)


def _logsumexp(values: list[float]) -> float:
    if not values:
        return -math.inf
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def binom_log_pmf(spec: BinomialSpec, d: int) -> float:
    """Natural log of P(Bin(n, p) = d)."""
    n, p = spec.n, spec.p
    if d < 0 or d > n:
        return -math.inf
    if p == 0.0:
        return 0.0 if d == 0 else -math.inf
    if p == 1.0:
        return 0.0 if d == n else -math.inf
    return _ln_pmf(n, p, d)


def binom_log_cdf(spec: BinomialSpec, d: int) -> float:
    """Natural log of P(Bin(n, p) <= d), summed over the lower tail."""
    n = spec.n
    if d < 0:
        return -math.inf
    if d >= n:
        return 0.0
    return _logsumexp([binom_log_pmf(spec, i) for i in range(d + 1)])


def binom_log_sf(spec: BinomialSpec, d: int) -> float:
    """Natural log of P(Bin(n, p) > d)."""
    n = spec.n
    if d < 0:
        return 0.0
    if d >= n:
        return -math.inf
    return _logsumexp([binom_log_pmf(spec, i) for i in range(d + 1, n + 1)])


def binom_tail(
    spec: BinomialSpec, d: int, mode: Literal["pmf", "cdf"] = "cdf"
) -> float:
    """P(Bin(n, p) = d) or P(Bin(n, p) <= d).

    The cdf is accumulated from whichever tail is lighter, so tiny lower
    tails keep their relative precision and cdf values near 1 do not lose
    the complement.
    """
    if mode == "pmf":
        return math.exp(binom_log_pmf(spec, d))
    if mode != "cdf":
        raise ValueError(f"unknown mode {mode!r}")
    n, p = spec.n, spec.p
    if d < 0:
        return 0.0
    if d >= n:
        return 1.0
    if d <= n * p:
        return min(1.0, math.exp(binom_log_cdf(spec, d)))
    return max(0.0, -math.expm1(binom_log_sf(spec, d)))


def binary_entropy(t: float) -> float:
    _check_probability("t", t)
    if t == 0.0 or t == 1.0:
        return 0.0
    return -t * math.log2(t) - (1.0 - t) * math.log2(1.0 - t)


def binary_entropy_nat(t: float) -> float:
    return binary_entropy(t) * LN2


def kl_bernoulli(q: float, p: float) -> float:
    """D(q || p) in bits between Bernoulli(q) and Bernoulli(p)."""
    _check_probability("q", q)
    _check_probability("p", p)
    if q == p:
        return 0.0
    total = 0.0
    for a, b in ((q, p), (1.0 - q, 1.0 - p)):
        if a == 0.0:
            continue
        if b == 0.0:
            return math.inf
        total += a * math.log2(a / b)
    return max(total, 0.0)


def chernoff_upper(spec: BinomialSpec, q: float) -> LogDomainValue:
    """Upper bound 2^{-n D(q||p)} on P(Bin(n, p) <= n q), for q < p <= 1/2."""
    p = spec.p
    if p > 0.5:
        raise ValueError(f"lower-tail Chernoff bound requires p <= 1/2, got {p}")
    if not 0.0 <= q < p:
        raise ValueError(f"lower-tail Chernoff bound requires 0 <= q < p, got q={q}, p={p}")
    return LogDomainValue(-spec.n * kl_bernoulli(q, p))


def std_normal_cdf(y: float) -> float:
    """Standard normal cdf via the complementary error function.

    0.5*erfc(-y/sqrt 2) has no cancellation in either tail and is accurate
    to a few ulp, well inside 1e-9.
    """
    return 0.5 * math.erfc(-y / math.sqrt(2.0))


@lru_cache(maxsize=64)
def cumulative_choose_row(n: int) -> tuple[int, ...]:
    """Exact prefix sums sum_{i<=L} C(n, i) for L = 0..n."""
    out = []
    c, acc = 1, 0
    for i in range(n + 1):
        acc += c
        out.append(acc)
        c = c * (n - i) // (i + 1)
    return tuple(out)
