"""Converse (upper) bounds on group testing success probability.

Each bound returns a :class:`BoundResult` carrying the formula value ``raw``
(which may exceed one) and ``clamped`` in [0, 1]. A bound whose validity
condition fails is reported with ``valid=False`` and clamps to the vacuous 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath
import numpy as np
from scipy.optimize import brentq

from .channels import capacity_bsc
from .numerics import (
    BinomialSpec,
    binary_entropy,
    binary_entropy_nat,
    binom_log_pmf,
    binom_tail,
    cumulative_choose_row,
    log2_choose,
    std_normal_cdf,
)
from .sources import CombinatorialUniform, SourceModel, l_star, top_mass

# 2^T / C(N, K) is kept as an exact rational up to this many tests.
_EXACT_BJA_MAX_T = 4096
MAX_TESTS = 10**6


@dataclass(frozen=True)
class BoundResult:
    bound_name: str
    raw: float
    params: dict[str, Any]
    valid: bool = True
    reason: str | None = None
    details: dict[str, Any] = field(default_factory=dict)
    exact: Fraction | None = None

    @property
    def clamped(self) -> float:
        if not self.valid or math.isnan(self.raw):
            return 1.0
        return min(1.0, max(0.0, self.raw))

    def as_record(self) -> dict[str, Any]:
        return {
            "bound": self.bound_name,
            **self.params,
            "raw": self.raw,
            "clamped": self.clamped,
            "valid": self.valid,
            "reason": self.reason or "",
        }


def _pow2(x: float) -> float:
    if x >= 1024:
        return math.inf
    return 2.0 ** x


def _vacuous(name: str, params: dict, reason: str, **details) -> BoundResult:
    return BoundResult(name, 1.0, params, valid=False, reason=reason, details=details)


def bja_bound(T: int, N: int, K: int) -> BoundResult:
    """2^T / C(N, K): noiseless combinatorial testing, adaptive or not."""
    if not 0 <= K <= N:
        raise ValueError(f"need 0 <= K <= N, got N={N}, K={K}")
    if T < 0:
        raise ValueError("T must be >= 0")
    params = {"T": T, "N": N, "K": K}
    if T <= _EXACT_BJA_MAX_T:
        exact = Fraction(1 << T, math.comb(N, K))
        raw = math.inf if exact > 2**1000 else float(exact)
        return BoundResult("bja", raw, params, exact=exact)
    return BoundResult("bja", _pow2(T - log2_choose(N, K)), params)


FANO_MODELS = ("comb", "prob", "comb-bsc")


def fano_bound(
    T: int, model: str, N: int, K: int | None = None, p: float | None = None
) -> BoundResult:
    """Fano-type weak converses: T * (bits per test) / H(U)."""
    if T < 0:
        raise ValueError("T must be >= 0")
    if model == "comb":
        params = {"T": T, "N": N, "K": K}
        info = log2_choose(N, K)
        per_test = 1.0
    elif model == "comb-bsc":
        params = {"T": T, "N": N, "K": K, "p": p}
        info = log2_choose(N, K)
        per_test = capacity_bsc(p)
    elif model == "prob":
        if p is None or not 0.0 < p < 1.0:
            raise ValueError(f"probabilistic Fano bound needs 0 < p < 1, got {p}")
        params = {"T": T, "N": N, "p": p}
        info = N * binary_entropy(p)
    else:
        raise ValueError(f"unknown Fano model {model!r}; choose from {FANO_MODELS}")
    name = f"fano-{model}"
    if info <= 0:
        return _vacuous(name, params, "source entropy is zero")
    if model == "prob":
        return BoundResult(name, T / info, params)
    return BoundResult(name, T * per_test / info, params)


def noiseless_converse(src: SourceModel, T: int) -> BoundResult:
    """curP(2^T): the top 2^T source probabilities.

    Holds for adaptive and non-adaptive noiseless testing alike; the
    non-adaptive counting argument gives the same number.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    params = {"T": T, "source": type(src).__name__}
    if isinstance(src, CombinatorialUniform) and T <= _EXACT_BJA_MAX_T:
        support = math.comb(src.N, src.K)
        exact = Fraction(min(1 << T, support), support)
        return BoundResult("noiseless", top_mass(src, 1 << T), params, exact=exact)
    return BoundResult("noiseless", top_mass(src, log2_m=float(T)), params)


def iid_curp_bound(N: int, p: float, T: int) -> BoundResult:
    """Exact curP(2^T) for N i.i.d. Bernoulli(p) items, from L*_{N,T} and its slack."""
    if not 0.0 < p <= 0.5:
        raise ValueError(f"need 0 < p <= 1/2, got {p}")
    params = {"T": T, "N": N, "p": p}
    ls = l_star(N, T)
    if ls.saturated:
        return BoundResult("iid-curp", 1.0, params, details={"l_star": N, "slack_s": 1})
    L, s = ls.l_star, ls.slack_s
    spec = BinomialSpec(N, p)
    lp, lq = math.log(p), math.log1p(-p)
    terms = [math.exp(binom_log_pmf(spec, i)) for i in range(L)]
    terms.append(math.exp(math.log(s) + L * lp + (N - L) * lq))
    raw = math.fsum(terms)
    return BoundResult("iid-curp", raw, params, details={"l_star": L, "slack_s": s})


def gaussian_approx_curp(N: int, p: float, y: float) -> tuple[float, float]:
    """(T(y), Phi(y)) with L(y) = Np + y sqrt(Np(1-p)) and T(y) = N h(L(y)/N)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"need 0 < p < 1, got {p}")
    L = N * p + y * math.sqrt(N * p * (1 - p))
    if L < -1e-9 * N or L > N * (1 + 1e-9):
        raise ValueError(f"L(y)={L} falls outside [0, N]")
    frac = min(1.0, max(0.0, L / N))
    return N * binary_entropy(frac), std_normal_cdf(y)


def gaussian_approx_at_tests(N: int, p: float, T: float) -> float:
    """Phi(y) for the y on the rising branch (L(y) <= N/2) with T(y) = T."""
    sd = math.sqrt(N * p * (1 - p))
    y_lo = -N * p / sd
    y_hi = (N / 2 - N * p) / sd
    if T <= 0:
        return std_normal_cdf(y_lo)
    if T >= N:
        return std_normal_cdf(y_hi)
    y = brentq(lambda v: gaussian_approx_curp(N, p, v)[0] - T, y_lo, y_hi, xtol=1e-13)
    return std_normal_cdf(y)


def _l_star_small(R: int, T: int) -> int:
    target = 1 << T
    acc, c = 0, 1
    for i in range(R + 1):
        acc += c
        if acc >= target:
            return i
        c = c * (R - i) // (i + 1)
    return R


def nonidentical_c_star(
    p_list, T: int, include_unused_items: bool = True
) -> tuple[float, int]:
    """(ln c*, maximizing R) for the weight-L*_{R,T} construction on the R likeliest items.

    c(R) is the probability of the least likely weight-L*_{R,T} subset of
    items 1..R. With ``include_unused_items`` that probability also carries
    the factor prod_{i>R}(1-p_i) for the items held non-defective, which is
    what makes it the probability of a full defectivity vector; without it
    the product stops at item R.
    """
    ps = list(p_list)
    N = len(ps)
    ln_p = np.concatenate([[0.0], np.cumsum(np.log(ps))])
    ln_q = np.concatenate([[0.0], np.cumsum(np.log1p(-np.asarray(ps, dtype=float)))])
    best, best_R = -math.inf, -1
    for R in range(T, N + 1):
        L = _l_star_small(R, T)
        ln_c = ln_q[R - L] + (ln_p[R] - ln_p[R - L])
        if include_unused_items:
            ln_c += ln_q[N] - ln_q[R]
        if ln_c > best:
            best, best_R = float(ln_c), R
    return best, best_R


def nonidentical_bound(p_list, T: int, include_unused_items: bool = True) -> BoundResult:
    """Bernstein-type bound on curP(2^T) for independent, non-identical defect probabilities.

    Natural logarithms throughout. With t = ln c* + sum_i h_nat(p_i), the
    bound exp(-t^2 / (4 L)) holds when 0 <= t <= L / M.
    """
    ps = [float(p) for p in p_list]
    if any(a < b for a, b in zip(ps, ps[1:])):
        raise ValueError("p_list must be sorted nonincreasing")
    if any(not 0.0 < p <= 0.5 for p in ps):
        raise ValueError("every p_i must lie in (0, 1/2]")
    N = len(ps)
    params = {"T": T, "N": N}
    if T > N:
        return _vacuous("nonidentical", params, "2^T exceeds the number of defectivity vectors")
    zeta = [math.log((1 - p) / p) for p in ps]
    L = math.fsum(p * (1 - p) * z * z for p, z in zip(ps, zeta))
    M = max((1 - p) * z for p, z in zip(ps, zeta))
    if M == 0.0:
        return _vacuous(
            "nonidentical", params, "all p_i = 1/2: source is uniform, use bja", L=L, M=M
        )
    ln_c, R = nonidentical_c_star(ps, T, include_unused_items)
    h_nat = math.fsum(binary_entropy_nat(p) for p in ps)
    t = ln_c + h_nat
    details = {"L": L, "M": M, "ln_c_star": ln_c, "R_star": R, "t": t}
    if not 0.0 <= t <= L / M:
        return _vacuous("nonidentical", params, f"t={t:.6g} outside [0, L/M={L / M:.6g}]", **details)
    return BoundResult("nonidentical", math.exp(-t * t / (4 * L)), params, details=details)


@dataclass(frozen=True)
class NPThreshold:
    d_star: int
    lam: float
    achieved_type2: float
    log2_achieved: float


def np_threshold(T: int, log2_target: float) -> NPThreshold:
    """Randomized Hamming-distance test with type-II error 2^log2_target under Bin(T, 1/2).

    Finds d* with P(Bin(T,1/2) <= d*-1) < target <= P(Bin(T,1/2) <= d*) and
    lam = (target - cdf(d*-1)) / pmf(d*). The cdf is an exact integer sum
    over 2^T, so the threshold search and lam carry no rounding beyond the
    final conversion to float.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    if log2_target > 0:
        raise ValueError(f"target probability exceeds 1 (log2 target {log2_target})")
    row = cumulative_choose_row(T)
    with mpmath.workprec(T + 96):
        scaled = mpmath.power(2, mpmath.mpf(log2_target) + T)
        lo, hi = 0, T
        while lo < hi:
            mid = (lo + hi) // 2
            if mpmath.mpf(row[mid]) >= scaled:
                hi = mid
            else:
                lo = mid + 1
        d = lo
        below = row[d - 1] if d > 0 else 0
        pmf = row[d] - below
        lam = (scaled - below) / pmf
        lam = min(mpmath.mpf(1), max(mpmath.mpf(0), lam))
        achieved = (below + lam * pmf) / mpmath.power(2, T)
        return NPThreshold(
            d_star=d,
            lam=float(lam),
            achieved_type2=float(achieved),
            log2_achieved=float(mpmath.log(achieved, 2)) if achieved > 0 else -math.inf,
        )


def bsc_nonadaptive_bound(T: int, log2_M: float, p: float) -> BoundResult:
    """Meta-converse for non-adaptive testing over a BSC(p) with M equiprobable sets."""
    if not 0.0 <= p < 0.5:
        raise ValueError(f"need 0 <= p < 1/2, got {p}")
    if log2_M < 0:
        raise ValueError("log2_M must be >= 0")
    params = {"T": T, "log2_M": log2_M, "p": p}
    thr = np_threshold(T, -log2_M)
    spec = BinomialSpec(T, p)
    raw = binom_tail(spec, thr.d_star - 1, "cdf") + thr.lam * binom_tail(spec, thr.d_star, "pmf")
    return BoundResult(
        "bsc-nonadaptive", raw, params, details={"d_star": thr.d_star, "lambda": thr.lam}
    )


@dataclass(frozen=True)
class AdaptiveNoisyConfig:
    T: int
    log2_M: float
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 0.5:
            raise ValueError(f"need 0 < p < 1/2, got {self.p}")
        if self.log2_M < 0:
            raise ValueError("log2_M must be >= 0")
        if self.T < 0:
            raise ValueError("T must be >= 0")


def bsc_adaptive_bound(cfg: AdaptiveNoisyConfig) -> BoundResult:
    """Adaptive BSC converse: min over d* of 2^{TC - (d*-Tp) log2((1-p)/p)}/M + P(Bin(T,p) <= d*).

    The first term is 2^{T(C + eps/2)}/M with the typical-set slack
    eps*T/2 = -(d* - Tp) log2((1-p)/p); a threshold below the mean number of
    flips therefore inflates it. Every exponential and logarithm is base 2
    so it matches the bits-valued capacity C = 1 - h(p). The scan over d* is
    exhaustive.
    """
    T, p = cfg.T, cfg.p
    params = {"T": T, "log2_M": cfg.log2_M, "p": p}
    C = capacity_bsc(p)
    slope = math.log2((1 - p) / p)
    spec = BinomialSpec(T, p)
    log_pmf = np.array([binom_log_pmf(spec, d) for d in range(T + 1)])
    log_cdf = np.logaddexp.accumulate(log_pmf)
    best, best_d = math.inf, 0
    for d in range(T + 1):
        first = _pow2(-cfg.log2_M + T * C - (d - T * p) * slope)
        value = first + min(1.0, math.exp(log_cdf[d]))
        if value < best:
            best, best_d = value, d
    return BoundResult("bsc-adaptive", best, params, details={"d_star": best_d})


# ---------------------------------------------------------------------------
# Bound families addressable by name (CLI, sweeps, test-count inversion).
# ---------------------------------------------------------------------------

FAMILY_PARAMS: dict[str, tuple[str, ...]] = {
    "bja": ("N", "K"),
    "fano-comb": ("N", "K"),
    "fano-prob": ("N", "p"),
    "fano-comb-bsc": ("N", "K", "p"),
    "iid-curp": ("N", "p"),
    "nonidentical": ("p_list",),
    "bsc-nonadaptive": ("N", "K", "p"),
    "bsc-adaptive": ("N", "K", "p"),
}

# Families whose clamped value never decreases in T. The non-identical bound
# falls back to the vacuous value when its validity window is left. The
# adaptive BSC bound falls at small T, where its d* = 0 branch is (1-p)^T.
# Both are excluded from test-count inversion.
MONOTONE_FAMILIES = tuple(f for f in FAMILY_PARAMS if f not in ("nonidentical", "bsc-adaptive"))


def _log2_M(params: dict) -> float:
    if params.get("log2_M") is not None:
        return float(params["log2_M"])
    return log2_choose(params["N"], params["K"])


def evaluate_bound(family: str, T: int, **params) -> BoundResult:
    if family == "bja":
        return bja_bound(T, params["N"], params["K"])
    if family.startswith("fano-"):
        return fano_bound(T, family[len("fano-"):], params["N"], params.get("K"), params.get("p"))
    if family == "iid-curp":
        return iid_curp_bound(params["N"], params["p"], T)
    if family == "nonidentical":
        return nonidentical_bound(params["p_list"], T)
    if family == "bsc-nonadaptive":
        return bsc_nonadaptive_bound(T, _log2_M(params), params["p"])
    if family == "bsc-adaptive":
        return bsc_adaptive_bound(AdaptiveNoisyConfig(T, _log2_M(params), params["p"]))
    raise ValueError(f"unknown bound family {family!r}; choose from {sorted(FAMILY_PARAMS)}")


def min_tests_for_target(family: str, target: float, **params) -> int:
    """Smallest T whose clamped bound reaches ``target`` (exponential, then binary search)."""
    if family not in MONOTONE_FAMILIES:
        raise ValueError(f"{family!r} is not monotone in T; cannot invert it")
    if not 0.0 <= target <= 1.0:
        raise ValueError(f"target must be a probability, got {target}")

    def reached(T: int) -> bool:
        return evaluate_bound(family, T, **params).clamped >= target

    if reached(0):
        return 0
    if target >= 1.0 and family.startswith("bsc") and params.get("p", 0) > 0:
        raise ValueError("a noisy channel never yields a success bound of exactly 1")
    hi = 1
    while not reached(hi):
        if hi >= MAX_TESTS:
            raise ValueError(f"target {target} not reached within {MAX_TESTS} tests")
        hi = min(2 * hi, MAX_TESTS)
    lo = hi // 2  # reached(lo) is False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return hi


def rate_at_target(N: int, K: int, p: float, target: float, family: str = "bsc-nonadaptive") -> tuple[int, float]:
    """(T_min, log2 C(N, K) / T_min) for the finite-blocklength rate curve."""
    T = min_tests_for_target(family, target, N=N, K=K, p=p)
    return T, (log2_choose(N, K) / T if T > 0 else math.inf)


