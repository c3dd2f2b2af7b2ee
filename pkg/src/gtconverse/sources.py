"""Distributions over defectivity vectors and their top-mass functional.

The top mass curP(m) of a source is the total probability of its m most
likely defectivity vectors. The noiseless converse is curP(2^T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .numerics import (
    binary_entropy,
    cumulative_choose_row,
    ln_choose,
    log2_choose,
)

MAX_ENUMERATED_N = 24
PMF_TOLERANCE = 1e-12


class ExactTopMassUnsupported(ValueError):
    """Raised when curP cannot be computed exactly for a source."""


@dataclass(frozen=True)
class CombinatorialUniform:
    N: int
    K: int

    def __post_init__(self):
        if not 0 <= self.K <= self.N:
            raise ValueError(f"need 0 <= K <= N, got N={self.N}, K={self.K}")


@dataclass(frozen=True)
class IIDBernoulli:
    N: int
    p: float

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be >= 0")
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"IID defect probability must lie in [0, 1/2], got {self.p}")


@dataclass(frozen=True)
class NonIdenticalBernoulli:
    p_list: tuple[float, ...]

    def __post_init__(self):
        ps = tuple(float(p) for p in self.p_list)
        object.__setattr__(self, "p_list", ps)
        for p in ps:
            if not 0.0 <= p <= 0.5:
                raise ValueError(f"defect probabilities must lie in [0, 1/2], got {p}")
        if any(a < b for a, b in zip(ps, ps[1:])):
            raise ValueError("p_list must be sorted nonincreasing")

    @property
    def N(self) -> int:
        return len(self.p_list)

    @property
    def zeta_list(self) -> tuple[float, ...]:
        """Natural-log odds ln((1-p)/p) per item; +inf where p = 0."""
        return tuple(math.inf if p == 0 else math.log((1 - p) / p) for p in self.p_list)


@dataclass(frozen=True)
class Enumerated:
    """Explicit pmf keyed by defectivity vectors as N-character bit strings."""

    N: int
    pmf: dict[str, float] = field(hash=False)

    def __post_init__(self):
        if not 0 <= self.N <= MAX_ENUMERATED_N:
            raise ValueError(f"enumerated sources are limited to N <= {MAX_ENUMERATED_N}")
        total = 0.0
        for key, prob in self.pmf.items():
            if len(key) != self.N or set(key) - {"0", "1"}:
                raise ValueError(f"bad defectivity vector {key!r} for N={self.N}")
            if prob < 0:
                raise ValueError(f"negative probability for {key!r}")
            total += prob
        if abs(total - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"pmf sums to {total!r}, not 1")


@dataclass(frozen=True)
class TwoStateMarkov:
    """Binary Markov chain U_1..U_N with explicit initial law.

    ``transition[a][b]`` is P(U_{i+1} = b | U_i = a).
    """

    N: int
    initial: tuple[float, float]
    transition: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        if not 1 <= self.N <= MAX_ENUMERATED_N:
            raise ValueError(f"Markov sources are limited to 1 <= N <= {MAX_ENUMERATED_N}")
        init = tuple(float(x) for x in self.initial)
        trans = tuple(tuple(float(x) for x in row) for row in self.transition)
        object.__setattr__(self, "initial", init)
        object.__setattr__(self, "transition", trans)
        for row in (init, *trans):
            if len(row) != 2 or min(row) < 0 or abs(sum(row) - 1.0) > PMF_TOLERANCE:
                raise ValueError(f"not a probability vector: {row}")

    @classmethod
    def stationary(cls, N: int, transition) -> "TwoStateMarkov":
        (p00, p01), (p10, p11) = transition
        if p01 + p10 == 0:
            raise ValueError("chain has no unique stationary law")
        pi1 = p01 / (p01 + p10)
        return cls(N, (1.0 - pi1, pi1), transition)

    def stationary_law(self) -> tuple[float, float]:
        p01, p10 = self.transition[0][1], self.transition[1][0]
        pi1 = p01 / (p01 + p10)
        return (1.0 - pi1, pi1)

    def entropy_rate(self) -> float:
        """Entropy rate in bits of the stationary chain."""
        pi0, pi1 = self.stationary_law()
        return pi0 * binary_entropy(self.transition[0][1]) + pi1 * binary_entropy(
            self.transition[1][1]
        )


SourceModel = Union[
    CombinatorialUniform, IIDBernoulli, NonIdenticalBernoulli, Enumerated, TwoStateMarkov
]


@dataclass(frozen=True)
class LStarResult:
    l_star: int
    slack_s: int
    saturated: bool = False


def _xlog2x(x: float) -> float:
    return 0.0 if x <= 0 else x * math.log2(x)


# ---------------------------------------------------------------------------
# Probability classes: (log2 probability, multiplicity) pairs covering the
# support. Every source's top mass and entropy can be read off these.
# ---------------------------------------------------------------------------


def _bit_matrix(N: int) -> np.ndarray:
    idx = np.arange(1 << N, dtype=np.uint32)
    shifts = np.arange(N - 1, -1, -1, dtype=np.uint32)
    return ((idx[:, None] >> shifts) & 1).astype(bool)


def _nonidentical_log2_pmf(src: NonIdenticalBernoulli) -> np.ndarray:
    N = src.N
    if N > MAX_ENUMERATED_N:
        raise ExactTopMassUnsupported(
            f"exact top mass needs N <= {MAX_ENUMERATED_N} for non-identical sources; "
            "use bounds.nonidentical_bound instead"
        )
    with np.errstate(divide="ignore"):
        logp = np.log2(np.asarray(src.p_list, dtype=float))
        logq = np.log2(1.0 - np.asarray(src.p_list, dtype=float))
    out = np.zeros(1 << N)
    idx = np.arange(1 << N, dtype=np.uint32)
    for i in range(N):
        bit = ((idx >> np.uint32(N - 1 - i)) & 1).astype(bool)
        with np.errstate(invalid="ignore"):
            out += np.where(bit, logp[i], logq[i])
    return out


def _markov_classes(src: TwoStateMarkov) -> list[tuple[float, int]]:
    # Count strings by (first bit, transition counts) with a DP over positions.
    # key: (last, first, n01, n10, n11) -> count; n00 is implied.
    states: dict[tuple[int, int, int, int, int], int] = {
        (0, 0, 0, 0, 0): 1,
        (1, 1, 0, 0, 0): 1,
    }
    for _ in range(src.N - 1):
        nxt: dict[tuple[int, int, int, int, int], int] = {}
        for (last, first, n01, n10, n11), cnt in states.items():
            for b in (0, 1):
                key = (
                    b,
                    first,
                    n01 + (last == 0 and b == 1),
                    n10 + (last == 1 and b == 0),
                    n11 + (last == 1 and b == 1),
                )
                nxt[key] = nxt.get(key, 0) + cnt
        states = nxt
    lt = [[math.log2(x) if x > 0 else -math.inf for x in row] for row in src.transition]
    li = [math.log2(x) if x > 0 else -math.inf for x in src.initial]
    merged: dict[tuple[int, int, int, int], int] = {}
    for (_, first, n01, n10, n11), cnt in states.items():
        k = (first, n01, n10, n11)
        merged[k] = merged.get(k, 0) + cnt
    out = []
    for (first, n01, n10, n11), cnt in merged.items():
        n00 = src.N - 1 - n01 - n10 - n11
        terms = [(1, li[first]), (n00, lt[0][0]), (n01, lt[0][1]), (n10, lt[1][0]), (n11, lt[1][1])]
        if any(c > 0 and v == -math.inf for c, v in terms):
            continue
        out.append((math.fsum(c * v for c, v in terms if c > 0), cnt))
    return out


def probability_classes(src: SourceModel) -> list[tuple[float, int]]:
    """Support of ``src`` grouped as (log2 probability, multiplicity), zero mass dropped."""
    if isinstance(src, CombinatorialUniform):
        return [(-log2_choose(src.N, src.K), math.comb(src.N, src.K))]
    if isinstance(src, IIDBernoulli):
        N, p = src.N, src.p
        if p == 0.0:
            return [(0.0, 1)]
        return [
            (w * math.log2(p) + (N - w) * math.log2(1 - p), math.comb(N, w))
            for w in range(N + 1)
        ]
    if isinstance(src, NonIdenticalBernoulli):
        logp = _nonidentical_log2_pmf(src)
        return [(float(v), 1) for v in logp if v != -np.inf]
    if isinstance(src, Enumerated):
        return [(math.log2(v), 1) for v in src.pmf.values() if v > 0]
    if isinstance(src, TwoStateMarkov):
        return _markov_classes(src)
    raise TypeError(f"unknown source {src!r}")


def entropy(src: SourceModel) -> float:
    """Entropy H(U) in bits."""
    if isinstance(src, CombinatorialUniform):
        return log2_choose(src.N, src.K)
    if isinstance(src, IIDBernoulli):
        return src.N * binary_entropy(src.p)
    if isinstance(src, NonIdenticalBernoulli):
        return math.fsum(binary_entropy(p) for p in src.p_list)
    if isinstance(src, Enumerated):
        return -math.fsum(_xlog2x(v) for v in src.pmf.values()) + 0.0
    if isinstance(src, TwoStateMarkov):
        return -math.fsum(cnt * (2.0 ** lp) * lp for lp, cnt in _markov_classes(src)) + 0.0
    raise TypeError(f"unknown source {src!r}")


def l_star_for_count(N: int, m: int) -> LStarResult:
    """Smallest L with sum_{i<=L} C(N, i) >= m, plus the slack at weight L."""
    if m < 1:
        raise ValueError("m must be >= 1")
    row = cumulative_choose_row(N)
    if m > row[-1]:
        return LStarResult(N, 1, saturated=True)
    # bisect over exact prefix sums
    lo, hi = 0, N
    while lo < hi:
        mid = (lo + hi) // 2
        if row[mid] >= m:
            hi = mid
        else:
            lo = mid + 1
    below = row[lo - 1] if lo > 0 else 0
    return LStarResult(lo, m - below)


def l_star(N: int, T: int) -> LStarResult:
    """L*_{N,T} and slack s with 2^T = sum_{i<L*} C(N, i) + s."""
    if T < 0:
        raise ValueError("T must be >= 0")
    if T > N:
        return LStarResult(N, 1, saturated=True)
    return l_star_for_count(N, 1 << T)


def _resolve_count(m: int | None, log2_m: float | None, cap_bits: float) -> int | None:
    """Exact integer m, or None when m certainly exceeds 2^cap_bits."""
    if (m is None) == (log2_m is None):
        raise ValueError("give exactly one of m or log2_m")
    if m is not None:
        if m < 0:
            raise ValueError("m must be >= 0")
        return m
    if log2_m == -math.inf:
        return 0
    if log2_m > cap_bits + 1:
        return None
    if float(log2_m).is_integer():
        return 1 << int(log2_m) if log2_m >= 0 else 0
    import mpmath

    with mpmath.workprec(int(max(log2_m, 0)) + 64):
        return int(mpmath.floor(mpmath.power(2, mpmath.mpf(log2_m))))


def _iid_top_mass(N: int, p: float, m: int) -> float:
    if m == 0:
        return 0.0
    if p == 0.0:
        return 1.0
    ls = l_star_for_count(N, m)
    if ls.saturated:
        return 1.0
    L, s = ls.l_star, ls.slack_s
    lp, lq = math.log(p), math.log1p(-p)
    terms = [math.exp(ln_choose(N, i) + i * lp + (N - i) * lq) for i in range(L)]
    terms.append(math.exp(math.log(s) + L * lp + (N - L) * lq))
    return min(1.0, math.fsum(terms))


def _classes_top_mass(classes: list[tuple[float, int]], m: int) -> float:
    ordered = sorted(classes, key=lambda c: -c[0])
    terms = []
    remaining = m
    for lp, cnt in ordered:
        if remaining <= 0:
            break
        take = min(cnt, remaining)
        terms.append(2.0 ** (lp + math.log2(take)))
        remaining -= take
    return min(1.0, math.fsum(terms))


def top_mass(src: SourceModel, m: int | None = None, *, log2_m: float | None = None) -> float:
    """curP(m): total probability of the m most likely defectivity vectors.

    ``m`` may be given exactly or as ``log2_m`` so that counts like 2^T for
    large T never need to be materialized by the caller.
    """
    if isinstance(src, CombinatorialUniform):
        log2_support = log2_choose(src.N, src.K)
        if log2_m is not None and m is None:
            if log2_m >= log2_support:
                return 1.0
            return 2.0 ** (log2_m - log2_support)
        count = _resolve_count(m, None, log2_support)
        support = math.comb(src.N, src.K)
        if count >= support:
            return 1.0
        return count / support
    count = _resolve_count(m, log2_m, src.N)
    if count is None or count >= (1 << src.N):
        return 1.0
    if count == 0:
        return 0.0
    if isinstance(src, IIDBernoulli):
        return _iid_top_mass(src.N, src.p, count)
    if isinstance(src, NonIdenticalBernoulli):
        logp = _nonidentical_log2_pmf(src)
        if count >= logp.size:
            return 1.0
        top = np.partition(logp, logp.size - count)[logp.size - count:]
        return min(1.0, math.fsum(np.exp2(top).tolist()))
    if isinstance(src, Enumerated):
        vals = sorted((v for v in src.pmf.values() if v > 0), reverse=True)
        return min(1.0, math.fsum(vals[:count]))
    if isinstance(src, TwoStateMarkov):
        return _classes_top_mass(_markov_classes(src), count)
    raise TypeError(f"unknown source {src!r}")


def to_enumerated(src: SourceModel) -> Enumerated:
    """Explicit pmf over all 2^N vectors (N <= 24); used by brute-force checks."""
    N = src.N
    if N > MAX_ENUMERATED_N:
        raise ExactTopMassUnsupported(f"cannot enumerate N={N} > {MAX_ENUMERATED_N}")
    bits = _bit_matrix(N)
    if isinstance(src, CombinatorialUniform):
        weights = bits.sum(axis=1)
        probs = np.where(weights == src.K, 1.0 / math.comb(N, src.K), 0.0)
    elif isinstance(src, (IIDBernoulli, NonIdenticalBernoulli)):
        ps = np.full(N, src.p) if isinstance(src, IIDBernoulli) else np.asarray(src.p_list)
        probs = np.prod(np.where(bits, ps, 1.0 - ps), axis=1)
    elif isinstance(src, TwoStateMarkov):
        init = np.asarray(src.initial)
        trans = np.asarray(src.transition)
        b = bits.astype(np.intp)
        probs = init[b[:, 0]]
        for i in range(N - 1):
            probs = probs * trans[b[:, i], b[:, i + 1]]
    elif isinstance(src, Enumerated):
        return src
    else:
        raise TypeError(f"unknown source {src!r}")
    pmf = {}
    for row, prob in zip(bits, probs):
        if prob > 0:
            pmf["".join("1" if x else "0" for x in row)] = float(prob)
    total = math.fsum(pmf.values())
    return Enumerated(N, {k: v / total for k, v in pmf.items()})


def sample(src: SourceModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one defectivity vector as a boolean array of length N."""
    N = src.N
    if isinstance(src, CombinatorialUniform):
        u = np.zeros(N, dtype=bool)
        u[rng.choice(N, size=src.K, replace=False)] = True
        return u
    if isinstance(src, IIDBernoulli):
        return rng.random(N) < src.p
    if isinstance(src, NonIdenticalBernoulli):
        return rng.random(N) < np.asarray(src.p_list)
    if isinstance(src, Enumerated):
        keys = sorted(src.pmf)
        cdf = np.cumsum([src.pmf[k] for k in keys])
        i = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        key = keys[min(i, len(keys) - 1)]
        return np.frombuffer(key.encode(), dtype=np.uint8) == ord("1")
    if isinstance(src, TwoStateMarkov):
        draws = rng.random(N)
        u = np.zeros(N, dtype=bool)
        u[0] = draws[0] < src.initial[1]
        for i in range(1, N):
            u[i] = draws[i] < src.transition[int(u[i - 1])][1]
        return u
    raise TypeError(f"unknown source {src!r}")


def parse_enumerated(lines: Iterable[str]) -> Enumerated:
    """Parse ``<bitstring> <probability>`` lines; ``#`` comments and blanks are skipped."""
    pmf: dict[str, float] = {}
    N = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<bits> <probability>'")
        key, prob = parts[0], float(parts[1])
        if N is None:
            N = len(key)
        if key in pmf:
            raise ValueError(f"line {lineno}: duplicate vector {key}")
        pmf[key] = prob
    if N is None:
        raise ValueError("no entries found")
    return Enumerated(N, pmf)


def load_enumerated(path: str | Path) -> Enumerated:
    with open(path) as fh:
        return parse_enumerated(fh)
