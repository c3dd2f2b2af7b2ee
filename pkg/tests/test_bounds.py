import itertools
import math
import random
from fractions import Fraction

import mpmath
import pytest

from gtconverse.bounds import (
    MONOTONE_FAMILIES,
    AdaptiveNoisyConfig,
    BoundResult,
    bja_bound,
    bsc_adaptive_bound,
    bsc_nonadaptive_bound,
    evaluate_bound,
    fano_bound,
    gaussian_approx_at_tests,
    gaussian_approx_curp,
    iid_curp_bound,
    min_tests_for_target,
    noiseless_converse,
    nonidentical_bound,
    nonidentical_c_star,
    np_threshold,
    rate_at_target,
)
from gtconverse.numerics import binary_entropy, log2_choose
from gtconverse.sources import CombinatorialUniform, IIDBernoulli, l_star, to_enumerated, top_mass

LOG2_C_500_10 = 67.73610896188313


def rational_np_bound(T, M, p):
    """Neyman-Pearson bound with target 1/M, scanning d in exact rationals."""
    p = Fraction(p)
    target = Fraction(1, M)
    cdf = Fraction(0)
    for d in range(T + 1):
        pmf_half = Fraction(math.comb(T, d), 2**T)
        if cdf + pmf_half >= target:
            lam = (target - cdf) / pmf_half
            below = sum(math.comb(T, i) * p**i * (1 - p) ** (T - i) for i in range(d))
            return below + lam * math.comb(T, d) * p**d * (1 - p) ** (T - d), d, lam
        cdf += pmf_half
    raise AssertionError("unreachable")


class TestBoundResult:
    def test_clamping(self):
        assert BoundResult("x", 2.5, {}).clamped == 1.0
        assert BoundResult("x", -0.1, {}).clamped == 0.0
        assert BoundResult("x", 0.3, {}).clamped == 0.3
        assert BoundResult("x", 0.3, {}, valid=False).clamped == 1.0


class TestBJA:
    def test_examples(self):
        assert bja_bound(1, 2, 1).clamped == 1.0
        assert bja_bound(2, 4, 2).exact == Fraction(2, 3)
        assert bja_bound(60, 500, 10).clamped == pytest.approx(2 ** (60 - LOG2_C_500_10), rel=1e-12)
        assert bja_bound(60, 500, 10).clamped == pytest.approx(4.7e-3, rel=0.01)

    def test_huge_T_log_domain(self):
        res = bja_bound(5000, 500, 10)
        assert res.raw == math.inf and res.clamped == 1.0

    def test_noiseless_converse_recovers_bja(self):
        assert noiseless_converse(CombinatorialUniform(500, 10), 60).clamped == bja_bound(60, 500, 10).clamped
        for N in range(1, 31):
            for K in range(0, min(N, 5) + 1):
                for T in range(0, 21):
                    nc = noiseless_converse(CombinatorialUniform(N, K), T)
                    assert nc.exact == min(Fraction(1), Fraction(2**T, math.comb(N, K)))
                    assert nc.clamped == bja_bound(T, N, K).clamped


class TestFano:
    def test_examples(self):
        assert fano_bound(34, "comb", 500, 10).clamped == pytest.approx(0.501947934729063, rel=1e-12)
        assert fano_bound(70, "comb-bsc", 500, 10, 0.11).clamped == pytest.approx(0.516797959979983, rel=1e-12)
        assert fano_bound(0, "prob", 500, p=0.02).clamped == 0.0

    def test_vacuous(self):
        res = fano_bound(3, "comb", 5, 5)
        assert not res.valid and res.clamped == 1.0
        with pytest.raises(ValueError):
            fano_bound(3, "prob", 5, p=0.0)
        with pytest.raises(ValueError):
            fano_bound(3, "bogus", 5, 2)


class TestNoiselessConverse:
    def test_examples(self):
        assert noiseless_converse(IIDBernoulli(5, 0.1), 2).clamped == pytest.approx(0.78732, rel=1e-13)
        for src in (IIDBernoulli(6, 0.2), CombinatorialUniform(6, 2)):
            assert noiseless_converse(src, 6).clamped == 1.0
            assert noiseless_converse(src, 9).clamped == 1.0


class TestIIDCurp:
    def test_examples(self):
        assert iid_curp_bound(5, 0.1, 2).raw == pytest.approx(0.78732, rel=1e-13)
        assert iid_curp_bound(500, 0.02, 0).raw == pytest.approx(0.98**500, rel=1e-12)
        # mpmath sum of the exact top-mass formula at T = ceil(N h(p)) = 71
        assert iid_curp_bound(500, 0.02, 71).clamped == pytest.approx(0.605186148862145, rel=1e-10)

    def test_saturation(self):
        assert iid_curp_bound(10, 0.3, 11).raw == 1.0

    def test_half_is_uniform(self):
        for T in range(0, 13):
            assert iid_curp_bound(12, 0.5, T).raw == pytest.approx(2.0 ** (T - 12), rel=1e-12)

    @pytest.mark.parametrize("N", [3, 9, 13])
    @pytest.mark.parametrize("p", [0.02, 0.1, 0.3, 0.5])
    def test_matches_enumeration(self, N, p):
        enum = to_enumerated(IIDBernoulli(N, p))
        for T in range(N + 1):
            assert iid_curp_bound(N, p, T).raw == pytest.approx(top_mass(enum, 2**T), rel=1e-12)


class TestGaussianApprox:
    def test_examples(self):
        T0, a0 = gaussian_approx_curp(500, 0.02, 0.0)
        assert T0 == pytest.approx(70.7202712709103, rel=1e-12) and a0 == 0.5
        T1, a1 = gaussian_approx_curp(500, 0.02, 1.0)
        L1 = 10 + math.sqrt(500 * 0.02 * 0.98)
        assert T1 == pytest.approx(500 * binary_entropy(L1 / 500), rel=1e-12)
        assert T1 == pytest.approx(87.6397338571233, rel=1e-10)
        assert a1 == pytest.approx(0.841344746068543, abs=1e-9)
        y0 = -math.sqrt(500 * 0.02 / 0.98)
        Tz, az = gaussian_approx_curp(500, 0.02, y0)
        assert Tz == pytest.approx(0.0, abs=1e-9) and az == pytest.approx(0.5 * math.erfc(-y0 / math.sqrt(2)))

    def test_domain(self):
        with pytest.raises(ValueError):
            gaussian_approx_curp(500, 0.02, -10.0)

    def test_inverse(self):
        _, a = gaussian_approx_curp(500, 0.02, 0.7)
        T, _ = gaussian_approx_curp(500, 0.02, 0.7)
        assert gaussian_approx_at_tests(500, 0.02, T) == pytest.approx(a, abs=1e-10)


def brute_c_star(ps, T):
    """max over R of the least probable full vector using weight-L*_{R,T} subsets of items 1..R."""
    N = len(ps)
    best = -math.inf
    for R in range(T, N + 1):
        L = l_star(R, T).l_star
        worst = math.inf
        for subset in itertools.combinations(range(R), L):
            s = set(subset)
            lp = sum(math.log(ps[i]) if i in s else math.log(1 - ps[i]) for i in range(N))
            worst = min(worst, lp)
        best = max(best, worst)
    return best


class TestNonidentical:
    def test_c_star_brute_force(self):
        ps = [0.4, 0.3, 0.2, 0.1]
        for T in range(0, 5):
            ln_c, _ = nonidentical_c_star(ps, T)
            assert ln_c == pytest.approx(brute_c_star(ps, T), rel=1e-12, abs=1e-12)

    def test_c_star_brute_force_random(self):
        rng = random.Random(5)
        for _ in range(20):
            ps = sorted((rng.uniform(0.01, 0.5) for _ in range(rng.randint(2, 8))), reverse=True)
            T = rng.randint(0, len(ps))
            assert nonidentical_c_star(ps, T)[0] == pytest.approx(brute_c_star(ps, T), rel=1e-12, abs=1e-12)

    def test_c_star_has_enough_sets(self):
        # every vector at least as likely as c* must number >= 2^T
        rng = random.Random(9)
        for _ in range(15):
            ps = sorted((rng.uniform(0.01, 0.5) for _ in range(rng.randint(3, 10))), reverse=True)
            T = rng.randint(0, len(ps))
            ln_c, _ = nonidentical_c_star(ps, T)
            count = sum(
                1
                for u in itertools.product((0, 1), repeat=len(ps))
                if sum(math.log(p) if b else math.log(1 - p) for p, b in zip(ps, u)) >= ln_c - 1e-12
            )
            assert count >= 2**T

    def test_literal_product_form(self):
        ps = [0.4, 0.3, 0.2, 0.1]
        # c(R) with the product stopping at R, R = T = 1: L* = 1, c = p_1
        ln_c, R = nonidentical_c_star(ps, 1, include_unused_items=False)
        assert ln_c >= math.log(0.4)

    def test_example_grid(self):
        res = nonidentical_bound([0.4, 0.3, 0.2, 0.1], 1)
        assert res.bound_name == "nonidentical"
        assert res.details["R_star"] in range(1, 5)

    def test_invalid_when_t_negative(self):
        res = nonidentical_bound([0.05] * 200, 150)
        assert res.details["t"] < 0
        assert not res.valid and res.clamped == 1.0

    def test_all_half_is_vacuous(self):
        res = nonidentical_bound([0.5] * 10, 3)
        assert not res.valid and res.clamped == 1.0

    def test_rejects_zero_and_unsorted(self):
        with pytest.raises(ValueError):
            nonidentical_bound([0.2, 0.0], 1)
        with pytest.raises(ValueError):
            nonidentical_bound([0.1, 0.2], 1)

    @pytest.mark.parametrize("N", [50, 200])
    @pytest.mark.parametrize("p", [0.02, 0.05])
    def test_dominates_exact_iid(self, N, p):
        hits = 0
        for T in range(0, N + 1):
            res = nonidentical_bound([p] * N, T)
            if res.valid:
                hits += 1
                assert res.clamped >= iid_curp_bound(N, p, T).clamped
        assert hits > 0

    def test_dominates_exact_enumeration(self):
        ps = (0.45, 0.4, 0.3, 0.3, 0.2, 0.2, 0.1, 0.1, 0.05, 0.05, 0.02, 0.01)
        from gtconverse.sources import NonIdenticalBernoulli

        src = NonIdenticalBernoulli(ps)
        for T in range(0, len(ps) + 1):
            res = nonidentical_bound(ps, T)
            assert res.clamped >= top_mass(src, 2**T) - 1e-12


class TestNPThreshold:
    def test_examples(self):
        thr = np_threshold(1, -1.0)
        assert (thr.d_star, thr.lam) == (0, 1.0)
        thr = np_threshold(3, -1.0)
        assert (thr.d_star, thr.lam) == (1, 1.0)
        thr = np_threshold(70, -LOG2_C_500_10)
        assert thr.d_star == 1
        assert thr.lam == pytest.approx((2 ** (70 - LOG2_C_500_10) - 1) / 70, rel=1e-10)
        assert thr.lam == pytest.approx(0.054, abs=5e-4)

    def test_tie_prefers_lambda_one(self):
        # target 1/2 = P(Bin(3,1/2) <= 1) exactly; also lambda=0 at d*=2 would encode it
        thr = np_threshold(3, -1.0)
        assert thr.d_star == 1 and thr.lam == 1.0
        thr = np_threshold(4, -4.0)
        assert thr.d_star == 0 and thr.lam == 1.0

    def test_target_one(self):
        thr = np_threshold(6, 0.0)
        assert thr.d_star == 6 and thr.lam == 1.0

    def test_rejects_target_above_one(self):
        with pytest.raises(ValueError):
            np_threshold(5, 0.5)

    def test_plug_back_exact(self):
        rng = random.Random(2024)
        for _ in range(200):
            T = rng.randint(0, 300)
            lt = -rng.uniform(0, T + 1)
            thr = np_threshold(T, lt)
            below = sum(math.comb(T, i) for i in range(thr.d_star))
            achieved = (below + Fraction(thr.lam) * math.comb(T, thr.d_star)) / 2**T
            with mpmath.workprec(T + 128):
                target = mpmath.power(2, mpmath.mpf(lt))
                rel = abs(mpmath.mpf(achieved.numerator) / achieved.denominator - target) / target
            assert rel <= 1e-12
            assert 0.0 <= thr.lam <= 1.0


class TestBSCNonadaptive:
    def test_examples(self):
        assert bsc_nonadaptive_bound(1, 1.0, 0.11).raw == pytest.approx(0.89, rel=1e-14)
        assert bsc_nonadaptive_bound(2, 2.0, 0.11).raw == pytest.approx(0.89**2, rel=1e-14)
        res = bsc_nonadaptive_bound(70, LOG2_C_500_10, 0.11)
        assert res.raw == pytest.approx(4.21329934711371e-4, rel=1e-10)
        assert res.raw == pytest.approx(4e-4, rel=0.1)

    @pytest.mark.parametrize("T,N,K,p", [(5, 6, 2, 0.11), (9, 8, 3, 0.2), (12, 10, 4, 0.05), (20, 12, 3, 0.3)])
    def test_matches_rational_oracle(self, T, N, K, p):
        expected, d, lam = rational_np_bound(T, math.comb(N, K), p)
        res = bsc_nonadaptive_bound(T, log2_choose(N, K), p)
        assert res.details["d_star"] == d
        assert res.raw == pytest.approx(float(expected), rel=1e-11)

    def test_noiseless_limit_is_bja(self):
        for N, K in [(6, 2), (10, 3), (12, 5)]:
            for T in range(0, 14):
                M = math.comb(N, K)
                res = bsc_nonadaptive_bound(T, math.log2(M), 0.0)
                assert res.clamped == pytest.approx(min(1.0, 2**T / M), rel=1e-12)

    def test_below_fano_on_figure_grid(self):
        for T in range(70, 166):
            np_b = bsc_nonadaptive_bound(T, LOG2_C_500_10, 0.11).clamped
            assert np_b <= fano_bound(T, "comb-bsc", 500, 10, 0.11).clamped + 1e-9

    def test_nonincreasing_in_noise(self):
        for T, log2_M in [(20, 10.0), (70, LOG2_C_500_10), (120, LOG2_C_500_10)]:
            vals = [bsc_nonadaptive_bound(T, log2_M, p).clamped for p in (0.01, 0.05, 0.11, 0.2, 0.3, 0.45)]
            assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def direct_adaptive(T, log2_M, p):
    with mpmath.workdps(40):
        p = mpmath.mpf(p)
        C = 1 + p * mpmath.log(p, 2) + (1 - p) * mpmath.log(1 - p, 2)
        slope = mpmath.log((1 - p) / p, 2)
        best = mpmath.inf
        for d in range(T + 1):
            first = mpmath.power(2, -log2_M + T * C - (d - T * p) * slope)
            tail = sum(mpmath.binomial(T, i) * p**i * (1 - p) ** (T - i) for i in range(d + 1))
            best = min(best, first + tail)
        return float(best)


class TestBSCAdaptive:
    def test_examples(self):
        res = bsc_adaptive_bound(AdaptiveNoisyConfig(1, 1.0, 0.11))
        assert res.raw >= 1.0 and res.clamped == 1.0
        res = bsc_adaptive_bound(AdaptiveNoisyConfig(200, 0.0, 0.11))
        assert res.raw >= 1.0 and res.clamped == 1.0

    @pytest.mark.parametrize("T,log2_M,p", [(10, 4.0, 0.11), (40, 15.5, 0.05), (90, LOG2_C_500_10, 0.11)])
    def test_matches_direct_evaluation(self, T, log2_M, p):
        assert bsc_adaptive_bound(AdaptiveNoisyConfig(T, log2_M, p)).raw == pytest.approx(
            direct_adaptive(T, log2_M, p), rel=1e-10
        )

    def test_adaptivity_gap_at_figure_point(self):
        cfg = AdaptiveNoisyConfig(165, LOG2_C_500_10, 0.11)
        assert bsc_adaptive_bound(cfg).clamped > bsc_nonadaptive_bound(165, LOG2_C_500_10, 0.11).clamped

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            AdaptiveNoisyConfig(5, 3.0, 0.0)
        with pytest.raises(ValueError):
            AdaptiveNoisyConfig(5, -1.0, 0.1)


FAMILY_CASES = {
    "bja": {"N": 500, "K": 10},
    "fano-comb": {"N": 500, "K": 10},
    "fano-prob": {"N": 500, "p": 0.02},
    "fano-comb-bsc": {"N": 500, "K": 10, "p": 0.11},
    "iid-curp": {"N": 500, "p": 0.02},
    "bsc-nonadaptive": {"N": 500, "K": 10, "p": 0.11},
    "bsc-adaptive": {"N": 500, "K": 10, "p": 0.11},
}


class TestFamilies:
    @pytest.mark.parametrize("family", MONOTONE_FAMILIES)
    def test_nondecreasing_in_T(self, family):
        vals = [evaluate_bound(family, T, **FAMILY_CASES[family]).clamped for T in range(0, 301, 3)]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_adaptive_dips_then_rises(self):
        vals = [evaluate_bound("bsc-adaptive", T, **FAMILY_CASES["bsc-adaptive"]).clamped for T in range(0, 301)]
        low = vals.index(min(vals))
        assert 0 < low < 70
        assert all(a >= b for a, b in zip(vals[: low + 1], vals[1 : low + 1]))
        assert all(a <= b + 1e-12 for a, b in zip(vals[low:], vals[low + 1 :]))

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            evaluate_bound("nope", 3)

    def test_min_tests_examples(self):
        assert min_tests_for_target("bja", 1.0, N=4, K=2) == 3
        for family in MONOTONE_FAMILIES:
            params = FAMILY_CASES[family]
            assert min_tests_for_target(family, 0.0, **params) == 0
        T, rate = rate_at_target(500, 10, 0.11, 0.999)
        assert rate == pytest.approx(LOG2_C_500_10 / T)
        assert rate < 0.500

    def test_min_tests_is_minimal(self):
        for target in (0.1, 0.5, 0.9, 0.999):
            T = min_tests_for_target("bsc-nonadaptive", target, N=200, K=8, p=0.11)
            assert evaluate_bound("bsc-nonadaptive", T, N=200, K=8, p=0.11).clamped >= target
            assert evaluate_bound("bsc-nonadaptive", T - 1, N=200, K=8, p=0.11).clamped < target

    def test_min_tests_errors(self):
        with pytest.raises(ValueError):
            min_tests_for_target("nonidentical", 0.5, p_list=[0.1] * 10)
        with pytest.raises(ValueError):
            min_tests_for_target("bsc-adaptive", 0.5, N=20, K=2, p=0.11)
        with pytest.raises(ValueError):
            min_tests_for_target("bsc-nonadaptive", 1.0, N=20, K=2, p=0.11)
        with pytest.raises(ValueError):
            min_tests_for_target("fano-prob", 0.5, N=10, p=0.5 + 0.5)
