import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from luroth import measure
from luroth.errors import DomainError, ResourceError, ValidationError
from luroth.measure import (PsiSpec, borel_cantelli_counter, classify,
                            digit_tail_probability, exponents,
                            least_hit_digit, sample_digits,
                            single_window_measure, window_event_measure_dp,
                            zero_one_series_terms)
from luroth.tailsums import WeightVector

W = WeightVector.of
F = Fraction
EULER_GAMMA = 0.5772156649015329


class TestPsiSpec:
    def test_values(self):
        assert PsiSpec.geometric(2).value(10) == pytest.approx(1024)
        assert PsiSpec.polynomial(F(1, 2)).value(9) == pytest.approx(3.0)
        assert PsiSpec.doubly_exponential(math.e, 2).log_value(5) == pytest.approx(32.0)
        assert PsiSpec.counterexample(0.5).value(3) == pytest.approx(math.exp(0.125))

    def test_power_repr(self):
        assert PsiSpec.geometric(2).power_repr(7) == (F(2), F(7))
        assert PsiSpec.polynomial(F(1, 2)).power_repr(9) == (F(9), F(1, 2))
        assert PsiSpec.counterexample(0.5).power_repr(3) is None
        assert PsiSpec.geometric(2).value_fraction(7) == 128

    def test_parse(self):
        psi = PsiSpec.parse("geometric:2")
        assert psi.variant == "geometric" and psi.params == (F(2),)
        assert PsiSpec.parse("counterexample:0.3,1").variant == "counterexample"
        assert PsiSpec.parse("table:1,2,4").params == (1, 2, 4)
        with pytest.raises(ValidationError):
            PsiSpec.parse("exotic:1")

    def test_validation(self):
        with pytest.raises(ValidationError):
            PsiSpec.doubly_exponential(1.0, 2)
        with pytest.raises(ValidationError):
            PsiSpec.counterexample(1.5)
        with pytest.raises(DomainError):
            PsiSpec.table([1, 2] * 6).value(13)


class TestExponents:
    def test_analytic(self):
        e = exponents(PsiSpec.geometric(3))
        assert (e.B, e.b) == (3.0, 1.0)
        e = exponents(PsiSpec.doubly_exponential(math.e, 2))
        assert (e.B, e.b) == (math.inf, 2.0)
        e = exponents(PsiSpec.polynomial(5))
        assert (e.B, e.b) == (1.0, 1.0)
        e = exponents(PsiSpec.counterexample(0.5))
        assert e.B == 1.0  # Psi -> 1

    def test_table_estimated(self):
        vals = [Fraction(2) ** n for n in range(1, 21)]
        e = exponents(PsiSpec.table(vals))
        assert e.provenance == "estimated"
        assert e.B == pytest.approx(2.0, rel=1e-9)

    def test_table_too_short(self):
        with pytest.raises(ValidationError):
            exponents(PsiSpec.table([2, 3, 4]))


class TestSeriesTerms:
    def test_geometric_sums_to_closed_form(self):
        B = 3
        terms = zero_one_series_terms(PsiSpec.geometric(B), W(1), 60)
        assert terms[0] == pytest.approx(1 / B)
        assert sum(terms) == pytest.approx(1 / (B - 1), rel=1e-12)

    def test_harmonic_partial_sum(self):
        N = 10 ** 5
        terms = zero_one_series_terms(PsiSpec.polynomial(1), W(1), N)
        partial = sum(terms)
        assert abs(partial - (math.log(N) + EULER_GAMMA)) < 1e-4

    def test_log_factor_with_two_top_weights(self):
        # t = (1,1): ell = 2, a_n = n log(2) 2^{-n}
        terms = zero_one_series_terms(PsiSpec.geometric(2), W(1, 1), 20)
        for n in (1, 5, 20):
            assert terms[n - 1] == pytest.approx(n * math.log(2) * 2.0 ** -n)

    def test_counterexample_series_converges_for_blocks(self):
        terms = zero_one_series_terms(PsiSpec.counterexample(0.5, 1), W(1, 1), 400)
        assert sum(terms) < 2.5  # geometric-like decay r^n


class TestClassify:
    def test_measure_zero_side(self):
        v = classify(PsiSpec.geometric(2), W(1, 1))
        assert v.series_behavior == "converges" and v.measure == 0

    def test_measure_one_side(self):
        v = classify(PsiSpec.polynomial(F(1, 2)), W(1))
        assert v.series_behavior == "diverges" and v.measure == 1

    def test_polynomial_threshold_is_max_weight(self):
        assert classify(PsiSpec.polynomial(3), W(2)).measure == 0
        assert classify(PsiSpec.polynomial(2), W(2)).measure == 1

    def test_counterexample_always_warns(self):
        v = classify(PsiSpec.counterexample(0.5, 1), W(1, 1))
        assert v.series_behavior == "converges"
        assert v.measure is None
        assert "liminf Psi(n) > 1" in v.warning
        assert "all of (0,1]" in v.warning


class TestDigitLaw:
    def test_tail_probability(self):
        assert digit_tail_probability(2) == 1
        assert digit_tail_probability(10) == F(1, 9)
        with pytest.raises(DomainError):
            digit_tail_probability(1)

    def test_law_sums_telescope(self):
        for K in (5, 50):
            total = sum(measure.digit_probability(k) for k in range(2, K + 1))
            assert total == 1 - F(1, K)

    def test_sampler_matches_tail_probability(self):
        rng = np.random.default_rng(42)
        d = sample_digits(rng, 10 ** 5)
        p = float(digit_tail_probability(10))
        freq = (d >= 10).mean()
        sigma = math.sqrt(p * (1 - p) / 10 ** 5)
        assert abs(freq - p) < 3 * sigma

    def test_sampler_deterministic(self):
        a = sample_digits(np.random.default_rng(7), 64)
        b = sample_digits(np.random.default_rng(7), 64)
        assert (a == b).all()


def exact_union_measure_small(psi, weights, n1, n2, class_bound):
    """Independent Fraction-exact union measure via digit classes.

    Valid when all window thresholds are below ``class_bound``: digits are
    enumerated exactly up to class_bound with one aggregate class above it
    (whose hit status is constant because thresholds stay below the bound).
    """
    classes = [(d, F(1, d * (d - 1))) for d in range(2, class_bound + 1)]
    classes.append((class_bound + 1, F(1, class_bound)))  # aggregate
    m = len(weights)
    positions = n2 + m - 1 - n1 + 1
    total = F(0)
    for combo in product(classes, repeat=positions):
        reps = [c[0] for c in combo]
        mass = math.prod((c[1] for c in combo), start=F(1))
        hit = False
        for n in range(n1, n2 + 1):
            i = n - n1
            prod_val = math.prod(
                F(reps[i + j]) ** weights[j] for j in range(m))
            if prod_val >= psi.value_fraction(n):
                hit = True
                break
        if hit:
            total += mass
    return total


class TestWindowDP:
    def test_single_matches_independence_product(self):
        psi = PsiSpec.geometric(F(3, 2))
        t = W(1)
        res = window_event_measure_dp(psi, t, (2, 60))
        surv = 1.0
        for n in range(2, 61):
            D = least_hit_digit(F(1), psi, n)
            surv *= 1.0 - (1.0 / (D - 1) if D > 2 else 1.0)
        closed = 1.0 - surv
        assert res.lower - 1e-12 <= closed <= res.upper + 1e-12
        assert res.width < 1e-10

    def test_single_polynomial_certain_start(self):
        # sqrt(n) <= 2 for n <= 4: the first windows are certain hits
        res = window_event_measure_dp(PsiSpec.polynomial(F(1, 2)), W(1), (1, 100))
        assert res.exact and res.lower == res.upper == 1.0

    def test_pair_against_exact_class_enumeration(self):
        psi = PsiSpec.geometric(2)
        t = W(1, 1)
        oracle = float(exact_union_measure_small(psi, [1, 1], 2, 4, 18))
        res = window_event_measure_dp(psi, t, (2, 4), digit_cap=64)
        assert res.lower - 1e-10 <= oracle <= res.upper + 1e-10
        assert res.width < 1e-3

    def test_pair_weighted_against_exact_class_enumeration(self):
        psi = PsiSpec.geometric(3)
        t = W(2, 1)
        oracle = float(exact_union_measure_small(psi, [2, 1], 2, 3, 30))
        res = window_event_measure_dp(psi, t, (2, 3), digit_cap=128)
        assert res.lower - 1e-10 <= oracle <= res.upper + 1e-10

    def test_pair_acceptance_window(self):
        res = window_event_measure_dp(PsiSpec.geometric(2), W(1, 1), (1, 10),
                                      digit_cap=2 ** 12)
        # window 1 has threshold 2 <= 2*2: every pair hits, so the union is full
        assert res.lower == res.upper == 1.0 and res.exact

    def test_pair_nontrivial_window_vs_mc(self):
        psi = PsiSpec.geometric(2)
        t = W(1, 1)
        res = window_event_measure_dp(psi, t, (3, 12), digit_cap=2 ** 12)
        assert res.width < 1e-3
        rng = np.random.default_rng(123)
        hits = 0
        samples = 200_000
        for _ in range(20):
            d = sample_digits(rng, (samples // 20, 11)).astype(object)
            prods = d[:, :-1] * d[:, 1:]
            thr = np.array([2 ** n for n in range(3, 13)], dtype=object)
            hits += ((prods >= thr).any(axis=1)).sum()
        p_hat = hits / samples
        sigma = math.sqrt(max(res.midpoint * (1 - res.midpoint), 1e-12) / samples)
        assert res.lower - 4 * sigma <= p_hat <= res.upper + 4 * sigma

    def test_pair_convergence_side_tiny(self):
        res = window_event_measure_dp(PsiSpec.geometric(2), W(1, 1), (30, 60),
                                      digit_cap=2 ** 12)
        assert res.upper < 1e-6
        assert res.lower >= 0

    def test_geometric_decreasing_over_shifted_windows(self):
        psi = PsiSpec.geometric(2)
        vals = []
        for N in (10, 100, 1000):
            res = window_event_measure_dp(psi, W(1, 1), (N, 2 * N),
                                          digit_cap=256)
            vals.append(res.upper)
        assert vals[0] > vals[1] > vals[2]
        assert vals[2] < 1e-15

    def test_counterexample_certain(self):
        psi = PsiSpec.counterexample(0.5, 1)
        for n2 in (1, 5, 50):
            res = window_event_measure_dp(psi, W(1, 1), (1, n2))
            assert res.exact and res.lower == res.upper == 1.0

    def test_psi_identically_one_certain(self):
        psi = PsiSpec.table([1] * 20)
        res = window_event_measure_dp(psi, W(1, 1), (1, 10))
        assert res.exact and res.lower == 1.0

    def test_triple_enclosure_contains_exact(self):
        psi = PsiSpec.geometric(2)
        oracle = float(exact_union_measure_small(psi, [1, 1, 1], 2, 3, 18))
        res = window_event_measure_dp(psi, W(1, 1, 1), (2, 3), digit_cap=128)
        assert res.lower - 1e-9 <= oracle <= res.upper + 1e-9

    def test_validation(self):
        with pytest.raises(DomainError):
            window_event_measure_dp(PsiSpec.geometric(2), W(1), (0, 3))
        with pytest.raises(DomainError):
            window_event_measure_dp(PsiSpec.geometric(2), W(1), (1, 3),
                                    digit_cap=2)
        with pytest.raises(ResourceError):
            window_event_measure_dp(PsiSpec.geometric(2), W(1, 1, 1, 1), (1, 3))


class TestSingleWindowMeasure:
    def test_matches_threshold_mass(self):
        psi = PsiSpec.polynomial(1)
        # window n: P(d >= n) = 1/(n-1) for n >= 2, 1 at n = 1
        assert single_window_measure(psi, W(1), 1) == 1.0
        assert single_window_measure(psi, W(1), 11) == pytest.approx(0.1)

    def test_pair_uses_tail_sum(self):
        psi = PsiSpec.geometric(2)
        val = single_window_measure(psi, W(1, 1), 4)  # threshold 16
        from luroth.tailsums import tail_sum
        assert val == pytest.approx(tail_sum(W(1, 1), 16).midpoint)


class TestBorelCantelliCounter:
    def test_linear_growth_concentrates(self):
        rep = borel_cantelli_counter(W(1), PsiSpec.polynomial(1), N=2000,
                                     samples=2000, rng_seed=11)
        # E[A] = phi exactly; the sample mean should sit within 3 std errors
        assert abs(rep.mean_dev) < 3 * rep.sigma_est
        assert rep.phi == pytest.approx(1 + sum(1 / n for n in range(1, 2000)), rel=1e-9)

    def test_geometric_hits_stabilize(self):
        reps = [borel_cantelli_counter(W(1), PsiSpec.geometric(2), N=N,
                                       samples=1500, rng_seed=5)
                for N in (50, 500)]
        # convergent series: the expected number of hits is bounded in N
        assert abs(reps[1].phi - reps[0].phi) < 0.05
        assert abs(reps[1].mean_hits - reps[0].mean_hits) < 0.2

    def test_seed_determinism(self):
        a = borel_cantelli_counter(W(1), PsiSpec.polynomial(1), 100, 200, 3)
        b = borel_cantelli_counter(W(1), PsiSpec.polynomial(1), 100, 200, 3)
        assert a == b
