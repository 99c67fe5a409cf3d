import math
from fractions import Fraction

import numpy as np
import pytest

from luroth import dimsolve
from luroth.dimsolve import (DimProblem, DimSolution, DimensionResult,
                             continuity_scan, dimension,
                             dimension_from_exponents, digit_factor_enclosure,
                             f_chain, f_weighted, g_sum, max_adjacent_jump,
                             solve, solve_truncated_sequence)
from luroth.errors import DomainError, ResourceError, ValidationError
from luroth.measure import PsiSpec
from luroth.tailsums import WeightVector

W = WeightVector.of
F = Fraction

# independent oracle: plain bisection on the d <= 10^7 brute-force sum for
# sum (d(d-1))^{-s} 4^{-s^2} = 1, frozen from a separate run; the fixed
# truncation biases it low by about 1.2e-4
ORACLE_PAIR_B4 = 0.7367584966030751


class TestRateFunctions:
    def test_unit_weights_square(self):
        for s in np.linspace(1e-3, 1.0, 1000):
            assert abs(f_weighted(1, 1, s) - s * s) < 1e-14

    def test_min_form_equivalence(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            t0, t1 = rng.uniform(0.2, 5.0, 2)
            s = rng.uniform(1e-6, 1.0)
            direct = f_weighted(t0, t1, s)
            min_form = min(s * s / (t0 * s + (1 - s) * t1), s / t1)
            assert abs(direct - min_form) < 1e-12

    def test_value_at_one(self):
        # both branches give 1/max(t0, t1) at s = 1
        for t0, t1 in [(1, 1), (2, 3), (3, 2), (0.5, 4)]:
            assert f_weighted(t0, t1, 1) == pytest.approx(1 / max(t0, t1))

    @pytest.mark.parametrize("t0,t1", [(1, 1), (2, 1), (1, 2), (0.5, 3), (3, 0.5)])
    def test_strictly_increasing(self, t0, t1):
        grid = np.linspace(1e-4, 1.0, 1000)
        vals = [f_weighted(t0, t1, s) for s in grid]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            f_weighted(1, 1, 1.5)
        with pytest.raises(DomainError):
            f_weighted(-1, 1, 0.5)

    def test_chain_matches_pair_at_unit_second_weight(self):
        # the recursion folds exactly onto the two-weight function when the
        # appended weight is 1
        for t0 in (0.5, 1, 2, 3):
            for s in np.linspace(0.01, 1.0, 200):
                assert abs(f_chain((t0, 1), s) - f_weighted(t0, 1, s)) < 1e-12

    def test_chain_unit_triple_second_stage(self):
        # at (1,1,...) the two-weight stage is s^2
        for s in np.linspace(0.01, 1.0, 100):
            assert abs(f_chain((1, 1), s) - s * s) < 1e-14

    def test_chain_increasing(self):
        grid = np.linspace(0.01, 1.0, 400)
        vals = [f_chain((1, 1, 1), s) for s in grid]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestDigitFactor:
    def test_exact_at_one(self):
        assert digit_factor_enclosure(1.0) == (1.0, 1.0)

    def test_matches_bruteforce(self):
        d = np.arange(2, 10 ** 7 + 1, dtype=np.float64)
        base = d * (d - 1.0)
        for s in (0.55, 0.7, 0.9):
            bf = float(np.sum(base ** (-s)))
            tail_hint = (10. ** 7) ** (1 - 2 * s) / (2 * s - 1)  # crude tail size
            lo, hi = digit_factor_enclosure(s)
            assert lo <= bf + 1.01 * tail_hint + 1e-9
            assert hi >= bf  # enclosure must cover the partial sum
            assert hi - lo < 1e-9

    def test_divergence_guard(self):
        with pytest.raises(DomainError):
            digit_factor_enclosure(0.5)


class TestGSum:
    def test_single_pin_at_one(self):
        for B in (2.0, 5.0, 17.3):
            lo, hi = g_sum("single", B, 1.0)
            assert abs(0.5 * (lo + hi) - 1.0 / B) < 1e-12

    def test_pair_weighted_pin_at_one(self):
        # with t1 = max the factor is exactly B^{-1/t1}
        for B, t in [(4.0, W(1, 1)), (9.0, W(1, 2)), (2.5, W(F(1, 2), 3))]:
            lo, hi = g_sum("pair_weighted", B, 1.0, t)
            expected = B ** (-1.0 / float(t.weights[1]))
            assert abs(0.5 * (lo + hi) - expected) < 1e-12

    def test_pair_weighted_pin_general_weights(self):
        # for t0 > t1 the exponent at s = 1 is 1/max(t0, t1) = 1/t0
        lo, hi = g_sum("pair_weighted", 4.0, 1.0, W(3, 1))
        assert abs(0.5 * (lo + hi) - 4.0 ** (-1.0 / 3.0)) < 1e-12

    def test_divergence_side(self):
        lo, hi = g_sum("single", 2.0, 0.51)
        assert lo > 1.0

    def test_monotone_in_B(self):
        for s in (0.7, 0.9):
            vals = [0.5 * sum(g_sum("pair_unit", B, s)) for B in (2, 4, 8)]
            assert vals[0] > vals[1] > vals[2]

    def test_domain(self):
        with pytest.raises(DomainError):
            g_sum("single", 0.9, 0.8)
        with pytest.raises(DomainError):
            g_sum("single", 2.0, 0.4)


class TestSolve:
    def test_certificate_and_residual(self):
        prob = DimProblem("pair_weighted", 4.0, W(1, 1), tol=1e-10)
        sol = solve(prob)
        assert sol.width <= prob.tol
        g_lo, _ = g_sum("pair_weighted", 4.0, sol.s_lower, W(1, 1))
        _, g_hi = g_sum("pair_weighted", 4.0, sol.s_upper, W(1, 1))
        assert g_lo >= 1.0 >= g_hi
        assert sol.residual <= 10 * prob.tol

    def test_matches_independent_oracle(self):
        sol = solve(DimProblem("pair_weighted", 4.0, W(1, 1), tol=1e-12))
        # the oracle's d <= 1e7 truncation biases it low by ~1.2e-4
        assert ORACLE_PAIR_B4 < sol.midpoint < ORACLE_PAIR_B4 + 5e-4

    def test_large_B_limit(self):
        sol = solve(DimProblem("single", 1e8))
        assert 0.5 < sol.midpoint < 0.52

    def test_small_B_limit(self):
        sol = solve(DimProblem("single", 1.0 + 1e-6))
        assert sol.midpoint > 0.997
        assert abs(sol.midpoint - 1.0) < 1e-3

    def test_unit_pair_vs_weighted_pair_differ(self):
        # B^{2s} and B^{s^2} equations have different roots; both are
        # emitted for comparison, neither is adjudicated
        su = solve(DimProblem("pair_unit", 4.0)).midpoint
        sw = solve(DimProblem("pair_weighted", 4.0, W(1, 1))).midpoint
        assert su < sw  # 2s > s^2 on (0,1): heavier B-penalty, smaller root

    def test_invalid_B(self):
        with pytest.raises(DomainError):
            solve(DimProblem("single", 1.0))

    def test_bad_problem(self):
        with pytest.raises(ValidationError):
            DimProblem("pair_weighted", 2.0)
        with pytest.raises(ResourceError):
            DimProblem("single", 2.0, tol=1e-20)


class TestTruncatedSequence:
    def test_strictly_increasing_and_below_limit(self):
        prob = DimProblem("pair_weighted", 2.0, W(1, 1))
        ns = [2, 4, 8, 16, 64, 256, 1024, 4096]
        seq = solve_truncated_sequence(prob, ns)
        assert all(a < b for a, b in zip(seq, seq[1:]))
        full = solve(prob).midpoint
        assert all(s < full for s in seq)

    def test_convergence_gap_at_4096(self):
        # measured gap at B = 2, t = (1,1): about 1.22e-3
        prob = DimProblem("pair_weighted", 2.0, W(1, 1), tol=1e-12)
        s_trunc = solve_truncated_sequence(prob, [4096])[0]
        full = solve(prob).midpoint
        assert 0 < full - s_trunc < 2e-3

    def test_small_cutoff_root_is_degenerate(self):
        # the two-term equation forces s = 0
        prob = DimProblem("pair_weighted", 2.0, W(1, 1), tol=1e-9)
        s2 = solve_truncated_sequence(prob, [2])[0]
        assert s2 < 1e-8


class TestContinuityScan:
    def test_strictly_decreasing_in_B(self):
        rows = continuity_scan("single", np.arange(1.1, 8.01, 0.5), tol=1e-9)
        vals = [s for _, s in rows]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_refinement_halves_jumps(self):
        coarse = continuity_scan("single", np.arange(1.5, 4.01, 0.5), tol=1e-9)
        fine = continuity_scan("single", np.arange(1.5, 4.01, 0.25), tol=1e-9)
        assert max_adjacent_jump(fine) <= 0.6 * max_adjacent_jump(coarse)

    def test_grid_validation(self):
        with pytest.raises(ValidationError):
            continuity_scan("single", [2.0, 1.5])
        with pytest.raises(ValidationError):
            continuity_scan("single", [0.5, 2.0])


class TestDimension:
    def test_subexponential_gives_full_dimension(self):
        for t in (W(1), W(2, 3), W(1, 1, 1)):
            res = dimension(PsiSpec.polynomial(5), t)
            assert res.value == 1.0 and res.status == "closed_form"

    def test_doubly_exponential_closed_form(self):
        for t in (W(1), W(3, 1)):
            res = dimension(PsiSpec.doubly_exponential(math.e, 3), t)
            assert res.value == pytest.approx(0.25)
            assert res.status == "closed_form"

    def test_super_double_exponential_gives_zero(self):
        res = dimension_from_exponents(math.inf, math.inf, W(1, 1))
        assert res.value == 0.0 and res.status == "closed_form"

    def test_boundary_b_one_gives_half(self):
        res = dimension_from_exponents(math.inf, 1.0, W(1))
        assert res.value == pytest.approx(0.5)

    def test_single_block_uses_effective_base(self):
        # m = 1 with weight t0: the threshold digit grows like (B^{1/t0})^n
        res_plain = dimension(PsiSpec.geometric(4), W(1))
        res_weighted = dimension(PsiSpec.geometric(2), W(F(1, 2)))
        assert res_weighted.value == pytest.approx(res_plain.value, abs=1e-8)

    def test_pair_is_theorem_and_triple_is_conjecture(self):
        psi = PsiSpec.geometric(2)
        assert dimension(psi, W(1, 1)).status == "theorem"
        res3 = dimension(psi, W(1, 1, 1))
        assert res3.status == "conjecture"
        assert 0.5 < res3.value < 1.0

    def test_table_returns_estimate_enclosure(self):
        vals = [Fraction(2) ** n for n in range(1, 25)]
        res = dimension(PsiSpec.table(vals), W(1))
        assert res.status == "estimated"
        exact = dimension(PsiSpec.geometric(2), W(1)).value
        assert res.enclosure[0] - 1e-9 <= exact <= res.enclosure[1] + 1e-9
