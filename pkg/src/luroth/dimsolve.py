"""Certified solvers for the digit-product dimension equations.

Every equation here has the shape

    g(s) = sum_{d >= 2} 1/(d^s (d-1)^s) * B^{-e(s)} = 1,      1/2 < s <= 1,

where the exponent e(s) encodes the regime: e(s) = s for the single-digit
set, 2s for the unweighted pair equation, the two-weight rate function
f_{t0,t1}(s) for weighted pairs, and its conjectural m-term recursion for
longer blocks.  The digit factor Z(s) = sum (d(d-1))^{-s} diverges at
s = 1/2 and telescopes to exactly 1 at s = 1, so g is strictly decreasing
with a unique root in (1/2, 1) for every B > 1.

Z(s) is evaluated as a certified enclosure: a finite partial sum plus a tail
computed by a positive binomial series for the integral of (x(x-1))^{-s}
(error bounded by its own geometric remainder) plus a midpoint
Euler-Maclaurin correction bound.  The bisection maintains the bracketing
certificate g(s_lower) >= 1 >= g(s_upper) through these enclosures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from mpmath import mp

from .errors import DomainError, ResourceError, ValidationError
from .measure import PsiSpec, exponents
from .tailsums import WeightVector

_KINDS = ("single", "pair_unit", "pair_weighted", "conjecture")


# ---------------------------------------------------------------------------
# rate functions
# ---------------------------------------------------------------------------

def f_weighted(t0, t1, s) -> float:
    """Two-weight rate function s^2 / (t0 t1 max{s/t1 + (1-s)/t0, s/t0}).

    Strictly increasing on [0, 1]; equals min{s^2/(t0 s + (1-s) t1), s/t1}
    and reduces to s^2 at unit weights.
    """
    t0, t1, s = float(t0), float(t1), float(s)
    if t0 <= 0 or t1 <= 0:
        raise DomainError("weights must be positive")
    if not 0 <= s <= 1:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    return s * s / (t0 * t1 * max(s / t1 + (1 - s) / t0, s / t0))


def f_chain(weights, s) -> float:
    """Recursive m-weight rate function (conjectural for m >= 3).

    Starts from f_{t0}(s) = s/t0 and folds in one weight at a time:

        f_next = s f / (t_j f + max{0, s - (2s-1)/max(t_0..t_{j-1})}).

    At two weights with t_1 = 1 this coincides with ``f_weighted``; for
    general t_1 the two disagree away from the small-s branch, which is part
    of why the m >= 3 equation is only a conjecture.
    """
    ws = [float(w) for w in weights]
    if not ws or any(w <= 0 for w in ws):
        raise DomainError("weights must be positive and non-empty")
    s = float(s)
    if not 0 <= s <= 1:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    f = s / ws[0]
    running_max = ws[0]
    for tj in ws[1:]:
        denom = tj * f + max(0.0, s - (2 * s - 1) / running_max)
        if denom <= 0:
            return 0.0  # only reachable at s = 0
        f = s * f / denom
        running_max = max(running_max, tj)
    return f


def _exponent(kind: str, weights: Optional[WeightVector], s: float) -> float:
    if kind == "single":
        return s
    if kind == "pair_unit":
        return 2 * s
    if kind == "pair_weighted":
        t0, t1 = weights.weights
        return f_weighted(t0, t1, s)
    if kind == "conjecture":
        return f_chain(weights.weights, s)
    raise ValidationError(f"unknown equation kind {kind!r}")


# ---------------------------------------------------------------------------
# the digit factor Z(s) = sum_{d>=2} (d(d-1))^{-s}
# ---------------------------------------------------------------------------

def _tail_integral_series(D: int, s: float, dps=50):
    """Certified enclosure of integral_{D+1/2}^inf (x(x-1))^{-s} dx.

    With y = x - 1/2 the integrand is (y^2 - 1/4)^{-s}; expanding
    (1 - 1/(4y^2))^{-s} in a positive binomial series and integrating
    termwise gives sum_j c_j y0^{1-2s-2j}/(2s-1+2j) with geometric remainder
    (ratio <= 1/(4 y0^2) for s <= 1).
    """
    with mp.workdps(dps):
        y0 = mp.mpf(D)
        sm = mp.mpf(s)
        total = mp.mpf(0)
        coeff = mp.mpf(1)  # (s)_j / (j! 4^j)
        j = 0
        while True:
            term = coeff * y0 ** (1 - 2 * sm - 2 * j) / (2 * sm - 1 + 2 * j)
            total += term
            ratio = 1 / (4 * y0 * y0)  # >= true term ratio for s <= 1
            if term * ratio / (1 - ratio) < mp.mpf(10) ** (8 - dps) * (1 + total):
                rem = term * ratio / (1 - ratio)
                break
            coeff *= (sm + j) / ((j + 1) * 4)
            j += 1
        return float(total), float(total + rem)


def _em_error_bound(D: int, s: float) -> float:
    """Bound for |sum_{d > D} f(d) - integral_{D+1/2}^inf f|, f = (x(x-1))^{-s},
    by the midpoint rule on unit intervals: (f''(a) + |f'(a)|)/12 at a = D+1/2
    (f is positive, decreasing, convex with decreasing curvature there)."""
    a = D + 0.5
    u = a * (a - 1.0)
    fp = s * (2 * a - 1.0) * u ** (-s - 1.0)
    fpp = s * u ** (-s - 2.0) * ((s + 1.0) * (2 * a - 1.0) ** 2 - 2.0 * u)
    return (fp + abs(fpp)) / 12.0


_D_LADDER = (2_000, 10_000, 50_000, 200_000, 1_000_000)


def digit_factor_enclosure(s: float, tol: float = 1e-12,
                           cutoff: Optional[int] = None) -> tuple[float, float]:
    """Enclosure of Z(s) = sum_{d=2}^inf (d(d-1))^{-s} (or the finite sum up
    to ``cutoff`` when given).  Exact value 1 at s = 1 (telescoping)."""
    if cutoff is not None:
        if cutoff < 2:
            raise DomainError("cutoff must be >= 2")
        d = np.arange(2, cutoff + 1, dtype=np.float64)
        part = float(np.sum((d * (d - 1.0)) ** (-s)))
        slack = part * 5e-15 + 1e-300
        return part - slack, part + slack
    if s == 1.0:
        return 1.0, 1.0
    if s <= 0.5:
        raise DomainError("the infinite digit sum diverges for s <= 1/2")
    if s > 1.0:
        raise DomainError("s > 1 is outside the dimension bracket")
    for D in _D_LADDER:
        em = _em_error_bound(D, s)
        if em <= tol / 4 or D == _D_LADDER[-1]:
            break
    d = np.arange(2, D + 1, dtype=np.float64)
    part = float(np.sum((d * (d - 1.0)) ** (-s)))
    t_lo, t_hi = _tail_integral_series(D, s)
    slack = part * 5e-15
    return part - slack + t_lo - em, part + slack + t_hi + em


def g_sum(kind: str, B: float, s: float, weights: Optional[WeightVector] = None,
          cutoff: Optional[int] = None, tol: float = 1e-12) -> tuple[float, float]:
    """Enclosure of the dimension-equation left side at s.

    Infinite mode requires s in (1/2, 1]; a finite ``cutoff`` extends the
    domain to [0, 1] (the truncated sums converge everywhere).
    """
    if B <= 1:
        raise DomainError("B must exceed 1")
    e = _exponent(kind, weights, s)
    z_lo, z_hi = digit_factor_enclosure(s, tol=tol, cutoff=cutoff)
    log_fac = -e * math.log(B)
    fac = math.exp(log_fac)
    fe = 4e-15 * (1.0 + abs(log_fac))
    return z_lo * fac * (1 - fe), z_hi * fac * (1 + fe)


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimProblem:
    kind: str
    B: float
    weights: Optional[WeightVector] = None
    cutoff: Optional[int] = None
    tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"kind must be one of {_KINDS}")
        if self.kind == "pair_weighted":
            if self.weights is None or self.weights.m != 2:
                raise ValidationError("pair_weighted needs exactly two weights")
        if self.kind == "conjecture" and self.weights is None:
            raise ValidationError("conjecture kind needs weights")
        if self.tol <= 0 or self.tol < 1e-13:
            raise ResourceError("tol below achievable enclosure precision"
                                if self.tol > 0 else "tol must be positive")


@dataclass(frozen=True)
class DimSolution:
    s_lower: float
    s_upper: float
    residual: float
    iterations: int

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.s_lower + self.s_upper)

    @property
    def width(self) -> float:
        return self.s_upper - self.s_lower


def solve(problem: DimProblem) -> DimSolution:
    """Bisection with the bracketing certificate g(s_lower) >= 1 >= g(s_upper).

    In infinite (certified-tail) mode the comparisons go through enclosures:
    the lower endpoint only moves when the enclosure is entirely >= 1 and the
    upper one when it is entirely <= 1.  Truncated mode compares midpoints
    (the finite sums are exact to float precision).
    """
    if problem.B <= 1:
        raise DomainError("B must exceed 1 for the dimension equations")
    certified = problem.cutoff is None
    lo = 0.5 + 1e-6 if certified else 0.0
    hi = 1.0

    def enclosure(s, tight=1.0):
        return g_sum(problem.kind, problem.B, s, problem.weights,
                     cutoff=problem.cutoff, tol=1e-12 * tight)

    def geq1(s):
        g_lo, g_hi = enclosure(s)
        if certified:
            return g_lo >= 1.0
        return 0.5 * (g_lo + g_hi) >= 1.0 - 1e-12

    def leq1(s):
        g_lo, g_hi = enclosure(s)
        if certified:
            return g_hi <= 1.0
        return 0.5 * (g_lo + g_hi) <= 1.0 + 1e-12

    if not geq1(lo):
        raise DomainError(
            f"no root at or above s = {lo}: g({lo}) < 1 (B too large for the "
            "fixed bracket)")
    if not leq1(hi):
        raise DomainError("g(1) >= 1: no root in the bracket (is B > 1?)")

    iterations = 0
    while hi - lo > problem.tol:
        iterations += 1
        if iterations > 200:
            raise ResourceError("bisection failed to converge",
                                partial=(lo, hi))
        mid = 0.5 * (lo + hi)
        if geq1(mid):
            lo = mid
        elif leq1(mid):
            hi = mid
        else:
            # enclosure straddles 1: the root is pinned this tightly
            break
    g_lo, g_hi = enclosure(0.5 * (lo + hi))
    residual = max(abs(0.5 * (g_lo + g_hi) - 1.0), 0.5 * (g_hi - g_lo))
    return DimSolution(lo, hi, residual, iterations)


def solve_truncated_sequence(problem: DimProblem, n_list) -> list[float]:
    """Roots s_n of the digit sums truncated at d <= n, for each n in n_list.

    The sequence increases strictly in n and converges to the root of the
    full equation from below.
    """
    out = []
    for n in n_list:
        if n < 2:
            raise DomainError("truncation levels must be >= 2")
        sub = DimProblem(problem.kind, problem.B, problem.weights,
                         cutoff=int(n), tol=problem.tol)
        out.append(solve(sub).midpoint)
    return out


# ---------------------------------------------------------------------------
# dimension dispatch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionResult:
    value: float
    status: str                      # closed_form | theorem | conjecture | estimated
    enclosure: Optional[tuple[float, float]] = None


def dimension_from_exponents(B: float, b: float, t: WeightVector,
                             tol: float = 1e-10) -> DimensionResult:
    """Hausdorff dimension of the block limsup set from the growth exponents.

    B = 1 gives full dimension, B = infinity gives 1/(b+1) (0 when b is also
    infinite); finite B > 1 solves the m-block equation: the single-digit
    equation at B^{1/t_0} for m = 1, the weighted-pair equation for m = 2
    (a theorem), the recursion for m >= 3 (a conjecture).
    """
    if B == 1:
        return DimensionResult(1.0, "closed_form")
    if math.isinf(B):
        return DimensionResult(0.0 if math.isinf(b) else 1.0 / (b + 1.0),
                               "closed_form")
    if B < 1:
        raise DomainError("B must be >= 1")
    if t.m == 1:
        B_eff = float(B) ** (1.0 / float(t.weights[0]))
        sol = solve(DimProblem("single", B_eff, tol=tol))
        return DimensionResult(sol.midpoint, "theorem",
                               (sol.s_lower, sol.s_upper))
    if t.m == 2:
        sol = solve(DimProblem("pair_weighted", float(B), t, tol=tol))
        return DimensionResult(sol.midpoint, "theorem",
                               (sol.s_lower, sol.s_upper))
    sol = solve(DimProblem("conjecture", float(B), t, tol=tol))
    return DimensionResult(sol.midpoint, "conjecture",
                           (sol.s_lower, sol.s_upper))


def dimension(psi: PsiSpec, t: WeightVector, tol: float = 1e-10,
              ) -> DimensionResult:
    """Hausdorff dimension of the limsup set driven by psi with weights t."""
    exps = exponents(psi)
    if exps.provenance == "estimated":
        # only the tail-window range of log Psi(n)/n is observable
        n_max = len(psi.params)
        window = range(n_max // 2 + 1, n_max + 1)
        rates = [psi.log_value(n) / n for n in window]
        B_lo, B_hi = math.exp(min(rates)), math.exp(max(rates))
        hi_res = (dimension_from_exponents(max(B_lo, 1.0), exps.b, t, tol)
                  if B_lo > 1 else DimensionResult(1.0, "closed_form"))
        lo_res = (dimension_from_exponents(max(B_hi, 1.0), exps.b, t, tol)
                  if B_hi > 1 else DimensionResult(1.0, "closed_form"))
        return DimensionResult(0.5 * (lo_res.value + hi_res.value),
                               "estimated", (lo_res.value, hi_res.value))
    return dimension_from_exponents(exps.B, exps.b, t, tol)


def continuity_scan(kind: str, B_grid, weights: Optional[WeightVector] = None,
                    tol: float = 1e-8) -> list[tuple[float, float]]:
    """Solve along an increasing grid of B values; the solution curve is
    continuous and non-increasing in B, which the caller can check by
    comparing adjacent jumps across grid refinements."""
    grid = [float(B) for B in B_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("B_grid must be strictly increasing")
    if any(B <= 1 for B in grid):
        raise ValidationError("grid entries must exceed 1")
    return [(B, solve(DimProblem(kind, B, weights, tol=tol)).midpoint)
            for B in grid]


def max_adjacent_jump(rows) -> float:
    return max(abs(s2 - s1) for (_, s1), (_, s2) in zip(rows, rows[1:]))
