"""Weighted digit tail sums and the companion multiple integral.

The central object is

    S_m(t; g) = sum over (d_1, ..., d_m), d_i >= 2, with
                d_1^{t_0} ... d_m^{t_{m-1}} >= g   (non-strict)
                of  prod_j 1/(d_j (d_j - 1)),

the probability that a block of m independent Luroth digits has weighted
product at least g.  For rational weights and rational g every threshold
reduces to an integer-power comparison, so the recursion below is exact up to
the directed rounding of the final high-precision accumulation: the innermost
coordinate is telescoped in closed form (sum_{d >= D} 1/(d(d-1)) = 1/(D-1))
and an outer coordinate is telescoped as soon as the remaining threshold is
met by the all-2s block.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm, log
from typing import Iterable, Sequence

from mpmath import mp

from .errors import DomainError, ResourceError, ValidationError


def _to_fraction(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class WeightVector:
    """Positive weights (t_0, ..., t_{m-1}) with derived min/max/multiplicity."""

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.weights:
            raise ValidationError("weight vector must be non-empty")
        for w in self.weights:
            if w <= 0:
                raise ValidationError(f"weights must be positive, got {w}")

    @classmethod
    def of(cls, *weights) -> "WeightVector":
        return cls(tuple(_to_fraction(w) for w in weights))

    @classmethod
    def parse(cls, text: str) -> "WeightVector":
        return cls.of(*(part.strip() for part in text.split(",")))

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def t_min(self) -> Fraction:
        return min(self.weights)

    @property
    def t_max(self) -> Fraction:
        return max(self.weights)

    @property
    def top_multiplicity(self) -> int:
        """Number of coordinates attaining the maximal weight (written ell)."""
        top = self.t_max
        return sum(1 for w in self.weights if w == top)

    def __iter__(self):
        return iter(self.weights)

    def __str__(self):
        return ",".join(str(w) for w in self.weights)


@dataclass(frozen=True)
class TailSumResult:
    lower: float
    upper: float
    terms_enumerated: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def iroot(n: int, k: int) -> int:
    """Floor of the k-th root of a non-negative integer."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0, k >= 1")
    if n == 0 or k == 1:
        return n
    x = 1 << ((n.bit_length() + k - 1) // k)  # upper-ish starting point
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def least_d_with_scaled_power(a: int, num: int, den: int) -> int:
    """Least integer d >= 2 with d**a * den >= num (a >= 1, den >= 1)."""
    if den >= num:
        return 2
    target = -(-num // den)  # ceil(num/den); d**a >= ceil works since d**a is int
    d = max(2, iroot(target, a))
    while d ** a * den < num:
        d += 1
    while d > 2 and (d - 1) ** a * den >= num:
        d -= 1
    return d


class _ExactTailSum:
    """Recursive evaluator of S_m(t; g) with integer-exact thresholds.

    All weights are scaled by L = lcm of their denominators, so the event
    prod d_i^{t_i} >= g becomes prod d_i^{a_i} * gd^L >= gn^L over integers.
    """

    def __init__(self, weights: Sequence[Fraction], g: Fraction, max_terms: int):
        L = lcm(*(w.denominator for w in weights))
        self.exps = [int(w * L) for w in weights]
        self.g_num = g.numerator ** L
        self.g_den = g.denominator ** L
        # 2^{sum of remaining scaled exponents}, for the all-2s shortcut
        self.min_pow = [1] * (len(weights) + 1)
        for i in range(len(weights) - 1, -1, -1):
            self.min_pow[i] = self.min_pow[i + 1] * (2 ** self.exps[i])
        self.max_terms = max_terms
        self.terms = 0
        self.one = mp.mpf(1)

    def run(self):
        return self._level(0, self.g_den)

    def _level(self, idx, scale):
        """Enclosure of the sum over coordinates idx.. given accumulated scale.

        ``scale`` is g_den^L * prod of d_j^{a_j} over j < idx; the residual
        event is prod_{j >= idx} d_j^{a_j} * scale >= g_num.
        """
        if self.min_pow[idx] * scale >= self.g_num:
            return self.one, self.one  # every remaining block qualifies
        a = self.exps[idx]
        if idx == len(self.exps) - 1:
            D = least_d_with_scaled_power(a, self.g_num, scale)
            val = self.one / (D - 1)
            return val, val
        # digits >= dstar leave a residual threshold met by the all-2s block
        dstar = least_d_with_scaled_power(
            a, self.g_num, scale * self.min_pow[idx + 1])
        lo = hi = mp.mpf(0)
        budget_cut = None
        d = 2
        while d < dstar:
            if self.terms >= self.max_terms:
                budget_cut = d
                break
            self.terms += 1
            w = self.one / (d * (d - 1))
            inner_lo, inner_hi = self._level(idx + 1, scale * d ** a)
            lo += w * inner_lo
            hi += w * inner_hi
            d += 1
        lo += self.one / (dstar - 1)
        if budget_cut is None:
            hi += self.one / (dstar - 1)
        else:
            hi += self.one / (budget_cut - 1)  # remaining inner masses <= 1
        return lo, hi


def tail_sum(t: WeightVector, g, tol=1e-12, max_terms=2_000_000,
             dps=40) -> TailSumResult:
    """Certified enclosure of S_m(t; g).

    Raises ResourceError (carrying the achieved enclosure) if the term budget
    is hit before the requested tolerance.
    """
    g = _to_fraction(g)
    if g <= 0:
        raise DomainError(f"g must be positive, got {g}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    with mp.workdps(dps):
        ev = _ExactTailSum(list(t.weights), g, max_terms)
        lo, hi = ev.run()
        # widen for accumulated rounding: every mpf op is exact to ~10^-dps
        slack = mp.mpf(10) ** (5 - dps) * (1 + hi) * (1 + ev.terms)
        lower = float(lo - slack)
        upper = float(hi + slack)
    result = TailSumResult(max(0.0, lower), min(1.0, upper), ev.terms)
    if result.width > tol:
        raise ResourceError(
            f"enclosure width {result.width:.3g} exceeds tol {tol:.3g} within "
            f"{max_terms} terms; raise max_terms", partial=result)
    return result


def full_mass_threshold(t: WeightVector) -> Fraction | None:
    """Exact 2^{t_0 + ... + t_{m-1}} when it is rational, else None.

    S_m(t; g) = 1 exactly for every g below (or at) this value.
    """
    e = sum(t.weights, Fraction(0))
    if e.denominator == 1:
        return Fraction(2) ** e
    return None


def asymptotic_profile(t: WeightVector, g_grid: Iterable, tol=1e-10,
                       max_terms=5_000_000) -> list[dict]:
    """Normalized decay table: S_m(t; g) * g^{1/T} / log^{ell-1} g per grid g.

    The ratio staying in a bounded band across decades is the computational
    face of the asymptotic S_m(t; g) ~ log^{ell-1}(g) / g^{1/T}.
    """
    grid = [_to_fraction(g) for g in g_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("g_grid must be strictly increasing")
    mt = t.m * t.t_min
    q = mt.denominator
    for g in grid:
        # require g >= 2^{m t}: compare g^q >= 2^{mt*q} exactly
        if g.numerator ** q < g.denominator ** q * 2 ** int(mt * q):
            raise ValidationError(f"grid entry {g} below 2^(m*t) = 2^{mt}")
    ell = t.top_multiplicity
    inv_T = 1.0 / float(t.t_max)
    rows = []
    for g in grid:
        res = tail_sum(t, g, tol=tol, max_terms=max_terms)
        gf = float(g)
        norm = gf ** inv_T
        if ell > 1:
            norm /= log(gf) ** (ell - 1)
        rows.append({"g": gf, "lower": res.lower, "upper": res.upper,
                     "ratio": res.midpoint * norm})
    return rows


def _kh_nested(m, g):
    """Integral of prod x_i^{-2} over x_i >= 2, x_1...x_m > g, via the
    recursive split: outer coordinate by quadrature on [2, g/2^{m-1}], the
    complementary piece integrating to exactly 1/g."""
    if m == 1:
        return 1 / max(g, mp.mpf(2)), mp.mpf(0)
    cut = g / 2 ** (m - 1)
    if cut <= 2:
        # threshold inactive: independent full masses
        return mp.mpf(2) ** (-m), mp.mpf(0)

    def integrand(x):
        val, _ = _kh_nested(m - 1, g / x)
        return val / (x * x)

    val, err = mp.quad(integrand, [2, cut], error=True)
    return val + 1 / g, mp.mpf(err)


def khinchin_integral(m: int, g, quad_tol=1e-10, dps=30) -> tuple[float, float]:
    """Enclosure of the m-fold integral of prod x_i^{-2} over x_i >= 2,
    x_1 ... x_m > g, for m in {1, 2, 3} and g > 2^m."""
    if m not in (1, 2, 3):
        raise DomainError(f"m must be in {{1,2,3}}, got {m}")
    g = _to_fraction(g)
    if g <= 2 ** m:
        raise DomainError(f"g must exceed 2^{m}")
    if m == 1:
        exact = Fraction(1) / g
        return float(exact), float(exact)
    with mp.workdps(dps):
        val, err = _kh_nested(m, mp.mpf(g.numerator) / g.denominator)
        pad = 10 * err + mp.mpf(10) ** (8 - dps) * (1 + abs(val))
        if pad > quad_tol:
            raise ResourceError(
                f"quadrature error {float(pad):.3g} above quad_tol",
                partial=(float(val - pad), float(val + pad)))
        return float(val - pad), float(val + pad)
