"""Desk-scale build of the lower-bound Cantor set for weighted digit pairs.

The set keeps digits in [2, M] except at a sparse sequence of special
positions n_k, where the digit pair (d_{n_k}, d_{n_k+1}) is forced into
[ceil(a0^{n_k}), floor(2 a0^{n_k})] x [ceil(a1^{n_k}), floor(2 a1^{n_k})],
with a0 = A^{1/t_0}, a1 = (B/A)^{1/t_1}.  Those ranges make every member
satisfy d_{n_k}^{t_0} d_{n_k+1}^{t_1} >= (a0^{t_0} a1^{t_1})^{n_k} = B^{n_k},
so every branch lies in the target limsup set at each special position.

The exponent s is the root of the digit sum truncated at M, and A is chosen
so that a0^s = B^{f_{t0,t1}(s)}: then the per-digit weights
w(d) = (d(d-1))^{-s} a0^{-s} sum to exactly 1 over d in [2, M], which makes
the natural mass assignment (w(d) per ordinary digit, an even split over
each special range) exactly consistent: the measure of a fundamental
interval is a product of per-position multipliers.

Admissible ranges depend only on the position, never on earlier digits, so
the tree is positionally regular; several whole-level checks (membership,
interval-length sandwiches) reduce to finitely many digit choices per
special position and are therefore exhaustive even when the level itself
has billions of nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Optional

import numpy as np
from mpmath import mp

from . import core
from .dimsolve import DimProblem, solve
from .errors import DomainError, ResourceError, ValidationError
from .tailsums import WeightVector

_MP_DPS = 60


def _mpf_frac(x: Fraction):
    return mp.mpf(x.numerator) / x.denominator


def _f_weighted_mp(t0, t1, s):
    return s * s / (t0 * t1 * max(s / t1 + (1 - s) / t0, s / t0))


def _truncated_root_mp(B, t0, t1, M):
    """Root of sum_{d=2..M} (d(d-1))^{-s} B^{-f(s)} = 1 at working precision."""
    def h(s):
        tot = mp.mpf(0)
        for d in range(2, M + 1):
            tot += mp.mpf(d * (d - 1)) ** (-s)
        return tot * B ** (-_f_weighted_mp(t0, t1, s)) - 1

    lo, hi = mp.mpf("0.01"), mp.mpf(1)
    if h(lo) <= 0 or h(hi) >= 0:
        raise ValidationError("truncated dimension equation has no root in (0,1)")
    for _ in range(int(mp.dps * 3.4) + 20):
        mid = (lo + hi) / 2
        if h(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _int_ceil_mp(x) -> int:
    c = int(mp.ceil(x))
    # guard against representation error at the working precision
    if c - 1 >= x:
        c -= 1
    if c < x:
        c += 1
    return c


def _int_floor_mp(x) -> int:
    f = int(mp.floor(x))
    if f + 1 <= x:
        f += 1
    if f > x:
        f -= 1
    return f


@dataclass(frozen=True)
class CantorParams:
    B: Fraction
    t: WeightVector
    M: int
    N: int
    ell_schedule: tuple[int, ...]
    s: object                      # mpf
    A: object                      # mpf
    alpha0: object                 # mpf
    alpha1: object                 # mpf
    special_positions: tuple[int, ...]
    special_ranges: dict[int, tuple[int, int]]
    digit_weight: dict[int, object]  # d -> (d(d-1))^{-s} alpha0^{-s}, mpf

    @property
    def depth_max(self) -> int:
        return self.special_positions[-1] + 1

    def position_range(self, pos: int) -> tuple[int, int]:
        """Admissible digit range at 1-based position ``pos``."""
        if pos in self.special_ranges:
            return self.special_ranges[pos]
        return (2, self.M)

    def range_count(self, pos: int) -> int:
        lo, hi = self.position_range(pos)
        return hi - lo + 1


def derive_params(B, t: WeightVector, M: int = 10, N: Optional[int] = None,
                  ell_schedule: Iterable[int] = (2, 3)) -> CantorParams:
    """Compute and validate all construction parameters.

    Rejects weight pairs in the regime s0/t1 <= (2 s0 - 1)/t0, where the
    lower bound comes from the single-digit subset {d_{n+1}^{t1} >= B^n}
    instead of this two-scale construction.
    """
    B = Fraction(B)
    if B <= 1:
        raise ValidationError("construction needs B > 1")
    if t.m != 2:
        raise ValidationError("construction is specific to weight pairs")
    if M < 5:
        raise ValidationError("M must be at least 5 (the gap argument needs it)")
    ell = tuple(int(x) for x in ell_schedule)
    if not ell or any(x < 1 for x in ell):
        raise ValidationError("ell_schedule must be non-empty positive integers")

    t0f, t1f = t.weights
    s0 = solve(DimProblem("pair_weighted", float(B), t, tol=1e-12)).midpoint
    if s0 / float(t1f) - (2 * s0 - 1) / float(t0f) <= 0:
        raise ValidationError(
            "weights fall in the single-digit regime (s0/t1 <= (2 s0 - 1)/t0); "
            "the lower bound there is the single-digit equation at B^(1/t1), "
            "not this construction")

    with mp.workdps(_MP_DPS):
        t0 = _mpf_frac(t0f)
        t1 = _mpf_frac(t1f)
        Bmp = _mpf_frac(B)
        s = _truncated_root_mp(Bmp, t0, t1, M)
        if not (mp.mpf("0.5") < s < 1):
            raise ValidationError(
                f"truncated root s = {float(s):.6f} outside (1/2, 1); "
                "increase M")
        if s / t1 - (2 * s - 1) / t0 <= 0:
            raise ValidationError(
                "truncated root left the two-scale branch; increase M")
        fs = _f_weighted_mp(t0, t1, s)
        A = Bmp ** (t0 * fs / s)
        if not (1 < A < Bmp):
            raise ValidationError(f"scale split A = {float(A):.6f} not in (1, B)")
        alpha0 = Bmp ** (fs / s)       # = A^{1/t0}
        alpha1 = (Bmp / A) ** (1 / t1)

        if N is None:
            N = 1
            while alpha0 ** N <= 2:
                N += 1
        elif alpha0 ** N <= 2:
            raise ValidationError(f"need alpha0^N > 2; alpha0 = {float(alpha0):.4f}")

        positions = []
        n = ell[0] * N + 1
        positions.append(n)
        for lk in ell[1:]:
            n = n + lk * N + 2
            positions.append(n)

        # sparsity: (2k-1) log a0 / log a1 < n_1 + ... + n_k for k >= 2
        la0, la1 = mp.log(alpha0), mp.log(alpha1)
        for k in range(2, len(positions) + 1):
            if (2 * k - 1) * la0 / la1 >= sum(positions[:k]):
                raise ValidationError(
                    f"schedule violates the sparsity condition at k = {k}")

        ranges = {}
        for nk in positions:
            lo0 = _int_ceil_mp(alpha0 ** nk)
            hi0 = _int_floor_mp(2 * alpha0 ** nk)
            lo1 = _int_ceil_mp(alpha1 ** nk)
            hi1 = _int_floor_mp(2 * alpha1 ** nk)
            if lo0 > hi0 or lo1 > hi1 or lo1 < 2:
                raise ValidationError(
                    f"special range empty at position {nk}; increase N")
            ranges[nk] = (lo0, hi0)
            ranges[nk + 1] = (lo1, hi1)
            if not _pair_hits(lo0, lo1, t, B, nk):
                raise ValidationError(
                    f"rounding broke the membership inequality at {nk}")

        weight = {}
        for d in range(2, M + 1):
            weight[d] = mp.mpf(d * (d - 1)) ** (-s) * alpha0 ** (-s)

    return CantorParams(B, t, M, int(N), ell, s, A, alpha0, alpha1,
                        tuple(positions), ranges, weight)


def _pair_hits(d0: int, d1: int, t: WeightVector, B: Fraction, nk: int) -> bool:
    """Exact check of d0^{t0} d1^{t1} >= B^{nk} for rational weights."""
    t0, t1 = t.weights
    L = lcm(t0.denominator, t1.denominator)
    a0, a1 = int(t0 * L), int(t1 * L)
    return (d0 ** a0 * d1 ** a1 * B.denominator ** (nk * L)
            >= B.numerator ** (nk * L))


def is_admissible(params: CantorParams, word) -> bool:
    return all(params.position_range(i)[0] <= d <= params.position_range(i)[1]
               for i, d in enumerate(word, start=1))


def admissible_children(params: CantorParams, word) -> range:
    """Digit range available at the next position after ``word``."""
    if not is_admissible(params, word):
        raise ValidationError("word is not an admissible prefix")
    lo, hi = params.position_range(len(word) + 1)
    return range(lo, hi + 1)


def membership_ok(params: CantorParams, word) -> bool:
    """Does the word satisfy the defining inequality at every completed
    special pair?"""
    for nk in params.special_positions:
        if nk + 1 <= len(word):
            if not _pair_hits(word[nk - 1], word[nk], params.t, params.B, nk):
                return False
    return True


def mass(params: CantorParams, word) -> float:
    """Measure of the fundamental interval of ``word``.

    The recursive definition collapses to one multiplier per position:
    w(d) = (d(d-1))^{-s} a0^{-s} at ordinary positions (their sum over
    d in [2, M] is exactly 1 by the choice of s and A) and an even split
    1/#range at special positions.  Intermediate levels, defined in the
    recursion as sums over block completions, inherit exactly this product
    because each completed position contributes total weight 1.
    """
    if not is_admissible(params, word):
        raise ValidationError("word is not an admissible prefix")
    with mp.workdps(40):
        mu = mp.mpf(1)
        for i, d in enumerate(word, start=1):
            if i in params.special_ranges:
                mu /= params.range_count(i)
            else:
                mu *= params.digit_weight[d]
        return float(mu)


def log_mass(params: CantorParams, word) -> float:
    with mp.workdps(40):
        total = mp.mpf(0)
        for i, d in enumerate(word, start=1):
            if i in params.special_ranges:
                total -= mp.log(params.range_count(i))
            else:
                total += mp.log(params.digit_weight[d])
        return float(total)


@dataclass(frozen=True)
class FundamentalInterval:
    word: tuple
    lower: Fraction
    upper: Fraction
    mass: float

    @property
    def length(self) -> Fraction:
        return self.upper - self.lower


def fundamental_interval(params: CantorParams, word) -> FundamentalInterval:
    """Closure of the union of admissible child cylinders of ``word``.

    Its length is (1/(c-1) - 1/C) |I_n(word)| for the child range [c, C]:
    the child with the largest digit supplies the left endpoint and the one
    with the smallest digit the right endpoint.
    """
    if not is_admissible(params, word):
        raise ValidationError("word is not an admissible prefix")
    c, C = params.position_range(len(word) + 1)
    if word:
        E = core.evaluate(word)
        L = core.cylinder_length(word)
    else:
        E, L = Fraction(0), Fraction(1)
    return FundamentalInterval(tuple(word), E + L / C, E + L * Fraction(1, c - 1),
                               mass(params, word))


def length_ratio(params: CantorParams, level: int) -> Fraction:
    """|J_n| / |I_n| at level n; positional, identical for every word."""
    c, C = params.position_range(level + 1)
    return Fraction(1, c - 1) - Fraction(1, C)


def sandwich_bounds_ok(params: CantorParams, level: int) -> bool:
    """Check the length-ratio sandwich at ``level``.

    Ordinary levels: 1/2 <= |J|/|I| = 1 - 1/M; level n_k - 1 (the next
    position is the a0-range): ratio in [1/(2 a0^{n_k}), 1/a0^{n_k}];
    level n_k similarly with a1.
    """
    ratio = length_ratio(params, level)
    nxt = level + 1
    if nxt in params.special_ranges:
        k_pos = nxt if nxt in params.special_positions else nxt - 1
        alpha = params.alpha0 if nxt in params.special_positions else params.alpha1
        with mp.workdps(_MP_DPS):
            scale = alpha ** k_pos
            r = _mpf_frac(ratio)
            return 1 / (2 * scale) <= r <= 1 / scale
    return Fraction(1, 2) <= ratio <= 1 - Fraction(1, params.M)


# ---------------------------------------------------------------------------
# level walks: the tree is positionally regular, so a level is the product
# of per-position digit ranges; intervals are generated in ascending
# position order (digits descending at every position)
# ---------------------------------------------------------------------------

def count_level_nodes(params: CantorParams, level: int) -> int:
    total = 1
    for pos in range(1, level + 1):
        total *= params.range_count(pos)
    return total


def _walk_intervals(params: CantorParams, level: int):
    """Yield (J_lower, J_upper, I_length) for every level-``level`` word in
    ascending position order, without materializing words."""
    c_next, C_next = params.position_range(level + 1)
    up_frac = Fraction(1, c_next - 1)
    lo_frac = Fraction(1, C_next)

    def rec(pos, E, L):
        if pos > level:
            yield E + L * lo_frac, E + L * up_frac, L
            return
        lo, hi = params.position_range(pos)
        for d in range(hi, lo - 1, -1):  # descending digit = ascending value
            yield from rec(pos + 1, E + L / d, L / (d * (d - 1)))

    yield from rec(1, Fraction(0), Fraction(1))


def min_gap_ratio(params: CantorParams, level: int,
                  node_budget: int = 2_000_000) -> Fraction:
    """Exact min over level-n words of gap(word)/|I_n(word)|.

    The gap of a word is its distance to the nearest sibling fundamental
    interval; the minimum ratio over the level is realised across adjacent
    pairs of the position-ordered walk.
    """
    n_nodes = count_level_nodes(params, level)
    if n_nodes > node_budget:
        raise ResourceError(
            f"level {level} has {n_nodes} nodes, over the exhaustive budget")
    best = None
    prev_hi = None
    prev_len = None
    for j_lo, j_hi, i_len in _walk_intervals(params, level):
        if prev_hi is not None:
            gap = j_lo - prev_hi
            for ratio in (gap / prev_len, gap / i_len):
                if best is None or ratio < best:
                    best = ratio
        prev_hi, prev_len = j_hi, i_len
    if best is None:
        raise ValidationError("level has a single word; no gaps")
    return best


def left_neighbor(params: CantorParams, word) -> Optional[tuple]:
    """Adjacent word on the left (smaller values); None at the boundary."""
    word = tuple(word)
    if not word:
        return None
    lo, hi = params.position_range(len(word))
    if word[-1] < hi:  # larger digit sits to the left
        return word[:-1] + (word[-1] + 1,)
    parent = left_neighbor(params, word[:-1])
    if parent is None:
        return None
    lo2, hi2 = params.position_range(len(word))
    return parent + (lo2,)


def right_neighbor(params: CantorParams, word) -> Optional[tuple]:
    word = tuple(word)
    if not word:
        return None
    lo, hi = params.position_range(len(word))
    if word[-1] > lo:
        return word[:-1] + (word[-1] - 1,)
    parent = right_neighbor(params, word[:-1])
    if parent is None:
        return None
    lo2, hi2 = params.position_range(len(word))
    return parent + (hi2,)


def gap(params: CantorParams, word, node_budget: int = 2_000_000) -> Fraction:
    """Distance from J(word) to the nearest sibling fundamental interval.

    Exhaustive when the level fits the budget; otherwise the nearest
    lexicographic neighbors only (a valid upper bound for the distance).
    """
    word = tuple(word)
    level = len(word)
    if count_level_nodes(params, level) <= node_budget:
        target = fundamental_interval(params, word)
        best = None
        for j_lo, j_hi, _ in _walk_intervals(params, level):
            if j_lo == target.lower:
                continue
            d = j_lo - target.upper if j_lo > target.upper else target.lower - j_hi
            if d >= 0 and (best is None or d < best):
                best = d
        return best
    best = None
    me = fundamental_interval(params, word)
    for nb in (left_neighbor(params, word), right_neighbor(params, word)):
        if nb is None:
            continue
        other = fundamental_interval(params, nb)
        d = (other.lower - me.upper if other.lower > me.upper
             else me.lower - other.upper)
        if best is None or d < best:
            best = d
    if best is None:
        raise ValidationError("word has no siblings")
    return best


# ---------------------------------------------------------------------------
# mass distribution diagnostics
# ---------------------------------------------------------------------------

def node_log_holder_ratio(params: CantorParams, word) -> float:
    """log of mu(J)/|J|^s for the word's fundamental interval."""
    J = fundamental_interval(params, word)
    s = float(params.s)
    log_len = math.log(J.length.numerator) - math.log(J.length.denominator)
    return log_mass(params, word) - s * log_len


def holder_level_extreme(params: CantorParams, level: int) -> float:
    """Exact max over level-``level`` words of log(mu(J)/|J|^s).

    Ordinary digits cancel from the ratio (their mass weight is exactly
    (d(d-1))^{-s} a0^{-s} and |J|^s carries the same (d(d-1))^{-s}), so the
    maximum is taken digit by digit over the special positions only.
    """
    with mp.workdps(40):
        s = params.s
        c, C = params.position_range(level + 1)
        ratio = _mpf_frac(Fraction(1, c - 1) - Fraction(1, C))
        total = -s * mp.log(ratio)
        for pos in range(1, level + 1):
            if pos in params.special_ranges:
                lo, hi = params.special_ranges[pos]
                count = hi - lo + 1
                best = max(s * mp.log(d * (d - 1)) - mp.log(count)
                           for d in (lo, hi))
                total += best
            else:
                total -= s * mp.log(params.alpha0)
        return float(total)


def holder_max_up_to(params: CantorParams, depth: int) -> tuple[float, int]:
    """(max over levels n <= depth of the exact level max, argmax level)."""
    best, arg = -math.inf, 0
    for n in range(1, depth + 1):
        v = holder_level_extreme(params, n)
        if v > best:
            best, arg = v, n
    return best, arg


def sample_member(params: CantorParams, depth: int,
                  rng_seed: int = 0) -> tuple:
    """Mass-distributed random admissible word of the given depth."""
    if depth > params.depth_max:
        raise ResourceError(f"depth {depth} beyond configured maximum "
                            f"{params.depth_max}")
    rng = np.random.default_rng(rng_seed)
    return _sample_word(params, depth, rng)


def _sample_word(params: CantorParams, depth: int, rng) -> tuple:
    word = []
    for pos in range(1, depth + 1):
        lo, hi = params.position_range(pos)
        if pos in params.special_ranges:
            word.append(int(rng.integers(lo, hi + 1)))
        else:
            w = np.array([float(params.digit_weight[d])
                          for d in range(2, params.M + 1)])
            w /= w.sum()
            word.append(int(rng.choice(np.arange(2, params.M + 1), p=w)))
    return tuple(word)


def ball_mass_upper(params: CantorParams, x: Fraction, r,
                    depth_cap: Optional[int] = None) -> float:
    """Upper bound on the construction measure of the ball B(x; r).

    Fully-contained fundamental intervals contribute exactly; intervals
    still straddling the boundary at the depth cap contribute their full
    mass (the safe direction for the mass-distribution test).
    """
    if depth_cap is None:
        depth_cap = params.depth_max
    r = Fraction(r)
    if r <= 0:
        raise DomainError("radius must be positive")
    xl, xr = x - r, x + r

    def frac_ceil(q: Fraction) -> int:
        return -((-q.numerator) // q.denominator)

    def frac_floor(q: Fraction) -> int:
        return q.numerator // q.denominator

    def rec(pos, E, L, mu):
        # J interval of the current word
        c, C = params.position_range(pos + 1)
        j_lo = E + L / C
        j_hi = E + L * Fraction(1, c - 1)
        if j_hi < xl or j_lo > xr:
            return 0.0
        if xl <= j_lo and j_hi <= xr:
            return mu
        if pos >= depth_cap:
            return mu  # pessimistic: straddling interval counted in full
        # children with cylinder overlapping the ball
        d_min, d_max = c, C
        if xr > E:
            d_min = max(d_min, frac_ceil(L / (xr - E)))
        if xl > E:
            d_max = min(d_max, frac_floor(L / (xl - E)) + 1)
        total = 0.0
        for d in range(d_min, d_max + 1):
            if pos + 1 in params.special_ranges:
                mu_child = mu / params.range_count(pos + 1)
            else:
                mu_child = mu * float(params.digit_weight[d])
            total += rec(pos + 1, E + L / d, L / (d * (d - 1)), mu_child)
        return total

    return rec(0, Fraction(0), Fraction(1), 1.0)


def holder_ball_scan(params: CantorParams, radii, samples: int,
                     rng_seed: int = 0,
                     depth_cap: Optional[int] = None) -> list[dict]:
    """Table of max over sampled construction points of mu(B(x;r))/r^s."""
    if depth_cap is None:
        depth_cap = params.depth_max
    rng = np.random.default_rng(rng_seed)
    s = float(params.s)
    points = []
    for _ in range(samples):
        w = _sample_word(params, depth_cap, rng)
        J = fundamental_interval(params, w)
        points.append((J.lower + J.upper) / 2)
    rows = []
    for r in radii:
        rf = Fraction(r)
        worst = max(ball_mass_upper(params, x, rf, depth_cap) for x in points)
        rows.append({"r": float(r), "max_ratio": worst / float(r) ** s})
    return rows
