"""Exact Luroth-expansion arithmetic.

A Luroth expansion writes x in (0, 1] as

    x = 1/d_1 + 1/(d_1(d_1-1)d_2) + 1/(d_1(d_1-1)d_2(d_2-1)d_3) + ...

with integer digits d_j >= 2.  Everything in this module is exact rational
arithmetic on ``fractions.Fraction``; no floating point is used.  Cylinders
follow the right-closed convention: the level-n cylinder of a digit word is
the interval (lower, upper], so the expansion map is total on (0, 1] and the
point 1 has the constant expansion (2, 2, 2, ...).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError, ResourceError

#: Digits larger than this abort ``expand`` (the orbit got within ~2^-63 of 0).
DEFAULT_DIGIT_CAP = 2**63 - 1

Word = tuple  # a Luroth word is a tuple of ints >= 2


def check_digit(d) -> int:
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise DomainError(f"Luroth digits are integers >= 2, got {d!r}")
    return d


def check_word(word: Iterable[int]) -> Word:
    """Validate a digit word (empty words are allowed)."""
    return tuple(check_digit(d) for d in word)


def _check_unit_interval(x: Fraction, allow_zero: bool) -> Fraction:
    x = Fraction(x)
    lo_ok = x >= 0 if allow_zero else x > 0
    if not lo_ok or x > 1:
        lo = "[0, 1]" if allow_zero else "(0, 1]"
        raise DomainError(f"argument {x} outside {lo}")
    return x


def first_digit(x) -> int:
    """First digit d_1(x) = floor(1/x) + 1 for x in (0, 1].

    The digit is the unique d >= 2 with 1/d < x <= 1/(d-1); in particular a
    boundary point x = 1/(d-1) gets digit d (right-closed cylinders).
    """
    x = _check_unit_interval(x, allow_zero=False)
    # floor(1/x) for x = p/q is q // p.
    return x.denominator // x.numerator + 1


def luroth_map(x) -> Fraction:
    """One step of the expansion map: x -> d(d-1)x - (d-1), fixing 0."""
    x = _check_unit_interval(x, allow_zero=True)
    if x == 0:
        return Fraction(0)
    d = first_digit(x)
    return d * (d - 1) * x - (d - 1)


def expand(x, depth: int, digit_cap: int = DEFAULT_DIGIT_CAP) -> Word:
    """First ``depth`` digits of x in (0, 1], by exact iteration of the map."""
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    x = _check_unit_interval(x, allow_zero=False)
    digits = []
    for _ in range(depth):
        d = first_digit(x)
        if d > digit_cap:
            raise ResourceError(
                f"digit {d} exceeds the configured cap {digit_cap}; "
                "the orbit is too close to 0", partial=tuple(digits))
        digits.append(d)
        x = d * (d - 1) * x - (d - 1)
    return tuple(digits)


def _finite_sum(digits: Sequence[int]) -> Fraction:
    # <d_1, ..., d_n> with denominators d_1(d_1-1)...d_{j-1}(d_{j-1}-1) d_j.
    # The final digit may be 1 (degenerate term used for upper endpoints).
    num, den = 0, 1  # running value as num/den
    prefix = 1  # d_1(d_1-1) ... d_{j-1}(d_{j-1}-1)
    for d in digits:
        num = num * prefix * d + den
        den = den * prefix * d
        prefix *= d * (d - 1)
    return Fraction(num, den)


def evaluate(word: Iterable[int]) -> Fraction:
    """Exact value <d_1, ..., d_n> of a non-empty finite Luroth sum."""
    w = check_word(word)
    if not w:
        raise DomainError("evaluate needs a non-empty word")
    return _finite_sum(w)


@dataclass(frozen=True)
class Cylinder:
    """The set of points whose first n digits equal ``word``: (lower, upper]."""

    word: Word
    lower: Fraction
    upper: Fraction

    @property
    def length(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = Fraction(x)
        return self.lower < x <= self.upper


def cylinder_of(word: Iterable[int]) -> Cylinder:
    """Cylinder of a non-empty word: endpoints <w> and <w with last digit - 1>.

    The decremented last digit may equal 1; the degenerate finite sum is still
    valid and produces the exact upper endpoint.  The length always equals
    prod 1/(d_j(d_j-1)) exactly.
    """
    w = check_word(word)
    if not w:
        raise DomainError("cylinder_of needs a non-empty word")
    lower = _finite_sum(w)
    upper = _finite_sum(w[:-1] + (w[-1] - 1,))
    return Cylinder(w, lower, upper)


def cylinder_length(word: Iterable[int]) -> Fraction:
    """prod 1/(d_j(d_j-1)); equals cylinder_of(word).length, computed directly."""
    w = check_word(word)
    den = 1
    for d in w:
        den *= d * (d - 1)
    return Fraction(1, den)


def shift(word: Iterable[int]) -> Word:
    """Drop the first digit (the symbolic left shift)."""
    w = check_word(word)
    if not w:
        raise DomainError("shift needs a non-empty word")
    return w[1:]
