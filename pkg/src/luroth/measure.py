"""Growth specifications, zero-one classification and measure experiments.

A growth function Psi: N -> (0, inf) drives the limsup event "the weighted
product of m consecutive digits at position n is at least Psi(n)".  This
module provides parametric Psi families with analytic growth exponents, the
zero-one series (log Psi(n))^{ell-1} / Psi(n)^{1/T}, an exact dynamic-program
oracle for the Lebesgue measure of finite unions of window events (see
``_windowdp``), and a reproducible Monte Carlo harness.

The digit law is P(d = k) = 1/(k(k-1)) for k >= 2: digits of a uniform point
are i.i.d. with this law, which is what makes the DP and the closed-form
single-window measures exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from mpmath import mp

from .errors import DomainError, ValidationError
from .tailsums import WeightVector, least_d_with_scaled_power, tail_sum

_VARIANTS = ("geometric", "doubly_exponential", "polynomial",
             "counterexample", "table")


@dataclass(frozen=True)
class PsiSpec:
    """A growth function, either parametric or tabulated.

    variants:
      geometric(B)             Psi(n) = B^n
      doubly_exponential(a, c) Psi(n) = a^(c^n)
      polynomial(p)            Psi(n) = n^p
      counterexample(r, t)     Psi(n) = exp(r^n), the hypothesis-breaking
                               family (Psi -> 1, convergent series, full set)
      table(values)            finite explicit table, 1-based
    """

    variant: str
    params: tuple

    # -- constructors -------------------------------------------------------

    @classmethod
    def geometric(cls, B) -> "PsiSpec":
        B = Fraction(B)
        if B <= 0:
            raise ValidationError("geometric growth needs B > 0")
        return cls("geometric", (B,))

    @classmethod
    def doubly_exponential(cls, a, c) -> "PsiSpec":
        a, c = float(a), float(c)
        if a <= 1 or c <= 1:
            raise ValidationError("doubly exponential growth needs a > 1, c > 1")
        return cls("doubly_exponential", (a, c))

    @classmethod
    def polynomial(cls, p) -> "PsiSpec":
        p = Fraction(p)
        if p <= 0:
            raise ValidationError("polynomial growth needs p > 0")
        return cls("polynomial", (p,))

    @classmethod
    def counterexample(cls, r, t=1) -> "PsiSpec":
        r, t = float(r), float(t)
        if not 0 < r < 1:
            raise ValidationError("counterexample needs 0 < r < 1")
        if t <= 0:
            raise ValidationError("counterexample weight t must be positive")
        return cls("counterexample", (r, t))

    @classmethod
    def table(cls, values: Sequence) -> "PsiSpec":
        vals = tuple(Fraction(v) for v in values)
        if any(v <= 0 for v in vals):
            raise ValidationError("table entries must be positive")
        return cls("table", vals)

    @classmethod
    def parse(cls, text: str) -> "PsiSpec":
        """Parse 'kind:params' CLI syntax, e.g. 'geometric:2' or
        'counterexample:0.3,1' or 'table:1,2,4,8'."""
        kind, _, rest = text.partition(":")
        kind = kind.strip()
        args = [part.strip() for part in rest.split(",")] if rest else []
        try:
            if kind == "geometric":
                return cls.geometric(args[0])
            if kind == "doubly_exponential":
                return cls.doubly_exponential(*args)
            if kind == "polynomial":
                return cls.polynomial(args[0])
            if kind == "counterexample":
                return cls.counterexample(*args)
            if kind == "table":
                return cls.table(args)
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"cannot parse growth spec {text!r}: {exc}")
        raise ValidationError(f"unknown growth variant {kind!r}")

    # -- evaluation ---------------------------------------------------------

    def _check_n(self, n: int) -> None:
        if n < 1:
            raise DomainError(f"Psi is defined on n >= 1, got {n}")
        if self.variant == "table" and n > len(self.params):
            raise DomainError(f"table has {len(self.params)} entries, asked n={n}")

    def log_value(self, n: int) -> float:
        """log Psi(n) as a float (inf on overflow)."""
        self._check_n(n)
        if self.variant == "geometric":
            return n * math.log(self.params[0])
        if self.variant == "doubly_exponential":
            a, c = self.params
            try:
                return c ** n * math.log(a)
            except OverflowError:
                return math.inf
        if self.variant == "polynomial":
            return float(self.params[0]) * math.log(n)
        if self.variant == "counterexample":
            return self.params[0] ** n
        return math.log(self.params[n - 1])

    def log_value_mp(self, n: int):
        """log Psi(n) as an mpf at the caller's working precision."""
        self._check_n(n)
        if self.variant == "geometric":
            B = self.params[0]
            return n * mp.log(mp.mpf(B.numerator) / B.denominator)
        if self.variant == "doubly_exponential":
            a, c = self.params
            return mp.mpf(c) ** n * mp.log(a)
        if self.variant == "polynomial":
            p = self.params[0]
            return mp.mpf(p.numerator) / p.denominator * mp.log(n)
        if self.variant == "counterexample":
            return mp.mpf(self.params[0]) ** n
        v = self.params[n - 1]
        return mp.log(mp.mpf(v.numerator) / v.denominator)

    def value(self, n: int) -> float:
        return math.exp(min(self.log_value(n), 709.0))

    def power_repr(self, n: int) -> Optional[tuple[Fraction, Fraction]]:
        """Psi(n) written exactly as base**exponent with rationals, or None.

        This is what lets window-event thresholds be decided by integer
        arithmetic (raise both sides to the lcm of the denominators).
        """
        self._check_n(n)
        if self.variant == "geometric":
            return self.params[0], Fraction(n)
        if self.variant == "polynomial":
            return Fraction(n), self.params[0]
        if self.variant == "table":
            return self.params[n - 1], Fraction(1)
        return None

    def value_fraction(self, n: int) -> Optional[Fraction]:
        """Exact rational Psi(n) when it exists (rational base, integer exp)."""
        rep = self.power_repr(n)
        if rep is None:
            return None
        base, e = rep
        if e.denominator != 1:
            return None
        return base ** int(e)

    def liminf_exceeds_one(self) -> Optional[bool]:
        """Does liminf Psi(n) > 1 hold?  None when not decidable (tables)."""
        if self.variant == "geometric":
            return self.params[0] > 1
        if self.variant in ("doubly_exponential", "polynomial"):
            return True
        if self.variant == "counterexample":
            return False  # Psi(n) -> 1 from above
        return None


@dataclass(frozen=True)
class GrowthExponents:
    """The two liminf growth exponents of Psi.

    log B = liminf log Psi(n) / n   and   log b = liminf log log Psi(n) / n.
    Both are clamped below at 1 (sub-exponential growth behaves like B = 1
    for every statement in this package).  ``provenance`` is "analytic" for
    parametric variants and "estimated" for tables, where the liminf is only
    observed over the tail half of the horizon.
    """

    B: float
    b: float
    provenance: str
    horizon: Optional[int] = None


def exponents(psi: PsiSpec) -> GrowthExponents:
    if psi.variant == "geometric":
        return GrowthExponents(max(1.0, float(psi.params[0])), 1.0, "analytic")
    if psi.variant == "doubly_exponential":
        return GrowthExponents(math.inf, psi.params[1], "analytic")
    if psi.variant == "polynomial":
        return GrowthExponents(1.0, 1.0, "analytic")
    if psi.variant == "counterexample":
        return GrowthExponents(1.0, 1.0, "analytic")
    # table: observe the tail half
    n_max = len(psi.params)
    if n_max < 10:
        raise ValidationError("table too short to estimate exponents (< 10)")
    window = range(n_max // 2 + 1, n_max + 1)
    log_b_big = min(psi.log_value(n) / n for n in window)
    loglog = []
    for n in window:
        lv = psi.log_value(n)
        loglog.append(math.log(lv) / n if lv > 0 else -math.inf)
    return GrowthExponents(max(1.0, math.exp(log_b_big)),
                           max(1.0, math.exp(min(loglog))),
                           "estimated", horizon=n_max)


def zero_one_series_terms(psi: PsiSpec, t: WeightVector, N: int) -> list[float]:
    """Terms a_n = (log Psi(n))^{ell-1} / Psi(n)^{1/T} for n = 1..N.

    For ell >= 2 a non-positive log Psi(n) contributes a zero term (the
    series only classifies growth functions staying above 1; clamping keeps
    partial sums monotone for the others).
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    ell = t.top_multiplicity
    inv_T = 1.0 / float(t.t_max)
    terms = []
    for n in range(1, N + 1):
        lv = psi.log_value(n)
        if lv == math.inf:
            terms.append(0.0)
            continue
        if ell == 1:
            terms.append(math.exp(-lv * inv_T))
        elif lv <= 0:
            terms.append(0.0)
        else:
            terms.append(math.exp((ell - 1) * math.log(lv) - lv * inv_T))
    return terms


@dataclass(frozen=True)
class ZeroOneVerdict:
    series_behavior: str            # converges | diverges | undetermined
    measure: Optional[int]          # 0, 1, or None (undetermined)
    warning: Optional[str] = None
    B: float = math.nan
    b: float = math.nan


def _series_behavior(psi: PsiSpec, t: WeightVector) -> str:
    ell = t.top_multiplicity
    if psi.variant == "geometric":
        # a_n = (n log B)^{ell-1} B^{-n/T}: geometric decay iff B > 1
        return "converges" if psi.params[0] > 1 else "diverges"
    if psi.variant == "doubly_exponential":
        return "converges"
    if psi.variant == "polynomial":
        # a_n = (p log n)^{ell-1} n^{-p/T}: converges iff p/T > 1
        return "converges" if psi.params[0] > t.t_max else "diverges"
    if psi.variant == "counterexample":
        # a_n ~ r^{n(ell-1)}: geometric for ell >= 2, terms -> 1 for ell = 1
        return "converges" if ell >= 2 else "diverges"
    return "undetermined"


def classify(psi: PsiSpec, t: WeightVector) -> ZeroOneVerdict:
    """Zero-one verdict for the limsup set of window events.

    The dichotomy (measure 0 iff the series converges, 1 iff it diverges)
    requires liminf Psi(n) > 1; when that hypothesis fails the measure field
    stays undetermined and the warning explains what actually happens.
    """
    exps = exponents(psi)
    behavior = _series_behavior(psi, t)
    hypothesis = psi.liminf_exceeds_one()
    if hypothesis:
        measure = {"converges": 0, "diverges": 1}.get(behavior)
        return ZeroOneVerdict(behavior, measure, None, exps.B, exps.b)
    if psi.variant == "counterexample":
        r, _ = psi.params
        mt = float(t.m * t.t_min)
        full = r <= mt * math.log(2)  # then Psi(n) <= e^r... < 2^{mt} for all n
        warning = (
            "hypothesis liminf Psi(n) > 1 fails (Psi(n) -> 1): the "
            "series dichotomy does not apply."
        )
        if full:
            warning += (" Here Psi(n) < 2^(m*t) for every n, so every digit "
                        "block qualifies at every position: the event set is "
                        "all of (0,1] (measure 1) despite the convergent "
                        "series.")
        return ZeroOneVerdict(behavior, None, warning, exps.B, exps.b)
    warning = ("hypothesis liminf Psi(n) > 1 not verified for this variant; "
               "measure left undetermined")
    return ZeroOneVerdict(behavior, None, warning, exps.B, exps.b)


# ---------------------------------------------------------------------------
# digit law
# ---------------------------------------------------------------------------

def digit_probability(k: int) -> Fraction:
    """P(d = k) = 1/(k(k-1)): the length of the level-1 cylinder of k."""
    if k < 2:
        raise DomainError("digits start at 2")
    return Fraction(1, k * (k - 1))


def digit_tail_probability(m_threshold: int) -> Fraction:
    """Exact Lebesgue measure of {x : d_n(x) >= m_threshold}.

    Telescoping sum_{d >= m} 1/(d(d-1)) gives exactly 1/(m-1).  (Note this
    differs from the sometimes-quoted value 1/m; the cylinder lengths leave
    no room for doubt, and the Monte Carlo harness agrees.)
    """
    if m_threshold < 2:
        raise DomainError("threshold must be >= 2")
    return Fraction(1, m_threshold - 1)


def sample_digits(rng: np.random.Generator, shape) -> np.ndarray:
    """I.i.d. digits under the digit law, by exact inverse CDF.

    With u uniform on (0, 1), d = floor(1/u) + 1 satisfies
    P(d = k) = 1/(k-1) - 1/k = 1/(k(k-1)): this is the same arithmetic as
    extracting the first digit of a uniform point of (0, 1].
    """
    u = rng.random(shape)
    u = np.where(u == 0.0, 0.5, u)  # P = 0 guard
    d = np.floor(1.0 / u).astype(np.int64) + 1
    return d


def single_window_measure(psi: PsiSpec, t: WeightVector, n: int,
                          tol=1e-12) -> float:
    """Measure of one window event {prod_{i} d_{n+i}^{t_i} >= Psi(n)}.

    m = 1 is the exact telescoped closed form; larger blocks delegate to the
    certified tail sum (requires Psi(n) rational).
    """
    if t.m == 1:
        D = least_hit_digit(t.weights[0], psi, n)
        return 1.0 if D <= 2 else 1.0 / (D - 1)
    g = psi.value_fraction(n)
    if g is None:
        raise DomainError(
            f"single_window_measure needs a rational Psi(n) for m >= 2")
    return tail_sum(t, g, tol=tol).midpoint


def least_hit_digit(weight: Fraction, psi: PsiSpec, n: int,
                    direction: str = "lo") -> int:
    """Least digit d >= 2 with d**weight >= Psi(n).

    Exact integer arithmetic whenever Psi(n) has a rational power form;
    otherwise a 60-digit directed computation, rounding toward fewer hits
    for direction 'lo' and more hits for 'hi'.
    """
    rep = psi.power_repr(n)
    if rep is not None:
        base, e = rep
        L = math.lcm(weight.denominator, e.denominator)
        a = int(weight * L)
        E = int(e * L)
        return least_d_with_scaled_power(
            a, base.numerator ** E, base.denominator ** E)
    with mp.workdps(60):
        logpsi = psi.log_value_mp(n)
        w = mp.mpf(weight.numerator) / weight.denominator
        if logpsi <= 0:
            return 2
        guess = int(mp.floor(mp.exp(logpsi / w)))
        d = max(2, guess - 2)
        margin = mp.mpf(10) ** -40
        while True:
            diff = w * mp.log(d) - logpsi
            if diff > margin or (diff >= -margin and direction == "hi"):
                break
            d += 1
    return d


# ---------------------------------------------------------------------------
# quantitative Borel-Cantelli counter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterReport:
    N: int
    samples: int
    phi: float                  # sum of single-window measures
    mean_hits: float
    var_hits: float
    mean_dev: float             # mean of A(N, x) - phi(N)
    sigma_est: float            # std error of the mean of A


def borel_cantelli_counter(t: WeightVector, psi: PsiSpec, N: int,
                           samples: int, rng_seed: int,
                           chunk: int = 200) -> CounterReport:
    """Simulate digit streams and compare hit counts A(N, x) with phi(N).

    A(N, x) counts the windows n <= N whose weighted digit product reaches
    Psi(n); phi(N) is the sum of the exact single-window measures.  For
    independent-enough events A concentrates around phi, which is the
    countable story behind the zero-one law.
    """
    if N < 1 or samples < 1:
        raise DomainError("N and samples must be >= 1")
    m = t.m
    rng = np.random.default_rng(rng_seed)
    if m == 1:
        thresholds = np.empty(N, dtype=np.int64)
        phi = 0.0
        for n in range(1, N + 1):
            D = least_hit_digit(t.weights[0], psi, n)
            thresholds[n - 1] = min(D, 2 ** 62)
            phi += 1.0 if D <= 2 else 1.0 / (D - 1)
    else:
        phi = sum(single_window_measure(psi, t, n) for n in range(1, N + 1))
        logpsi = np.array([psi.log_value(n) for n in range(1, N + 1)])
        wts = np.array([float(w) for w in t.weights])

    counts = np.empty(samples, dtype=np.int64)
    done = 0
    while done < samples:
        batch = min(chunk, samples - done)
        digits = sample_digits(rng, (batch, N + m - 1))
        if m == 1:
            hits = digits >= thresholds[None, :]
        else:
            logs = np.log(digits.astype(np.float64))
            acc = np.zeros((batch, N))
            for i, w in enumerate(wts):
                acc += w * logs[:, i:i + N]
            hits = acc >= logpsi[None, :] - 1e-12
        counts[done:done + batch] = hits.sum(axis=1)
        done += batch

    mean = counts.mean()
    var = counts.var(ddof=1) if samples > 1 else 0.0
    sigma = math.sqrt(var / samples) if samples > 1 else math.nan
    return CounterReport(N, samples, phi, float(mean), float(var),
                         float(mean - phi), sigma)


from ._windowdp import MeasureEnclosure, window_event_measure_dp  # noqa: E402

__all__ = [
    "PsiSpec", "GrowthExponents", "ZeroOneVerdict", "CounterReport",
    "MeasureEnclosure", "exponents", "zero_one_series_terms", "classify",
    "digit_probability", "digit_tail_probability", "sample_digits",
    "single_window_measure", "least_hit_digit", "borel_cantelli_counter",
    "window_event_measure_dp",
]
