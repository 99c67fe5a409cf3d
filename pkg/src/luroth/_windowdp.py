"""Dynamic program for the measure of finite unions of window events.

The event at window n is "d_n^{t_0} ... d_{n+m-1}^{t_{m-1}} >= Psi(n)"; the
digits of a uniform point are i.i.d. with P(d = k) = 1/(k(k-1)), so the
measure of a union over n in [N1, N2] is one minus the survival probability
of a Markov chain whose state is the last m-1 digits.

Digits above ``digit_cap`` C are aggregated.  The aggregate carries exact
mass (P(d > C) = 1/C) and is *split exactly* whenever a window check gives
it a concrete partner digit: the sub-bucket at or above the threshold is
killed with its exact telescoped mass and the surviving part becomes a range
state (C, U) remembered until its second (and last) window check.  The one
situation that cannot be split exactly -- both coordinates aggregated -- is
left alive in the flow and covered on the upper side by a closed-form bound
on the probability that two above-cap digits meet the threshold, summed over
windows.  The result is a certified enclosure:

  lower = 1 - survival(flow)      (flow over-estimates survival)
  upper = 1 - survival(flow) + sum_n corner_bound(n) + rounding margins.

m = 1 needs no state, m = 2 uses the full machinery above, m = 3 runs on the
capped concrete state space with the coarse width O(positions / C).  Ties at
exact thresholds count as hits; with rational weights and a rational power
form of Psi(n) every comparison is integer-exact.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional

import numpy as np
from mpmath import mp

from .errors import DomainError, ResourceError
from .tailsums import WeightVector, least_d_with_scaled_power

_HUGE_BITS = 1000  # ints above this many bits behave as +infinity in floats


def _inv_pred(u) -> float:
    """1/(u - 1) as a float; 0.0 for the infinite sentinel None or huge u."""
    if u is None:
        return 0.0
    if u.bit_length() > _HUGE_BITS:
        return 0.0
    return 1.0 / (u - 1)


class _WindowPredicate:
    """Exact (or directed high-precision) threshold queries for one window."""

    def __init__(self, weights, psi, n, direction="lo"):
        self.n = n
        self.weights = weights
        self.direction = direction
        rep = psi.power_repr(n)
        if rep is not None:
            base, e = rep
            L = lcm(e.denominator, *(w.denominator for w in weights))
            self.exact = True
            self.a = [int(w * L) for w in weights]
            self.num = base.numerator ** int(e * L)
            self.den = base.denominator ** int(e * L)
        else:
            self.exact = False
            self.a = [None] * len(weights)
            self.psi = psi
            self.logpsi = None  # set lazily inside a workdps block

    def all_blocks_hit(self) -> bool:
        """True when even the all-2s block reaches the threshold (certainly)."""
        if self.exact:
            return 2 ** sum(self.a) * self.den >= self.num
        with mp.workdps(60):
            logpsi = self.psi.log_value_mp(self.n)
            total = sum(mp.mpf(w.numerator) / w.denominator * mp.log(2)
                        for w in self.weights)
            return total - logpsi > mp.mpf(10) ** -40

    def threshold(self, idx: int, others: dict[int, int]) -> int:
        """Least digit at coordinate ``idx`` making the block hit, the other
        coordinates fixed.  May exceed any cap; always >= 2."""
        if self.exact:
            scale = self.den
            for j, d in others.items():
                scale *= d ** self.a[j]
            return least_d_with_scaled_power(self.a[idx], self.num, scale)
        with mp.workdps(60):
            logpsi = self.psi.log_value_mp(self.n)
            rest = mp.mpf(0)
            for j, d in others.items():
                w = self.weights[j]
                rest += mp.mpf(w.numerator) / w.denominator * mp.log(d)
            wi = self.weights[idx]
            wi = mp.mpf(wi.numerator) / wi.denominator
            need = (logpsi - rest) / wi
            if need <= 0:
                return 2
            d = max(2, int(mp.floor(mp.exp(need))) - 2)
            margin = mp.mpf(10) ** -40
            while True:
                diff = wi * mp.log(d) - (logpsi - rest)
                if diff > margin:
                    break
                if -margin <= diff <= margin and self.direction == "hi":
                    break
                d += 1
            return d


@dataclass(frozen=True)
class MeasureEnclosure:
    lower: float
    upper: float
    n_range: tuple[int, int]
    digit_cap: int
    exact: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _certain_one(n_range, digit_cap):
    return MeasureEnclosure(1.0, 1.0, n_range, digit_cap, exact=True)


def _corner_bound(pred: _WindowPredicate, t: WeightVector, C: int,
                  log_psi: float) -> float:
    """Upper bound on P(d > C, k > C, d^{t0} k^{t1} >= Psi(n)).

    Splitting at dstar (the least d hitting together with k = C+1):
    for d >= dstar the whole partner bucket qualifies, total mass
    1/((dstar-1) C); below dstar the partner tail is P(k >= K(d)) <=
    1.2 (d^{t0}/Psi)^{1/t1} (valid since K >= C+2 >= 6), and
    P(d) d^{beta} <= 2^beta (d-1)^{beta-2} with beta = t0/t1, which is then
    summed by integral comparison.  Generous constants, certified direction.
    """
    dstar = pred.threshold(0, {1: C + 1})
    piece1 = _inv_pred(max(dstar, C + 1)) / C
    if dstar <= C + 1:
        return piece1
    t0, t1 = float(t.weights[0]), float(t.weights[1])
    beta = t0 / t1
    J = dstar - 2
    if beta < 1.0:
        s_sum = C ** (beta - 2) + C ** (beta - 1) / (1.0 - beta)
    elif beta == 1.0:
        s_sum = 1.0 / C + (math.log(J) - math.log(C) if J > C else 0.0)
    else:
        top = float(min(J + 1, 2.0 ** 300))
        s_sum = (C ** (beta - 2) + top ** (beta - 2)
                 + (top ** (beta - 1) - C ** (beta - 1)) / (beta - 1.0))
    factor = math.exp(max(-log_psi / t1, -700.0))
    piece2 = 1.2 * 2.0 ** beta * s_sum * factor * 1.05
    return piece1 + piece2


def _dp_single(psi, t, n1, n2, digit_cap):
    # union accumulated as killed mass (never via 1 - survival, which would
    # lose tiny unions to cancellation)
    from .measure import least_hit_digit
    kill_up, surv_up = 0.0, 1.0  # thresholds rounded away from hits
    kill_dn, surv_dn = 0.0, 1.0  # thresholds rounded toward hits
    for n in range(n1, n2 + 1):
        D_up = least_hit_digit(t.weights[0], psi, n, direction="lo")
        D_dn = least_hit_digit(t.weights[0], psi, n, direction="hi")
        if D_up <= 2:
            return _certain_one((n1, n2), digit_cap)
        p_up = 1.0 / (D_up - 1)
        p_dn = 1.0 if D_dn <= 2 else 1.0 / (D_dn - 1)
        kill_up += surv_up * p_up
        surv_up *= 1.0 - p_up
        kill_dn += surv_dn * p_dn
        surv_dn *= 1.0 - p_dn
    rel = 16e-16 * (n2 - n1 + 2)
    return MeasureEnclosure(max(0.0, kill_up * (1.0 - rel)),
                            min(1.0, kill_dn * (1.0 + rel)),
                            (n1, n2), digit_cap)


def _dp_pair(psi, t, n1, n2, C, direction="lo"):
    pk = np.zeros(C + 1)
    ks = np.arange(2, C + 1)
    pk[2:] = 1.0 / (ks * (ks - 1.0))
    pbig = 1.0 / C

    conc = pk.copy()               # digit at the current first position
    ranges: dict[Optional[int], float] = {None: pbig}
    corner_total = 0.0
    killed = 0.0                   # union accumulated directly, no cancellation

    for n in range(n1, n2 + 1):
        pred = _WindowPredicate(t.weights, psi, n, direction)
        if pred.all_blocks_hit():
            return _certain_one((n1, n2), C)

        # thresholds: V[k] = least first digit hitting with partner k,
        #             K[v] = least partner digit hitting with first digit v
        V = [0, 0] + [pred.threshold(0, {1: k}) for k in range(2, C + 1)]
        K = [0, 0] + [pred.threshold(1, {0: v}) for v in range(2, C + 1)]

        corner_total += _corner_bound(pred, t, C, psi.log_value(n))

        # concrete -> concrete: survivors have first digit below V[k]
        prefix = np.concatenate(([0.0], np.cumsum(conc[2:])))  # prefix[i] = sum conc[2..i+1]
        new_conc = np.zeros(C + 1)
        vclip = np.array([min(V[k], C + 1) for k in range(2, C + 1)])
        surv_cc = prefix[np.maximum(vclip - 2, 0)]
        new_conc[2:] = pk[2:] * surv_cc
        killed += float(pk[2:] @ (prefix[-1] - surv_cc))

        # ranges -> concrete: exact split of each surviving sub-bucket
        items = sorted(ranges.items(),
                       key=lambda kv: math.inf if kv[0] is None else kv[0])
        masses = [mss for _, mss in items]
        pref_mass = np.concatenate(([0.0], np.cumsum(masses)))
        ratios = [mss / (pbig - _inv_pred(u)) for u, mss in items]
        pref_ratio = np.concatenate(([0.0], np.cumsum(ratios)))
        finite = [u for u, _ in items if u is not None]
        total_mass = float(pref_mass[-1])
        for k in range(2, C + 1):
            vk = V[k]
            if vk <= C + 1:
                killed += pk[k] * total_mass  # every above-cap first digit hits
                continue
            idx = bisect_right(finite, vk)
            surv = pref_mass[idx]  # ranges entirely below the threshold
            part = pref_ratio[-1] - pref_ratio[idx]
            surv += (pbig - _inv_pred(vk)) * part
            new_conc[k] += pk[k] * surv
            killed += pk[k] * (total_mass - surv)

        # concrete -> aggregate: split the arriving bucket at K[v]
        new_ranges: dict[Optional[int], float] = {}
        for v in range(2, C + 1):
            kv = K[v]
            kc = max(kv, C + 1)
            killed += conc[v] * _inv_pred(kc) if kc > C + 1 else conc[v] * pbig
            if kv <= C + 1:
                continue  # the whole arriving bucket hit
            mass = conc[v] * (pbig - _inv_pred(kv))
            if mass > 0.0:
                key = kv if kv.bit_length() <= _HUGE_BITS else None
                new_ranges[key] = new_ranges.get(key, 0.0) + mass

        # aggregate -> aggregate: kept alive, covered by the corner bound
        if total_mass > 0.0:
            new_ranges[None] = new_ranges.get(None, 0.0) + total_mass * pbig

        conc = new_conc
        ranges = new_ranges
        if len(ranges) > 4 * C:
            raise ResourceError("range states exceed budget; lower digit_cap")

    rel = 64e-16 * (n2 - n1 + 2)
    # the range-split bookkeeping can invent kills of order mass * eps per
    # window; the lower bound must not claim them
    phantom = (n2 - n1 + 1) * pbig * 1e-15
    return MeasureEnclosure(max(0.0, killed * (1.0 - rel) - phantom),
                            min(1.0, killed * (1.0 + rel) + corner_total),
                            (n1, n2), C)


def _dp_triple(psi, t, n1, n2, C, direction="lo"):
    if C > 512:
        raise ResourceError(
            "m = 3 state space is quadratic in digit_cap; use digit_cap <= 512")
    pk = np.zeros(C + 1)
    ks = np.arange(2, C + 1)
    pk[2:] = 1.0 / (ks * (ks - 1.0))

    conc = np.outer(pk, pk)  # conc[v1, v2], capped paths only
    for n in range(n1, n2 + 1):
        pred = _WindowPredicate(t.weights, psi, n, direction)
        if pred.all_blocks_hit():
            return _certain_one((n1, n2), C)
        cum = np.cumsum(conc, axis=0)
        new = np.zeros_like(conc)
        for v2 in range(2, C + 1):
            for k in range(2, C + 1):
                v1_lim = min(pred.threshold(0, {1: v2, 2: k}), C + 1)
                if v1_lim > 2:
                    new[v2, k] = cum[v1_lim - 1, v2] * pk[k]
        conc = new

    surv_capped = float(conc.sum())
    positions = (n2 + 2) - n1 + 1
    slack = positions / C
    margin = positions * C * C * 2e-16 + 1e-12
    return MeasureEnclosure(max(0.0, 1.0 - surv_capped - slack - margin),
                            min(1.0, 1.0 - surv_capped + margin),
                            (n1, n2), C)


def window_event_measure_dp(psi, t: WeightVector, n_range, digit_cap=4096,
                            ) -> MeasureEnclosure:
    """Certified enclosure of the measure of the union of window events
    over n in [N1, N2].

    The m = 1 case reduces to the independence product
    1 - prod_n (1 - 1/(D_n - 1)) with D_n the least digit meeting the
    threshold; m = 2 runs the exact-split aggregate DP; m = 3 runs on the
    capped state space with enclosure width about (N2 - N1 + 3)/digit_cap.
    """
    n1, n2 = n_range
    if not (1 <= n1 <= n2):
        raise DomainError("need 1 <= N1 <= N2")
    if digit_cap < 4:
        raise DomainError("digit_cap must be >= 4")
    if t.m == 1:
        return _dp_single(psi, t, n1, n2, digit_cap)
    if t.m in (2, 3):
        run = _dp_pair if t.m == 2 else _dp_triple
        exact_thresholds = psi.power_repr(n1) is not None
        res = run(psi, t, n1, n2, digit_cap, "lo")
        if exact_thresholds or res.exact:
            return res
        # irrational thresholds: a second pass rounding ties toward hits
        res_hi = run(psi, t, n1, n2, digit_cap, "hi")
        return MeasureEnclosure(min(res.lower, res_hi.lower),
                                max(res.upper, res_hi.upper),
                                (n1, n2), digit_cap)
    raise ResourceError(
        f"window DP supports m <= 3 (state space is digit_cap^(m-1)); "
        f"got m = {t.m}")
