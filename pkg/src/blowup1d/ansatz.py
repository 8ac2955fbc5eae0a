"""Explicit far-field ansatz and its certified derivatives.

The tail of the profile is a power-log expansion under a rational
cutoff.  Derivatives up to order five come from exact recursions: the
coefficient recursion for x^p (log x)^q atoms and an integer polynomial
recursion for the cutoff, so interval evaluation needs no symbolic
algebra at run time.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParamError
from .interval import Interval

DEFAULT_C1 = 1.5745
CUTOFF_POWER = 5

# p_k polynomials of the cutoff derivative recursion, integer ascending
# coefficients: d^k/du^k [u^5/(1+u^5)] = p_k(u) / (1+u^5)^(k+1)
_CHI_POLYS = [None, [0, 0, 0, 0, 5]]


def _chi_poly(k):
    while len(_CHI_POLYS) <= k:
        p = _CHI_POLYS[-1]
        kk = len(_CHI_POLYS) - 1
        dp = [i * c for i, c in enumerate(p)][1:] or [0]
        out = [0] * (max(len(dp) + 5, len(p) + 4))
        for i, c in enumerate(dp):
            out[i] += c
            out[i + 5] += c
        for i, c in enumerate(p):
            out[i + 4] -= 5 * (kk + 1) * c
        while out and out[-1] == 0:
            out.pop()
        _CHI_POLYS.append(out)
    return _CHI_POLYS[k]


def _poly_eval(coeffs, u):
    acc = None
    for c in reversed(coeffs):
        acc = (acc * u + float(c)) if acc is not None else \
            (u * 0.0 + float(c))
    return acc if acc is not None else u * 0.0


def cutoff_eval(u, order=0):
    """d^order/du^order of u^5/(1+u^5) for u > 0 (0 for u <= 0).

    Scalar float or Interval input with a fixed sign of u.
    """
    if isinstance(u, Interval):
        if u.hi <= 0.0:
            return Interval(0.0, 0.0)
        if u.lo < 0.0:
            pos = cutoff_eval(Interval(0.0, u.hi), order)
            return pos.hull(Interval(0.0, 0.0))
        if order == 0:
            one = Interval(1.0, 1.0)
            return one - one / (one + u ** 5)
        p = _chi_poly(order)
        return _poly_eval(p, u) / (Interval(1.0, 1.0) + u ** 5) ** (order + 1)
    if u <= 0.0:
        return 0.0
    if order == 0:
        return 1.0 - 1.0 / (1.0 + u ** 5)
    return _poly_eval(_chi_poly(order), u) / (1.0 + u ** 5) ** (order + 1)


def cutoff_tail_coeff(order, u_min):
    """C with |d^k cutoff| <= C * u^(-5-k) for u >= u_min (>= 10)."""
    if u_min < 10.0:
        raise ParamError("tail bound needs u >= 10")
    if order == 0:
        # 1 - chi0 = 1/(1+u^5) <= u^-5
        return 1.0
    p = _chi_poly(order)
    deg = len(p) - 1
    total = Interval(0.0, 0.0)
    for i, c in enumerate(p):
        total = total + abs(float(c)) * Interval.point(u_min) ** (i - deg)
    # (1+u^5)^(k+1) >= u^(5k+5); deg p_k = 4k
    return total.hi


def powerlog_coeffs(p, q, order):
    """Rows C[i][j] with d^i (x^p log^q x) = x^(p-i) sum_j C[i][j] log^(q-j)."""
    rows = [[1.0]]
    for i in range(order):
        prev = rows[-1]
        nxt = [0.0] * (i + 2)
        for j, c in enumerate(prev):
            nxt[j] += (p - i) * c
            nxt[j + 1] += (q - j) * c
        rows.append(nxt)
    return rows


def powerlog_eval(p, q, x, order=0, _cache={}):
    """d^order (x^p (log x)^q) for x > 1, float or Interval."""
    key = (p, q, order)
    if key not in _cache:
        _cache[key] = powerlog_coeffs(p, q, order)[order]
    row = _cache[key]
    if isinstance(x, Interval):
        lg = x.log()
        acc = Interval(0.0, 0.0)
        for j, c in enumerate(row):
            if c != 0.0:
                acc = acc + c * lg ** (q - j)
        return acc * x ** (p - order)
    lg = math.log(x)
    acc = 0.0
    for j, c in enumerate(row):
        if c != 0.0:
            acc += c * lg ** (q - j)
    return acc * x ** (p - order)


@dataclass(frozen=True)
class FarFieldAnsatz:
    """Cutoff power-log tail of the profile.

    c0 is pinned to -6 by the far-field matching; c2 is derived from c1.
    Only x >= 0 is represented; the profile is extended oddly.
    """

    c1: float = DEFAULT_C1
    z0: float = 1.9375
    c0: float = field(default=-6.0, init=False)

    def __post_init__(self):
        if self.z0 <= 1.0:
            raise ParamError("cutoff start must exceed 1")

    @property
    def c2(self):
        return self.c1 * self.c1 / 12.0

    def log_tail(self, x, order=0):
        """d^order of x^(-1/3)(c0 + c1 log^(-1/3) + c2 log^(-2/3))."""
        third = 1.0 / 3.0
        out = None
        for coeff, q in ((self.c0, 0.0), (self.c1, -third),
                         (self.c2, -2.0 * third)):
            term = coeff * powerlog_eval(-third, q, x, order)
            out = term if out is None else out + term
        return out

    def eval(self, x, order=0):
        """Value/derivative at a float x (odd extension below zero)."""
        if order > 5:
            raise ParamError("derivatives implemented through order 5")
        if isinstance(x, Interval):
            return self.eval_interval(x, order)
        if x < 0:
            return -((-1.0) ** order) * self.eval(-x, order)
        if x <= self.z0:
            return 0.0
        u = x / self.z0 - 1.0
        total = 0.0
        for i in range(order + 1):
            ci = cutoff_eval(u, i) / self.z0 ** i
            if ci != 0.0:
                total += math.comb(order, i) * ci \
                    * self.log_tail(x, order - i)
        return total

    def eval_interval(self, x, order=0):
        """Certified enclosure over a nonnegative interval."""
        if x.lo < 0.0:
            raise DomainError("interval evaluation is for x >= 0")
        if x.hi <= self.z0:
            return Interval(0.0, 0.0)
        lo_clip = max(x.lo, self.z0)
        xc = Interval(lo_clip, x.hi)
        u = xc / self.z0 - 1.0
        u = u.positive_part()
        total = Interval(0.0, 0.0)
        for i in range(order + 1):
            ci = cutoff_eval(u, i) * Interval.point(self.z0) ** (-i)
            total = total + math.comb(order, i) * ci \
                * self.log_tail(xc, order - i)
        if x.lo < self.z0:
            total = total.hull(Interval(0.0, 0.0))
        return total

    def tail_derivative_coeff(self, order, x_min):
        """C with |d^order W_F| <= C x^(-1/3-order) for x >= x_min.

        Needs x_min comfortably past the cutoff (x_min/z0 - 1 >= 10).
        """
        u_min = x_min / self.z0 - 1.0
        if u_min < 10.0:
            raise ParamError("tail coefficient needs x_min >= 11*z0")
        lgm = math.log(x_min)
        total = Interval(0.0, 0.0)
        third = 1.0 / 3.0
        for i in range(order + 1):
            if i == 0:
                cut = Interval(0.0, 1.0)  # chi in [0, 1]
                xpow_extra = 0.0
            else:
                # |chi^(i)| <= C u^(-5-i) <= C' x^(-5-i) for x >= x_min
                c_u = cutoff_tail_coeff(i, u_min)
                conv = (Interval.point(x_min)
                        / (Interval.point(x_min) - self.z0)) ** (5 + i)
                cut = Interval(0.0, (c_u * conv * self.z0 ** 5).hi)
                xpow_extra = -5.0
            inner = Interval(0.0, 0.0)
            for coeff, q in ((self.c0, 0.0), (self.c1, -third),
                             (self.c2, -2 * third)):
                row = powerlog_coeffs(-third, q, order - i)[order - i]
                for j, c in enumerate(row):
                    inner = inner + abs(coeff * c) \
                        * Interval.point(lgm) ** (q - j)
            total = total + math.comb(order, i) * cut * inner \
                * Interval.point(x_min) ** xpow_extra
        return total.hi

    def range_bracket(self, x_min):
        """Enclosure of x^(1/3) W_F(x) for all x >= x_min (>= 11 z0)."""
        if x_min / self.z0 - 1.0 < 10.0:
            raise ParamError("bracket needs x_min >= 11*z0")
        xm = Interval.point(x_min)
        at_min = self.c0 + self.c1 * xm.log() ** (-1.0 / 3.0) \
            + self.c2 * xm.log() ** (-2.0 / 3.0)
        # the log part decreases toward c0; chi in (chi(x_min), 1]
        chi_min = cutoff_eval(xm / self.z0 - 1.0, 0)
        lo_val = Interval(self.c0, self.c0).min(at_min * chi_min)
        hi_val = (at_min * chi_min).max(Interval(self.c0, self.c0))
        return Interval(lo_val.lo, hi_val.hi)
