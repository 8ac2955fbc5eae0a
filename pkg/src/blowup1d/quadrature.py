"""Certified quadrature primitives.

Five-point Gauss rule with the explicit radical nodes/weights and the
classical derivative error bound; exact power-moment integrals with a
Taylor branch for far-off evaluation points; certified Simpson sums.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundMissing, DomainError
from .interval import Interval, IntervalArray
from .kernels import falling_product

# nodes +-sqrt(5 -+ 2 sqrt(10/7))/3 and weights (322 +- 13 sqrt(70))/900;
# all enclosed from the radicals so the rule itself carries no mystery
# constants
_S107 = (Interval.ratio(10, 7)).sqrt()
_Q_INNER = ((Interval.point(5.0) - 2.0 * _S107).sqrt()) / 3.0
_Q_OUTER = ((Interval.point(5.0) + 2.0 * _S107).sqrt()) / 3.0
_S70 = Interval.point(70.0).sqrt()
_W_INNER = (Interval.point(322.0) + 13.0 * _S70) / 900.0
_W_OUTER = (Interval.point(322.0) - 13.0 * _S70) / 900.0
_W_CENTER = Interval.ratio(128, 225)

GQ5_NODES = [-_Q_OUTER, -_Q_INNER, Interval.point(0.0), _Q_INNER, _Q_OUTER]
GQ5_WEIGHTS = [_W_OUTER, _W_INNER, _W_CENTER, _W_INNER, _W_OUTER]

# (n!)^4 / ((2n+1) ((2n)!)^3) for n = 5
GQ5_ERR_FACTOR = (
    Interval.point(float(math.factorial(5))) ** 4
    / (11.0 * Interval.point(float(math.factorial(10))) ** 3)
)


@dataclass
class QuadratureResult:
    value: Interval
    truncation_bound: float
    segments: int


def gq5(f, a, b, deriv10_bound=None):
    """Certified five-point Gauss quadrature of f over [a, b].

    ``f`` maps an Interval to an Interval enclosure; ``deriv10_bound``
    is a rigorous sup of |f^(10)| on [a, b] (zero for polynomials of
    degree <= 9).  The rule is exact to degree 9, so the truncation
    bound vanishes exactly in that case.
    """
    if deriv10_bound is None:
        raise BoundMissing("gq5 requires a bound on the 10th derivative")
    ia, ib = Interval.point(a), Interval.point(b)
    mid = (ia + ib) * 0.5
    half = (ib - ia) * 0.5
    total = Interval(0.0, 0.0)
    for q, w in zip(GQ5_NODES, GQ5_WEIGHTS):
        total = total + w * f(mid + half * q)
    total = total * half
    width = b - a
    if deriv10_bound == 0.0:
        trunc = 0.0
    else:
        trunc = (GQ5_ERR_FACTOR * width ** 11 * deriv10_bound).hi
    if trunc < 0 or math.isnan(trunc):
        raise BoundMissing("invalid derivative bound")
    return QuadratureResult(
        value=total + Interval(-trunc, trunc),
        truncation_bound=trunc,
        segments=1,
    )


def gq5_adaptive(f, a, b, deriv10_bound, rel_target=1e-14, max_splits=6):
    """Split the panel while the error bound dominates the value."""
    res = gq5(f, a, b, deriv10_bound)
    scale = max(abs(res.value.lo), abs(res.value.hi), 1e-300)
    if res.truncation_bound <= rel_target * scale or max_splits == 0:
        return res
    midpt = 0.5 * (a + b)
    left = gq5_adaptive(f, a, midpt, deriv10_bound, rel_target, max_splits - 1)
    right = gq5_adaptive(f, midpt, b, deriv10_bound, rel_target, max_splits - 1)
    return QuadratureResult(
        value=left.value + right.value,
        truncation_bound=left.truncation_bound + right.truncation_bound,
        segments=left.segments + right.segments,
    )


# ---------------------------------------------------------------------------
# exact moment integrals  I = int_{y_a}^{y_b} (w + sigma*y)^a (z - y)^l dy

MOMENT_RATIO = 4.0  # switch to the Taylor branch beyond this separation


def _power_primitive(p, s, t):
    """Enclosure of int_s^t xi^p dxi for 0 <= s <= t, p != -1."""
    pp1 = p + 1.0
    return (_pw(t, pp1) - _pw(s, pp1)) * (1.0 / pp1)


def _pw(v, p):
    if isinstance(v, Interval):
        if v.lo == 0.0 and p < 0.0:
            raise DomainError("divergent moment endpoint")
        return v ** p
    if isinstance(v, IntervalArray):
        return v.pow_float(p)
    return v ** p


def _one_of(v):
    if isinstance(v, Interval):
        return Interval(1.0, 1.0)
    if isinstance(v, IntervalArray):
        return IntervalArray.exact(np.ones_like(v.lo))
    return 1.0


def exact_moment(w, a, l, sigma, z, y_a, y_b, taylor_terms=20):
    """Certified value of int_{y_a}^{y_b} (w + sigma y)^a (z - y)^l dy.

    Requires w + sigma*y >= 0 across [y_a, y_b].  When the base
    w + sigma*z dominates the segment (ratio > 4) the binomial change of
    variables cancels catastrophically, so a Taylor expansion around
    y = z with an explicit remainder is used instead.
    """
    if y_a > y_b:
        raise DomainError("y_a must not exceed y_b")
    if l < 0 or int(l) != l:
        raise DomainError("moment order l must be a nonnegative integer")
    l = int(l)
    wi = w if isinstance(w, (Interval, IntervalArray)) else Interval.point(w)
    d_yz = max(abs(y_a - z), abs(y_b - z))
    if isinstance(wi, Interval):
        if (wi + sigma * y_a).hi < 0 or (wi + sigma * y_b).hi < 0:
            raise DomainError("w + sigma*y changes sign on the segment")
        base = wi + sigma * z
        if base.lo > MOMENT_RATIO * d_yz and d_yz > 0.0:
            return _moment_taylor(wi, a, l, sigma, z, y_a, y_b, taylor_terms)
        return _moment_binomial(wi, a, l, sigma, z, y_a, y_b)
    # array path: dispatch elementwise on the separation condition
    base_lo = (wi + sigma * z).lo
    taylor = base_lo > MOMENT_RATIO * d_yz if d_yz > 0.0 \
        else np.zeros_like(base_lo, dtype=bool)
    if not taylor.any():
        return _moment_binomial(wi, a, l, sigma, z, y_a, y_b)
    out_lo = np.empty_like(wi.lo)
    out_hi = np.empty_like(wi.hi)
    if taylor.all():
        got = _moment_taylor(wi, a, l, sigma, z, y_a, y_b, taylor_terms)
        return got
    for mask, fn in ((taylor, _moment_taylor), (~taylor, _moment_binomial)):
        if mask.any():
            sub = IntervalArray(wi.lo[mask], wi.hi[mask])
            got = fn(sub, a, l, sigma, z, y_a, y_b, taylor_terms) \
                if fn is _moment_taylor \
                else fn(sub, a, l, sigma, z, y_a, y_b)
            out_lo[mask] = got.lo
            out_hi[mask] = got.hi
    return IntervalArray(out_lo, out_hi)


def _moment_binomial(w, a, l, sigma, z, y_a, y_b):
    total = None
    if sigma == 1:
        s = _clamp0(w + y_a)
        t = _clamp0(w + y_b)
        zw = _coerce_like(w, z) + w
        for i in range(l + 1):
            c = math.comb(l, i) * (-1.0) ** i
            term = c * _pw_int(zw, l - i) * _power_primitive(a + i, s, t)
            total = term if total is None else total + term
    else:
        s = _clamp0(w - y_b)
        t = _clamp0(w - y_a)
        zw = _coerce_like(w, z) - w
        for i in range(l + 1):
            c = math.comb(l, i)
            term = c * _pw_int(zw, l - i) * _power_primitive(a + i, s, t)
            total = term if total is None else total + term
    return total


def _clamp0(v):
    # the sign precondition holds mathematically; rounding may push an
    # endpoint enclosure a few ulps below zero, which intersecting with
    # [0, inf) legitimately removes
    return v.positive_part() if isinstance(v, (Interval, IntervalArray)) else v


def _pw_int(v, n):
    out = _one_of(v)
    for _ in range(n):
        out = out * v
    return out


def _coerce_like(w, z):
    if isinstance(w, IntervalArray):
        return IntervalArray._coerce(z) if isinstance(z, IntervalArray) \
            else IntervalArray.exact(np.full_like(w.lo, float(z)))
    if isinstance(z, Interval):
        return z
    return Interval.point(float(z))


def _moment_taylor(w, a, l, sigma, z, y_a, y_b, k):
    base = w + sigma * z
    scalar = isinstance(base, Interval)
    total = Interval(0.0, 0.0) if scalar \
        else IntervalArray.exact(np.zeros_like(base.lo))
    sgn = 1.0
    for i in range(k + 1):
        c = falling_product(a, i) / math.factorial(i)
        # int (y-z)^(i+l) dy, exact for integer powers
        p = i + l
        prim = (Interval.point(y_b - z) ** (p + 1)
                - Interval.point(y_a - z) ** (p + 1)) * (1.0 / (p + 1))
        total = total + _pw(base, a - i) * ((sgn * (-1.0) ** l) * c * prim)
        sgn *= sigma
    d_yz = max(abs(y_a - z), abs(y_b - z))
    shrink = 1.0 - 1.0 / MOMENT_RATIO
    rem = (abs(falling_product(a, k + 1)) / math.factorial(k + 1)) \
        * _pw(base * shrink, a - k - 1.0) * (y_b - y_a) * d_yz ** (l + k + 1)
    if scalar:
        return total + Interval(-abs(rem.hi), abs(rem.hi))
    return total + IntervalArray(-np.abs(rem.hi), np.abs(rem.hi))


# ---------------------------------------------------------------------------
# certified Simpson sums (used for slowly varying explicit integrands)


def simpson_certified(f, a, b, n, deriv4_bound):
    """Composite Simpson on n equal panels with the (h^5/2880) bound.

    ``f`` maps Interval -> Interval; ``deriv4_bound`` is a sup of
    |f''''| over [a, b].
    """
    if n < 1:
        raise DomainError("need at least one panel")
    h = (Interval.point(b) - Interval.point(a)) * (1.0 / n)
    total = Interval(0.0, 0.0)
    for j in range(n):
        ya = Interval.point(a) + h * j
        yb = ya + h
        ym = (ya + yb) * 0.5
        total = total + (h / 6.0) * (f(ya) + 4.0 * f(ym) + f(yb))
    err = ((b - a) ** 5 / (2880.0 * n ** 4)) * deriv4_bound
    return total + Interval(-err, err), err
