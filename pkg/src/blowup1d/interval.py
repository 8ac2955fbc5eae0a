"""Interval arithmetic with outward rounding.

Every rigorous value in the package is an :class:`Interval`.  Endpoints are
doubles; each computed endpoint is widened to the adjacent representable
float (one step for exactly-rounded IEEE arithmetic, two steps for libm
calls, which are only near-correctly rounded).  Hot loops use
:class:`IntervalArray`, the same arithmetic applied to numpy endpoint
arrays; a scalar Interval is exactly the length-one case, so grids and
pointwise calls produce identical enclosures.
"""

import math

import numpy as np

from .errors import DomainError, IntervalError

_INF = float("inf")

# extra widening (in float steps) applied to libm-based functions, whose
# results may be up to ~1 ulp off where +,-,*,/ are exactly rounded
LIBM_SLOP = 2


def _down(x):
    return np.nextafter(x, -_INF)


def _up(x):
    return np.nextafter(x, _INF)


def _down_n(x, n):
    for _ in range(n):
        x = np.nextafter(x, -_INF)
    return x


def _up_n(x, n):
    for _ in range(n):
        x = np.nextafter(x, _INF)
    return x


def _mul_candidates(al, ah, bl, bh):
    """The four endpoint products with the 0*inf convention 0*inf = 0."""
    prods = [al * bl, al * bh, ah * bl, ah * bh]
    return [0.0 if math.isnan(p) else p for p in prods]


class Interval:
    """Closed interval [lo, hi] with outward-rounded arithmetic.

    Immutable; all operations are pure and return new intervals that
    contain the exact real result for any points of the operands.
    """

    __slots__ = ("lo", "hi")
    __array_ufunc__ = None  # numpy must defer to the reflected operators

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        lo = float(lo)
        hi = float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise IntervalError("NaN endpoint")
        if lo > hi:
            raise IntervalError(f"lo > hi: [{lo!r}, {hi!r}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, *_):
        raise AttributeError("Interval is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def point(cls, x):
        return cls(x, x)

    @classmethod
    def entire(cls):
        return cls(-_INF, _INF)

    @classmethod
    def ratio(cls, p, q):
        """Enclosure of the exact rational p/q (integers)."""
        v = p / q
        return cls(_down(v), _up(v))

    # -- predicates / accessors ---------------------------------------

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = self.lo if math.isfinite(self.lo) else self.hi
        return m

    @property
    def mag(self):
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x):
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def contains_zero(self):
        return self.lo <= 0.0 <= self.hi

    def is_finite(self):
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"

    def __eq__(self, other):
        return (
            isinstance(other, Interval)
            and self.lo == other.lo
            and self.hi == other.hi
        )

    def __hash__(self):
        return hash((self.lo, self.hi))

    # -- arithmetic ----------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, Interval):
            return x
        return Interval(float(x), float(x))

    @staticmethod
    def _defers(other):
        # numpy arrays / IntervalArray handle mixed arithmetic themselves
        return isinstance(other, (IntervalArray, np.ndarray))

    def __add__(self, other):
        if Interval._defers(other):
            return NotImplemented
        o = Interval._coerce(other)
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        if Interval._defers(other):
            return NotImplemented
        o = Interval._coerce(other)
        return Interval(_down(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, other):
        return Interval._coerce(other) - self

    def __mul__(self, other):
        if Interval._defers(other):
            return NotImplemented
        o = Interval._coerce(other)
        cands = _mul_candidates(self.lo, self.hi, o.lo, o.hi)
        m, mx = min(cands), max(cands)
        # a zero product from a zero endpoint is exact; widening it
        # creates spurious signed dust that explodes against infinities
        exact0 = 0.0 in (self.lo, self.hi, o.lo, o.hi)
        lo = m if (m == 0.0 and exact0) else _down(m)
        hi = mx if (mx == 0.0 and exact0) else _up(mx)
        return Interval(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if Interval._defers(other):
            return NotImplemented
        o = Interval._coerce(other)
        if o.lo <= 0.0 <= o.hi:
            # divisor straddles zero: conservative unbounded result
            return Interval.entire()
        quots = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi]
        if any(math.isnan(q) for q in quots):
            # inf/inf with unbounded operands
            return Interval.entire()
        return Interval(_down(min(quots)), _up(max(quots)))

    def __rtruediv__(self, other):
        return Interval._coerce(other) / self

    # -- elementary functions ------------------------------------------

    def abs(self):
        if self.lo >= 0.0:
            return self
        if self.hi <= 0.0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def sqrt(self):
        if self.lo < 0.0:
            raise DomainError(f"sqrt of {self}")
        return Interval(
            max(0.0, _down_n(math.sqrt(self.lo), LIBM_SLOP)),
            _up_n(math.sqrt(self.hi), LIBM_SLOP),
        )

    def log(self):
        if self.lo <= 0.0:
            raise DomainError(f"log of {self}")
        return Interval(
            _down_n(math.log(self.lo), LIBM_SLOP),
            _up_n(math.log(self.hi), LIBM_SLOP),
        )

    def exp(self):
        try:
            lo = math.exp(self.lo)
        except OverflowError:
            lo = _INF
        try:
            hi = math.exp(self.hi)
        except OverflowError:
            hi = _INF
        return Interval(max(0.0, _down_n(lo, LIBM_SLOP)), _up_n(hi, LIBM_SLOP))

    def _pow_int(self, n):
        if n == 0:
            return Interval(1.0, 1.0)
        if n < 0:
            return Interval(1.0, 1.0) / self._pow_int(-n)
        lo, hi = self.lo, self.hi
        if n % 2 == 0:
            if hi <= 0.0:
                lo, hi = -hi, -lo
            elif lo < 0.0:
                # even power of a zero-straddling interval
                return Interval(0.0, _up_n(_pow_sat(self.mag, n), LIBM_SLOP))
        return Interval(
            _down_n(_pow_sat(lo, n), LIBM_SLOP),
            _up_n(_pow_sat(hi, n), LIBM_SLOP),
        )

    def __pow__(self, a):
        if isinstance(a, Interval):
            raise DomainError("interval exponents are not supported")
        if isinstance(a, int) or (isinstance(a, float) and a.is_integer()):
            return self._pow_int(int(a))
        a = float(a)
        if self.lo < 0.0:
            raise DomainError(f"fractional power of {self}")
        if self.lo == 0.0:
            if a < 0.0:
                return Interval(
                    0.0 if self.hi == 0.0 else _down_n(self.hi ** a, LIBM_SLOP),
                    _INF,
                )
            hi_end = _up_n(self.hi ** a, LIBM_SLOP) if self.hi > 0 else 0.0
            return Interval(0.0, hi_end)
        lo_v = self.lo ** a
        hi_v = self.hi ** a
        if a < 0.0:
            lo_v, hi_v = hi_v, lo_v
        return Interval(
            max(0.0, _down_n(lo_v, LIBM_SLOP)), _up_n(hi_v, LIBM_SLOP)
        )

    # -- lattice operations --------------------------------------------

    def hull(self, other):
        o = Interval._coerce(other)
        return Interval(min(self.lo, o.lo), max(self.hi, o.hi))

    def intersect(self, other):
        o = Interval._coerce(other)
        lo = max(self.lo, o.lo)
        hi = min(self.hi, o.hi)
        if lo > hi:
            raise IntervalError(f"disjoint intersect: {self} and {o}")
        return Interval(lo, hi)

    def min(self, other):
        o = Interval._coerce(other)
        return Interval(min(self.lo, o.lo), min(self.hi, o.hi))

    def max(self, other):
        o = Interval._coerce(other)
        return Interval(max(self.lo, o.lo), max(self.hi, o.hi))

    def positive_part(self):
        return Interval(max(self.lo, 0.0), max(self.hi, 0.0))


def hull_all(intervals):
    it = iter(intervals)
    acc = next(it)
    for v in it:
        acc = acc.hull(v)
    return acc


def min_all(intervals):
    it = iter(intervals)
    acc = next(it)
    for v in it:
        acc = acc.min(v)
    return acc


class IntervalArray:
    """Elementwise interval arithmetic on numpy endpoint arrays.

    Uses the same outward rounding as :class:`Interval`; a length-one
    IntervalArray computes bit-identical endpoints to the scalar class
    for +, -, *, / and the monotone libm functions.
    """

    __slots__ = ("lo", "hi")
    __array_ufunc__ = None  # numpy must defer to the reflected operators

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape:
            raise IntervalError("endpoint shape mismatch")

    @classmethod
    def exact(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x.copy(), x.copy())

    @classmethod
    def full(cls, shape, iv):
        return cls(np.full(shape, iv.lo), np.full(shape, iv.hi))

    @classmethod
    def from_intervals(cls, ivs):
        return cls(
            np.array([v.lo for v in ivs]), np.array([v.hi for v in ivs])
        )

    def __len__(self):
        return self.lo.shape[0]

    @property
    def shape(self):
        return self.lo.shape

    @property
    def width(self):
        return self.hi - self.lo

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return Interval(self.lo[idx], self.hi[idx])
        return IntervalArray(self.lo[idx], self.hi[idx])

    def item(self, idx=0):
        return Interval(self.lo[idx], self.hi[idx])

    def to_intervals(self):
        return [Interval(l, h) for l, h in zip(self.lo, self.hi)]

    @staticmethod
    def _coerce(x):
        if isinstance(x, IntervalArray):
            return x
        if isinstance(x, Interval):
            return IntervalArray(np.asarray(x.lo), np.asarray(x.hi))
        x = np.asarray(x, dtype=float)
        return IntervalArray(x, x)

    def __add__(self, other):
        o = IntervalArray._coerce(other)
        return IntervalArray(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self):
        return IntervalArray(-self.hi, -self.lo)

    def __sub__(self, other):
        o = IntervalArray._coerce(other)
        return IntervalArray(_down(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, other):
        return IntervalArray._coerce(other) - self

    @staticmethod
    def _clean(p):
        # 0*inf produces NaN; the exact product set is {0}
        if np.isnan(p).any():
            p = np.where(np.isnan(p), 0.0, p)
        return p

    def __mul__(self, other):
        o = IntervalArray._coerce(other)
        p1 = self._clean(self.lo * o.lo)
        p2 = self._clean(self.lo * o.hi)
        p3 = self._clean(self.hi * o.lo)
        p4 = self._clean(self.hi * o.hi)
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        exact0 = (self.lo == 0.0) | (self.hi == 0.0) \
            | (o.lo == 0.0) | (o.hi == 0.0)
        return IntervalArray(
            np.where(exact0 & (lo == 0.0), 0.0, _down(lo)),
            np.where(exact0 & (hi == 0.0), 0.0, _up(hi)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = IntervalArray._coerce(other)
        with np.errstate(divide="ignore", invalid="ignore"):
            p1 = self.lo / o.lo
            p2 = self.lo / o.hi
            p3 = self.hi / o.lo
            p4 = self.hi / o.hi
            bad = (o.lo <= 0.0) & (o.hi >= 0.0)
            bad |= (
                np.isnan(p1) | np.isnan(p2) | np.isnan(p3) | np.isnan(p4)
            )
            lo = _down(np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)))
            hi = _up(np.maximum(np.maximum(p1, p2), np.maximum(p3, p4)))
        if bad.any():
            lo = np.where(bad, -_INF, lo)
            hi = np.where(bad, _INF, hi)
        return IntervalArray(lo, hi)

    def __rtruediv__(self, other):
        return IntervalArray._coerce(other) / self

    def abs(self):
        lo = np.where(
            self.lo >= 0.0, self.lo, np.where(self.hi <= 0.0, -self.hi, 0.0)
        )
        hi = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return IntervalArray(lo, hi)

    def sqrt(self):
        if (self.lo < 0.0).any():
            raise DomainError("sqrt of negative interval entries")
        return IntervalArray(
            np.maximum(0.0, _down_n(np.sqrt(self.lo), LIBM_SLOP)),
            _up_n(np.sqrt(self.hi), LIBM_SLOP),
        )

    def log(self):
        if (self.lo <= 0.0).any():
            raise DomainError("log of non-positive interval entries")
        return IntervalArray(
            _down_n(np.log(self.lo), LIBM_SLOP),
            _up_n(np.log(self.hi), LIBM_SLOP),
        )

    def exp(self):
        with np.errstate(over="ignore"):
            lo = np.exp(self.lo)
            hi = np.exp(self.hi)
        return IntervalArray(
            np.maximum(0.0, _down_n(lo, LIBM_SLOP)), _up_n(hi, LIBM_SLOP)
        )

    def pow_float(self, a):
        """x**a for a fixed real exponent; entries must be >= 0."""
        a = float(a)
        if a.is_integer() and a >= 0 and int(a) % 2 == 1:
            n = int(a)
            return IntervalArray(
                _down_n(self.lo ** n, LIBM_SLOP), _up_n(self.hi ** n, LIBM_SLOP)
            )
        if (self.lo < 0.0).any():
            raise DomainError("fractional power of negative entries")
        with np.errstate(divide="ignore", over="ignore"):
            plo = self.lo ** a
            phi = self.hi ** a
        if a < 0.0:
            plo, phi = phi, plo
        return IntervalArray(
            np.maximum(0.0, _down_n(plo, LIBM_SLOP)), _up_n(phi, LIBM_SLOP)
        )

    def __pow__(self, a):
        return self.pow_float(a)

    def hull(self, other):
        o = IntervalArray._coerce(other)
        return IntervalArray(
            np.minimum(self.lo, o.lo), np.maximum(self.hi, o.hi)
        )

    def min(self, other):
        o = IntervalArray._coerce(other)
        return IntervalArray(
            np.minimum(self.lo, o.lo), np.minimum(self.hi, o.hi)
        )

    def max(self, other):
        o = IntervalArray._coerce(other)
        return IntervalArray(
            np.maximum(self.lo, o.lo), np.maximum(self.hi, o.hi)
        )

    def positive_part(self):
        return IntervalArray(
            np.maximum(self.lo, 0.0), np.maximum(self.hi, 0.0)
        )

    def sum(self):
        """Enclosure of the exact sum of all entries."""
        lo = 0.0
        for v in self.lo:
            lo = _down(lo + v)
        hi = 0.0
        for v in self.hi:
            hi = _up(hi + v)
        return Interval(lo, hi)

    def sum_fast(self):
        """Sum using numpy reduce plus a standard backward-error cover.

        The float sum of n terms errs by at most 1.06*(n-1)*u*sum|x_i|
        (u = half an ulp) once (n-1)*u < 0.06, so padding by that much
        keeps the exact sum enclosed without an O(n) Python loop.
        """
        n = max(self.lo.size, 1)
        slack = _reduce_slack(self.lo, self.hi, n)
        lo = _down(float(np.add.reduce(self.lo)) - slack)
        hi = _up(float(np.add.reduce(self.hi)) + slack)
        return Interval(lo, hi)

    def cumsum(self):
        """Enclosure of all prefix sums (conservative endpoint walk)."""
        lo = np.empty_like(self.lo)
        hi = np.empty_like(self.hi)
        al = 0.0
        ah = 0.0
        for i, (l, h) in enumerate(zip(self.lo, self.hi)):
            al = _down(al + l)
            ah = _up(ah + h)
            lo[i] = al
            hi[i] = ah
        return IntervalArray(lo, hi)


def _pow_sat(x, n):
    try:
        return x ** n
    except OverflowError:
        neg = x < 0 and n % 2 == 1
        return -_INF if neg else _INF


def _reduce_slack(lo, hi, n):
    s = float(np.add.reduce(np.abs(lo)) + np.add.reduce(np.abs(hi)))
    if not math.isfinite(s):
        return _INF
    # 1.2 covers the 1.06 constant and the error of computing s itself
    return 1.2 * n * 2.220446049250313e-16 * s


ONE_THIRD = Interval.ratio(1, 3)
TWO_THIRDS = Interval.ratio(2, 3)
