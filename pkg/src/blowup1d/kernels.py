"""The five symmetrized kernels of the nonlocal model.

K1/K2 generate the modified stream function and its derivative; the
J-variants drop the singular moment below the diagonal and are regular
near y = 0; KDelta = K2 - K1/x controls psi_x - psi/x.  Everything is
parameterized by the Holder exponent alpha in (0, 1/3].
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParamError
from .interval import Interval, IntervalArray

ALPHA_BAR = 1.0 / 3.0


class KernelId(enum.Enum):
    K1 = "K1"
    K2 = "K2"
    K1J = "K1J"
    K2J = "K2J"
    KDelta = "KDelta"


_J_VARIANT = {KernelId.K1: KernelId.K1J, KernelId.K2: KernelId.K2J}


@dataclass(frozen=True)
class AlphaParam:
    """Holder exponent; eps = 1/3 - alpha is derived, never stored."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= ALPHA_BAR:
            raise ParamError(f"alpha must be in (0, 1/3], got {self.alpha}")

    @classmethod
    def critical(cls):
        return cls(ALPHA_BAR)

    @classmethod
    def from_eps(cls, eps):
        return cls(ALPHA_BAR - eps)

    @property
    def eps(self):
        return ALPHA_BAR - self.alpha


def falling_product(a, i):
    """prod_{0 <= j < i} (a - j); the Taylor factor of power functions."""
    out = 1.0
    for j in range(i):
        out = out * (a - j)
    return out


def _isarr(v):
    return isinstance(v, (IntervalArray, np.ndarray))


def _pow(v, a):
    if isinstance(v, Interval):
        return v ** a
    if isinstance(v, IntervalArray):
        return v.pow_float(a)
    return v ** a


# ---------------------------------------------------------------------------
# pointwise evaluation (interval)


def _sgn_abs_pow(d, a):
    """Enclosure of sgn(d)*|d|**a for an interval d; a < 0 allowed."""
    if d.lo > 0.0:
        return d ** a
    if d.hi < 0.0:
        return -((-d) ** a)
    return Interval.entire()


def kernel_eval(kid, alpha, x, y):
    """Interval enclosure of K(x, y); unbounded when the enclosure hits
    a non-integrable singularity (diagonal for K2-type, origin moment).
    """
    a = alpha.alpha
    x = x if isinstance(x, Interval) else Interval.point(x)
    y = y if isinstance(y, Interval) else Interval.point(y)
    if x.lo < 0.0 or y.lo < 0.0:
        raise DomainError("kernels are evaluated on the positive quadrant")
    if kid is KernelId.KDelta:
        k2 = kernel_eval(KernelId.K2, alpha, x, y)
        k1 = kernel_eval(KernelId.K1, alpha, x, y)
        return k2 - k1 / x
    u = (x + y) ** a if kid in (KernelId.K1, KernelId.K1J) else (x + y) ** (a - 1.0)
    d = x - y
    if kid in (KernelId.K1, KernelId.K1J):
        main = u - d.abs() ** a
        sing = 2.0 * a * x * _pow_neg_guard(y, a - 1.0)
    else:
        main = a * u - a * _sgn_abs_pow(d, a - 1.0)
        if not main.is_finite():
            return Interval.entire()
        sing = 2.0 * a * _pow_neg_guard(y, a - 1.0)
    if kid in (KernelId.K1, KernelId.K2):
        return main - sing
    # J-variants: the moment term only acts on y >= x
    if y.lo >= x.hi:
        return main - sing
    if y.hi <= x.lo:
        return main
    return (main - sing).hull(main)


def _pow_neg_guard(y, p):
    """y**p for p < 0 on a nonnegative interval possibly touching 0."""
    if y.lo == 0.0:
        if y.hi == 0.0:
            return Interval.entire()
        tail = Interval.point(y.hi) ** p
        return Interval(tail.lo, float("inf"))
    return y ** p


def kernel_one(kid, alpha, z):
    """K(1, z) as an interval; z an Interval on one side of 1."""
    return kernel_eval(kid, alpha, Interval.point(1.0), z)


# ---------------------------------------------------------------------------
# series evaluation in the separated regimes

SERIES_RATIO = 4.0  # single crossover ratio used across the pipeline
DEFAULT_TERMS = 20


def _series(coeff_fn, ring_one, t, k, parity_start, step=2):
    total = ring_one * 0.0
    tp = _pow(t, parity_start)
    t2 = t * t
    i = parity_start
    while i <= k:
        total = total + coeff_fn(i) * tp
        tp = tp * t2
        i += step
    return total


def kernel_series_far_source(kid, alpha, x, y, terms=DEFAULT_TERMS):
    """K(x, y) for y well above x, via the odd/even expansion in x/y.

    Works on Interval/IntervalArray/float operands; requires sup(x/y) < 1/2.
    The Taylor remainder is added as a symmetric error band.
    """
    a = alpha.alpha
    s = x / y
    hi_s = _sup(s)
    if hi_s >= 0.5:
        raise ParamError("far-source series needs y > 2x")
    k = terms
    if kid in (KernelId.K1, KernelId.K1J):
        main = _series(
            lambda i: 2.0 * falling_product(a, i) / math.factorial(i),
            _one_like(s), s, k, 3)
        rem = (2.0 * abs(falling_product(a, k + 1)) / math.factorial(k + 1)) \
            * _pow(s, k + 1) * _pow(1.0 - hi_s, a - k - 1)
        val = (main + _sym(rem)) * _pow(y, a)
    elif kid in (KernelId.K2, KernelId.K2J):
        main = _series(
            lambda i: 2.0 * falling_product(a - 1.0, i) / math.factorial(i),
            _one_like(s), s, k, 2)
        rem = (2.0 * abs(falling_product(a - 1.0, k + 1)) / math.factorial(k + 1)) \
            * _pow(s, k + 1) * _pow(1.0 - hi_s, a - 2.0 - k)
        val = a * (main + _sym(rem)) * _pow(y, a - 1.0)
    else:
        k2 = kernel_series_far_source(KernelId.K2, alpha, x, y, terms)
        k1 = kernel_series_far_source(KernelId.K1, alpha, x, y, terms)
        return k2 - k1 / x
    return val


def kernel_series_near_source(kid, alpha, x, y, terms=DEFAULT_TERMS):
    """K(x, y) (or the J-variant) for y well below x, expansion in y/x.

    sup(y/x) < 1/2 required.  For K1/K2 the singular moment term is
    subtracted exactly after the series evaluates the J-part.
    """
    a = alpha.alpha
    z = y / x
    hi_z = _sup(z)
    if hi_z >= 0.5:
        raise ParamError("near-source series needs x > 2y")
    k = terms
    if kid in (KernelId.K1, KernelId.K1J, KernelId.KDelta, KernelId.K2,
               KernelId.K2J):
        f1 = None
        f2 = None
        if kid in (KernelId.K1, KernelId.K1J, KernelId.KDelta):
            main = _series(
                lambda i: 2.0 * falling_product(a, i) / math.factorial(i),
                _one_like(z), z, k, 1)
            rem = (2.0 * abs(falling_product(a, k + 1)) / math.factorial(k + 1)) \
                * _pow(z, k + 1) * _pow(1.0 - hi_z, a - k - 1)
            f1 = (main + _sym(rem)) * _pow(x, a)
        if kid in (KernelId.K2, KernelId.K2J, KernelId.KDelta):
            main = _series(
                lambda i: 2.0 * a * falling_product(a - 1.0, i)
                / math.factorial(i),
                _one_like(z), z, k, 1)
            rem = (2.0 * a * abs(falling_product(a - 1.0, k + 1))
                   / math.factorial(k + 1)) \
                * _pow(z, k + 1) * _pow(1.0 - hi_z, a - k - 2)
            f2 = (main + _sym(rem)) * _pow(x, a - 1.0)
        if kid is KernelId.K1J:
            return f1
        if kid is KernelId.K2J:
            return f2
        if kid is KernelId.KDelta:
            return f2 - f1 / x
        sing = 2.0 * a * _pow(y, a - 1.0)
        if kid is KernelId.K1:
            return f1 - sing * x
        return f2 - sing
    raise ParamError(f"unsupported kernel {kid}")


def _one_like(v):
    if isinstance(v, Interval):
        return Interval(1.0, 1.0)
    if isinstance(v, IntervalArray):
        return IntervalArray.exact(np.ones_like(v.lo))
    if isinstance(v, np.ndarray):
        return np.ones_like(v)
    return 1.0


def _sym(rem):
    """Symmetric error band [-r, r] from a nonnegative bound."""
    if isinstance(rem, Interval):
        return Interval(-rem.hi, rem.hi)
    if isinstance(rem, IntervalArray):
        return IntervalArray(-rem.hi, rem.hi)
    return 0.0  # float mode: remainder below float noise by construction


def _sup(v):
    if isinstance(v, Interval):
        return v.hi
    if isinstance(v, IntervalArray):
        return float(np.max(v.hi))
    if isinstance(v, np.ndarray):
        return float(np.max(v))
    return float(v)


def kernel_eval_safe(kid, alpha, x, y, terms=DEFAULT_TERMS):
    """Enclosure via series when x, y are separated, direct otherwise."""
    xi = x if isinstance(x, Interval) else Interval.point(x)
    yi = y if isinstance(y, Interval) else Interval.point(y)
    if xi.hi > 0 and yi.lo >= SERIES_RATIO * xi.hi:
        return kernel_series_far_source(kid, alpha, xi, yi, terms)
    if yi.hi >= 0 and xi.lo >= SERIES_RATIO * yi.hi and yi.hi > 0:
        return kernel_series_near_source(kid, alpha, xi, yi, terms)
    return kernel_eval(kid, alpha, xi, yi)


# ---------------------------------------------------------------------------
# derivative bounds in the separated regimes


@dataclass(frozen=True)
class DerivBound:
    """|d^k/dy^k K(x, y)| <= coeff * x**x_pow * y**y_pow in the regime."""

    coeff: float
    x_pow: float
    y_pow: float

    def at(self, x, y):
        return self.coeff * x ** self.x_pow * y ** self.y_pow


def kernel_deriv_bound(kid, regime, r, k, alpha=None):
    """Explicit constants bounding y-derivatives of the kernels.

    regime 'y_over_rx': y > r*x (kernel == J-variant there);
    regime 'x_over_ry': x > r*y, J-variants only.
    """
    if r < 2:
        raise ParamError("separation ratio must be >= 2")
    a = (alpha or AlphaParam.critical()).alpha
    fp3 = abs(falling_product(a, 3))
    if regime == "y_over_rx":
        base = abs(falling_product(a - 3.0, k)) * fp3 * (1 - 1 / r) ** (a - 3 - k)
        c1 = base / 3.0
        c2 = base
        if kid in (KernelId.K1, KernelId.K1J):
            return DerivBound(c1, 3.0, a - 3 - k)
        if kid in (KernelId.K2, KernelId.K2J):
            return DerivBound(c2, 2.0, a - 3 - k)
        if kid is KernelId.KDelta:
            return DerivBound(c1 + c2, 2.0, a - 3 - k)
    elif regime == "x_over_ry":
        if kid is KernelId.K1J:
            c = 2 * abs(falling_product(a, k)) * (1 - 1 / r) ** (a - k)
            return DerivBound(c, a - k, 0.0)
        if kid is KernelId.K2J:
            c = 2 * a * abs(falling_product(a - 1.0, k)) \
                * (1 - 1 / r) ** (a - k - 1)
            return DerivBound(c, a - 1 - k, 0.0)
        raise ParamError("near-source bounds exist for J-variants only")
    else:
        raise ParamError(f"unknown regime {regime!r}")
    raise ParamError(f"unsupported kernel {kid}")


def kernel_linear_bound(kid, r, alpha=None):
    """|K(x,y)| <= C * x**p * (y/x) for x > r*y (value-level, k = 0)."""
    a = (alpha or AlphaParam.critical()).alpha
    c1 = 2 * a * (1 - 1 / r) ** (a - 1)
    c2 = 2 * a * (1 - a) * (1 - 1 / r) ** (a - 2)
    if kid is KernelId.K1J:
        return DerivBound(c1, a, 0.0)  # times z = y/x
    if kid is KernelId.K2J:
        return DerivBound(c2, a - 1.0, 0.0)
    if kid is KernelId.KDelta:
        return DerivBound(c1 + c2, a - 1.0, 0.0)
    raise ParamError("linear bounds exist for regularized kernels only")


# ---------------------------------------------------------------------------
# sign certificates and antiderivatives of z -> K(1, z)

SIGN_LEFT = {
    KernelId.K1J: 1,
    KernelId.K2J: -1,
    KernelId.K2: -1,
    KernelId.KDelta: -1,
    KernelId.K1: 0,  # mixed sign below the diagonal
}
SIGN_RIGHT = {
    KernelId.K1: 1,
    KernelId.K2: 1,
    KernelId.K1J: 1,
    KernelId.K2J: 1,
    KernelId.KDelta: 1,
}


def kernel_sign(kid, side):
    """+1/-1 fixed sign of K(1, z) on side 'left' (z<1) or 'right' (z>1);
    0 when there is no certificate."""
    return (SIGN_LEFT if side == "left" else SIGN_RIGHT)[kid]


def kernel_antiderivative(kid, alpha, z, side):
    """Antiderivative of z -> K(1, z) on the given side of z = 1.

    Accepts Interval or IntervalArray z; evaluated per side so |1 - z|
    never straddles zero.
    """
    a = alpha.alpha
    one = _one_like(z)
    zp1 = z + 1.0
    if side == "left":
        zm = one - z
    else:
        zm = z - one
    a1 = a + 1.0
    if kid is KernelId.K1J:
        if side == "left":
            return (_pow(zp1, a1) + _pow(zm, a1)) * (1.0 / a1)
        return (_pow(zp1, a1) - _pow(zm, a1)) * (1.0 / a1) - 2.0 * _pow(z, a)
    if kid is KernelId.K2J:
        if side == "left":
            return _pow(zp1, a) + _pow(zm, a)
        return _pow(zp1, a) + _pow(zm, a) - 2.0 * _pow(z, a)
    if kid is KernelId.K2:
        return _pow(zp1, a) + _pow(zm, a) - 2.0 * _pow(z, a)
    if kid is KernelId.KDelta:
        k2j = kernel_antiderivative(KernelId.K2J, alpha, z, side)
        k1j = kernel_antiderivative(KernelId.K1J, alpha, z, side)
        return k2j - k1j
    if kid is KernelId.K1 and side == "right":
        return kernel_antiderivative(KernelId.K1J, alpha, z, side)
    raise ParamError(f"no antiderivative certificate for {kid} on {side}")


# ---------------------------------------------------------------------------
# float fast path (non-certified; used by the time stepper and oracles)


def kernel_point(kid, alpha, x, y, terms=DEFAULT_TERMS):
    """Accurate float evaluation with automatic regime switching."""
    a = alpha.alpha
    if x < 0 or y < 0:
        raise DomainError("kernels live on the positive quadrant")
    if x == 0.0:
        return 0.0
    if y > SERIES_RATIO * x:
        return kernel_series_far_source(kid, alpha, x, y, terms)
    if y > 0 and x > SERIES_RATIO * y:
        return kernel_series_near_source(kid, alpha, x, y, terms)
    if kid is KernelId.KDelta:
        return (kernel_point(KernelId.K2, alpha, x, y, terms)
                - kernel_point(KernelId.K1, alpha, x, y, terms) / x)
    u = x + y
    d = x - y
    if kid in (KernelId.K1, KernelId.K1J):
        val = u ** a - abs(d) ** a
        if kid is KernelId.K1 or y >= x:
            if y == 0.0:
                return 0.0
            val -= 2 * a * x * y ** (a - 1.0)
        return val
    if d == 0.0:
        raise DomainError("K2-type kernels blow up on the diagonal")
    val = a * u ** (a - 1.0) - a * math.copysign(abs(d) ** (a - 1.0), d)
    if kid is KernelId.K2 or y >= x:
        if y == 0.0:
            raise DomainError("K2 moment term singular at y = 0")
        val -= 2 * a * y ** (a - 1.0)
    return val
