"""Piecewise enclosure machinery, weights, and sharp kernel constants.

Everything the verification step needs to turn pointwise certified
values into rigorous statements over intervals: interpolation-based
enclosures, signed/absolute rigorous integrals built on closed-form
kernel antiderivatives, the weighted-norm apparatus, and the sharp
constants that price nonlocal operators against power weights.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergentConstant,
    DomainError,
    MissingConstant,
    ParamError,
    RegimeError,
    SignViolation,
)
from .interval import Interval, IntervalArray
from .kernels import (
    ALPHA_BAR,
    AlphaParam,
    KernelId,
    falling_product,
    kernel_deriv_bound,
    kernel_linear_bound,
)

INF = float("inf")

KIND_PSI_OVER_X_0 = "psi_over_x_0"
KIND_PSI_OVER_X_J = "psi_over_x_J"
KIND_PSI_X_0 = "psi_x_0"
KIND_PSI_X_J = "psi_x_J"
KIND_DELTA_0 = "delta_0"
ALL_KINDS = (KIND_PSI_OVER_X_0, KIND_PSI_OVER_X_J, KIND_PSI_X_0,
             KIND_PSI_X_J, KIND_DELTA_0)

_KIND_KERNEL = {
    KIND_PSI_OVER_X_0: KernelId.K1,
    KIND_PSI_OVER_X_J: KernelId.K1J,
    KIND_PSI_X_0: KernelId.K2,
    KIND_PSI_X_J: KernelId.K2J,
    KIND_DELTA_0: KernelId.KDelta,
}
_ZERO_KINDS = (KIND_PSI_OVER_X_0, KIND_PSI_X_0)


# ---------------------------------------------------------------------------
# closed-form kernel term representation: K(1, z) per side of z = 1 is a
# combination of c * base(z)**p with base in {1+z, 1-z, z-1, z}

_B_1P = "1+z"
_B_1M = "1-z"
_B_M1 = "z-1"
_B_Z = "z"


def kernel_terms(kid, alpha, side):
    a = alpha.alpha
    if kid is KernelId.K1J:
        t = [(1.0, _B_1P, a), (-1.0, _B_1M if side == "left" else _B_M1, a)]
        if side == "right":
            t.append((-2.0 * a, _B_Z, a - 1.0))
        return t
    if kid is KernelId.K2J:
        t = [(a, _B_1P, a - 1.0)]
        if side == "left":
            t.append((-a, _B_1M, a - 1.0))
        else:
            t.append((a, _B_M1, a - 1.0))
            t.append((-2.0 * a, _B_Z, a - 1.0))
        return t
    if kid is KernelId.K1:
        t = kernel_terms(KernelId.K1J, alpha, side)
        if side == "left":
            t = t + [(-2.0 * a, _B_Z, a - 1.0)]
        return t
    if kid is KernelId.K2:
        t = kernel_terms(KernelId.K2J, alpha, side)
        if side == "left":
            t = t + [(-2.0 * a, _B_Z, a - 1.0)]
        return t
    if kid is KernelId.KDelta:
        k2 = kernel_terms(KernelId.K2J, alpha, side)
        k1 = kernel_terms(KernelId.K1J, alpha, side)
        return k2 + [(-c, b, p) for (c, b, p) in k1]
    raise ParamError(f"no term representation for {kid}")


def _term_eval(term, z, order=0):
    c, base, p = term
    cc = c * falling_product(p, order)
    if base == _B_1P:
        return cc * _pw(1.0 + z, p - order)
    if base == _B_1M:
        # 1-z >= 0 on the left side; rounding may graze below zero
        return cc * ((-1.0) ** order) * _pw(_pos(1.0 - z), p - order)
    if base == _B_M1:
        return cc * _pw(_pos(z - 1.0), p - order)
    return cc * _pw(z, p - order)


def _pos(v):
    return v.positive_part() if isinstance(v, (Interval, IntervalArray)) \
        else max(v, 0.0)


def _term_antideriv(term):
    c, base, p = term
    if base == _B_1M:
        return (-c / (p + 1.0), base, p + 1.0)
    return (c / (p + 1.0), base, p + 1.0)


def _pw(v, p):
    if isinstance(v, Interval):
        return v ** p
    if isinstance(v, IntervalArray):
        return v.pow_float(p)
    return v ** p


def terms_eval(terms, z, order=0):
    acc = None
    for t in terms:
        v = _term_eval(t, z, order)
        acc = v if acc is None else acc + v
    return acc


def terms_antideriv(terms):
    return [_term_antideriv(t) for t in terms]


# ---------------------------------------------------------------------------
# interpolation enclosures (the workhorse of piecewise bounds)


def interp_enclose(f_a, f_b, width, deriv1_bound=None, deriv2_bound=None):
    """Enclosure of f on a cell from endpoint enclosures plus a
    derivative sup: width^2/8 * |f''| or width/2 * |f'|, whichever is
    smaller among those supplied."""
    if deriv1_bound is None and deriv2_bound is None:
        raise DomainError("need a first- or second-derivative bound")
    errs = []
    if deriv2_bound is not None:
        errs.append(0.125 * width * width * deriv2_bound)
    if deriv1_bound is not None:
        errs.append(0.5 * width * deriv1_bound)
    e = min(errs)
    e = (Interval.point(e) * 1.0).hi  # one ulp out
    return Interval(min(f_a.lo, f_b.lo) - e, max(f_a.hi, f_b.hi) + e)


@dataclass
class PiecewiseEnclosure:
    """Per-cell enclosures of a function and derivatives over a grid.

    ``edges`` has n+1 entries; ``data[order]`` is an IntervalArray of n
    per-cell enclosures of d^order f.
    """

    edges: np.ndarray
    data: dict

    def cell(self, j, order=0):
        arr = self.data[order]
        return Interval(arr.lo[j], arr.hi[j])

    @property
    def ncells(self):
        return len(self.edges) - 1

    def hull_over(self, lo, hi, order=0):
        j0 = max(0, int(np.searchsorted(self.edges, lo, "right")) - 1)
        j1 = min(self.ncells - 1,
                 max(j0, int(np.searchsorted(self.edges, hi, "left")) - 1))
        arr = self.data[order]
        return Interval(float(np.min(arr.lo[j0:j1 + 1])),
                        float(np.max(arr.hi[j0:j1 + 1])))


# ---------------------------------------------------------------------------
# rigorous integrals


def integral_of_enclosures(edges, enclosures, mode="signed"):
    """Plain cell-sum integral: sum enclosure * width (Method-style B.1).

    ``enclosures`` is an IntervalArray of per-cell ranges.
    """
    widths = np.diff(np.asarray(edges, dtype=float))
    if (widths < 0).any():
        raise ParamError("edges must be increasing")
    vals = enclosures.abs() if mode == "absolute" else enclosures
    return (vals * IntervalArray.exact(widths)).sum_fast()


def signed_kernel_integral(terms, g_fn, edges, sign, second_order=True,
                           gpp_fn=None, gp_fn=None):
    """Integral of K(z) g(z) over [edges[0], edges[-1]] where K has the
    certified ``sign`` on the whole range and ``terms`` represent K.

    g_fn(IntervalArray) -> IntervalArray gives range enclosures; with
    second_order, g is linearized at midpoints using gp_fn/gpp_fn
    (pointwise derivative and second-derivative range).
    """
    edges = np.asarray(edges, dtype=float)
    pts = IntervalArray.exact(edges)
    anti = terms_antideriv(terms)
    a_vals = terms_eval(anti, pts)
    d_a = IntervalArray(a_vals.lo[1:], a_vals.hi[1:]) \
        - IntervalArray(a_vals.lo[:-1], a_vals.hi[:-1])
    # certificate check; the enclosure widths measure the rounding noise
    # of the (possibly cancelling) antiderivative evaluations
    wid = a_vals.width
    tol = 2.0 * (wid[:-1] + wid[1:]) + 1e-300
    if sign > 0 and (d_a.lo < -tol).any():
        raise SignViolation("antiderivative not increasing on a certified cell")
    if sign < 0 and (d_a.hi > tol).any():
        raise SignViolation("antiderivative not decreasing on a certified cell")
    cells = IntervalArray(edges[:-1], edges[1:])
    g_hull = g_fn(cells)
    first_order = g_hull * d_a
    if not second_order or gp_fn is None or gpp_fn is None:
        return first_order.sum_fast()
    mids = IntervalArray.exact(0.5 * (edges[:-1] + edges[1:]))
    gm = g_fn(mids)
    gpm = gp_fn(mids)
    # int K(z)(z - m) dz = [z A] - int A - m dA  via the second primitive
    anti2 = terms_antideriv(anti)
    a2 = terms_eval(anti2, pts)
    d_a2 = IntervalArray(a2.lo[1:], a2.hi[1:]) \
        - IntervalArray(a2.lo[:-1], a2.hi[:-1])
    za = pts * a_vals
    d_za = IntervalArray(za.lo[1:], za.hi[1:]) \
        - IntervalArray(za.lo[:-1], za.hi[:-1])
    lin = d_za - d_a2 - mids * d_a
    half = IntervalArray.exact(0.5 * np.diff(edges))
    gpp = gpp_fn(cells)
    err = (gpp.abs() * half * half * 0.5) * d_a.abs()
    second = gm * d_a + gpm * lin + IntervalArray(-err.hi, err.hi)
    # both forms enclose the cell integral; keep the tighter per cell
    # (the linearized form's rounding can dominate where g' is huge)
    met_lo = np.maximum(first_order.lo, second.lo)
    met_hi = np.minimum(first_order.hi, second.hi)
    bad = met_lo > met_hi
    if bad.any():
        narrower = first_order.width <= second.width
        met_lo = np.where(bad, np.where(narrower, first_order.lo, second.lo),
                          met_lo)
        met_hi = np.where(bad, np.where(narrower, first_order.hi, second.hi),
                          met_hi)
    return IntervalArray(met_lo, met_hi).sum_fast()


def rigorous_integral(edges, enclosures=None, mode="signed", terms=None,
                      g_fn=None, sign=None, **kw):
    """Spec-level driver: Method B.1 on plain enclosures, or the signed
    antiderivative form when kernel terms and a sign certificate are
    given."""
    if terms is not None:
        if sign in (None, 0):
            raise SignViolation("signed mode needs a sign certificate")
        return signed_kernel_integral(terms, g_fn, edges, sign, **kw)
    return integral_of_enclosures(edges, enclosures, mode=mode)


def _geom_edges(lo, hi, n):
    if lo <= 0:
        raise ParamError("geometric subdivision needs lo > 0")
    return np.exp(np.linspace(math.log(lo), math.log(hi), n + 1))


# ---------------------------------------------------------------------------
# sharp constants  c_kind(b, I) = int_I |K(1,z)| z^-b dz


def _abs_signed_part(kid, alpha, b, lo, hi, side, n_sub):
    """Integral of |K| z^-b over [lo, hi] within one side of z = 1."""
    if hi <= lo:
        return Interval(0.0, 0.0)
    terms = kernel_terms(kid, alpha, side)
    edges = _geom_edges(lo, hi, n_sub)

    def g(z):
        return z.pow_float(-b)

    def gp(z):
        return z.pow_float(-b - 1.0) * (-b)

    def gpp(z):
        return z.pow_float(-b - 2.0) * (b * (b + 1.0))

    from .kernels import kernel_sign
    sign = kernel_sign(kid, side)
    if sign != 0:
        val = signed_kernel_integral(terms, g, edges, sign,
                                     gp_fn=gp, gpp_fn=gpp)
        return val.abs()
    # no global certificate (K1 below the diagonal): cellwise hull
    cells = IntervalArray(edges[:-1], edges[1:])
    kv = terms_eval(terms, cells)
    return (kv.abs() * g(cells) * IntervalArray.exact(np.diff(edges))) \
        .sum_fast()


def sharp_constant(kind, b, cell, alpha=None, a1=0.25, n_sub=800,
                   tail_start=64.0, tail_tol=1e-8, near_tol=2e-5):
    """Certified enclosure of int_cell |K(1,z)| z^-b dz.

    The 0-kinds keep the singular moment z^(alpha-1) and diverge at the
    origin once b >= alpha.  The near-origin cut shrinks below ``a1``
    until the uncertified linear-bound piece is narrower than
    ``near_tol``.
    """
    alpha = alpha or AlphaParam.critical()
    a = alpha.alpha
    lo, hi = float(cell[0]), float(cell[1])
    if lo < 0 or hi <= lo:
        raise ParamError(f"bad cell {cell}")
    if kind not in ALL_KINDS:
        raise ParamError(f"unknown constant kind {kind}")
    kid = _KIND_KERNEL[kind]
    if kind in _ZERO_KINDS and b >= a and lo == 0.0:
        raise DivergentConstant(
            f"{kind} with b={b} diverges at the origin")
    total = Interval(0.0, 0.0)
    # near-origin piece [lo, min(a1, hi)], |K_J| <= C z
    if lo < a1 and lo < hi:
        lin_kid = KernelId.KDelta if kid is KernelId.KDelta else \
            (KernelId.K1J if kid in (KernelId.K1, KernelId.K1J)
             else KernelId.K2J)
        c4 = kernel_linear_bound(lin_kid, 4.0, alpha).coeff
        p_hi = min(a1, hi, (near_tol * (2.0 - b) / c4) ** (1.0 / (2.0 - b)))
        p_hi = max(p_hi, 1e-8)
        lin = kernel_linear_bound(lin_kid, max(1.0 / p_hi, 4.0), alpha)
        up = Interval.point(lin.coeff) * _power_int_01(1.0 - b, lo, p_hi)
        total = total + Interval(0.0, up.hi)
        if kind in _ZERO_KINDS:
            total = total + 2.0 * a * _power_int_01(a - 1.0 - b, lo, p_hi)
        a1 = p_hi
    # [a1, 1] and [1, tail_start] by certified subdivision
    m0 = max(lo, a1)
    if hi > m0 and m0 < 1.0:
        total = total + _abs_signed_part(kid, alpha, b, m0, min(hi, 1.0),
                                         "left", n_sub)
    # the antiderivative sweep cancels catastrophically at huge z, so it
    # is capped and the far remainder is priced by the kernel decay bound
    ts_cap = 65536.0
    m1 = max(lo, 1.0)
    ts = tail_start
    while ts < ts_cap:
        tail = _tail_bound(kid, alpha, b, ts)
        if hi < INF or tail.hi <= tail_tol * max(total.hi, 1.0):
            break
        ts *= 4.0
    if hi > m1 and m1 < ts:
        total = total + _abs_signed_part(kid, alpha, b, m1, min(hi, ts),
                                         "right", n_sub)
    if hi > max(ts, m1):
        start = max(ts, m1, 2.0)
        if hi < INF and hi <= ts_cap:
            total = total + _abs_signed_part(kid, alpha, b, start, hi,
                                             "right", max(64, n_sub // 4))
        else:
            head = _tail_bound(kid, alpha, b, start)
            if hi < INF:
                head = Interval(0.0, head.hi)  # over [start, hi] subset
            total = total + Interval(0.0, head.hi)
    return Interval(max(total.lo, 0.0), total.hi)


def _power_int_01(p, lo, hi):
    """int_lo^hi z^p dz on [0, 1]-ish ranges, handling p = -1."""
    il, ih = Interval.point(lo), Interval.point(hi)
    if p == -1.0:
        if lo == 0.0:
            raise DivergentConstant("logarithmically divergent at 0")
        return (ih / il).log()
    pp1 = p + 1.0
    if pp1 <= 0.0 and lo == 0.0:
        raise DivergentConstant("power divergence at 0")
    return (ih ** pp1 - il ** pp1) / pp1


def _tail_bound(kid, alpha, b, m):
    """Upper bound of int_m^inf |K(1,z)| z^-b dz for m >= 2."""
    db = kernel_deriv_bound(kid, "y_over_rx", m, 0, alpha)
    a = alpha.alpha
    denom = b + 2.0 - a
    if denom <= 0:
        raise DivergentConstant("tail diverges for this b")
    return Interval(0.0, (Interval.point(db.coeff)
                          * Interval.point(m) ** (a - 2.0 - b) / denom).hi)


DEFAULT_PARTITION = ((0.0, 1.0), (1.0, 2.0), (2.0, 10.0), (10.0, 100.0),
                     (100.0, 1e5), (1e5, INF))
DEFAULT_MU = (1.0, 4.0, 30.0, 300.0, 5000.0)
DEFAULT_B = (-1.2, -0.5, 0.0, 0.2, ALPHA_BAR)
NEARFIELD_MU = (1.0, 4.0, 30.0)
NEARFIELD_B = (-1.2, -0.5, 0.0)


@dataclass(frozen=True)
class WeightSpec:
    """Power weight phi = max mu_i^-1 |x|^{b_i}, log factor rho, and the
    positive-axis partition used for the sharp-constant sums."""

    mu: tuple = DEFAULT_MU
    b: tuple = DEFAULT_B
    partition: tuple = DEFAULT_PARTITION
    x1: float = 3708.0
    rho_exponent: float = 1.0 / 3.0

    def __post_init__(self):
        if len(self.mu) != len(self.b):
            raise ParamError("mu and b must have equal length")
        if any(m <= 0 for m in self.mu):
            raise ParamError("mu entries must be positive")
        if list(self.b) != sorted(self.b):
            raise ParamError("b must be ascending")
        if self.x1 <= 10.0:
            raise ParamError("x1 must exceed 10")
        lo = 0.0
        for (a, bnd) in self.partition:
            if a != lo:
                raise ParamError("partition cells must tile [0, inf)")
            lo = bnd
        if lo != INF:
            raise ParamError("partition must reach infinity")

    # -- pointwise weights ------------------------------------------------

    def phi(self, x):
        x = abs(x)
        return max((x ** bi) / mi for mi, bi in zip(self.mu, self.b))

    def phi_dual(self, x):
        """min_i mu_i |x|^-b_i = 1/phi; the pointwise bound on |w| rho."""
        x = abs(x)
        return min(mi * x ** (-bi) for mi, bi in zip(self.mu, self.b))

    def phi_interval(self, x_iv):
        out = None
        for mi, bi in zip(self.mu, self.b):
            v = _abs_pow(x_iv, bi) / mi
            out = v if out is None else out.max(v)
        return out

    def phi_dual_interval(self, x_iv):
        out = None
        for mi, bi in zip(self.mu, self.b):
            v = mi * _abs_pow(x_iv, -bi)
            out = v if out is None else out.min(v)
        return out

    def rho(self, x):
        if x <= self.x1:
            return 1.0
        return (math.log(x) / math.log(self.x1)) ** self.rho_exponent

    def rho_interval(self, x_iv):
        if x_iv.hi <= self.x1:
            return Interval(1.0, 1.0)
        hi_part = (Interval(max(x_iv.lo, self.x1), x_iv.hi).log()
                   / Interval.point(self.x1).log()) ** self.rho_exponent
        if x_iv.lo < self.x1:
            return hi_part.hull(Interval(1.0, 1.0))
        return hi_part

    def rho_log_deriv_interval(self, x_iv):
        """rho'/rho = 1/(3 x log x) above x1, zero below."""
        if x_iv.hi <= self.x1:
            return Interval(0.0, 0.0)
        xa = Interval(max(x_iv.lo, self.x1), x_iv.hi)
        v = Interval.point(self.rho_exponent) / (xa * xa.log())
        if x_iv.lo < self.x1:
            return v.hull(Interval(0.0, 0.0))
        return v

    def nearfield(self):
        return WeightSpec(mu=NEARFIELD_MU, b=NEARFIELD_B,
                          partition=self.partition, x1=self.x1,
                          rho_exponent=self.rho_exponent)


def _abs_pow(x_iv, p):
    ax = x_iv.abs()
    if p == 0.0:
        return Interval(1.0, 1.0)
    if ax.lo == 0.0 and p < 0.0:
        low = (Interval.point(ax.hi) ** p).lo if ax.hi > 0 else INF
        return Interval(low, INF)
    return ax ** p


class SharpConstants:
    """Table of c_kind(b, I) over the weight partition and b values."""

    def __init__(self, weights, alpha=None, n_sub=800, extra_b=()):
        self.weights = weights
        self.alpha = alpha or AlphaParam.critical()
        self.n_sub = n_sub
        self.table = {}
        bs = list(weights.b) + list(extra_b)
        for kind in ALL_KINDS:
            for b in bs:
                for cell in weights.partition:
                    key = (kind, b, cell)
                    if key in self.table:
                        continue
                    try:
                        self.table[key] = sharp_constant(
                            kind, b, cell, self.alpha, n_sub=n_sub)
                    except DivergentConstant:
                        self.table[key] = None  # recorded as infinite

    def get(self, kind, b, cell):
        try:
            val = self.table[(kind, b, cell)]
        except KeyError as exc:
            raise MissingConstant(f"no constant for {(kind, b, cell)}") \
                from exc
        if val is None:
            raise DivergentConstant(f"{kind} at b={b} on {cell}")
        return val

    def is_finite(self, kind, b, cell):
        return self.table.get((kind, b, cell)) is not None


def coeff_fn(weights, constants, kind, x_iv, alpha=None):
    """The partitioned coefficient function
    sum_I min_i mu_i c_kind(b_i, I) |x|^(alpha - b_i)."""
    alpha = alpha or AlphaParam.critical()
    a = alpha.alpha
    total = Interval(0.0, 0.0)
    for cell in weights.partition:
        best = None
        for mi, bi in zip(weights.mu, weights.b):
            if not constants.is_finite(kind, bi, cell):
                continue
            c = constants.get(kind, bi, cell)
            v = mi * c * _abs_pow(x_iv, a - bi)
            best = v if best is None else best.min(v)
        if best is None:
            raise DivergentConstant(
                f"no finite branch for {kind} on {cell}")
        total = total + best
    return total


# ---------------------------------------------------------------------------
# Method B.4 / B.5 nonlocal error bounds


def nonlocal_error_bound(kind, weights_f, constants_f, norm, x_iv,
                         alpha=None):
    """Weighted-norm nonlocal error: C_kind(mu_f, b_f, I, x) * ||f phi_f||."""
    return coeff_fn(weights_f, constants_f, kind, x_iv, alpha) * norm


def compact_support_bound(op, support_hi, l1_norm, x_iv, alpha=None,
                          min_ratio=2.0):
    """|K_J(f)(x)| <= C x^(alpha - i) ||y f||_L1 for x past the support."""
    alpha = alpha or AlphaParam.critical()
    if x_iv.lo < min_ratio * support_hi:
        raise RegimeError("evaluation point too close to the support")
    r = x_iv.lo / support_hi
    kid = {"psi": KernelId.K1J, "psi_x": KernelId.K2J,
           "delta": KernelId.KDelta}[op]
    lin = kernel_linear_bound(kid, r, alpha)
    a = alpha.alpha
    expo = a - 1.0 if op == "psi" else a - 2.0
    up = (Interval.point(lin.coeff) * _abs_pow(x_iv, expo + 1.0)
          * l1_norm).hi
    return Interval(-up, up)


# ---------------------------------------------------------------------------
# third-derivative bound for the velocity (F(x, b) machinery)


class VxxxBounder:
    """sup |d^3 psi(f)| from weighted norms of f, f', f''.

    norms: dict with keys ('f', b), ('fy', b), ('fyy', b) giving
    ||y^b f||, ||y^(1+b) f'||, ||y^(2+b) f''|| for each b in bs, plus
    'fyy_local' = sup |f''| on [0, y1].
    """

    def __init__(self, alpha, norms, bs=(0.2, ALPHA_BAR), x_low=1.0,
                 y1=2.0, n_sub=400):
        self.alpha = alpha
        self.norms = norms
        self.bs = tuple(bs)
        self.x_low = x_low
        self.y1 = y1
        a = alpha.alpha
        half = Interval.point(0.5)
        terms_l = kernel_terms(KernelId.K2J, alpha, "left")
        self.k_half = terms_eval(terms_l, half).abs()
        self.dk_half = terms_eval(terms_l, half, order=1).abs()
        d2 = terms_eval(terms_l, Interval(0.0, 0.5), order=2)
        self.sup_d2k = d2.abs().hi
        self._far = {}
        for b in self.bs:
            self._far[b] = self._far_const(b, n_sub)

    def _far_const(self, b, n_sub):
        """int_{1/2}^inf |k(1,z)| z^(-2-b) dz with the diagonal split."""
        alpha = self.alpha
        a = alpha.alpha
        out = Interval(0.0, 0.0)
        for side, lo, hi in (("left", 0.5, 1.0), ("right", 1.0, 64.0)):
            # k(1,z) = a (1+z)^(a-1) -+ a |1-z|^(a-1): no moment term
            if side == "left":
                terms = [(a, _B_1P, a - 1.0), (-a, _B_1M, a - 1.0)]
            else:
                terms = [(a, _B_1P, a - 1.0), (a, _B_M1, a - 1.0)]
            edges = _geom_edges(lo, hi, n_sub)
            sign = -1 if side == "left" else 1
            val = signed_kernel_integral(
                terms, lambda z: z.pow_float(-2.0 - b), edges, sign,
                gp_fn=lambda z: z.pow_float(-3.0 - b) * (-2.0 - b),
                gpp_fn=lambda z: z.pow_float(-4.0 - b)
                * ((2.0 + b) * (3.0 + b)))
            out = out + val.abs()
        a = alpha.alpha
        m = 64.0
        c = 2 * a * (1 - 1 / m) ** (a - 1.0)
        out = out + Interval(0.0, (Interval.point(c)
                                   * Interval.point(m) ** (a - 2.0 - b)
                                   / (2.0 + b - a)).hi)
        return out

    def _scaled(self, x_iv, b):
        a = self.alpha.alpha
        n_f = self.norms[("f", b)]
        n_fy = self.norms[("fy", b)]
        n_fyy = self.norms[("fyy", b)]
        near = (self.k_half * 2.0 ** (1.0 + b) * n_fy
                + self.dk_half * 2.0 ** b * n_f
                + Interval(0.0, self.sup_d2k) * (0.5 ** (1.0 - b) / (1.0 - b))
                * n_f)
        far = self._far[b] * n_fyy
        return _abs_pow(x_iv, a - b - 2.0) * (near + far)

    def _small_x(self):
        a = self.alpha.alpha
        b = self.bs[0]
        n_fyy = self.norms[("fyy", b)]
        loc = self.norms["fyy_local"]
        xl, y1 = self.x_low, self.y1
        tail = n_fyy * (2 * a / (2.0 + b - a)) \
            * Interval.point(1.0 - xl / y1) ** (a - 1.0) \
            * Interval.point(y1) ** (a - 2.0 - b)
        head = loc * ((2.0 - 2.0 ** a) * xl ** a
                      + max((2 * xl) ** a, 2 * (xl + y1) ** a))
        return (tail + head).abs()

    def bound(self, x_iv):
        """Enclosure of sup_{x in x_iv} |d^3 psi(f)|."""
        out = None
        for b in self.bs:
            v = self._scaled(x_iv, b).abs()
            v = Interval(0.0, v.hi)
            out = v if out is None else out.min(v)
        if x_iv.hi <= self.x_low:
            out = out.min(Interval(0.0, self._small_x().hi))
        return out


def delta_moment_signed(alpha=None, n_sub=1200, eps0=1e-7, m_hi=2e5):
    """Signed enclosure of the full-axis difference-kernel moment
    int_0^inf K_Delta(1, z) z^(-alpha) dz (the far-field matching
    constant equals minus twice alpha)."""
    alpha = alpha or AlphaParam.critical()
    a = alpha.alpha

    def g(z):
        return z.pow_float(-a)

    def gp(z):
        return z.pow_float(-a - 1.0) * (-a)

    def gpp(z):
        return z.pow_float(-a - 2.0) * (a * (a + 1.0))

    total = Interval(0.0, 0.0)
    for side, lo, hi, sign in (("left", eps0, 1.0, -1),
                               ("right", 1.0, m_hi, 1)):
        terms = kernel_terms(KernelId.KDelta, alpha, side)
        edges = _geom_edges(lo, hi, n_sub)
        total = total + signed_kernel_integral(terms, g, edges, sign,
                                               gp_fn=gp, gpp_fn=gpp)
    # head [0, eps0]: |K_Delta| <= C z
    c_lin = kernel_linear_bound(KernelId.KDelta, 1.0 / eps0, alpha).coeff
    head = (Interval.point(c_lin)
            * Interval.point(eps0) ** (2.0 - a) / (2.0 - a)).hi
    # tail beyond m_hi via the kernel decay
    tail = _tail_bound(KernelId.KDelta, alpha, a, m_hi).hi
    return total + Interval(-head - tail, head + tail)
