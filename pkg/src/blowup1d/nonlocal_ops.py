"""Certified evaluation of the nonlocal operators on B-spline sources.

For one raw spline piece the integral against each kernel is evaluated in
three regimes: quadrature with series kernel values when the source sits
far above the evaluation point, exact moment integrals when they are
comparable, and quadrature on the regularized kernels plus an exact
singular moment when the point is far above the source.  A dense matrix
of enclosures over (evaluation point, basis function) is built once and
cached.
"""

import hashlib
import json
import math

import numpy as np

from .errors import CacheMismatch, DomainError, FormatError, ParamError
from .interval import Interval, IntervalArray
from .kernels import (
    AlphaParam,
    KernelId,
    falling_product,
    kernel_deriv_bound,
)
from .mesh_basis import bspline_eval_interval
from .quadrature import (
    GQ5_ERR_FACTOR,
    GQ5_NODES,
    GQ5_WEIGHTS,
    exact_moment,
)

SEP_RATIO = 4.0  # the single case-splitting ratio of the pipeline

OP_PSI = "psi"       # modified stream function
OP_PSI_X = "psi_x"   # its derivative

_BINOM10 = [math.comb(10, i) for i in range(4)]


def _poly_terms(knots, j0, use_left_form):
    m = []
    for l in range(5):
        prod = 1.0
        for k in range(5):
            if k != l:
                prod *= knots[l] - knots[k]
        m.append(prod)
    if use_left_form:
        return [(-4.0 / m[l], float(knots[l])) for l in range(j0 + 1)]
    return [(4.0 / m[l], float(knots[l])) for l in range(j0 + 1, 5)]


class _Segment:
    __slots__ = ("a", "b", "terms", "nodes", "bs_vals", "bs_sups")

    def __init__(self, knots, j):
        self.a = max(0.0, float(knots[j]))
        self.b = float(knots[j + 1])
        mid = 0.5 * (self.a + self.b)
        self.terms = _poly_terms(knots, j, mid > knots[2])
        ia, ib = Interval.point(self.a), Interval.point(self.b)
        c = (ia + ib) * 0.5
        h = (ib - ia) * 0.5
        self.nodes = [c + h * q for q in GQ5_NODES]
        self.bs_vals = [
            bspline_eval_interval(knots, y) for y in self.nodes
        ]
        seg_iv = Interval(self.a, self.b)
        self.bs_sups = [
            bspline_eval_interval(knots, seg_iv, order=o).abs().hi
            for o in range(4)
        ]

    @property
    def width(self):
        return self.b - self.a


class RawSplineNonlocal:
    """Certified K-integrals of a single five-knot spline piece.

    ``eval(op, xs)`` returns enclosures of
    int_0^inf K_{alpha,op}(x, y) Bs(y; knots) dy at each x in xs.
    """

    def __init__(self, knots, alpha, x2, terms=20):
        self.knots = np.asarray(knots, dtype=float)
        self.alpha = alpha
        self.x2 = float(x2)
        self.k = int(terms)
        if self.k < 4 or self.k > 40:
            raise ParamError("series order must be in [4, 40]")
        self.lo_pos = max(0.0, float(self.knots[0]))
        self.hi_sup = float(self.knots[4])
        self.segs = [
            _Segment(self.knots, j)
            for j in range(4)
            if self.knots[j + 1] > 0 and self.knots[j + 1] > self.knots[j]
        ]
        self._mom = {}
        self._sing = None
        self._trunc1 = None
        self._trunc3 = None

    # -- shared pieces --------------------------------------------------

    def gq_moment(self, p, absolute=False):
        """Gauss-node moment sum_q w_q y_q**p Bs(y_q) over the support."""
        key = (p, absolute)
        if key not in self._mom:
            total = Interval(0.0, 0.0)
            for seg in self.segs:
                half = Interval.point(seg.width) * 0.5
                acc = Interval(0.0, 0.0)
                for y, bs, w in zip(seg.nodes, seg.bs_vals, GQ5_WEIGHTS):
                    v = bs.abs() if absolute else bs
                    if p == 0:
                        acc = acc + w * v
                    else:
                        acc = acc + w * (y ** p) * v
                total = total + half * acc
            self._mom[key] = total
        return self._mom[key]

    def singular_moment(self):
        """Exact int y^(alpha-1) Bs(y) dy over the positive support."""
        if self._sing is None:
            a = self.alpha.alpha
            total = Interval(0.0, 0.0)
            for seg in self.segs:
                for c, s in seg.terms:
                    total = total + c * exact_moment(
                        0.0, a - 1.0, 3, 1, s, seg.a, seg.b)
            self._sing = total
        return self._sing

    def _trunc_far(self):
        """x**3 / x**2 coefficients of the quadrature error in case 1."""
        if self._trunc1 is None:
            out = {}
            for op, kid in ((OP_PSI, KernelId.K1), (OP_PSI_X, KernelId.K2)):
                tot = Interval(0.0, 0.0)
                for seg in self.segs:
                    wpow = Interval.point(seg.width) ** 11
                    dsum = Interval(0.0, 0.0)
                    for i in range(4):
                        db = kernel_deriv_bound(kid, "y_over_rx", SEP_RATIO,
                                                10 - i, self.alpha)
                        ymin = Interval.point(seg.a)
                        dsum = dsum + (_BINOM10[i] * seg.bs_sups[i]
                                       * db.coeff) * ymin ** db.y_pow
                    tot = tot + GQ5_ERR_FACTOR * wpow * dsum
                out[op] = tot.hi
            self._trunc1 = out
        return self._trunc1

    def _trunc_near(self):
        """Coefficients of x^(alpha-10+i) terms of the case-3 error."""
        if self._trunc3 is None:
            out = {}
            for op, kid in ((OP_PSI, KernelId.K1J), (OP_PSI_X, KernelId.K2J)):
                coefs = []
                for i in range(4):
                    db = kernel_deriv_bound(kid, "x_over_ry", SEP_RATIO,
                                            10 - i, self.alpha)
                    tot = Interval(0.0, 0.0)
                    for seg in self.segs:
                        wpow = Interval.point(seg.width) ** 11
                        tot = tot + GQ5_ERR_FACTOR * wpow \
                            * (_BINOM10[i] * seg.bs_sups[i] * db.coeff)
                    coefs.append((tot.hi, db.x_pow))
                out[op] = coefs
            self._trunc3 = out
        return self._trunc3

    # -- the three regimes ----------------------------------------------

    def _case_far_source(self, op, xs):
        """All of the support sits above SEP_RATIO * max(x, x2)."""
        a = self.alpha.alpha
        X = IntervalArray.exact(xs)
        x2sq = X * X
        shrink = (1.0 - 1.0 / SEP_RATIO)
        if op == OP_PSI:
            i0, pshift, pref = 3, 0.0, 1.0
        else:
            i0, pshift, pref = 2, -1.0, a
        acc = IntervalArray.exact(np.zeros_like(xs))
        xp = X.pow_float(float(i0))
        i = i0
        while i <= self.k:
            c = 2.0 * pref * falling_product(a + pshift, i) / math.factorial(i)
            acc = acc + (c * self.gq_moment(a + pshift - i)) * xp
            xp = xp * x2sq
            i += 2
        kp1 = self.k + 1 if (self.k + 1 - i0) % 2 == 0 else self.k + 2
        rem_c = 2.0 * pref * abs(falling_product(a + pshift, kp1)) \
            / math.factorial(kp1) * shrink ** (a + pshift - 1.0 - kp1 + 1.0)
        rem_m = self.gq_moment(a + pshift - kp1, absolute=True).abs().hi
        rem = X.pow_float(float(kp1)) * (rem_c * rem_m)
        tr = self._trunc_far()[op]
        tpow = X.pow_float(3.0 if op == OP_PSI else 2.0)
        band = rem.abs().hull(-rem.abs()) + (tpow * tr).abs().hull(-(tpow * tr).abs())
        return acc + band

    def _case_near_source(self, op, xs):
        """x above SEP_RATIO times the top of the support (x > 0)."""
        a = self.alpha.alpha
        X = IntervalArray.exact(xs)
        xinv = 1.0 / X
        xinv2 = xinv * xinv
        shrink = (1.0 - 1.0 / SEP_RATIO)
        if op == OP_PSI:
            pref, pshift, xlead = 1.0, 0.0, X.pow_float(a - 1.0)
        else:
            pref, pshift, xlead = a, -1.0, X.pow_float(a - 2.0)
        acc = IntervalArray.exact(np.zeros_like(xs))
        xp = xlead  # x^(a+pshift-1), stepped down by x^-2
        i = 1
        while i <= self.k:
            c = 2.0 * pref * falling_product(a + pshift, i) / math.factorial(i)
            acc = acc + (c * self.gq_moment(float(i))) * xp
            xp = xp * xinv2
            i += 2
        kp1 = self.k + 1 if self.k % 2 == 0 else self.k + 2
        rem_c = 2.0 * pref * abs(falling_product(a + pshift, kp1)) \
            / math.factorial(kp1) * shrink ** (a + pshift - kp1)
        rem_m = self.gq_moment(float(kp1), absolute=True).abs().hi
        rem = X.pow_float(a + pshift - kp1) * (rem_c * rem_m)
        band = rem.abs().hull(-rem.abs())
        for coeff, x_pow in self._trunc_near()[op]:
            t = X.pow_float(x_pow) * coeff
            band = band + t.abs().hull(-t.abs())
        out = acc + band
        sing = self.singular_moment()
        if op == OP_PSI:
            return out - (2.0 * a) * X * sing
        return out - (2.0 * a) * IntervalArray.full(xs.shape, sing)

    def _case_comparable(self, op, xs):
        """Exact moment assembly; handles the diagonal crossing."""
        a = self.alpha.alpha
        aexp = a if op == OP_PSI else a - 1.0
        X = IntervalArray.exact(xs)
        out = IntervalArray.exact(np.zeros_like(xs))
        for seg in self.segs:
            below = xs <= seg.a
            above = xs >= seg.b
            inside = ~(below | above)
            for c, s in seg.terms:
                plus = exact_moment(X, aexp, 3, 1, s, seg.a, seg.b)
                absgn = _abs_sgn_moment(X, aexp, 3, s, seg.a, seg.b,
                                        below, above, inside,
                                        signed=(op == OP_PSI_X))
                sing = exact_moment(0.0, a - 1.0, 3, 1, s, seg.a, seg.b)
                if op == OP_PSI:
                    part = plus - absgn - (2.0 * a) * X * sing
                else:
                    part = a * plus - a * absgn \
                        - (2.0 * a) * IntervalArray.full(xs.shape, sing)
                out = out + c * part
        return out

    def eval(self, op, xs):
        """IntervalArray of enclosures at each x in xs (floats >= 0)."""
        xs = np.asarray(xs, dtype=float)
        if (xs < 0).any():
            raise DomainError("evaluation points must be nonnegative")
        out_lo = np.zeros_like(xs)
        out_hi = np.zeros_like(xs)
        zero = xs == 0.0  # both kernels vanish identically at x = 0
        far = (~zero) & (SEP_RATIO * np.maximum(xs, self.x2) < self.lo_pos)
        near = (~zero) & (xs > SEP_RATIO * self.hi_sup)
        comp = ~(zero | far | near)
        for mask, fn in ((far, self._case_far_source),
                         (near, self._case_near_source),
                         (comp, self._case_comparable)):
            if mask.any():
                sub = fn(op, xs[mask])
                out_lo[mask] = sub.lo
                out_hi[mask] = sub.hi
        return IntervalArray(out_lo, out_hi)


def _abs_sgn_moment(X, aexp, l, s, ya, yb, below, above, inside, signed):
    """Vectorized int |x-y|^aexp (sgn(x-y))^p (s-y)^l dy over [ya, yb]."""
    n = len(X)
    lo = np.zeros(n)
    hi = np.zeros(n)
    if below.any():
        sub = X[below]
        got = exact_moment(-sub, aexp, l, 1, s, ya, yb)
        if signed:
            got = -got
        lo[below] = got.lo
        hi[below] = got.hi
    if above.any():
        sub = X[above]
        got = exact_moment(sub, aexp, l, -1, s, ya, yb)
        lo[above] = got.lo
        hi[above] = got.hi
    for idx in np.nonzero(inside)[0]:
        x = Interval(X.lo[idx], X.hi[idx])
        left = exact_moment(x, aexp, l, -1, s, ya, x.lo) \
            if x.lo > ya else Interval(0.0, 0.0)
        right = exact_moment(-x, aexp, l, 1, s, x.hi, yb) \
            if yb > x.hi else Interval(0.0, 0.0)
        got = left - right if signed else left + right
        lo[idx] = got.lo
        hi[idx] = got.hi
    return IntervalArray(lo, hi)


class BasisNonlocal:
    """Per-basis-function evaluators, including the odd reflection."""

    def __init__(self, basis, alpha, terms=20):
        self.basis = basis
        self.alpha = alpha
        self.terms = terms
        self.x2 = basis.mesh.node(2)
        self._cache = {}

    def _raw(self, knots_key, knots):
        if knots_key not in self._cache:
            self._cache[knots_key] = RawSplineNonlocal(
                knots, self.alpha, self.x2, self.terms)
        return self._cache[knots_key]

    def eval(self, i, op, xs):
        knots = self.basis.knots(i)
        ev = self._raw(("p", i), knots)
        out = ev.eval(op, xs)
        if knots[0] < 0.0:
            refl = np.sort(-knots)
            ev_r = self._raw(("r", i), refl)
            out = out - ev_r.eval(op, xs)
        return out * float(self.basis.normalizers[i - 1])


def nonlocal_bspline(basis, i, op, x, alpha=None, terms=20,
                     _shared=None):
    """Certified enclosure of the op-kernel integral of basis i at x."""
    if op not in (OP_PSI, OP_PSI_X):
        raise ParamError(f"unknown operator {op!r}")
    shared = _shared or BasisNonlocal(basis, alpha or AlphaParam.critical(),
                                      terms)
    return shared.eval(i, op, np.array([float(x)]))[0]


MATRIX_FORMAT_VERSION = 1


class NonlocalMatrix:
    """Dense enclosures of psi / psi_x of every basis function at every
    evaluation point; rows are points, columns basis indices."""

    def __init__(self, points, psi, psi_x, meta):
        self.points = np.asarray(points, dtype=float)
        self.psi = psi          # IntervalArray, shape (npoints, nbasis)
        self.psi_x = psi_x
        self.meta = dict(meta)

    @property
    def shape(self):
        return self.psi.lo.shape

    def column(self, op, i):
        m = self.psi if op == OP_PSI else self.psi_x
        return IntervalArray(m.lo[:, i - 1], m.hi[:, i - 1])

    def entry(self, op, j, i):
        m = self.psi if op == OP_PSI else self.psi_x
        return Interval(m.lo[j, i - 1], m.hi[j, i - 1])

    def apply(self, op, coeffs):
        """Enclosure of sum_i a_i K(B_i) at every point."""
        m = self.psi if op == OP_PSI else self.psi_x
        coeffs = np.asarray(coeffs, dtype=float)
        pos = np.maximum(coeffs, 0.0)
        neg = np.minimum(coeffs, 0.0)
        lo = m.lo @ pos + m.hi @ neg
        hi = m.hi @ pos + m.lo @ neg
        n = coeffs.size
        slack = 1.2 * n * 2.220446049250313e-16 * (
            np.abs(m.lo) @ np.abs(coeffs) + np.abs(m.hi) @ np.abs(coeffs))
        return IntervalArray(np.nextafter(lo - slack, -np.inf),
                             np.nextafter(hi + slack, np.inf))

    def apply_mid(self, op, coeffs):
        m = self.psi if op == OP_PSI else self.psi_x
        mid = 0.5 * (m.lo + m.hi)
        return mid @ np.asarray(coeffs, dtype=float)

    def save(self, path):
        np.savez_compressed(
            path,
            meta=np.frombuffer(
                json.dumps(self.meta, sort_keys=True).encode(), dtype=np.uint8
            ),
            points=self.points,
            psi_lo=self.psi.lo, psi_hi=self.psi.hi,
            psix_lo=self.psi_x.lo, psix_hi=self.psi_x.hi,
        )

    @classmethod
    def load(cls, path, expect_mesh_hash=None):
        try:
            with np.load(path) as z:
                meta = json.loads(bytes(z["meta"]).decode())
                points = z["points"]
                psi = IntervalArray(z["psi_lo"], z["psi_hi"])
                psi_x = IntervalArray(z["psix_lo"], z["psix_hi"])
        except (OSError, KeyError, ValueError) as exc:
            raise FormatError(f"unreadable matrix file {path}: {exc}") from exc
        if meta.get("format") != MATRIX_FORMAT_VERSION:
            raise CacheMismatch("matrix format version mismatch")
        if expect_mesh_hash and meta.get("mesh_hash") != expect_mesh_hash:
            raise CacheMismatch(
                f"matrix built for mesh {meta.get('mesh_hash')}, "
                f"expected {expect_mesh_hash}")
        return cls(points, psi, psi_x, meta)


def build_nonlocal_matrix(basis, points, alpha=None, terms=20):
    """Evaluate psi / psi_x of every basis function on a point set."""
    alpha = alpha or AlphaParam.critical()
    if hasattr(points, "points"):
        points = points.points
    xs = np.asarray(points, dtype=float)
    n = basis.count
    shared = BasisNonlocal(basis, alpha, terms)
    psi_lo = np.empty((len(xs), n))
    psi_hi = np.empty((len(xs), n))
    psix_lo = np.empty((len(xs), n))
    psix_hi = np.empty((len(xs), n))
    for i in range(1, n + 1):
        col = shared.eval(i, OP_PSI, xs)
        psi_lo[:, i - 1] = col.lo
        psi_hi[:, i - 1] = col.hi
        col = shared.eval(i, OP_PSI_X, xs)
        psix_lo[:, i - 1] = col.lo
        psix_hi[:, i - 1] = col.hi
    meta = {
        "format": MATRIX_FORMAT_VERSION,
        "mesh_hash": basis.mesh.content_hash(),
        "alpha": alpha.alpha,
        "nbasis": n,
        "npoints": len(xs),
        "terms": terms,
        "points_hash": hashlib.sha256(xs.tobytes()).hexdigest()[:16],
    }
    return NonlocalMatrix(xs, IntervalArray(psi_lo, psi_hi),
                          IntervalArray(psix_lo, psix_hi), meta)
