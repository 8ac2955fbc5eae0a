"""Certified nonlocal terms of the explicit far-field tail.

In the bounded region the tail is re-interpolated in the spline basis
and the defect is priced by the weighted nonlocal error bound; the
portion beyond the far cutoff enters through a separated-variable
series.  Past the log-expansion threshold the operators are expanded in
powers of 1/log x with uniform-in-x integral enclosures.
"""

import math

import numpy as np

from .ansatz import cutoff_eval, powerlog_eval
from .bounds import (
    KIND_PSI_OVER_X_J,
    KIND_PSI_X_J,
    SharpConstants,
    WeightSpec,
    _geom_edges,
    interp_enclose,
    kernel_terms,
    nonlocal_error_bound,
    signed_kernel_integral,
    terms_eval,
)
from .errors import ParamError, SeamError
from .interval import Interval, IntervalArray
from .kernels import (
    AlphaParam,
    KernelId,
    falling_product,
    kernel_deriv_bound,
    kernel_linear_bound,
    kernel_sign,
)
from .quadrature import simpson_certified

Z_L1_DEFAULT = 1e10
Z_L_DEFAULT = 4e12

B4_MU = (0.4, 0.4, 1.0, 30.0)
B4_B = (-1.0, -0.5, 0.0, 0.2)


def _interp_weights(partition, x1):
    return WeightSpec(mu=B4_MU, b=B4_B, partition=partition, x1=x1)


class AnsatzNonlocal:
    """psi / psi_x / J of the tail W_F with certified error control.

    The caller evaluates the interpolated part through the basis matrix
    using ``coeffs``; ``correction(op, x)`` encloses everything the
    interpolant misses (interpolation defect plus the beyond-cutoff
    remainder of the tail).
    """

    def __init__(self, ansatz, basis, alpha=None, weights=None,
                 z_l1=Z_L1_DEFAULT, z_l=None, simpson_n=8,
                 terms=20, n_sub=400, defect_splits=4):
        self.ansatz = ansatz
        self.basis = basis
        self.alpha = alpha or AlphaParam.critical()
        self.z_l1 = float(z_l1)
        if z_l is None:
            # the cutoff must sit well inside the mesh so the spline can
            # actually represent chi2 * W_F; a tenth of the extent keeps
            # the beyond-mesh defect at the x^-5 roll-off level
            z_l = min(Z_L_DEFAULT, basis.mesh.extent / 10.0)
        self.z_l = float(z_l)
        self.defect_splits = int(defect_splits)
        if self.z_l <= 11 * ansatz.z0:
            raise ParamError("cutoff level too close to the ansatz start")
        self.k = int(terms)
        self.simpson_n = int(simpson_n)
        base_weights = weights or WeightSpec()
        self.weights_f = _interp_weights(base_weights.partition,
                                         base_weights.x1)
        self.constants_f = SharpConstants(self.weights_f, self.alpha,
                                          n_sub=n_sub)
        self.coeffs = self._interpolate_cut_tail()
        self._defect = None
        self._far_moments = {}

    # -- interpolation of chi2 * W_F --------------------------------------

    def _cut_tail(self, x):
        chi2 = 1.0 - cutoff_eval(x / self.z_l - 1.0, 0)
        return chi2 * self.ansatz.eval(x)

    def _cut_tail_interval(self, x_iv, order=0):
        """Enclosure of d^order [chi2 W_F] on x_iv (needs orders <= 2)."""
        z = self.z_l
        out = Interval(0.0, 0.0)
        for i in range(order + 1):
            if i == 0:
                chi_d = Interval(1.0, 1.0) - cutoff_eval(
                    x_iv / z - 1.0, 0)
            else:
                chi_d = -cutoff_eval(x_iv / z - 1.0, i) \
                    * Interval.point(z) ** (-i)
            wf_d = self.ansatz.eval_interval(x_iv, order - i)
            out = out + math.comb(order, i) * chi_d * wf_d
        return out

    def _interpolate_cut_tail(self):
        pts = self.basis.collocation_points()
        vals = np.array([self._cut_tail(float(x)) for x in pts])
        return self.basis.interpolate(vals)

    def defect_norm(self):
        """Certified ||(interpolant - chi2 W_F) phi_f|| over [0, inf)."""
        if self._defect is not None:
            return self._defect
        mesh = self.basis.mesh
        ws = self.weights_f
        worst = Interval(0.0, 0.0)
        for j in range(1, mesh.n + 3):
            na, nb = mesh.node(j), mesh.node(j + 1)
            for s in range(self.defect_splits):
                a = na + (nb - na) * s / self.defect_splits
                b = na + (nb - na) * (s + 1) / self.defect_splits
                cell = Interval(a, b)
                # diff = spline - chi2 W_F, second derivative of both parts
                d2 = self.basis.eval_combination_interval(
                    self.coeffs, cell, 2) \
                    - self._cut_tail_interval(cell, 2)
                fa = self.basis.eval_combination_interval(
                    self.coeffs, Interval.point(a)) \
                    - self._cut_tail_interval(Interval.point(a))
                fb = self.basis.eval_combination_interval(
                    self.coeffs, Interval.point(b)) \
                    - self._cut_tail_interval(Interval.point(b))
                encl = interp_enclose(fa, fb, b - a,
                                      deriv2_bound=d2.abs().hi)
                wphi = ws.phi_interval(cell)
                if a == 0.0:
                    # odd difference vanishing at 0: |diff| <= x sup|diff'|
                    d1 = self.basis.eval_combination_interval(
                        self.coeffs, cell, 1) \
                        - self._cut_tail_interval(cell, 1)
                    top = None
                    for mi, bi in zip(ws.mu, ws.b):
                        v = d1.abs() * Interval(0.0, b) ** (1.0 + bi) / mi
                        top = v if top is None else top.max(v)
                    worst = worst.max(Interval(0.0, top.hi))
                    continue
                worst = worst.max(encl.abs() * wphi)
        # beyond the mesh the interpolant vanishes; diff = chi2 W_F, and
        # chi2 has already rolled off like (z_l / y)^5 out there
        xm = mesh.node(mesh.n + 3)
        tail_amp = self.ansatz.range_bracket(xm).abs().hi
        chi2_top = (Interval(1.0, 1.0)
                    - cutoff_eval(Interval.point(xm) / self.z_l - 1.0, 0))
        top = Interval(0.0, 0.0)
        for mi, bi in zip(ws.mu, ws.b):
            v = tail_amp * chi2_top.abs() \
                * Interval.point(xm) ** (bi - 1.0 / 3.0) / mi
            top = top.max(Interval(0.0, v.hi))
        self._defect = Interval(0.0, worst.max(top).hi)
        return self._defect

    # -- beyond-cutoff series (source above z_l, evaluation point below) --

    def _far_moment(self, p, s_max=64.0, n=160):
        """int_{z_l}^inf y^p (1 - chi2) W_F dy, scaled by substitution."""
        key = (p, s_max, n)
        if key not in self._far_moments:
            zl = self.z_l
            edges = _geom_edges(1.0, s_max, n)
            cells = IntervalArray(edges[:-1], edges[1:])
            vals_lo = np.empty(n)
            vals_hi = np.empty(n)
            for j in range(n):
                y_iv = Interval(edges[j] * zl, edges[j + 1] * zl)
                g = (Interval(1.0, 1.0)
                     - (Interval(1.0, 1.0)
                        - cutoff_eval(y_iv / zl - 1.0, 0))) \
                    * self.ansatz.eval_interval(y_iv)
                vp = g * y_iv ** p
                vals_lo[j] = vp.lo
                vals_hi[j] = vp.hi
            widths = IntervalArray.exact(np.diff(edges) * zl)
            total = (IntervalArray(vals_lo, vals_hi) * widths).sum_fast()
            # tail beyond s_max * z_l: |y^(1/3) W_F| <= 6
            a = self.alpha.alpha
            if p - a + 1.0 >= 0:
                raise ParamError("divergent far moment")
            top = 6.0 * Interval.point(s_max * zl) ** (p - a + 1.0) \
                / (a - 1.0 - p)
            self._far_moments[key] = total + Interval(-top.hi, top.hi)
        return self._far_moments[key]

    def beyond_cutoff(self, op, x_iv):
        """K_op((1 - chi2) W_F)(x) for x below z_l1 via the separated
        series; vanishingly small at desk scale but fully certified."""
        a = self.alpha.alpha
        if x_iv.hi > self.z_l / 4.0:
            raise ParamError("series needs x below z_l / 4")
        if op == "psi":
            i0, pref, shift = 3, 1.0, 0.0
        else:
            i0, pref, shift = 2, a, -1.0
        acc = Interval(0.0, 0.0)
        i = i0
        while i <= self.k:
            c = 2.0 * pref * falling_product(a + shift, i) / math.factorial(i)
            acc = acc + c * x_iv ** i * self._far_moment(a + shift - i)
            i += 2
        kp1 = i
        ratio = self.z_l / max(x_iv.hi, 1e-300)
        shrink = (1.0 - 1.0 / ratio) ** (a + shift - kp1)
        rem_m = self._far_moment(a + shift - kp1).abs()
        rem = (2.0 * pref * abs(falling_product(a + shift, kp1))
               / math.factorial(kp1) * shrink) * x_iv.abs() ** kp1 * rem_m
        return acc + Interval(-rem.hi, rem.hi)

    def correction_mid(self, op, x):
        """Float best-estimate correction at any x (solver path)."""
        if 4.0 * x < self.z_l:
            return self.correction(op, Interval.point(x)).mid
        return self.tail_float(op, x)

    def tail_float(self, op, x):
        """Non-certified K_op((1 - chi2) W_F)(x) for the time stepper."""
        from scipy.integrate import quad
        from .kernels import KernelId, kernel_point
        kid = KernelId.K1 if op == "psi" else KernelId.K2

        def f(y):
            chi2 = 1.0 - cutoff_eval(y / self.z_l - 1.0, 0)
            return kernel_point(kid, self.alpha, x, y) \
                * (1.0 - chi2) * self.ansatz.eval(y)

        hi1 = max(16.0 * x, 4.0 * self.z_l)
        pts = [p for p in (x,) if self.z_l < p < hi1]
        v1, _ = quad(f, self.z_l, hi1, points=pts or None, limit=300,
                     epsabs=1e-11, epsrel=1e-9)
        v2, _ = quad(lambda u: f(math.exp(u)) * math.exp(u),
                     math.log(hi1), math.log(hi1) + 10.0,
                     limit=200, epsabs=1e-11, epsrel=1e-9)
        return v1 + v2

    def correction(self, op, x_iv):
        """Everything K_op(W_F) has beyond the interpolant at x <= z_l1."""
        kind = KIND_PSI_OVER_X_J if op == "psi" else KIND_PSI_X_J
        err = nonlocal_error_bound(kind, self.weights_f, self.constants_f,
                                   self.defect_norm(), x_iv, self.alpha)
        band = err.abs().hi
        if op == "psi":
            band *= x_iv.abs().hi  # psi/x-form constant prices psi / x
        out = Interval(-band, band)
        # the J-flavored bound misses the singular moment; the defect's
        # own J-term
        jm = self._defect_j_moment(x_iv)
        if op == "psi":
            out = out - 2.0 * self.alpha.alpha * x_iv * jm
        else:
            out = out - 2.0 * self.alpha.alpha * jm
        return out + self.beyond_cutoff(op, x_iv)

    def _defect_j_moment(self, x_iv):
        """J-moment of the interpolation defect up to x."""
        # |int_0^x y^(a-1) diff dy| <= ||diff phi_f|| *
        #                              int y^(a-1) phi_f^-1
        a = self.alpha.alpha
        ws = self.weights_f
        acc = Interval(0.0, 0.0)
        x_hi = x_iv.hi
        lo = 0.0
        for mi, bi in zip(ws.mu, ws.b):
            # phi_f^-1 <= mu_i y^-b_i on its winning stretch; integrate
            # the best single power over [0, x]: use the smallest b
            pass
        # single-power bound with the first (most negative) exponent near 0
        # and the last beyond 1
        b1 = ws.b[0]
        bl = ws.b[-1]
        m1, ml = ws.mu[0], ws.mu[-1]
        x_cut = min(1.0, x_hi)
        part1 = m1 * (Interval.point(x_cut) ** (a - b1)) / (a - b1)
        acc = acc + part1
        if x_hi > 1.0:
            part2 = ml * (Interval.point(x_hi) ** (a - bl)
                          - Interval.point(1.0)) / (a - bl)
            acc = acc + part2
        up = (acc * self.defect_norm()).hi
        return Interval(-up, up)

    # -- the J-operator of the tail ---------------------------------------

    def j_tail_d4_bound(self, a_lo, b_hi):
        """sup |d^4 [y^(a-1) W_F]| on [a_lo, b_hi] via the Leibniz rule."""
        al = self.alpha.alpha
        cell = Interval(max(a_lo, self.ansatz.z0 * 1.0000001), b_hi)
        if cell.hi <= self.ansatz.z0:
            return 0.0
        total = Interval(0.0, 0.0)
        for i in range(5):
            wfi = self.ansatz.eval_interval(cell, 4 - i)
            pw = falling_product(al - 1.0, i) * cell ** (al - 1.0 - i)
            total = total + math.comb(4, i) * pw * wfi
        return total.abs().hi

    def j_increment(self, a_lo, b_hi):
        """Certified int_{a_lo}^{b_hi} y^(alpha-1) W_F dy."""
        z0 = self.ansatz.z0
        if b_hi <= z0:
            return Interval(0.0, 0.0)
        a_lo = max(a_lo, z0)
        al = self.alpha.alpha
        d4 = self.j_tail_d4_bound(a_lo, b_hi)

        def f(y_iv):
            return y_iv ** (al - 1.0) * self.ansatz.eval_interval(y_iv)

        val, _ = simpson_certified(f, a_lo, b_hi, self.simpson_n, d4)
        return val

    def j_prefix(self, edges):
        """IntervalArray of J(W_F) at each edge (prefix integrals)."""
        edges = np.asarray(edges, dtype=float)
        incs_lo = np.zeros(len(edges) - 1)
        incs_hi = np.zeros(len(edges) - 1)
        for j in range(len(edges) - 1):
            inc = self.j_increment(edges[j], edges[j + 1])
            incs_lo[j] = inc.lo
            incs_hi[j] = inc.hi
        run = IntervalArray(incs_lo, incs_hi).cumsum()
        lo = np.concatenate([[0.0], run.lo])
        hi = np.concatenate([[0.0], run.hi])
        return IntervalArray(lo, hi)

    def j_main(self, x_iv):
        """The log main term of J(W_F) at large x."""
        a = self.ansatz
        lg = x_iv.log()
        return a.c0 * lg + 1.5 * a.c1 * lg ** (2.0 / 3.0) \
            + 3.0 * a.c2 * lg ** (1.0 / 3.0)

    def j_far(self, x_iv, ref_x, ref_val):
        """J(W_F)(x) = ref + [main(x) - main(ref)] + cutoff error for
        x beyond a reference point ref_x >= 11 z0."""
        if ref_x < 11 * self.ansatz.z0:
            raise SeamError("far J needs a reference past the cutoff")
        err = self._chi_tail_j_err(ref_x)
        main = self.j_main(x_iv) - self.j_main(Interval.point(ref_x))
        return ref_val + main + Interval(-err, err)

    def _chi_tail_j_err(self, ref_x):
        # |int (chi1 - 1) y^-1 W_FA| from ref_x on
        amp = self.ansatz.range_bracket(ref_x).abs().hi
        z0 = self.ansatz.z0
        c = (Interval.point(ref_x) / (ref_x - z0)) ** 5 \
            * Interval.point(z0) ** 5 * amp
        return (c * Interval.point(ref_x) ** (-5.0) / 5.0).hi


# ---------------------------------------------------------------------------
# log-expansion branch for very large evaluation points


def _log_power(z_arr, base_pow, i):
    """z^base_pow * (log z)^i on an IntervalArray, integer i >= 0."""
    g = z_arr.pow_float(base_pow)
    if i:
        gl = z_arr.log()
        for _ in range(i):
            g = g * gl
    return g


def _int_pow_log(a_hi, b, n):
    """Upper bound of int_0^a z^b |log z|^n dz (a < 1) by parts."""
    if a_hi <= 0:
        return 0.0
    la = abs(math.log(a_hi))
    acc = a_hi ** (b + 1.0) / (b + 1.0)
    total = 0.0
    term = acc * la ** n
    total += term
    for j in range(n, 0, -1):
        term = term * j / ((b + 1.0) * max(la, 1e-300))
        total += term
    return total * 1.01


class LogExpansion:
    """psi / psi_x of the pure cut power-log source, valid past z_l1.

    Expands (log x + log z)^(-gamma) in powers of log z / log x; the
    z-integrals are enclosed once, uniformly in the evaluation point.
    """

    def __init__(self, ansatz, alpha=None, z_l1=Z_L1_DEFAULT, terms=8,
                 n_sub=500):
        self.ansatz = ansatz
        self.alpha = alpha or AlphaParam.critical()
        self.z_l1 = float(z_l1)
        self.k = int(terms)
        self.s1 = max(z_l1 ** -0.5, ansatz.z0 / z_l1) * 1.0000001
        if self.s1 >= 0.5:
            raise ParamError("expansion threshold too small")
        self.n_sub = int(n_sub)
        self._parts = {}

    def _side_edges(self, side):
        n = self.n_sub
        if side == "left":
            u = _geom_edges(1e-13, 1.0 - self.s1, n)
            z = np.concatenate([(1.0 - u)[::-1], [1.0]])
            return z
        u = _geom_edges(1e-13, 255.0, n)
        return np.concatenate([[1.0], 1.0 + u])

    def s_parts(self, op, i):
        """(left, right) enclosures of int K_J(1,z) z^(-1/3) log^i z dz
        over (h, 1) and (1, inf), uniform over h in [0, s1]."""
        key = (op, i)
        if key in self._parts:
            return self._parts[key]
        kid = KernelId.K1J if op == "psi" else KernelId.K2J
        out = []
        for side in ("left", "right"):
            terms = kernel_terms(kid, self.alpha, side)
            edges = self._side_edges(side)
            sign = kernel_sign(kid, side)
            val = signed_kernel_integral(
                terms, lambda z: _log_power(z, -1.0 / 3.0, i), edges, sign,
                second_order=False)
            if side == "left":
                # missing head (h, s1): |K_J| <= C z pointwise
                c_lin = kernel_linear_bound(kid, 1.0 / self.s1,
                                            self.alpha).coeff
                head = c_lin * _int_pow_log(self.s1, 2.0 / 3.0, i)
                val = val + Interval(-head, head)
            else:
                val = val + self._right_tail(kid, i, edges[-1])
            out.append(val)
        self._parts[key] = tuple(out)
        return self._parts[key]

    def _right_tail(self, kid, i, m):
        """int_m^inf |K_J| z^(-1/3) log^i dz <= C log-power trade."""
        db = kernel_deriv_bound(kid, "y_over_rx", m, 0, self.alpha)
        p = self.alpha.alpha - 3.0 - 1.0 / 3.0
        if i == 0:
            up = db.coeff * m ** (p + 1.0) / (-p - 1.0)
        else:
            # log^i <= e^-i (10 i)^i z^0.1 for z > 1
            trade = math.exp(-i) * (10.0 * i) ** i
            up = db.coeff * trade * m ** (p + 1.1) / (-p - 1.1)
        return Interval(-up, up)

    def s_total(self, op, i):
        l, r = self.s_parts(op, i)
        return l + r

    def s_abs(self, op, i):
        l, r = self.s_parts(op, i)
        return l.abs().hi + r.abs().hi

    def eval(self, op, x_iv):
        """K_op(1_{y>=z0} y^(-1/3) W_FA)(x) for x >= z_l1, divided by
        the outer power x^(2-op_index)."""
        if x_iv.lo < self.z_l1:
            raise ParamError("log expansion needs x >= z_l1")
        a = self.ansatz
        third = 1.0 / 3.0
        lg = x_iv.log()
        wfa = a.c0 + a.c1 * lg ** (-third) + a.c2 * lg ** (-2 * third)
        acc = wfa * self.s_total(op, 0)
        for i in range(1, self.k + 1):
            coef = (a.c1 * falling_product(-third, i) * lg ** (-third - i)
                    + a.c2 * falling_product(-2 * third, i)
                    * lg ** (-2 * third - i)) * (1.0 / math.factorial(i))
            acc = acc + coef * self.s_total(op, i)
        rem = self._taylor_remainder(op, x_iv.lo)
        return acc + Interval(-rem, rem)

    def _taylor_remainder(self, op, x_lo):
        """Bound of the (log x + log z) expansion remainder at order k."""
        a = self.ansatz
        third = 1.0 / 3.0
        k = self.k
        lg = math.log(x_lo)
        # main slice z >= x^(-1/2): xi_z >= sqrt(x)
        coef = 0.0
        for cc, g in ((abs(a.c1), third), (abs(a.c2), 2 * third)):
            coef += cc * abs(falling_product(-g, k + 1)) \
                / math.factorial(k + 1) / (0.5 * lg) ** (g + k + 1)
        main = coef * (self.s_abs(op, k + 1)
                       + kernel_linear_bound(
                           KernelId.K1J if op == "psi" else KernelId.K2J,
                           x_lo ** 0.5, self.alpha).coeff
                       * _int_pow_log(x_lo ** -0.5, 2.0 / 3.0, k + 1))
        # ladder of near-origin slices: xi_z >= x^(1-a_lad)
        kid = KernelId.K1J if op == "psi" else KernelId.K2J
        lads = (0.5, 0.75, 0.875, 0.9375, 1.0)
        total = main
        for j in range(len(lads) - 1):
            hi_z = x_lo ** -lads[j]
            xi_pow = 1.0 - lads[j + 1]
            if xi_pow * lg <= math.log(max(self.ansatz.z0, 1.5)):
                xi_log = math.log(max(self.ansatz.z0, 1.5))
            else:
                xi_log = xi_pow * lg
            c_lin = kernel_linear_bound(kid, 2.0, self.alpha).coeff
            mass = c_lin * _int_pow_log(hi_z, 2.0 / 3.0, k + 1)
            for cc, g in ((abs(a.c1), third), (abs(a.c2), 2 * third)):
                total += cc * abs(falling_product(-g, k + 1)) \
                    / math.factorial(k + 1) * mass / xi_log ** (g + k + 1)
        return total
