"""Assembly and checking of the fixed-point and contraction bounds.

Certified endpoint values of the profile and its nonlocal terms on a
base grid become piecewise enclosures; cell-by-cell prefix integrals
then assemble the bound functions whose inequalities certify the
fixed-point ball and the near-field contraction.  Cells where a
positive-part denominator collapses are reported as failures rather
than aborting the sweep.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    KIND_DELTA_0,
    KIND_PSI_OVER_X_0,
    KIND_PSI_OVER_X_J,
    KIND_PSI_X_0,
    KIND_PSI_X_J,
    SharpConstants,
    VxxxBounder,
    WeightSpec,
    interp_enclose,
)
from .errors import DegenerateProfile, ParamError, SeamError
from .interval import Interval, IntervalArray
from .nonlocal_ops import OP_PSI, OP_PSI_X

ALPHA_BAR = 1.0 / 3.0
INF = float("inf")


def _meet(a, b):
    """Intersection of two valid enclosures (tighter operand if rounding
    makes them disjoint)."""
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if lo <= hi:
        return Interval(lo, hi)
    return a if a.width <= b.width else b


def _abs_pow_cell(cell, p):
    """|x|^p over a cell that may touch 0."""
    if p == 0.0:
        return Interval(1.0, 1.0)
    if cell.lo == 0.0:
        if cell.hi == 0.0:
            return Interval.entire() if p < 0 else Interval(0.0, 0.0)
        edge = Interval.point(cell.hi) ** p
        if p < 0.0:
            return Interval(edge.lo, INF)
        return Interval(0.0, edge.hi)
    return cell ** p


class CertifiedProfileData:
    """Piecewise enclosures of everything the bound functions consume."""

    def __init__(self, profile, matrix, ansatz_nl, weights=None,
                 constants=None, xmax=None):
        self.profile = profile
        self.alpha = profile.alpha
        self.weights = weights or WeightSpec()
        self.constants = constants or SharpConstants(self.weights,
                                                     self.alpha)
        pts = np.asarray(matrix.points, dtype=float)
        keep = pts <= (xmax * (1 + 1e-12) if xmax is not None else INF)
        idx = np.nonzero(keep)[0]
        self.pts = pts[idx]
        if self.pts[0] != 0.0:
            raise ParamError("base grid must start at 0")
        self.n = len(self.pts) - 1
        self.cells = IntervalArray(self.pts[:-1], self.pts[1:])
        self._build_pointwise(matrix, idx, ansatz_nl)
        self._build_cells()
        self._build_ratios()

    def cell(self, j):
        return Interval(self.pts[j], self.pts[j + 1])

    def _build_pointwise(self, matrix, idx, anl):
        coeffs = self.profile.coefficients

        def pick(arr):
            return IntervalArray(arr.lo[idx], arr.hi[idx])

        psi = pick(matrix.apply(OP_PSI, coeffs)) \
            + pick(matrix.apply(OP_PSI, anl.coeffs))
        psi_x = pick(matrix.apply(OP_PSI_X, coeffs)) \
            + pick(matrix.apply(OP_PSI_X, anl.coeffs))
        corr = [anl.correction(OP_PSI, Interval.point(float(x)))
                for x in self.pts]
        corr_x = [anl.correction(OP_PSI_X, Interval.point(float(x)))
                  for x in self.pts]
        self.v_pt = IntervalArray.exact(self.pts) + psi \
            + IntervalArray.from_intervals(corr)
        self.vx_pt = IntervalArray.exact(np.ones_like(self.pts)) + psi_x \
            + IntervalArray.from_intervals(corr_x)
        self.anl = anl

    def _build_cells(self):
        prof = self.profile
        n = self.n
        self.w = {}
        for o in range(4):
            vals = [prof.value_interval(self.cell(j), o) for j in range(n)]
            self.w[o] = IntervalArray.from_intervals(vals)
        self.vxxx = self._vxxx_cells()
        v_cells, vx_cells, vxx_cells = [], [], []
        for j in range(n):
            width = self.pts[j + 1] - self.pts[j]
            d3 = self.vxxx[j].hi
            slope = (self.vx_pt[j + 1] - self.vx_pt[j]) / width
            vxx = slope + Interval(-0.5 * width * d3, 0.5 * width * d3)
            vxx_cells.append(vxx)
            vx_cells.append(interp_enclose(self.vx_pt[j], self.vx_pt[j + 1],
                                           width, deriv2_bound=d3))
            v_cells.append(interp_enclose(self.v_pt[j], self.v_pt[j + 1],
                                          width,
                                          deriv2_bound=vxx.abs().hi))
        self.v = IntervalArray.from_intervals(v_cells)
        self.vx = IntervalArray.from_intervals(vx_cells)
        self.vxx = IntervalArray.from_intervals(vxx_cells)
        self.rho = IntervalArray.from_intervals(
            [self.weights.rho_interval(self.cell(j)) for j in range(n)])
        self.rho_logd = IntervalArray.from_intervals(
            [self.weights.rho_log_deriv_interval(self.cell(j))
             for j in range(n)])
        self.phi = IntervalArray.from_intervals(
            [self.weights.phi_interval(self.cell(j)) for j in range(n)])
        self.phi_dual = IntervalArray.from_intervals(
            [self.weights.phi_dual_interval(self.cell(j)) for j in range(n)])

    def _vxxx_cells(self):
        self._vxxx_bounder = VxxxBounder(self.alpha, self._profile_norms(),
                                         x_low=1.0, y1=2.0)
        return [self._vxxx_bounder.bound(self.cell(j))
                for j in range(self.n)]

    def _profile_norms(self):
        prof = self.profile
        mesh = prof.basis.mesh
        seam = prof.seam
        tail = {o: prof.ansatz.tail_derivative_coeff(o, seam)
                for o in range(3)}
        norms = {}
        for b in (0.2, ALPHA_BAR):
            sups = [Interval(0.0, 0.0)] * 3
            for i in range(1, mesh.n + 4):
                cell = Interval(mesh.node(i), mesh.node(i + 1))
                xb = cell.abs()
                for o in range(3):
                    v = prof.value_interval(cell, o).abs() \
                        * xb ** (o + b)
                    sups[o] = sups[o].max(v)
            for o, key in enumerate(("f", "fy", "fyy")):
                tail_top = (tail[o] * Interval.point(seam)
                            ** (b - 1.0 / 3.0)).hi
                norms[(key, b)] = Interval(
                    0.0, max(sups[o].hi, tail_top))
        loc = Interval(0.0, 0.0)
        for i in range(1, mesh.n + 4):
            if mesh.node(i) > 2.0:
                break
            cell = Interval(mesh.node(i), min(mesh.node(i + 1), 2.0))
            loc = loc.max(prof.value_interval(cell, 2).abs())
        norms["fyy_local"] = Interval(0.0, loc.hi)
        return norms

    def _prefix_hull(self, arr):
        """hull(arr[0..j]) per j, for mean-value enclosures over [0, y]."""
        return IntervalArray(np.minimum.accumulate(arr.lo),
                             np.maximum.accumulate(arr.hi))

    def _build_ratios(self):
        n = self.n
        # mean-value enclosures, valid on [0, y] since W(0) = V(0) = 0
        h_vx = self._prefix_hull(self.vx)
        h_w1 = self._prefix_hull(self.w[1])
        # the slope hull is usable only until W' changes sign (at the
        # profile minimum); by then the generic quotients are tight
        self._slope_ok = h_w1.hi < 0.0
        if not self._slope_ok[0]:
            raise DegenerateProfile("slope enclosure at 0 not negative")
        w_over_x, g, u_mix = [h_w1[0]], [h_vx[0]], [h_w1[0] / h_w1[0]]
        for j in range(1, n):
            cell = self.cell(j)
            w0 = self.w[0][j]
            if w0.contains_zero():
                raise DegenerateProfile(
                    f"profile enclosure hits zero on cell {j} "
                    f"(x ~ {cell.lo:.4g})")
            g.append(_meet(self.v[j] / cell, h_vx[j]))
            if self._slope_ok[j]:
                w_over_x.append(_meet(w0 / cell, h_w1[j]))
                u_mix.append(_meet(cell * self.w[1][j] / w0,
                                   self.w[1][j] / h_w1[j]))
            else:
                w_over_x.append(w0 / cell)
                u_mix.append(cell * self.w[1][j] / w0)
        self.w_over_x = IntervalArray.from_intervals(w_over_x)
        self.g = IntervalArray.from_intervals(g)
        self.u_mix = IntervalArray.from_intervals(u_mix)
        self.w_mix = self.u_mix + 1.0 / 3.0
        self.v_mix = self.vx / self.g - 1.0
        a = self.alpha.alpha
        resid = (3.0 - a) - (1.0 - a) * self.vx - 2.0 * self.g * self.u_mix
        # |R(y)| <= y sup_{[0,y]} |R'| with R(0) = 0: tightens the head
        rp_sup = self._resid_prime_sup(h_vx, h_w1)
        lo, hi = resid.lo.copy(), resid.hi.copy()
        for j in range(n):
            cap = rp_sup[j] * self.pts[j + 1]
            tight = Interval(-cap, cap)
            cur = Interval(lo[j], hi[j])
            got = _meet(cur, tight)
            lo[j], hi[j] = got.lo, got.hi
        self.resid = IntervalArray(lo, hi)
        self.resid_over_x0 = rp_sup[0]

    def _resid_prime_sup(self, h_vx, h_w1):
        """Running bound of sup_{[0, y]} |R'| from mean-value hulls;
        infinite (no cap) once the slope hull loses its sign."""
        a = self.alpha.alpha
        h_vxx = self._prefix_hull(self.vxx)
        h_w2 = self._prefix_hull(self.w[2])
        ok = self._slope_ok
        safe_w1 = IntervalArray(np.where(ok, h_w1.lo, -2.0),
                                np.where(ok, h_w1.hi, -1.0))
        h_u = safe_w1 / safe_w1
        inv_w1 = 1.0 / safe_w1
        q1 = (-0.5) * h_w2 * inv_w1          # (1 - u)/y
        term2 = h_w2 * inv_w1                # W'' y / W
        u_prime = h_u * q1 + term2
        d_vw = 0.5 * h_vxx * h_u + h_vx * u_prime
        rp = (-(1.0 - a)) * h_vxx - 2.0 * d_vw
        caps = np.where(ok, rp.abs().hi, INF)
        return np.maximum.accumulate(np.where(np.isfinite(caps), caps, INF))


class CoeffCells:
    """Partitioned coefficient functions on the base cells."""

    BASE_KINDS = (KIND_PSI_OVER_X_0, KIND_PSI_OVER_X_J, KIND_PSI_X_0,
                  KIND_PSI_X_J, KIND_DELTA_0)

    def __init__(self, data, weights=None, constants=None):
        self.data = data
        self.weights = weights or data.weights
        self.constants = constants or data.constants
        self.alpha = data.alpha
        self._cache = {}
        self.c_j = self._cj_cells()
        two_a = 2.0 * self.alpha.alpha
        self.psi_over_x = self.base(KIND_PSI_OVER_X_0).min(
            self.base(KIND_PSI_OVER_X_J) + two_a * self.c_j)
        self.psi_x = self.base(KIND_PSI_X_0).min(
            self.base(KIND_PSI_X_J) + two_a * self.c_j)
        self.delta = self._delta_cells()

    def kind_at(self, kind, cell, shift=0.0):
        """C_kind over a cell; ``shift`` divides by x^shift inside the
        power so cells touching zero stay finite via the branch min."""
        a = self.alpha.alpha
        ws = self.weights
        total = Interval(0.0, 0.0)
        for pc in ws.partition:
            best = None
            for mi, bi in zip(ws.mu, ws.b):
                if not self.constants.is_finite(kind, bi, pc):
                    continue
                c = self.constants.get(kind, bi, pc)
                v = mi * c * _abs_pow_cell(cell, a - bi - shift)
                best = v if best is None else best.min(v)
            if best is None:
                raise ParamError(f"no finite branch for {kind} on {pc}")
            total = total + best
        return total

    def _kind_cells(self, kind, shift=0.0):
        vals = [self.kind_at(kind, self.data.cell(j), shift)
                for j in range(self.data.n)]
        return IntervalArray.from_intervals(vals)

    def base(self, kind):
        if ("b", kind) not in self._cache:
            self._cache[("b", kind)] = self._kind_cells(kind)
        return self._cache[("b", kind)]

    def over_x(self, kind):
        if ("ox", kind) not in self._cache:
            self._cache[("ox", kind)] = self._kind_cells(kind, shift=1.0)
        return self._cache[("ox", kind)]

    def _cj_cells(self):
        a = self.alpha.alpha
        d = self.data
        incs = []
        for j in range(d.n):
            g = d.phi_dual[j] * (1.0 / d.rho[j])
            prim = (Interval.point(d.pts[j + 1]) ** a
                    - Interval.point(d.pts[j]) ** a) * (1.0 / a)
            incs.append(Interval(0.0, (g * prim).hi))
        run = IntervalArray.from_intervals(incs).cumsum()
        lo = np.concatenate([[0.0], run.lo[:-1]])
        return IntervalArray(lo, run.hi)

    def _delta_cells(self):
        ws = self.weights
        a = self.alpha.alpha
        gam = 0.5
        base = self.base(KIND_DELTA_0)
        out_lo, out_hi = base.lo.copy(), base.hi.copy()
        mu_n = ws.mu[-1]
        fac = (1.0 - ws.x1 ** -gam) ** (a - 2.0)
        for j in range(self.data.n):
            cell = self.data.cell(j)
            if cell.lo < ws.x1:
                continue
            alt = mu_n * fac * cell ** (-gam * (1.0 + a)) \
                + (1.0 - gam) ** (-1.0 / 3.0) * (1.0 / self.data.rho[j]) \
                * Interval(base.lo[j], base.hi[j])
            cur = Interval(out_lo[j], out_hi[j]).min(alt)
            out_lo[j], out_hi[j] = cur.lo, cur.hi
        return IntervalArray(out_lo, out_hi)


def _replace0(arr, first):
    """Intersect the generic first-cell enclosure with a special one."""
    lo, hi = arr.lo.copy(), arr.hi.copy()
    new_lo = max(lo[0], first.lo)
    new_hi = min(hi[0], first.hi)
    if not (new_lo <= new_hi and math.isfinite(new_hi)):
        new_lo, new_hi = first.lo, first.hi
    lo[0], hi[0] = new_lo, new_hi
    return IntervalArray(lo, hi)


class BoundAssembler:
    """Bound functions for the fixed-point ball and contraction checks."""

    def __init__(self, data, coeffs=None, ne_coeffs=None):
        self.data = data
        self.coeffs = coeffs or CoeffCells(data)
        ws_ne = data.weights.nearfield()
        self.ne_weights = ws_ne
        if ne_coeffs is None:
            ne_coeffs = CoeffCells(data, ws_ne,
                                   SharpConstants(ws_ne, data.alpha))
        self.ne_coeffs = ne_coeffs
        self.k1 = int(np.searchsorted(data.pts, data.weights.x1,
                                      side="right")) - 1
        self._cache = {}

    def _widths(self):
        return IntervalArray.exact(np.diff(self.data.pts))

    def _prefix(self, integrand, start=0):
        inc = (integrand * self._widths()).positive_part()
        if start > 0:
            lo = inc.lo.copy()
            hi = inc.hi.copy()
            lo[:start] = 0.0
            hi[:start] = 0.0
            inc = IntervalArray(lo, hi)
        run = inc.cumsum()
        lo = np.concatenate([[0.0], run.lo[:-1]])
        return IntervalArray(lo, run.hi)

    # -- individual bound functions -----------------------------------------

    def transport(self):
        if "transport" in self._cache:
            return self._cache["transport"]
        d, c = self.data, self.coeffs
        mixes = (d.v_mix * (1.0 / 3.0) + d.w_mix).abs()
        integrand = c.psi_over_x * mixes / d.v
        first = c.kind_at(KIND_PSI_OVER_X_0, d.cell(0), shift=1.0) \
            * Interval(mixes.lo[0], mixes.hi[0]) / d.g[0]
        integrand = _replace0(integrand, first.abs())
        self._rate0_transport = integrand.hi[0]
        prefix = self._prefix(integrand)
        k = max(self.k1, 0)
        pl, ph = prefix.lo.copy(), prefix.hi.copy()
        if k + 1 < d.n:
            pl[k + 1:] = prefix.lo[k]
            ph[k + 1:] = prefix.hi[k]
        boundary = c.psi_over_x / (3.0 * d.g.abs())
        bl, bh = boundary.lo.copy(), boundary.hi.copy()
        if k + 1 < d.n:
            bl[k + 1:] = boundary.lo[k]
            bh[k + 1:] = boundary.hi[k]
        out = IntervalArray(bl, bh) + IntervalArray(pl, ph)
        self._cache["transport"] = out
        return out

    def ibp(self):
        if "ibp" in self._cache:
            return self._cache["ibp"]
        d, c = self.data, self.coeffs
        k = self.k1
        cpsiJ = c.base(KIND_PSI_OVER_X_J)
        g_prime = (d.vx - d.g) / d.cells
        rho_prime = d.rho_logd * d.rho
        inner = ((rho_prime * d.g - d.rho * g_prime) / (d.g * d.g)).abs()
        prefix = self._prefix(cpsiJ * inner * (1.0 / 3.0), start=k + 1)
        term = (d.rho * cpsiJ / (3.0 * d.g.abs())).abs()
        at_x1 = Interval(term.lo[min(k, d.n - 1)], term.hi[min(k, d.n - 1)])
        out_lo, out_hi = np.zeros(d.n), np.zeros(d.n)
        total = term + prefix + at_x1
        out_lo[k + 1:] = total.lo[k + 1:]
        out_hi[k + 1:] = total.hi[k + 1:]
        out = IntervalArray(out_lo, out_hi)
        self._cache["ibp"] = out
        return out

    def mix(self):
        if "mix" in self._cache:
            return self._cache["mix"]
        d, c = self.data, self.coeffs
        integrand = c.psi_over_x * d.w_mix.abs() * d.rho / d.v
        out = self._prefix(integrand, start=self.k1 + 1)
        self._cache["mix"] = out
        return out

    def weight_cancel(self):
        if "wc" in self._cache:
            return self._cache["wc"]
        d = self.data
        a = d.alpha.alpha
        cancel = (d.rho_logd + (2.0 * a / 3.0) * d.cells.pow_float(a)
                  * d.w_over_x * d.cells / d.v).abs()
        integrand = cancel * d.phi_dual / (d.w_over_x.abs() * d.cells)
        out = self._prefix(integrand, start=self.k1 + 1)
        self._cache["wc"] = out
        return out

    def residual_coefficient(self):
        if "rc" in self._cache:
            return self._cache["rc"]
        d, c = self.data, self.coeffs
        one = (2.0 / 3.0) * c.psi_x + 2.0 * d.u_mix.abs() * c.psi_over_x
        two = 2.0 * d.w_mix.abs() * c.psi_x + 2.0 * d.u_mix.abs() * c.delta
        out = one.min(two)
        self._cache["rc"] = out
        return out

    def _denom_per_x(self, delta):
        """(V - C_psi/x x delta)_+ / x, finite on every cell."""
        return (self.data.g - self.coeffs.psi_over_x * delta).positive_part()

    def error_term(self, delta):
        d, c = self.data, self.coeffs
        den = self._denom_per_x(delta)
        carrier = d.resid.abs() * (d.rho + d.phi_dual * delta
                                   / d.w[0].abs())
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = carrier / (2.0 * den * d.cells)
        pd_over_w = _phi_dual_shift(d, 0, 1.0) / d.w_over_x[0].abs()
        num0 = d.resid_over_x0 * (d.rho[0] + pd_over_w * delta)
        first = num0 / (2.0 * den[0])
        integrand = _replace0(integrand, first)
        self._rate0_error = integrand.hi[0]
        return self._prefix(integrand)

    def nonlinear(self, delta):
        d, c = self.data, self.coeffs
        den = self._denom_per_x(delta)
        br = self.residual_coefficient()
        carrier = d.phi_dual / d.w[0].abs() \
            + c.psi_over_x * d.rho / d.g
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = br * carrier / (2.0 * den * d.cells)
        # first cell with the powers combined before evaluation
        ws = d.weights
        cell0 = d.cell(0)
        a = d.alpha.alpha
        b1 = ws.b[0]
        br_c = ((2.0 / 3.0)
                * self._const(KIND_PSI_X_0, b1) * ws.mu[0]
                + 2.0 * d.u_mix[0].abs()
                * self._const(KIND_PSI_OVER_X_0, b1) * ws.mu[0])
        part1 = br_c * _abs_pow_cell(cell0, a - b1 - 1.0) \
            * _phi_dual_shift(d, 0, 1.0) \
            / (d.w_over_x[0].abs() * 2.0 * den[0])
        part2 = br_c * _abs_pow_cell(cell0, 2.0 * (a - b1) - 1.0) \
            * ws.mu[0] * self._const(KIND_PSI_OVER_X_0, b1) \
            * d.rho[0] / (d.g[0] * 2.0 * den[0])
        integrand = _replace0(integrand, (part1 + part2).abs())
        self._rate0_nonlinear = integrand.hi[0]
        return self._prefix(integrand)

    def _const(self, kind, b):
        total = Interval(0.0, 0.0)
        for pc in self.data.weights.partition:
            total = total + self.data.constants.get(kind, b, pc)
        return total

    # -- assemblies -----------------------------------------------------------

    def bound_functions(self, delta):
        d = self.data
        lin = (self.transport() + self.ibp() + self.mix()
               + self.weight_cancel())
        b_n = self.nonlinear(delta)
        b_e = self.error_term(delta)
        outer = d.phi * d.w[0].abs()
        total = outer * (lin * delta + b_n * (delta * delta) + b_e)
        # the outer weight diverges at 0 while every bound function
        # vanishes at least linearly; combine the powers on cell 0
        rate = (self._rate0_transport * delta
                + self._rate0_nonlinear * delta * delta
                + self._rate0_error)
        cell0 = d.cell(0)
        pw = None
        for mi, bi in zip(d.weights.mu, d.weights.b):
            v = _abs_pow_cell(cell0, 2.0 + bi) / mi
            pw = v if pw is None else pw.max(v)
        first = Interval(0.0, (rate * pw * d.w_over_x[0].abs()).hi)
        total = _replace0(total, first)
        return {
            "transport": self.transport(),
            "ibp": self.ibp(),
            "mix": self.mix(),
            "weight_cancel": self.weight_cancel(),
            "residual_coefficient": self.residual_coefficient(),
            "nonlinear": b_n,
            "error_term": b_e,
            "linear_sum": lin,
            "total": total,
        }

    def nearfield(self, delta):
        """Per-cell enclosures of the contraction bound."""
        d = self.data
        ne = self.ne_coeffs
        den = self._denom_per_x(delta)
        cne = ne.base(KIND_PSI_OVER_X_0)
        cne_over = ne.over_x(KIND_PSI_OVER_X_0)
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = cne_over / (den * den)
        run = self._prefix(integrand)
        term1 = cne / (3.0 * den)
        bracket = term1 + (4.0 / 3.0) * run
        phi_ne = IntervalArray.from_intervals(
            [self.ne_weights.phi_interval(d.cell(j)) for j in range(d.n)])
        carrier = d.w[0].abs() + (d.phi_dual / d.rho) * delta
        raw = phi_ne * carrier * bracket
        first = self._nearfield_first(delta, den)
        return _replace0(raw, first)

    def _nearfield_first(self, delta, den):
        d = self.data
        ne = self.ne_weights
        a = d.alpha.alpha
        cell = d.cell(0)
        bne1 = ne.b[0]
        c1 = Interval(0.0, 0.0)
        for pc in self.ne_weights.partition:
            c1 = c1 + self.ne_coeffs.constants.get(
                KIND_PSI_OVER_X_0, bne1, pc)
        carrier_over = d.w_over_x[0].abs() \
            + _phi_dual_shift(d, 0, 1.0) * delta / d.rho[0]
        total = None
        for mi, bi in zip(ne.mu, ne.b):
            c_t1 = ne.mu[0] * c1 / (3.0 * den[0]) \
                * _abs_pow_cell(cell, 1.0 + bi + a - bne1)
            flat = ne.mu[0] * c1 / (den[0] * den[0] * (a - bne1))
            c_t2 = (4.0 / 3.0) * flat \
                * _abs_pow_cell(cell, 1.0 + bi + a - bne1)
            v = (c_t1 + c_t2.abs()) * carrier_over / mi
            total = v if total is None else total.max(v)
        return Interval(0.0, total.abs().hi)


def _phi_dual_shift(data, j, shift):
    """min_i mu_i x^(-b_i - shift) over cell j."""
    ws = data.weights
    cell = data.cell(j)
    out = None
    for mi, bi in zip(ws.mu, ws.b):
        v = mi * _abs_pow_cell(cell, -bi - shift)
        out = v if out is None else out.min(v)
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass
class VerificationReport:
    target: str
    edges: np.ndarray
    functions: dict          # name -> IntervalArray over cover cells
    verdicts: np.ndarray     # bool per cover cell
    parameters: dict
    summary: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.verdicts.all())

    def finite_fraction(self, name):
        arr = self.functions[name]
        return float(np.mean(np.isfinite(arr.hi)))


def geometric_cover(x_lo, x_hi, cells):
    edges = np.concatenate([[0.0],
                            np.geomspace(x_lo, x_hi, cells)])
    return edges


def regrid(base_pts, arr, edges):
    """Hull the base-cell enclosures over each cover cell."""
    lo_out = np.empty(len(edges) - 1)
    hi_out = np.empty(len(edges) - 1)
    for j, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        j0 = max(0, int(np.searchsorted(base_pts, a, "right")) - 1)
        j1 = min(len(base_pts) - 2,
                 max(j0, int(np.searchsorted(base_pts, b, "left")) - 1))
        lo_out[j] = np.min(arr.lo[j0:j1 + 1])
        hi_out[j] = np.max(arr.hi[j0:j1 + 1])
    return IntervalArray(lo_out, hi_out)


def check_fixed_point(assembler, delta, delta1, cells=2000, xmax=None,
                      cover_lo=None):
    """Both fixed-point inequalities over a geometric cover."""
    if delta1 >= delta:
        raise ParamError("need delta1 < delta")
    d = assembler.data
    xmax = xmax or d.pts[-1]
    cover_lo = cover_lo or max(d.pts[1], xmax * 1e-7)
    edges = geometric_cover(cover_lo, xmax, cells)
    funcs = assembler.bound_functions(delta)
    den_margin = d.g * 0.5 - assembler.coeffs.psi_over_x * delta
    cover = {name: regrid(d.pts, arr, edges)
             for name, arr in funcs.items()}
    cover["velocity_margin"] = regrid(d.pts, den_margin, edges)
    ok_margin = cover["velocity_margin"].lo >= 0.0
    ok_total = cover["total"].hi <= delta1
    verdicts = ok_margin & ok_total
    summary = {
        "sup_total": float(np.max(cover["total"].hi)),
        "delta": delta,
        "delta1": delta1,
        "margin_ok_fraction": float(np.mean(ok_margin)),
    }
    return VerificationReport(
        target="fixed_point", edges=edges, functions=cover,
        verdicts=verdicts,
        parameters={"delta": delta, "delta1": delta1,
                    "weights": repr(d.weights)},
        summary=summary)


def check_near_field(assembler, delta, lam_target, cells=2000, xmax=None,
                     cover_lo=None):
    d = assembler.data
    xmax = xmax or d.pts[-1]
    cover_lo = cover_lo or max(d.pts[1], xmax * 1e-7)
    edges = geometric_cover(cover_lo, xmax, cells)
    b_ne = assembler.nearfield(delta)
    cover = {"near_field": regrid(d.pts, b_ne, edges)}
    verdicts = cover["near_field"].hi <= lam_target
    summary = {
        "sup_near_field": float(np.max(cover["near_field"].hi)),
        "lam_target": lam_target,
        "delta": delta,
        "finite_fraction": float(np.mean(np.isfinite(
            cover["near_field"].hi))),
    }
    return VerificationReport(
        target="near_field", edges=edges, functions=cover,
        verdicts=verdicts,
        parameters={"delta": delta, "lam_target": lam_target},
        summary=summary)


def farfield_report(profile, anl, x_ref=None):
    """Explicit constants of the far-field expansions past the seam."""
    seam = profile.seam
    if x_ref is not None and x_ref < seam:
        raise SeamError("reference point inside the spline support")
    a = profile.ansatz
    third = 1.0 / 3.0
    lgs = Interval.point(seam).log()
    # |x^(1/3) W - tail| band and the mixed-slope constant
    wfa_band = a.range_bracket(seam)
    # x dW/dx / W + 1/3 for the pure tail: explicit log-derivative series
    c_mix = ((third * a.c1 * lgs ** (-4.0 * third)
              + 2.0 * third * a.c2 * lgs ** (-5.0 * third))
             / wfa_band.abs()) * lgs ** (4.0 * third)
    chi_rel = (Interval.point(seam) / (seam - a.z0)) ** 6 \
        * Interval.point(a.z0) ** 5 * 5.0 * Interval.point(seam) ** (-5.0) \
        * lgs ** (4.0 * third)
    c_w_mix = Interval(0.0, (c_mix + chi_rel).hi)
    # residual main term in s = log^(-1/3)
    s_max = (lgs ** (-third)).hi
    s_iv = Interval(0.0, s_max)
    num = 10.0 * a.c2 ** 2 * s_iv ** 2 + 8.0 * a.c1 * a.c2 * s_iv \
        + (a.c1 ** 2 + 2.0 * a.c0 * a.c2)
    den = a.c2 * s_iv ** 2 + a.c1 * s_iv + a.c0
    # |main| <= (2/9) |num/den| s^2 = C (log x)^(-2/3)
    c_resid_main = Interval(0.0, (num / den).abs().hi * (2.0 / 9.0))
    # velocity log constant: V = (4 + E) x log x with |E| <= c_v_log
    c_v_log = (1.5 * abs(a.c1) * lgs ** (-third)
               + 3.0 * abs(a.c2) * lgs ** (-2.0 * third))
    j_tail = anl.j_main(Interval.point(seam))
    return {
        "seam": seam,
        "tail_band_x13": wfa_band,
        "w_mix_log43": c_w_mix,
        "residual_main_log23": c_resid_main,
        "velocity_log_error": Interval(0.0, c_v_log.hi),
        "velocity_positive": 4.0 - c_v_log.hi > 0.0,
        "j_main_at_seam": j_tail,
    }


def emit_report(report, path, fmt="csv"):
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x_lo", "x_hi", "function", "lo", "hi", "verdict"])
            for name in sorted(report.functions):
                arr = report.functions[name]
                for j in range(len(report.edges) - 1):
                    wr.writerow([
                        repr(float(report.edges[j])),
                        repr(float(report.edges[j + 1])),
                        name,
                        repr(float(arr.lo[j])),
                        repr(float(arr.hi[j])),
                        "PASS" if report.verdicts[j] else "FAIL",
                    ])
        return path
    if fmt == "svg":
        return _plot_svg(report, path)
    raise ParamError(f"unknown report format {fmt}")


def load_report_csv(path):
    rows = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header[:3] != ["x_lo", "x_hi", "function"]:
            raise ParamError("not a verification report")
        for row in rd:
            rows.append(row)
    return rows


def _plot_svg(report, path, width=720, height=360):
    name = sorted(report.functions)[0] if len(report.functions) == 1 \
        else "total" if "total" in report.functions \
        else sorted(report.functions)[0]
    arr = report.functions[name]
    xs = 0.5 * (report.edges[:-1] + report.edges[1:])
    ys = np.minimum(np.abs(arr.hi), 1e12)
    pos = xs > 0
    xs, ys = xs[pos], ys[pos]
    lx = np.log10(xs)
    ly = np.where(ys > 0, np.log10(np.maximum(ys, 1e-18)), -18.0)
    pad = 40

    def sx(v):
        return pad + (v - lx.min()) / max(lx.ptp(), 1e-9) \
            * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - ly.min()) / max(ly.ptp(), 1e-9) \
            * (height - 2 * pad)

    pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(lx, ly))
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}"><rect width="100%" height="100%" fill="white"/>'
        f'<polyline points="{pts}" fill="none" stroke="#1f77b4" '
        f'stroke-width="1.5"/>'
        f'<text x="{pad}" y="20" font-size="13">{name} upper enclosure '
        f'(log-log), target: {report.target}</text></svg>'
    )
    with open(path, "w") as fh:
        fh.write(svg)
    return path
