import math

import numpy as np
import pytest

from blowup1d.ansatz import FarFieldAnsatz, cutoff_eval, powerlog_eval
from blowup1d.farfield import LogExpansion
from blowup1d.interval import Interval
from blowup1d.kernels import AlphaParam, KernelId, kernel_point
from blowup1d.nonlocal_ops import OP_PSI, OP_PSI_X

from helpers import adaptive_quad

A13 = AlphaParam.critical()


class TestAnsatz:
    def test_zero_below_cutoff(self):
        a = FarFieldAnsatz(c1=1.5745, z0=1.9375)
        assert a.eval(0.5) == 0.0
        assert a.eval(1.9375) == 0.0
        assert a.eval_interval(Interval(0.0, 1.0)).contains(0.0)

    def test_far_value_range(self):
        a = FarFieldAnsatz(c1=1.5745, z0=1.9375)
        x = 1e300  # log x ~ 691; the scaled value sits just above -6
        val = a.eval(x) * x ** (1.0 / 3.0)
        assert -6.0 <= val <= -5.9
        # asymptotic form at log x = 1000 (x itself overflows a double)
        lg = 1000.0
        asym = a.c0 + a.c1 * lg ** (-1 / 3) + a.c2 * lg ** (-2 / 3)
        assert -6.0 <= asym <= -5.9

    def test_derived_quadratic_coefficient(self):
        a = FarFieldAnsatz(c1=1.5745)
        assert a.c2 == a.c1 ** 2 / 12.0
        assert a.c0 == -6.0

    def test_derivatives_match_finite_differences(self):
        a = FarFieldAnsatz(c1=1.5745, z0=1.9375)
        for x0 in (5.0, 40.0, 1e3):
            h = 1e-5 * x0
            fd = (a.eval(x0 + h) - a.eval(x0 - h)) / (2 * h)
            assert a.eval(x0, 1) == pytest.approx(fd, rel=1e-7, abs=1e-14)
            fd2 = (a.eval(x0 + h) - 2 * a.eval(x0) + a.eval(x0 - h)) / h ** 2
            assert a.eval(x0, 2) == pytest.approx(fd2, rel=1e-4, abs=1e-14)

    def test_interval_contains_samples(self):
        a = FarFieldAnsatz(c1=1.5745, z0=1.9375)
        for (lo, hi) in [(1.5, 2.5), (3.0, 3.5), (1e4, 1.2e4)]:
            for order in (0, 1, 2):
                iv = a.eval_interval(Interval(lo, hi), order)
                for x in np.linspace(lo, hi, 41):
                    assert iv.lo - 1e-12 <= a.eval(float(x), order) \
                        <= iv.hi + 1e-12

    def test_tail_derivative_coefficient_dominates(self):
        a = FarFieldAnsatz(c1=1.5745, z0=1.9375)
        for order in (0, 1, 2):
            c = a.tail_derivative_coeff(order, 500.0)
            for x in (500.0, 1e4, 1e8):
                assert abs(a.eval(x, order)) <= c * x ** (-1 / 3 - order) \
                    * (1 + 1e-12)

    def test_odd_extension(self):
        a = FarFieldAnsatz(c1=1.5745, z0=1.9375)
        assert a.eval(-30.0) == -a.eval(30.0)
        assert a.eval(-30.0, 1) == a.eval(30.0, 1)

    def test_cutoff_recursion_vs_fd(self):
        for order in (1, 2, 3):
            u = 1.7
            h = 1e-6
            fd = (cutoff_eval(u + h, order - 1)
                  - cutoff_eval(u - h, order - 1)) / (2 * h)
            assert cutoff_eval(u, order) == pytest.approx(fd, rel=1e-6)

    def test_powerlog_eval(self):
        x = 37.0
        got = powerlog_eval(-1.0 / 3.0, -1.0 / 3.0, x, 0)
        assert got == pytest.approx(x ** (-1 / 3) * math.log(x) ** (-1 / 3))


class TestAnsatzNonlocal:
    def test_defect_norm_small(self, toy):
        d = toy.anl.defect_norm()
        assert d.lo >= 0.0
        assert d.hi < 0.05  # coarse toy mesh; production is ~1e-5

    def test_interpolant_plus_correction_encloses_oracle(self, toy):
        anl = toy.anl
        mat = toy.matrix
        pts = mat.points
        for xq in (0.5, 5.0, 60.0, 400.0):
            j = int(np.argmin(np.abs(pts - xq)))
            x = float(pts[j])
            for op, kid in ((OP_PSI, KernelId.K1), (OP_PSI_X, KernelId.K2)):
                base = mat.apply(op, anl.coeffs)[j]
                got = base + anl.correction(op, Interval.point(x))
                want = 0.0
                segs = [(toy.ansatz.z0, 50.0), (50.0, 1e4), (1e4, 1e6)]
                for lo, hi in segs:
                    part, _ = adaptive_quad(
                        lambda y: kernel_point(kid, toy.alpha, x, y)
                        * toy.ansatz.eval(y),
                        lo, hi, singular_points=[x], tol=1e-11)
                    want += part
                pad = max(3e-4 * abs(want), 1e-6)
                assert got.lo - pad <= want <= got.hi + pad, (op, x)

    def test_j_prefix_vs_oracle(self, toy):
        anl = toy.anl
        edges = np.array([0.0, 1.0, 5.0, 50.0, 900.0])
        run = anl.j_prefix(edges)
        a = toy.alpha.alpha
        acc = 0.0
        for k in range(1, len(edges)):
            seg, _ = adaptive_quad(
                lambda y: y ** (a - 1.0) * toy.ansatz.eval(y),
                max(edges[k - 1], toy.ansatz.z0 * 0.99), edges[k])
            acc += seg
            assert run[k].lo - 1e-6 <= acc <= run[k].hi + 1e-6

    def test_j_far_main_term_bounded(self, toy):
        # J(W_F) minus its log main term stays bounded across decades
        anl = toy.anl
        ref_x = 1e3
        ref_val = anl.j_prefix(np.array([0.0, ref_x]))[1]
        last = None
        for x in (1e6, 1e8, 1e10):
            got = anl.j_far(Interval.point(x), ref_x, ref_val)
            drift = got - anl.j_main(Interval.point(x))
            assert abs(drift.mid) < 10.0
            if last is not None:
                assert abs(drift.mid - last) < 0.5
            last = drift.mid

    def test_beyond_cutoff_series_small_at_desk_points(self, toy):
        anl = toy.anl
        for op in (OP_PSI, OP_PSI_X):
            got = anl.beyond_cutoff(op, Interval.point(1.0))
            assert abs(got.mid) < 1e-4
            assert got.width < 1e-4


class TestLogExpansion:
    @pytest.fixture(scope="class")
    def lx(self):
        ansatz = FarFieldAnsatz(c1=1.5745, z0=1.9375)
        return LogExpansion(ansatz, A13, z_l1=1e10, terms=8, n_sub=500)

    def test_contains_oracle(self, lx):
        a = lx.ansatz
        third = 1.0 / 3.0

        def oracle(op, x):
            kid = KernelId.K1J if op == "psi" else KernelId.K2J

            def f(z):
                y = x * z
                wfa = a.c0 + a.c1 * math.log(y) ** (-third) \
                    + a.c2 * math.log(y) ** (-2 * third)
                return kernel_point(kid, A13, 1.0, z) * z ** (-third) * wfa

            v1, _ = adaptive_quad(f, a.z0 / x, 1.0,
                                  singular_points=[1e-6, 1e-3, 0.05])
            v2, _ = adaptive_quad(f, 1.0, 50.0)
            v3, _ = adaptive_quad(f, 50.0, 1e9)
            return v1 + v2 + v3

        for x in (1e10, 1e13):
            for op in ("psi", "psi_x"):
                got = lx.eval(op, Interval.point(x))
                want = oracle(op, x)
                assert got.lo - 1e-6 <= want <= got.hi + 1e-6, (op, x)

    def test_rejects_small_x(self, lx):
        with pytest.raises(Exception):
            lx.eval("psi", Interval.point(1e5))
