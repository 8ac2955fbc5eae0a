import math

import numpy as np
import pytest

from blowup1d.bounds import (
    ALL_KINDS,
    KIND_DELTA_0,
    KIND_PSI_OVER_X_0,
    KIND_PSI_OVER_X_J,
    KIND_PSI_X_0,
    KIND_PSI_X_J,
    SharpConstants,
    WeightSpec,
    coeff_fn,
    compact_support_bound,
    integral_of_enclosures,
    interp_enclose,
    kernel_terms,
    nonlocal_error_bound,
    sharp_constant,
    signed_kernel_integral,
    terms_eval,
)
from blowup1d.errors import DivergentConstant, DomainError, RegimeError
from blowup1d.interval import Interval, IntervalArray
from blowup1d.kernels import ALPHA_BAR, AlphaParam, KernelId, kernel_point

from helpers import adaptive_quad

A13 = AlphaParam.critical()


def test_kernel_terms_match_pointwise():
    rng = np.random.default_rng(3)
    for kid in [KernelId.K1, KernelId.K2, KernelId.K1J, KernelId.K2J,
                KernelId.KDelta]:
        for side, zs in (("left", rng.uniform(0.05, 0.95, 10)),
                         ("right", rng.uniform(1.05, 30.0, 10))):
            terms = kernel_terms(kid, A13, side)
            for z in zs:
                got = terms_eval(terms, Interval.point(float(z)))
                want = kernel_point(kid, A13, 1.0, float(z))
                assert got.contains(want) or abs(got.mid - want) < 1e-11


def test_interp_enclose_linear_and_square():
    # linear function, zero second derivative: hull of endpoints
    got = interp_enclose(Interval.point(1.0), Interval.point(3.0),
                         width=1.0, deriv2_bound=0.0)
    assert got.lo == pytest.approx(1.0, abs=1e-12)
    assert got.hi == pytest.approx(3.0, abs=1e-12)
    # f = x^2 on [0,1]: enclosure [-1/4, 5/4]
    got = interp_enclose(Interval.point(0.0), Interval.point(1.0),
                         width=1.0, deriv2_bound=2.0)
    assert got.lo == pytest.approx(-0.25, abs=1e-12)
    assert got.hi == pytest.approx(1.25, abs=1e-12)


def test_interp_enclose_random_cubic_sampled():
    rng = np.random.default_rng(8)
    c = rng.normal(size=4)
    f = np.polynomial.Polynomial(c)
    d2 = f.deriv(2)
    a, b = 0.3, 1.1
    sup2 = max(abs(d2(a)), abs(d2(b)))
    got = interp_enclose(Interval.point(f(a)), Interval.point(f(b)),
                         width=b - a, deriv2_bound=sup2)
    for x in np.linspace(a, b, 1000):
        assert got.lo <= f(x) <= got.hi


def test_interp_enclose_picks_tighter():
    both = interp_enclose(Interval.point(0.0), Interval.point(0.0),
                          width=0.1, deriv1_bound=1.0, deriv2_bound=1.0)
    assert both.hi <= 0.1 * 0.1 / 8 * 1.0 + 1e-12


def test_integral_of_enclosures_constant():
    edges = np.array([0.0, 0.25, 0.5, 1.0])
    encl = IntervalArray.exact(np.array([2.0, 2.0, 2.0]))
    got = integral_of_enclosures(edges, encl)
    assert got.contains(2.0)
    assert got.width < 1e-12


def test_signed_integral_sqrt_kernel():
    # int_0^1 z^(-1/2) dz = 2 via terms for z^(-1/2), g = 1
    terms = [(1.0, "z", -0.5)]
    edges = np.linspace(1e-12, 1.0, 200) ** 2  # graded toward 0
    got = signed_kernel_integral(
        terms, lambda z: IntervalArray.exact(np.ones_like(z.lo)),
        edges, sign=1, second_order=False)
    assert got.lo <= 2.0 <= got.hi + 4e-6


def test_signed_integral_log_weight_tail():
    # int_2^64 z^-1.9 (log z)^2 dz against the adaptive oracle
    p = -1.9
    terms = [(1.0, "z", p)]
    edges = np.exp(np.linspace(math.log(2), math.log(64.0), 400))

    def g(z):
        return z.log() * z.log()

    def gp(z):
        return z.log() * 2.0 / z

    def gpp(z):
        one = IntervalArray.exact(np.ones_like(z.lo))
        return (one - z.log()) * 2.0 / (z * z)

    got = signed_kernel_integral(terms, g, edges, sign=1,
                                 gp_fn=gp, gpp_fn=gpp)
    want, _ = adaptive_quad(lambda z: math.log(z) ** 2 * z ** p, 2.0, 64.0)
    assert got.lo - 1e-9 <= want <= got.hi + 1e-9
    assert got.width < 5e-5


# --- sharp constants --------------------------------------------------------


def test_far_constant_enclosure():
    got = sharp_constant(KIND_DELTA_0, ALPHA_BAR, (0.0, math.inf), A13,
                         n_sub=1200)
    want = 2.0 ** (4.0 / 3.0) - 2.0 / 3.0
    assert got.contains(want)
    assert got.width <= 1e-4


def test_divergence_boundary():
    finite = sharp_constant(KIND_PSI_X_0, 0.2, (0.0, math.inf), A13,
                            n_sub=200)
    assert finite.hi < math.inf
    with pytest.raises(DivergentConstant):
        sharp_constant(KIND_PSI_X_0, ALPHA_BAR, (0.0, math.inf), A13)
    with pytest.raises(DivergentConstant):
        sharp_constant(KIND_PSI_OVER_X_0, 0.5, (0.0, math.inf), A13)


def test_sharp_constant_vs_oracle_cells():
    cells = [(1.0, 2.0), (2.0, 10.0), (0.0, 1.0)]
    for kind in [KIND_PSI_OVER_X_J, KIND_PSI_X_J, KIND_DELTA_0]:
        kid = {KIND_PSI_OVER_X_J: KernelId.K1J,
               KIND_PSI_X_J: KernelId.K2J,
               KIND_DELTA_0: KernelId.KDelta}[kind]
        for b in (0.0, -0.5):
            for cell in cells:
                got = sharp_constant(kind, b, cell, A13, n_sub=240)
                want, _ = adaptive_quad(
                    lambda z: abs(kernel_point(kid, A13, 1.0, z))
                    * z ** (-b),
                    max(cell[0], 1e-12), cell[1],
                    singular_points=[1.0])
                assert got.lo - 2e-6 <= want <= got.hi + 2e-6, \
                    (kind, b, cell, got, want)


def test_sharp_constant_monotone_in_cell():
    full = sharp_constant(KIND_PSI_X_J, 0.0, (0.0, math.inf), A13, n_sub=200)
    part = sharp_constant(KIND_PSI_X_J, 0.0, (1.0, 2.0), A13, n_sub=200)
    assert part.hi <= full.hi


def test_weight_spec_validation():
    with pytest.raises(Exception):
        WeightSpec(mu=(1.0, -1.0), b=(0.0, 0.1))
    with pytest.raises(Exception):
        WeightSpec(mu=(1.0, 1.0), b=(0.5, 0.1))
    ws = WeightSpec()
    assert ws.phi(2.0) == max(2.0 ** b / m for m, b in zip(ws.mu, ws.b))
    assert ws.phi_dual(2.0) == pytest.approx(1.0 / ws.phi(2.0), rel=1e-12)


def test_weight_duality_sampled():
    ws = WeightSpec()
    rng = np.random.default_rng(4)
    for _ in range(100):
        x = 10 ** rng.uniform(-3, 6)
        w = math.sin(x) * x ** -0.4  # arbitrary test function
        norm_contrib = abs(w) * ws.phi(x) * ws.rho(x)
        assert abs(w) <= norm_contrib / (ws.phi(x) * ws.rho(x)) * (1 + 1e-12)


def test_rho_lipschitz_band():
    ws = WeightSpec(x1=3708.0)
    xs = np.linspace(ws.x1 / 2, 2 * ws.x1, 51)
    lip = 0.0
    for u, v in zip(xs[:-1], xs[1:]):
        lip = max(lip, abs(ws.rho(v) - ws.rho(u)) / (v - u))
    # rho'(x1+) = 1/(3 x1 log x1) is the max slope here
    want = 1.0 / (3 * ws.x1 * math.log(ws.x1))
    assert lip <= want * 1.01
    assert ws.rho_interval(Interval(100.0, 200.0)) == Interval(1.0, 1.0)
    iv = ws.rho_log_deriv_interval(Interval(2 * ws.x1, 3 * ws.x1))
    mid = 2.5 * ws.x1
    assert iv.lo <= 1 / (3 * mid * math.log(mid)) <= iv.hi


def test_coeff_fn_single_entry_reduces_to_power():
    ws = WeightSpec(mu=(2.0,), b=(0.1,),
                    partition=((0.0, math.inf),), x1=100.0)
    consts = SharpConstants(ws, A13, n_sub=200)
    x = Interval.point(3.0)
    got = coeff_fn(ws, consts, KIND_PSI_X_J, x, A13)
    c = consts.get(KIND_PSI_X_J, 0.1, (0.0, math.inf))
    want = 2.0 * c * Interval.point(3.0) ** (ALPHA_BAR - 0.1)
    assert got.lo == pytest.approx(want.lo, rel=1e-12)
    assert got.hi == pytest.approx(want.hi, rel=1e-12)


@pytest.fixture(scope="module")
def default_constants():
    return SharpConstants(WeightSpec(), A13, n_sub=240)


def test_coeff_fn_upper_bound_property(default_constants):
    ws = WeightSpec()
    consts = default_constants
    full_cell = (0.0, math.inf)
    for x in [0.3, 2.0, 47.0]:
        got = coeff_fn(ws, consts, KIND_PSI_X_J, Interval.point(x), A13)
        for mi, bi in zip(ws.mu, ws.b):
            full = sharp_constant(KIND_PSI_X_J, bi, full_cell, A13, n_sub=240)
            upper = mi * full.hi * x ** (ALPHA_BAR - bi)
            assert got.lo <= upper * (1 + 1e-9)


def test_nonlocal_error_bound_scales_with_norm(default_constants):
    ws = WeightSpec()
    x = Interval.point(5.0)
    b1 = nonlocal_error_bound(KIND_PSI_X_J, ws, default_constants,
                              Interval.point(2.0), x, A13)
    b2 = nonlocal_error_bound(KIND_PSI_X_J, ws, default_constants,
                              Interval.point(4.0), x, A13)
    assert b2.hi == pytest.approx(2 * b1.hi, rel=1e-12)
    assert b1.hi >= 0


def test_compact_support_bound_vs_oracle():
    # bump = B-spline-like hat supported in [1, 3]
    sup_hi = 3.0
    f = lambda y: max(0.0, (y - 1.0) * (3.0 - y)) ** 2
    l1, _ = adaptive_quad(lambda y: y * f(y), 1.0, 3.0)
    x = 30.0
    got = compact_support_bound("psi", sup_hi, Interval.point(l1),
                                Interval.point(x), A13)
    want, _ = adaptive_quad(
        lambda y: kernel_point(KernelId.K1J, A13, x, y) * f(y), 1.0, 3.0)
    assert abs(want) <= got.hi
    with pytest.raises(RegimeError):
        compact_support_bound("psi", sup_hi, Interval.point(l1),
                              Interval.point(4.0), A13)


def test_zero_source_error_bound(default_constants):
    got = nonlocal_error_bound(KIND_PSI_OVER_X_J, WeightSpec(),
                               default_constants, Interval.point(0.0),
                               Interval.point(7.0), A13)
    assert got.contains(0.0) and got.width < 1e-12
