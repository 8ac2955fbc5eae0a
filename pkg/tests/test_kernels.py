import math

import numpy as np
import pytest

from blowup1d.interval import Interval, IntervalArray
from blowup1d.kernels import (
    ALPHA_BAR,
    AlphaParam,
    DerivBound,
    KernelId,
    falling_product,
    kernel_antiderivative,
    kernel_deriv_bound,
    kernel_eval,
    kernel_eval_safe,
    kernel_linear_bound,
    kernel_one,
    kernel_point,
    kernel_series_far_source,
    kernel_series_near_source,
    kernel_sign,
)

from helpers import mp_kernel

A13 = AlphaParam.critical()
ALL = [KernelId.K1, KernelId.K2, KernelId.K1J, KernelId.K2J, KernelId.KDelta]


def test_alpha_param_eps_relation():
    a = AlphaParam.from_eps(1e-3)
    assert a.alpha + a.eps == ALPHA_BAR
    assert AlphaParam.critical().eps == 0.0


def test_k1_at_diagonal_point():
    # K1(1,1) = 2**(1/3) - 0 - 2/3
    got = kernel_eval(KernelId.K1, A13, Interval.point(1.0), Interval.point(1.0))
    want = 2.0 ** ALPHA_BAR - 2.0 / 3.0
    assert got.contains(want)
    assert got.width < 1e-14


def test_j_variant_matches_plain_above_diagonal():
    rng = np.random.default_rng(2)
    for _ in range(40):
        x = rng.uniform(0.1, 5)
        y = x * rng.uniform(1.01, 8)
        for plain, trunc in [(KernelId.K1, KernelId.K1J),
                             (KernelId.K2, KernelId.K2J)]:
            a = kernel_eval(plain, A13, Interval.point(x), Interval.point(y))
            b = kernel_eval(trunc, A13, Interval.point(x), Interval.point(y))
            assert a.lo == b.lo and a.hi == b.hi


def test_delta_kernel_signs():
    assert kernel_eval(KernelId.KDelta, A13, Interval.point(1.0),
                       Interval.point(2.0)).lo > 0
    assert kernel_eval(KernelId.KDelta, A13, Interval.point(1.0),
                       Interval.point(0.5)).hi <= 0


def test_sign_certificates_sampled():
    rng = np.random.default_rng(10)
    for kid in ALL:
        for side, (lo, hi) in [("left", (1e-4, 0.9999)),
                               ("right", (1.0001, 1e4))]:
            sign = kernel_sign(kid, side)
            if sign == 0:
                continue
            for z in 10 ** rng.uniform(math.log10(lo), math.log10(hi), 200):
                v = kernel_point(kid, A13, 1.0, float(z))
                assert sign * v >= -1e-14, (kid, side, z, v)


def test_mixed_sign_of_k1_left():
    # K1(1, z) really changes sign below the diagonal: no certificate
    vals = [kernel_point(KernelId.K1, A13, 1.0, z) for z in (0.01, 0.9)]
    assert vals[0] < 0 < vals[1]
    assert kernel_sign(KernelId.K1, "left") == 0


def test_scaling_relations():
    rng = np.random.default_rng(3)
    for _ in range(50):
        lam = rng.uniform(0.2, 30)
        x = rng.uniform(0.05, 4)
        y = rng.uniform(0.05, 4)
        if abs(x - y) < 1e-3:
            continue
        k1 = kernel_point(KernelId.K1, A13, lam * x, lam * y)
        assert k1 == pytest.approx(
            lam ** ALPHA_BAR * kernel_point(KernelId.K1, A13, x, y), rel=1e-12
        )
        k2 = kernel_point(KernelId.K2, A13, lam * x, lam * y)
        assert k2 == pytest.approx(
            lam ** (ALPHA_BAR - 1) * kernel_point(KernelId.K2, A13, x, y),
            rel=1e-12,
        )


def test_identity_chain_j_minus_plain():
    rng = np.random.default_rng(4)
    a = ALPHA_BAR
    for _ in range(50):
        x = rng.uniform(0.1, 5)
        y = rng.uniform(0.01, 0.99) * x  # below diagonal
        d1 = kernel_point(KernelId.K1J, A13, x, y) - kernel_point(
            KernelId.K1, A13, x, y)
        assert d1 == pytest.approx(2 * a * x * y ** (a - 1), rel=1e-10)
        d2 = kernel_point(KernelId.K2J, A13, x, y) - kernel_point(
            KernelId.K2, A13, x, y)
        assert d2 == pytest.approx(2 * a * y ** (a - 1), rel=1e-10)


def test_decay_beyond_diagonal():
    bound = kernel_deriv_bound(KernelId.K1, "y_over_rx", 3.0, 0)
    for z in [3.5, 10.0, 100.0, 1e4]:
        v = abs(kernel_point(KernelId.K1, A13, 1.0, z))
        assert v <= bound.at(1.0, z) * 1.0000001


@pytest.mark.parametrize("kid", ALL)
def test_series_far_source_vs_mpmath(kid):
    alpha = A13
    for x, y in [(1.0, 100.0), (0.3, 7.5), (2.0, 1e7), (1e-4, 17.0)]:
        got = kernel_series_far_source(kid, alpha, Interval.point(x),
                                       Interval.point(y))
        want = float(mp_kernel(kid.value, alpha.alpha, x, y))
        assert got.contains(want), (kid, x, y, got, want)
        assert got.width <= max(1e-12, 1e-10 * abs(want))


@pytest.mark.parametrize("kid", ALL)
def test_series_near_source_vs_mpmath(kid):
    alpha = AlphaParam(0.331)
    for x, y in [(100.0, 1.0), (9.0, 2.0), (1e8, 11.0), (5.0, 1e-5)]:
        got = kernel_series_near_source(kid, alpha, Interval.point(x),
                                        Interval.point(y))
        want = float(mp_kernel(kid.value, alpha.alpha, x, y))
        assert got.contains(want), (kid, x, y, got, want)


def test_series_remainder_dominates_truncation():
    # error bound at k=5 must exceed the true truncation error
    alpha = A13
    x, y = 1.0, 4.0  # s = 1/4
    full = kernel_series_far_source(KernelId.K1, alpha, Interval.point(x),
                                    Interval.point(y), terms=31)
    short = kernel_series_far_source(KernelId.K1, alpha, Interval.point(x),
                                     Interval.point(y), terms=5)
    # short enclosure must still contain the well-converged value
    assert short.contains(full.mid)
    assert short.width > full.width


def test_series_leading_term_structure():
    # near-source K1J: leading term 2*A(a,1)*z = (2/3)z at a = 1/3
    alpha = A13
    x = 100.0
    y = 1.0
    z = y / x
    got = kernel_series_near_source(KernelId.K1J, alpha, x, y)
    lead = 2 * falling_product(alpha.alpha, 1) * z * x ** alpha.alpha
    # ratio of term-2 to term-1 is z^2 |A(a,3)/(3! A(a,1))| * 3!... small
    assert got == pytest.approx(lead, rel=3e-4)


def test_eval_safe_dispatch_and_agreement():
    alpha = A13
    cases = [(1.0, 100.0), (100.0, 1.0), (1.0, 1.7)]
    for x, y in cases:
        got = kernel_eval_safe(KernelId.K1, alpha, Interval.point(x),
                               Interval.point(y))
        want = float(mp_kernel("K1", alpha.alpha, x, y))
        assert got.contains(want)


def test_eval_interval_containment_random():
    rng = np.random.default_rng(8)
    for _ in range(200):
        kid = ALL[rng.integers(0, 5)]
        x0 = rng.uniform(0.05, 3.0)
        y0 = rng.uniform(0.05, 3.0)
        dx = rng.uniform(0, 0.02)
        dy = rng.uniform(0, 0.02)
        xi = Interval(x0, x0 + dx)
        yi = Interval(y0, y0 + dy)
        got = kernel_eval(kid, A13, xi, yi)
        for _ in range(4):
            xp = rng.uniform(xi.lo, xi.hi)
            yp = rng.uniform(yi.lo, yi.hi)
            if abs(xp - yp) < 1e-12 or yp < 1e-12:
                continue
            v = float(mp_kernel(kid.value, ALPHA_BAR, xp, yp))
            if got.is_finite() or (got.lo == -math.inf or got.hi == math.inf):
                assert got.lo <= v <= got.hi or not got.is_finite()


def test_diagonal_singularity_returns_unbounded():
    got = kernel_eval(KernelId.K2, A13, Interval(0.9, 1.1), Interval(0.95, 1.05))
    assert not got.is_finite()


def test_deriv_bound_vs_finite_difference():
    rng = np.random.default_rng(13)
    for kid, regime in [(KernelId.K1, "y_over_rx"), (KernelId.K2, "y_over_rx"),
                        (KernelId.K1J, "x_over_ry"), (KernelId.K2J, "x_over_ry")]:
        for k in (0, 1, 2):
            b = kernel_deriv_bound(kid, regime, 2.5, k)
            for _ in range(25):
                x = rng.uniform(0.2, 3.0)
                ratio = rng.uniform(2.6, 12.0)
                y = x * ratio if regime == "y_over_rx" else x / ratio
                h = 1e-4 * y
                pts = [kernel_point(kid, A13, x, y + j * h) for j in (-1, 0, 1)]
                if k == 0:
                    fd = pts[1]
                elif k == 1:
                    fd = (pts[2] - pts[0]) / (2 * h)
                else:
                    fd = (pts[2] - 2 * pts[1] + pts[0]) / h ** 2
                assert abs(fd) <= b.at(x, y) * 1.01 + 1e-12, (kid, regime, k)


def test_linear_bound_near_origin():
    b = kernel_linear_bound(KernelId.K1J, 4.0)
    rng = np.random.default_rng(5)
    for _ in range(30):
        x = rng.uniform(0.5, 10)
        y = rng.uniform(0, x / 4.0)
        if y == 0:
            continue
        v = abs(kernel_point(KernelId.K1J, A13, x, y))
        assert v <= b.coeff * x ** b.x_pow * (y / x) * 1.0000001


def test_antiderivatives_differentiate_back():
    rng = np.random.default_rng(6)
    for kid in [KernelId.K1J, KernelId.K2J, KernelId.K2, KernelId.KDelta]:
        for side, zs in [("left", rng.uniform(0.05, 0.95, 12)),
                         ("right", rng.uniform(1.05, 20.0, 12))]:
            for z in zs:
                h = 1e-6 * max(1.0, z)
                up = kernel_antiderivative(kid, A13, Interval.point(z + h), side)
                dn = kernel_antiderivative(kid, A13, Interval.point(z - h), side)
                fd = (up.mid - dn.mid) / (2 * h)
                want = kernel_point(kid, A13, 1.0, float(z))
                assert fd == pytest.approx(want, rel=5e-5, abs=1e-8), (kid, side, z)


def test_vectorized_series_matches_scalar():
    alpha = A13
    xs = np.array([0.01, 0.1, 0.5, 2.0])
    arr = IntervalArray.exact(xs)
    got = kernel_series_far_source(KernelId.K1, alpha, arr, 50.0)
    for i, x in enumerate(xs):
        single = kernel_series_far_source(KernelId.K1, alpha,
                                          Interval.point(float(x)), 50.0)
        assert got[i].lo == single.lo and got[i].hi == single.hi


def test_kernel_point_accuracy_across_regime_switch():
    # both branches must agree with the 50-digit oracle right at the cut
    alpha = A13
    for kid in ALL:
        for x, y in [(1.0, 3.999999), (1.0, 4.000001),
                     (3.999999, 1.0), (4.000001, 1.0)]:
            got = kernel_point(kid, alpha, x, y)
            want = float(mp_kernel(kid.value, alpha.alpha, x, y))
            assert got == pytest.approx(want, rel=1e-9, abs=1e-13), (kid, x, y)
