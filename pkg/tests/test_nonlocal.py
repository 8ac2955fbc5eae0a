import math
import os

import numpy as np
import pytest

from blowup1d.errors import CacheMismatch, ParamError
from blowup1d.interval import Interval
from blowup1d.kernels import AlphaParam, KernelId, kernel_point
from blowup1d.nonlocal_ops import (
    OP_PSI,
    OP_PSI_X,
    BasisNonlocal,
    NonlocalMatrix,
    build_nonlocal_matrix,
    nonlocal_bspline,
)
from blowup1d.bounds import delta_moment_signed

from helpers import adaptive_quad

A13 = AlphaParam.critical()


def _oracle(basis, i, op, x, alpha=A13):
    kid = KernelId.K1 if op == OP_PSI else KernelId.K2
    lo, hi = basis.support(i)
    lo = max(lo, 0.0)
    val, _ = adaptive_quad(
        lambda y: kernel_point(kid, alpha, x, y) * basis.eval(i, y),
        lo, hi, singular_points=[x], tol=1e-11)
    return val


def test_three_case_regimes_vs_oracle(toy):
    basis = toy.basis
    shared = BasisNonlocal(basis, toy.alpha)
    cases = []
    i_mid = 60
    s_lo, s_hi = basis.support(i_mid)
    cases.append((i_mid, 0.01 * s_lo))             # far source
    cases.append((i_mid, 0.5 * (s_lo + s_hi)))     # comparable
    cases.append((i_mid, 8.0 * s_hi))              # near source
    cases.append((1, 0.2))
    cases.append((1, 30.0))
    for i, x in cases:
        for op in (OP_PSI, OP_PSI_X):
            got = shared.eval(i, op, np.array([float(x)]))[0]
            want = _oracle(basis, i, op, float(x))
            tol = max(got.width, 1e-8 * max(1.0, abs(want)))
            assert got.lo - tol <= want <= got.hi + tol, (i, x, op)


def test_value_at_origin_is_exact_zero(toy):
    got = nonlocal_bspline(toy.basis, 3, OP_PSI, 0.0, toy.alpha)
    assert got.contains(0.0) and got.width < 1e-300
    got = nonlocal_bspline(toy.basis, 3, OP_PSI_X, 0.0, toy.alpha)
    assert got.contains(0.0)


def test_matrix_column_equals_pointwise(toy):
    mat = toy.matrix
    shared = BasisNonlocal(toy.basis, toy.alpha)
    i = 17
    col = mat.column(OP_PSI, i)
    direct = shared.eval(i, OP_PSI, mat.points)
    assert np.array_equal(col.lo, direct.lo)
    assert np.array_equal(col.hi, direct.hi)


def test_matrix_apply_matches_direct_sum(toy):
    mat = toy.matrix
    rng = np.random.default_rng(5)
    coeffs = rng.normal(size=toy.basis.count)
    out = mat.apply(OP_PSI, coeffs)
    j = 37
    acc = Interval(0.0, 0.0)
    for i in range(1, toy.basis.count + 1):
        acc = acc + coeffs[i - 1] * mat.entry(OP_PSI, j, i)
    assert out[j].lo <= acc.mid <= out[j].hi


def test_matrix_linearity(toy):
    mat = toy.matrix
    rng = np.random.default_rng(6)
    a = rng.normal(size=toy.basis.count)
    b = rng.normal(size=toy.basis.count)
    lhs = mat.apply_mid(OP_PSI, 2.0 * a - 3.0 * b)
    rhs = 2.0 * mat.apply_mid(OP_PSI, a) - 3.0 * mat.apply_mid(OP_PSI, b)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_matrix_save_load_and_cache_mismatch(toy, tmp_path):
    mat = toy.matrix
    path = tmp_path / "m.npz"
    mat.save(path)
    back = NonlocalMatrix.load(path,
                               expect_mesh_hash=toy.mesh.content_hash())
    assert np.array_equal(back.psi.lo, mat.psi.lo)
    assert back.meta == mat.meta
    with pytest.raises(CacheMismatch):
        NonlocalMatrix.load(path, expect_mesh_hash="deadbeef")


def test_kernel_moment_identity():
    got = delta_moment_signed(n_sub=1600)
    assert got.contains(-2.0 / 3.0)
    assert got.width <= 1e-4


def test_j_identity_compact_source(toy):
    # for compactly supported odd w: the sym stream slope at 0 equals
    # twice alpha times the full moment integral
    basis = toy.basis
    i = 40
    lo, hi = basis.support(i)
    a = A13.alpha
    j_inf, _ = adaptive_quad(lambda y: y ** (a - 1.0) * basis.eval(i, y),
                             max(lo, 0.0), hi)
    h = 1e-6
    def sym_psi(x):
        val, _ = adaptive_quad(
            lambda y: (abs(x + y) ** a - abs(x - y) ** a) * basis.eval(i, y),
            max(lo, 0.0), hi)
        return val
    slope = sym_psi(h) / h
    assert slope == pytest.approx(2.0 * a * j_inf, rel=1e-4)


def test_quadrature_refinement_consistency(toy):
    # doubling the evaluation accuracy never widens certified entries
    shared20 = BasisNonlocal(toy.basis, toy.alpha, terms=20)
    shared10 = BasisNonlocal(toy.basis, toy.alpha, terms=10)
    xs = np.array([0.05, 11.0, 900.0])
    for op in (OP_PSI, OP_PSI_X):
        w20 = shared20.eval(50, op, xs).width
        w10 = shared10.eval(50, op, xs).width
        assert (w20 <= w10 * (1 + 1e-9) + 1e-18).all()
