import numpy as np
import pytest

from blowup1d.errors import ParamError
from blowup1d.interval import Interval
from blowup1d.mesh_basis import (
    BsplineBasis,
    Mesh,
    RefinedMesh,
    bspline_eval,
    bspline_eval_interval,
    build_mesh,
    build_mesh_for_extent,
)


@pytest.fixture(scope="module")
def paper_mesh():
    return build_mesh(head_count=75, head_spacing=1 / 384, geo_start=400,
                      geo_ratio=1.06, total=600, smoothing_passes=3)


@pytest.fixture(scope="module")
def small_basis():
    mesh = build_mesh(head_count=20, head_spacing=0.05, geo_start=40,
                      geo_ratio=1.08, total=80, smoothing_passes=2)
    return BsplineBasis(mesh)


def test_head_nodes_linear_before_smoothing():
    mesh = build_mesh(head_count=75, head_spacing=1 / 384, geo_start=400,
                      geo_ratio=1.06, total=600, smoothing_passes=0)
    assert mesh.node(2) == pytest.approx(1 / 384, rel=1e-15)
    spacings = np.diff([mesh.node(i) for i in range(1, 76)])
    assert np.allclose(spacings, 1 / 384, rtol=1e-14)


def test_head_spacing_survives_smoothing(paper_mesh):
    spacings = np.diff([paper_mesh.node(i) for i in range(1, 70)])
    assert np.allclose(spacings, 1 / 384, rtol=1e-12)


def test_ghost_nodes_by_reflection(paper_mesh):
    assert paper_mesh.node(1) == 0.0
    assert paper_mesh.node(0) == -paper_mesh.node(2)
    assert paper_mesh.node(-1) == -paper_mesh.node(3)


def test_spacing_nondecreasing(paper_mesh):
    xs = np.array([paper_mesh.node(i) for i in range(1, paper_mesh.n + 6)])
    d = np.diff(xs)
    assert np.all(d[1:] >= d[:-1] * (1 - 1e-12))


def test_tail_node_ratio(paper_mesh):
    g = paper_mesh.params["geo_start"]
    r = paper_mesh.params["geo_ratio"]
    for k in (1, 5, 20, 60):
        got = paper_mesh.node(g + k) / paper_mesh.node(g)
        assert got == pytest.approx(r ** k, rel=0.01)


def test_extent_solver():
    mesh = build_mesh_for_extent(1e6, total=400, geo_start=150)
    assert mesh.extent == pytest.approx(1e6, rel=0.05)


def test_bad_parameters_raise():
    with pytest.raises(ParamError):
        build_mesh(head_spacing=-1.0)
    with pytest.raises(ParamError):
        build_mesh(geo_ratio=0.99)
    with pytest.raises(ParamError):
        build_mesh(total=500, geo_start=1200)


def test_mesh_text_round_trip(paper_mesh):
    text = paper_mesh.to_text()
    back = Mesh.from_text(text)
    assert np.array_equal(back._values, paper_mesh._values)
    assert back.params == paper_mesh.params
    assert back.content_hash() == paper_mesh.content_hash()


def test_refined_mesh_structure(paper_mesh):
    ref = RefinedMesh(paper_mesh)
    assert len(ref) == 4 * (paper_mesh.n + 4) + 1
    assert ref.points[0] == 0.0
    for j in [0, 5, 101, len(ref) - 2]:
        i = ref.parent_cell(j)
        assert paper_mesh.node(i) <= ref.points[j]
        assert ref.points[j + 1] <= paper_mesh.node(i + 1) + 1e-30


# --- raw B-spline -----------------------------------------------------------


def _cox_de_boor(knots, x):
    """Independent recursion oracle for the divided-difference spline.

    Bs(x; s) here is 4 * [s_1..s_5](t - x)^3_+, which equals the standard
    order-4 normalized B-spline divided by (s_5 - s_1)/4 factors; build it
    from the textbook recursion on unnormalized splines.
    """
    knots = list(map(float, knots))

    def m(t, k, d):
        # unnormalized B-spline of degree d on knots t[k..k+d+1]
        if d == 0:
            return 1.0 if t[k] <= x < t[k + 1] else 0.0
        left = 0.0
        if t[k + d] != t[k]:
            left = (x - t[k]) / (t[k + d] - t[k]) * m(t, k, d - 1)
        right = 0.0
        if t[k + d + 1] != t[k + 1]:
            right = (t[k + d + 1] - x) / (t[k + d + 1] - t[k + 1]) * m(
                t, k + 1, d - 1
            )
        return left + right

    val = m(knots, 0, 3)
    return 4.0 * val / (knots[4] - knots[0])


def test_bspline_matches_recursion_oracle():
    knots = [0.0, 1.0, 2.0, 3.0, 4.0]
    for x in [0.3, 1.0, 1.7, 2.0, 2.9, 3.99]:
        got = bspline_eval(knots, x)
        want = _cox_de_boor(knots, x)
        assert got == pytest.approx(want, abs=1e-13)
    knots2 = [0.1, 0.5, 0.6, 2.0, 7.0]
    for x in np.linspace(0.11, 6.99, 37):
        assert bspline_eval(knots2, float(x)) == pytest.approx(
            _cox_de_boor(knots2, float(x)), abs=1e-12
        )


def test_bspline_zero_outside_support():
    knots = [1.0, 2.0, 3.0, 4.0, 5.0]
    assert bspline_eval(knots, 0.5) == 0.0
    assert bspline_eval(knots, 5.5) == 0.0
    assert bspline_eval(knots, 1.0) == 0.0


def test_bspline_reflection_identity():
    rng = np.random.default_rng(17)
    for _ in range(25):
        s = np.sort(rng.uniform(-3, 3, size=5))
        if np.min(np.diff(s)) < 1e-3:
            continue
        x = rng.uniform(s[0], s[4])
        left = bspline_eval(sorted(-s), x)
        right = bspline_eval(s, -x)
        assert left == pytest.approx(right, rel=1e-10, abs=1e-12)


def test_bspline_forms_agree_across_middle():
    # both closed forms must give the same value near the middle knot
    knots = [0.0, 0.7, 1.1, 2.5, 4.0]
    for x in [1.0999, 1.1001, 1.1, 0.2, 3.0]:
        v = bspline_eval(knots, x)
        assert v == pytest.approx(_cox_de_boor(knots, x), abs=1e-13)


def test_bspline_fourth_derivative_vanishes():
    knots = [0.0, 1.0, 2.0, 3.0, 4.0]
    # order-4 finite difference of order-0 values inside one knot interval
    h = 0.08
    x = 2.31  # x +- 2h stays inside (2, 3)
    vals = [bspline_eval(knots, x + k * h) for k in range(-2, 3)]
    fd4 = (vals[0] - 4 * vals[1] + 6 * vals[2] - 4 * vals[3] + vals[4]) / h**4
    assert abs(fd4) < 1e-9


def test_bspline_interval_encloses_samples():
    knots = [0.0, 0.4, 1.3, 2.0, 3.7]
    for (a, b) in [(0.1, 0.3), (1.2, 1.5), (3.0, 3.7), (-1.0, 0.2)]:
        iv = bspline_eval_interval(knots, Interval(a, b))
        for x in np.linspace(a, b, 57):
            assert iv.lo - 1e-14 <= bspline_eval(knots, float(x)) <= iv.hi + 1e-14
        iv1 = bspline_eval_interval(knots, Interval(a, b), order=1)
        for x in np.linspace(max(a, 0.0) + 1e-9, b - 1e-9, 17):
            assert iv1.lo - 1e-10 <= bspline_eval(knots, float(x), 1) <= iv1.hi + 1e-10


# --- basis ------------------------------------------------------------------


def test_basis_is_odd(small_basis):
    rng = np.random.default_rng(4)
    for i in [1, 2, 3, 10]:
        for _ in range(10):
            x = rng.uniform(0, small_basis.mesh.extent)
            assert small_basis.eval(i, x) == pytest.approx(
                -small_basis.eval(i, -x), rel=1e-12, abs=1e-300
            )


def test_basis_normalized_to_unit_sup(small_basis):
    for i in [1, 2, 5, 40, 80]:
        lo, hi = small_basis.support(i)
        xs = np.linspace(lo, hi, 2001)
        m = max(abs(small_basis.eval(i, float(x))) for x in xs)
        assert m == pytest.approx(1.0, abs=5e-3)
        assert m <= 1.0 + 1e-9


def test_basis_support_locality(small_basis):
    i = 20
    lo, hi = small_basis.support(i)
    assert small_basis.eval(i, lo - 0.01) == 0.0
    assert small_basis.eval(i, hi + 0.01) == 0.0
    mesh = small_basis.mesh
    assert lo == mesh.node(i - 1) and hi == mesh.node(i + 3)
    assert hi - lo == pytest.approx(
        mesh.node(i + 3) - mesh.node(i - 1)
    )  # five consecutive knots


def test_basis_c21_continuity(small_basis):
    # one-sided limits of derivatives 0..2 agree at every knot: compare
    # quadratic extrapolations from each side against each other
    rng = np.random.default_rng(12)
    coeffs = rng.normal(size=small_basis.count)
    mesh = small_basis.mesh
    for j in [2, 3, 5, 17, 35]:
        xk = mesh.node(j)
        h = 1e-4 * max(0.05, mesh.node(j + 1) - xk)
        for order in (0, 1, 2):
            left = [
                small_basis.eval_combination(coeffs, xk - k * h, order)
                for k in (1, 2, 3)
            ]
            right = [
                small_basis.eval_combination(coeffs, xk + k * h, order)
                for k in (1, 2, 3)
            ]
            lval = 3 * left[0] - 3 * left[1] + left[2]
            rval = 3 * right[0] - 3 * right[1] + right[2]
            scale = max(1.0, abs(lval), abs(rval))
            assert abs(lval - rval) / scale < 1e-6, (j, order)


def test_interpolate_reproduces_basis_function(small_basis):
    pts = small_basis.collocation_points()
    target = np.array([small_basis.eval(3, float(x)) for x in pts])
    coef = small_basis.interpolate(target)
    e3 = np.zeros(small_basis.count)
    e3[2] = 1.0
    assert np.allclose(coef, e3, atol=1e-10)


def test_interpolate_zero_gives_zero(small_basis):
    coef = small_basis.interpolate(np.zeros(small_basis.count))
    assert np.allclose(coef, 0.0)


def test_interpolate_odd_cubic_in_head(small_basis):
    # inside the linear head the spline space contains odd cubics
    pts = small_basis.collocation_points()
    f = lambda x: -x + 0.3 * x**3
    coef = small_basis.interpolate(np.array([f(x) for x in pts]))
    mesh = small_basis.mesh
    head_hi = mesh.node(mesh.params["head_count"] - 4)
    for x in np.linspace(mesh.node(3), head_hi, 41):
        got = small_basis.eval_combination(coef, float(x))
        assert got == pytest.approx(f(x), rel=1e-9, abs=1e-11)


def test_eval_combination_interval_contains_pointwise(small_basis):
    rng = np.random.default_rng(8)
    coeffs = rng.normal(size=small_basis.count)
    mesh = small_basis.mesh
    for j in [1, 4, 19, 50]:
        a, b = mesh.node(j), mesh.node(j + 1)
        iv = small_basis.eval_combination_interval(coeffs, Interval(a, b))
        for x in np.linspace(a, b, 33):
            v = small_basis.eval_combination(coeffs, float(x))
            assert iv.lo - 1e-12 <= v <= iv.hi + 1e-12
