"""Graded meshes and the odd fourth-order B-spline basis.

The mesh is linear near the origin, geometric in the tail, glued by a
constant spacing-growth segment and smoothed with an averaging filter.
Basis functions are normalized, odd-symmetrized cubic B-splines on the
mesh knots; the near-field part of a profile is a coefficient vector in
this basis.
"""

import ast
import math
import hashlib
import io

import numpy as np
from scipy.linalg import solve_banded

from .errors import IntervalError, ParamError, SingularSystem
from .interval import Interval

_INF = float("inf")


class Mesh:
    """Strictly increasing node vector indexed -1..N+5 (paper-style).

    ``node(i)`` accepts the full ghost-extended index range; ``nodes``
    is the positive part x_1..x_{N+5} as a numpy array.
    """

    def __init__(self, values, params):
        self._values = np.asarray(values, dtype=float)  # index i -> pos i+1
        self.params = dict(params)
        self.n = int(params["total"])
        if not np.all(np.diff(self._values) > 0):
            raise ParamError("mesh nodes are not strictly increasing")
        if self.node(1) != 0.0:
            raise ParamError("node 1 must be 0")

    def node(self, i):
        return float(self._values[i + 1])

    @property
    def nodes(self):
        return self._values[2:]

    @property
    def extent(self):
        return self.node(self.n)

    @property
    def last_knot(self):
        return self.node(self.n + 2)

    def knots_for(self, i):
        """The five knots of basis function i (centered at node i+1).

        The spline centered on the origin node has symmetric knots, so
        its odd symmetrization vanishes identically; centering the first
        basis function one node up keeps all N functions independent.
        """
        return np.array([self.node(i + 1 + j) for j in range(-2, 3)])

    def cell_index(self, x):
        """Index i with node(i) <= x < node(i+1), for x in [0, extent+]."""
        j = int(np.searchsorted(self._values, x, side="right")) - 1
        return j - 1

    def content_hash(self):
        h = hashlib.sha256()
        h.update(self._values.tobytes())
        return h.hexdigest()[:16]

    def to_text(self):
        buf = io.StringIO()
        keys = sorted(self.params)

        def fmt(v):
            v = v.item() if hasattr(v, "item") else v
            return repr(v)

        headline = " ".join(f"{k}={fmt(self.params[k])}" for k in keys)
        buf.write(f"# mesh v1 {headline}\n")
        for v in self._values:
            buf.write(f"{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# mesh v1 "):
            raise ParamError("bad mesh header")
        params = {}
        for tok in lines[0][len("# mesh v1 "):].split():
            k, v = tok.split("=", 1)
            try:
                params[k] = ast.literal_eval(v)
            except (ValueError, SyntaxError) as exc:
                raise ParamError(f"bad mesh parameter {tok}") from exc
        vals = np.array([float(ln) for ln in lines[1:]])
        return cls(vals, params)


def _transition_gamma(head_spacing, head_x, m, geo_ratio):
    """Spacing growth factor joining the linear head to the geometric tail.

    Solves h*gamma**(m+1) == (geo_ratio-1)*x_geo(gamma) so the spacing is
    continuous where the node-geometric tail starts.
    """

    def joint_gap(g):
        if g == 1.0:
            x_geo = head_x + head_spacing * m
        else:
            x_geo = head_x + head_spacing * g * (g ** m - 1.0) / (g - 1.0)
        return head_spacing * g ** (m + 1) - (geo_ratio - 1.0) * x_geo

    lo, hi = 1.0, 1.0001
    while joint_gap(hi) < 0:
        hi = 1.0 + (hi - 1.0) * 2.0
        if hi > 10.0:
            raise ParamError("cannot join head to geometric tail")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if joint_gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_mesh(head_count=75, head_spacing=1.0 / 384, geo_start=1200,
               geo_ratio=1.06, total=2000, smoothing_passes=3):
    """Graded mesh: linear head, smooth transition, geometric tail.

    After construction the averaging filter x_i <- (x_{i-1}+2x_i+x_{i+1})/4
    runs ``smoothing_passes`` times over interior nodes, then ghost nodes
    are set by reflection through 0.
    """
    if head_spacing <= 0 or geo_ratio <= 1 or total < geo_start:
        raise ParamError("bad mesh parameters")
    if head_count < 3 or geo_start <= head_count:
        raise ParamError("need 3 <= head_count < geo_start")
    n_top = total + 5
    x = np.zeros(n_top)  # x[k] holds node k+1
    for i in range(1, head_count + 1):
        x[i - 1] = (i - 1) * head_spacing
    m = geo_start - head_count
    gamma = _transition_gamma(head_spacing, x[head_count - 1], m, geo_ratio)
    d = head_spacing
    for i in range(head_count, geo_start):
        d *= gamma
        x[i] = x[i - 1] + d
    for i in range(geo_start, n_top):
        x[i] = x[i - 1] * geo_ratio
    for _ in range(smoothing_passes):
        interior = 0.25 * (x[:-2] + 2.0 * x[1:-1] + x[2:])
        x[1:-1] = interior
    values = np.empty(n_top + 2)
    values[2:] = x
    values[1] = -x[1]   # node 0  = -node 2
    values[0] = -x[2]   # node -1 = -node 3
    params = dict(head_count=head_count, head_spacing=head_spacing,
                  geo_start=geo_start, geo_ratio=geo_ratio, total=total,
                  smoothing_passes=smoothing_passes)
    return Mesh(values, params)


def build_mesh_for_extent(extent, total, head_count=75,
                          head_spacing=1.0 / 384, geo_start=None,
                          smoothing_passes=3):
    """Solve the tail ratio so node(total) lands near ``extent``."""
    if geo_start is None:
        geo_start = max(head_count + 25, int(0.35 * total))

    def end(ratio):
        mesh = build_mesh(head_count, head_spacing, geo_start, ratio,
                          total, smoothing_passes)
        return mesh.extent

    lo, hi = 1.0005, 1.5
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if end(mid) < extent:
            lo = mid
        else:
            hi = mid
    return build_mesh(head_count, head_spacing, geo_start, 0.5 * (lo + hi),
                      total, smoothing_passes)


class RefinedMesh:
    """Each parent cell [x_i, x_{i+1}] split in four; X_1 = 0."""

    def __init__(self, parent, splits=4):
        self.parent = parent
        self.splits = int(splits)
        n = parent.n
        pts = []
        for i in range(1, n + 5):
            a = parent.node(i)
            b = parent.node(i + 1)
            for j in range(self.splits):
                pts.append(a + (j / self.splits) * (b - a))
        pts.append(parent.node(n + 5))
        self.points = np.array(pts)

    def __len__(self):
        return len(self.points)

    def parent_cell(self, j):
        """Parent index i with [X_j, X_{j+1}] inside [x_i, x_{i+1}] (0-based j)."""
        return j // self.splits + 1


# ---------------------------------------------------------------------------
# raw B-spline evaluation


def _poly_terms(knots, j0, use_left_form):
    """Active (coeff, knot) pairs of the cubic piece on [s_j0, s_j0+1)."""
    m = []
    for l in range(5):
        prod = 1.0
        for k in range(5):
            if k != l:
                prod *= knots[l] - knots[k]
        m.append(prod)
    if use_left_form:
        # sum over knots below x (negated): least summands on the left half
        return [(-4.0 / m[l], knots[l]) for l in range(j0 + 1)]
    return [(4.0 / m[l], knots[l]) for l in range(j0 + 1, 5)]


_DERIV_FACTOR = {0: 1.0, 1: -3.0, 2: 6.0, 3: -6.0}
_DERIV_POWER = {0: 3, 1: 2, 2: 1, 3: 0}


def bspline_eval(knots, x, order=0):
    """Odd divided-difference cubic B-spline value or derivative at x.

    Uses the summation over knots above x on the left half of the support
    and the equivalent summation over knots below x on the right half,
    which avoids cancellation between large terms.
    """
    knots = np.asarray(knots, dtype=float)
    if not np.all(np.diff(knots) > 0):
        raise ParamError("knots must be strictly increasing")
    if order > 3:
        return 0.0
    if x <= knots[0] or x >= knots[4]:
        return 0.0
    j0 = int(np.searchsorted(knots, x, side="right")) - 1
    use_left = x > knots[2]
    total = 0.0
    p = _DERIV_POWER[order]
    f = _DERIV_FACTOR[order]
    for c, s in _poly_terms(knots, j0, use_left):
        total += c * f * (s - x) ** p
    return total


def bspline_eval_interval(knots, x_iv, order=0):
    """Interval enclosure of the spline piece over x_iv (may straddle knots).

    Within each knot interval the cubic is re-expanded around the cell
    midpoint (exact point derivatives, then a short Taylor sum in the
    half-width), which keeps the enclosure at the size of the true
    variation instead of losing the cancellation between raw terms.
    """
    knots = np.asarray(knots, dtype=float)
    if order > 3:
        return Interval(0.0, 0.0)
    lo = max(x_iv.lo, knots[0])
    hi = min(x_iv.hi, knots[4])
    if lo > hi:
        return Interval(0.0, 0.0)
    cuts = [lo] + [float(s) for s in knots if lo < s < hi] + [hi]
    out = None
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        j0 = int(np.searchsorted(knots, mid, side="right")) - 1
        terms = _poly_terms(knots, j0, mid > knots[2])
        imid = Interval.point(mid)
        spread = Interval(a - mid, b - mid)
        piece = Interval(0.0, 0.0)
        power = Interval(1.0, 1.0)
        for k in range(0, 4 - order):
            o = order + k
            dk = Interval(0.0, 0.0)
            f = _DERIV_FACTOR[o]
            p = _DERIV_POWER[o]
            for c, s in terms:
                dk = dk + Interval.point(c) * f \
                    * (Interval.point(s) - imid) ** p
            piece = piece + dk * power * (1.0 / math.factorial(k))
            power = power * spread
        out = piece if out is None else out.hull(piece)
    if x_iv.lo < knots[0] or x_iv.hi > knots[4]:
        out = out.hull(Interval(0.0, 0.0))
    return out


class BsplineBasis:
    """Normalized odd basis B_i on a mesh, i = 1..N.

    B_i(x) = C_i * (Bs(x; s_i) - Bs(-x; s_i)) with s_i the five knots
    centered at node i+1 (see Mesh.knots_for); the reflected term makes
    every function globally odd and only acts near the origin.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.count = mesh.n
        self._knots = [mesh.knots_for(i) for i in range(1, self.count + 1)]
        self.normalizers = np.array(
            [1.0 / self._sup_raw(i) for i in range(1, self.count + 1)]
        )

    def knots(self, i):
        return self._knots[i - 1]

    def _raw(self, i, x, order=0):
        s = self._knots[i - 1]
        val = bspline_eval(s, x, order)
        refl = bspline_eval(s, -x, order)
        if refl != 0.0:
            val -= (-1.0) ** order * refl
        return val

    def _sup_raw(self, i):
        """Exact sup of |raw B_i| from per-piece cubic critical points."""
        s = self._knots[i - 1]
        cands = list(s)
        for a, b in zip(s[:-1], s[1:]):
            # raw B_i is cubic on [a, b]; extrema solve a quadratic
            m = 0.5 * (a + b)
            v0 = self._raw(i, m, 1)
            h = (b - a) / 4.0
            vl = self._raw(i, m - h, 1)
            vr = self._raw(i, m + h, 1)
            # derivative is quadratic: fit through three samples
            c2 = (vl - 2 * v0 + vr) / (2 * h * h)
            c1 = (vr - vl) / (2 * h)
            if c2 != 0.0:
                disc = c1 * c1 - 4 * c2 * v0
                if disc >= 0.0:
                    r = math.sqrt(disc)
                    for t in ((-c1 + r) / (2 * c2), (-c1 - r) / (2 * c2)):
                        if abs(t) <= 2 * h:
                            cands.append(m + t)
            elif c1 != 0.0:
                t = -v0 / c1
                if abs(t) <= 2 * h:
                    cands.append(m + t)
        m = max(abs(self._raw(i, float(t))) for t in cands)
        if m == 0.0:
            raise ParamError(f"degenerate basis function {i}")
        return m

    def eval(self, i, x, order=0):
        if not 1 <= i <= self.count:
            raise IndexError(f"basis index {i} out of range")
        return self.normalizers[i - 1] * self._raw(i, x, order)

    def eval_interval(self, i, x_iv, order=0):
        if not 1 <= i <= self.count:
            raise IndexError(f"basis index {i} out of range")
        s = self._knots[i - 1]
        val = bspline_eval_interval(s, x_iv, order)
        refl = bspline_eval_interval(s, Interval(-x_iv.hi, -x_iv.lo), order)
        c = Interval.point(float(self.normalizers[i - 1]))
        out = val - refl * ((-1.0) ** order)
        return c * out

    def support(self, i):
        s = self._knots[i - 1]
        return float(s[0]), float(s[4])

    def active_at(self, x):
        """Indices i with x inside the (positive or reflected) support."""
        out = []
        ax = abs(x)
        for i in range(1, self.count + 1):
            s = self._knots[i - 1]
            if s[0] < ax < s[4]:
                out.append(i)
            elif i >= 2 and s[0] >= ax:
                break
        return out

    def collocation_points(self):
        """Greville averages of each function's three middle knots."""
        return np.array([
            float(np.mean(self._knots[i][1:4])) for i in range(self.count)
        ])

    def design_matrix(self, points, order=0):
        pts = np.asarray(points, dtype=float)
        a = np.zeros((len(pts), self.count))
        for j, x in enumerate(pts):
            for i in self.active_at(float(x)):
                a[j, i - 1] = self.eval(i, float(x), order)
        return a

    def interpolate(self, values, points=None):
        """Banded collocation solve for the coefficients of given samples."""
        if points is not None:
            a = self.design_matrix(points)
            try:
                coef, *_ = np.linalg.lstsq(a, np.asarray(values), rcond=None)
            except np.linalg.LinAlgError as exc:
                raise SingularSystem(str(exc)) from exc
            return coef
        pts = self.collocation_points()
        values = np.asarray(values, dtype=float)
        if values.shape != pts.shape:
            raise ParamError("need one sample per basis function")
        n = self.count
        ab = np.zeros((5, n))  # two upper, main, two lower diagonals
        for j, x in enumerate(pts):
            for i in self.active_at(float(x)):
                col = i - 1
                band = 2 + (j - col)
                if 0 <= band < 5:
                    ab[band, col] = self.eval(i, float(x))
        try:
            coef = solve_banded((2, 2), ab, values)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        if not np.all(np.isfinite(coef)):
            raise SingularSystem("collocation solve produced non-finite values")
        return coef

    def eval_combination(self, coeffs, x, order=0):
        total = 0.0
        for i in self.active_at(float(x)):
            c = coeffs[i - 1]
            if c != 0.0:
                total += c * self.eval(i, float(x), order)
        return total

    def eval_combination_interval(self, coeffs, x_iv, order=0):
        """Enclosure of d^order sum a_i B_i over x_iv.

        Split at knots, then Taylor-expand the whole combination around
        each sub-cell midpoint so cancellation between basis functions
        survives; the expansion terminates since the piece is cubic.
        """
        if order > 3:
            return Interval(0.0, 0.0)
        nodes = self.mesh._values
        lo, hi = x_iv.lo, x_iv.hi
        inner = [float(v) for v in nodes if lo < v < hi]
        cuts = [lo] + inner + [hi]
        out = None
        for a, b in zip(cuts[:-1], cuts[1:]):
            m = 0.5 * (a + b)
            spread = Interval(a - m, b - m)
            piece = Interval(0.0, 0.0)
            power = Interval(1.0, 1.0)
            for k in range(order, 4):
                dk = self._combo_point(coeffs, m, k)
                piece = piece + dk * power \
                    * (1.0 / math.factorial(k - order))
                power = power * spread
            out = piece if out is None else out.hull(piece)
        return out if out is not None else Interval(0.0, 0.0)

    def _combo_point(self, coeffs, x, order):
        """Tight interval value of d^order sum a_i B_i at the point x."""
        total = Interval(0.0, 0.0)
        pt = Interval.point(x)
        for i in self.active_at(float(x)):
            c = coeffs[i - 1]
            if c != 0.0:
                total = total + Interval.point(float(c)) \
                    * self.eval_interval(i, pt, order)
        return total
