"""Sub-critical exponent machinery: the decay-correction root, moment
asymptotics, residual of the perturbed profile, and blowup scaling.

The perturbed profile carries an extra algebraic decay ``beta`` solving
a scalar root equation driven by the infinite moment integral; all
quantities here are plain floats (the certification lives upstream).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateProfile, NoBracket, ParamError
from .kernels import ALPHA_BAR, AlphaParam, falling_product, kernel_point
from .kernels import KernelId


@dataclass(frozen=True)
class BetaSolution:
    alpha: AlphaParam
    beta: float
    residual_of_root: float
    iterations: int

    @property
    def eps_hat(self):
        return self.alpha.eps - self.beta


@dataclass(frozen=True)
class ScalingConstants:
    j_inf: float
    c_l_bar: float
    c_w_bar: float
    c_l_star: float
    c_w_star: float


def w_beta(profile, beta, x, order=0):
    """The decay-corrected profile W <x>^beta (value or first derivative)."""
    bracket = (1.0 + x * x) ** (0.5 * beta)
    if order == 0:
        return profile.value(x) * bracket
    if order == 1:
        return (profile.value(x, 1)
                + profile.value(x) * beta * x / (1.0 + x * x)) * bracket
    raise ParamError("only orders 0 and 1 are provided")


def _chi_corr(ts, z0, beta):
    """Cutoff and bracket correction on a log grid, overflow-safe."""
    with np.errstate(over="ignore"):
        ys = np.exp(ts)
        u = np.maximum(ys / z0 - 1.0, 0.0)
        chi = np.where(u > 0.0, 1.0 - 1.0 / (1.0 + u ** 5), 0.0)
        corr = np.where(np.isfinite(ys),
                        (1.0 + np.minimum(ys, 1e300) ** -2.0) ** (0.5 * beta),
                        1.0)
    return chi, corr


def j_alpha_beta(profile, alpha, beta, x):
    """The moment integral int_0^x y^(alpha-1) W_beta(y) dy."""
    a = alpha.alpha
    seam = profile.seam
    hi = min(x, seam)
    total = _moment_on_mesh(profile, a, beta, hi)
    if x > seam:
        total += _tail_moment(profile, alpha, beta, lo=seam, hi=x)
    return total


def j_hat(value):
    return math.sqrt(1.0 + value * value)


def j_alpha_beta_inf(profile, alpha, beta):
    """The full moment integral out to infinity."""
    a = alpha.alpha
    total = _moment_on_mesh(profile, a, beta, profile.seam)
    total += _tail_moment(profile, alpha, beta, lo=profile.seam, hi=None)
    return total


_SAMPLE_CACHE = {}


def _mesh_samples(profile, n_sub=8):
    """Simpson nodes and W-weighted weights over the spline region,
    cached per profile so the root search reuses the expensive spline
    evaluations."""
    key = id(profile)
    if key not in _SAMPLE_CACHE:
        mesh = profile.basis.mesh
        ys_all, wv_all = [], []
        for i in range(1, mesh.n + 4):
            lo_c, hi_c = mesh.node(i), mesh.node(i + 1)
            ys = np.linspace(lo_c, hi_c, 2 * n_sub + 1)
            h = ys[1] - ys[0]
            w = np.ones_like(ys)
            w[1:-1:2] = 4.0
            w[2:-1:2] = 2.0
            w *= h / 3.0
            vals = np.array([profile.value(float(y)) for y in ys])
            ys_all.append(ys)
            wv_all.append(w * vals)
        _SAMPLE_CACHE[key] = (np.concatenate(ys_all), np.concatenate(wv_all))
    return _SAMPLE_CACHE[key]


def _moment_on_mesh(profile, a, beta, hi):
    """Quadrature of y^(a-1) W <y>^beta up to hi from cached samples."""
    ys, wvals = _mesh_samples(profile)
    mask = (ys <= hi) & (ys > 0.0)
    yk = ys[mask]
    return float(np.dot(wvals[mask],
                        yk ** (a - 1.0) * (1.0 + yk * yk) ** (0.5 * beta)))


def _tail_moment(profile, alpha, beta, lo, hi=None, n_grid=4001):
    """Tail moment of the explicit ansatz in log coordinates."""
    a = alpha.alpha
    expo = (1.0 / 3.0) - a - beta
    if expo <= 0:
        raise ParamError("tail moment diverges")
    ans = profile.ansatz
    t0 = math.log(lo)
    t_end = math.log(hi) if hi is not None else t0 + 60.0 / expo
    ts = np.linspace(t0, t_end, n_grid)
    if len(ts) % 2 == 0:
        ts = np.linspace(t0, t_end, n_grid + 1)
    third = 1.0 / 3.0
    wfa = ans.c0 + ans.c1 * ts ** (-third) + ans.c2 * ts ** (-2 * third)
    chi, corr = _chi_corr(ts, ans.z0, beta)
    vals = chi * wfa * corr * np.exp(-expo * (ts - t0))
    h = ts[1] - ts[0]
    w = np.ones_like(ts)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = float(np.dot(w, vals)) * h / 3.0
    return integral * lo ** -expo


def root_function(profile, alpha, beta):
    """G(beta) = (2 a eps + 4 a beta) J_inf(beta) - 2 beta."""
    a = alpha.alpha
    eps = alpha.eps
    j_inf = j_alpha_beta_inf(profile, alpha, beta)
    return (2.0 * a * eps + 4.0 * a * beta) * j_inf - 2.0 * beta


def solve_beta(profile, alpha, tol=1e-12, max_iter=80):
    """Bisection for G(beta) = -8/3 on [-eps/2, 0] (G is decreasing)."""
    eps = alpha.eps
    if eps <= 0:
        raise ParamError("needs a strictly subcritical exponent")
    target = -8.0 / 3.0
    lo, hi = -0.5 * eps, 0.0
    g_lo = root_function(profile, alpha, lo)
    g_hi = root_function(profile, alpha, hi)
    if not (g_lo > target > g_hi):
        raise NoBracket(
            f"G({lo}) = {g_lo}, G(0) = {g_hi} do not bracket {target}")
    it = 0
    while hi - lo > tol * max(eps, 1e-300) and it < max_iter:
        mid = 0.5 * (lo + hi)
        if root_function(profile, alpha, mid) > target:
            lo = mid
        else:
            hi = mid
        it += 1
    beta = 0.5 * (lo + hi)
    return BetaSolution(alpha=alpha, beta=beta,
                        residual_of_root=root_function(profile, alpha, beta)
                        - target,
                        iterations=it)


# ---------------------------------------------------------------------------
# residual of the perturbed profile


def _kernel_tail_series(profile, alpha, beta, x, second_kind, terms=5):
    """K_J(W_beta)(x) over y beyond the seam via the x/y expansion.

    Above the diagonal the J-kernels already subtract the singular
    moment, so the first surviving orders are cubic (first kind) and
    quadratic (second kind): this cancellation is what keeps the tail
    contribution O((x/seam)^2) instead of O(x J_tail).
    """
    a = alpha.alpha
    seam = profile.seam
    if x * 4.0 > seam:
        raise ParamError("tail series needs x below a quarter of the seam")
    total = 0.0
    start = 2 if second_kind else 3
    for i in range(start, start + 2 * terms, 2):
        mom = _tail_moment_power(profile, alpha, beta, shift=i,
                                 second_kind=second_kind)
        if second_kind:
            c = 2.0 * a * falling_product(a - 1.0, i) / math.factorial(i)
        else:
            c = 2.0 * falling_product(a, i) / math.factorial(i)
        total += c * x ** i * mom
    return total


def _tail_moment_power(profile, alpha, beta, shift, second_kind,
                       n_grid=2001):
    """int_seam^inf y^(a - s - shift) W_beta dy with s = 1 for the
    second kind (derivative) kernel, 0 otherwise."""
    a = alpha.alpha
    base = a - (1.0 if second_kind else 0.0) - shift
    expo = -(base + 2.0 / 3.0 + beta)
    ans = profile.ansatz
    lo = profile.seam
    t0 = math.log(lo)
    ts = np.linspace(t0, t0 + max(60.0 / max(expo, 1e-9), 10.0), n_grid)
    third = 1.0 / 3.0
    wfa = ans.c0 + ans.c1 * ts ** (-third) + ans.c2 * ts ** (-2 * third)
    chi, corr = _chi_corr(ts, ans.z0, beta)
    vals = chi * wfa * corr * np.exp(-expo * (ts - t0))
    h = ts[1] - ts[0]
    w = np.ones_like(ts)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.dot(w, vals)) * h / 3.0 * lo ** -expo


def velocity_alpha_beta(profile, alpha, beta, x, j_val=None):
    """(V, V_x) of the perturbed profile at x via the J-split kernels."""
    a = alpha.alpha
    seam = profile.seam
    if j_val is None:
        j_val = j_alpha_beta(profile, alpha, beta, x)

    def src(y):
        return w_beta(profile, beta, y)

    def k1j(y):
        return kernel_point(KernelId.K1J, alpha, x, y) * src(y)

    def k2j(y):
        return kernel_point(KernelId.K2J, alpha, x, y) * src(y)

    v1, vx1 = 0.0, 0.0
    segments = [(0.0, 0.5 * x), (0.5 * x, 2.0 * x), (2.0 * x, 16.0 * x),
                (16.0 * x, seam)]
    for (lo, hi) in segments:
        if hi <= lo:
            continue
        pts = [p for p in (x,) if lo < p < hi]
        r1, _ = quad(k1j, lo, hi, points=pts or None, limit=200,
                     epsabs=1e-10, epsrel=1e-8)
        r2, _ = quad(k2j, lo, hi, points=pts or None, limit=200,
                     epsabs=1e-10, epsrel=1e-8)
        v1 += r1
        vx1 += r2
    v1 += _kernel_tail_series(profile, alpha, beta, x, second_kind=False)
    vx1 += _kernel_tail_series(profile, alpha, beta, x, second_kind=True)
    v = x + v1 - 2.0 * a * x * j_val
    vx = 1.0 + vx1 - 2.0 * a * j_val
    return v, vx


def residual_alpha_beta(profile, alpha, beta, x):
    """Relative residual of the decay-corrected profile at x."""
    a = alpha.alpha
    if x <= 0:
        return 0.0
    wb = w_beta(profile, beta, x)
    if wb == 0.0:
        raise DegenerateProfile(f"perturbed profile vanishes at {x}")
    v, vx = velocity_alpha_beta(profile, alpha, beta, x)
    slope = w_beta(profile, beta, x, 1) / wb
    return (3.0 - a) - (1.0 - a) * vx - 2.0 * v * slope


def scaling_constants(profile, alpha, beta):
    """Blowup scaling exponents from the moment at infinity."""
    a = alpha.alpha
    j_inf = j_alpha_beta_inf(profile, alpha, beta)
    c_l = 2.0 - 4.0 * a * j_inf
    c_w = 2.0 + (1.0 - a) * 2.0 * a * j_inf
    denom = c_w + a * c_l
    if denom == 0:
        raise DegenerateProfile("degenerate rescaling denominator")
    c_l_star = -c_l / denom
    c_w_star = -c_w / denom
    return ScalingConstants(j_inf=j_inf, c_l_bar=c_l, c_w_bar=c_w,
                            c_l_star=c_l_star, c_w_star=c_w_star)
