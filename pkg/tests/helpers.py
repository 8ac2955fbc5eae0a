"""Shared non-rigorous oracles for the test suite.

High-precision kernel values come from mpmath; adaptive quadrature is
scipy's QUADPACK.  Nothing here is ever imported by the package itself.
"""

import mpmath as mp
import numpy as np
from scipy.integrate import quad

mp.mp.dps = 50


def mp_kernel(tag, alpha, x, y):
    """50-digit kernel evaluation by the defining formula."""
    a = mp.mpf(alpha)
    x = mp.mpf(x)
    y = mp.mpf(y)
    if tag in ("K1", "K1J"):
        val = abs(x + y) ** a - abs(x - y) ** a
        if tag == "K1" or y >= x:
            val -= 2 * a * x * y ** (a - 1)
        return val
    if tag in ("K2", "K2J"):
        val = a * abs(x + y) ** (a - 1)
        if x != y:
            val -= a * mp.sign(x - y) * abs(x - y) ** (a - 1)
        if tag == "K2" or y >= x:
            val -= 2 * a * y ** (a - 1)
        return val
    if tag == "KDelta":
        return mp_kernel("K2", alpha, x, y) - mp_kernel("K1", alpha, x, y) / x
    raise ValueError(tag)


def adaptive_quad(f, a, b, singular_points=(), tol=1e-10):
    """Gauss-Kronrod subdivision oracle; returns (value, error_estimate)."""
    pts = [p for p in singular_points if a < p < b]
    val, err = quad(f, a, b, points=pts or None, limit=400,
                    epsabs=tol, epsrel=tol)
    return val, err


def sample_points(iv, n=40, rng=None):
    rng = rng or np.random.default_rng(0)
    return rng.uniform(iv[0], iv[1], size=n)
