"""Independent reference computations; none of them touch clampedlab."""

import math

import numpy as np
from scipy.linalg import ldl


def inertia_count(a, sigma):
    """Number of eigenvalues of the symmetric matrix a below sigma (Sylvester inertia)."""
    _, d, _ = ldl(a - sigma * np.eye(a.shape[0]))
    # d is block diagonal with 1x1 and 2x2 blocks; its eigenvalues carry the inertia
    return int(np.count_nonzero(np.linalg.eigvalsh(d) < 0))


def bisection_eigenvalues(a, rel_tol=1e-13):
    """All eigenvalues of a symmetric matrix by inertia bisection."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    radius = np.max(np.sum(np.abs(a), axis=1))
    out = []
    for i in range(n):
        lo, hi = -radius - 1.0, radius + 1.0
        while hi - lo > rel_tol * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if inertia_count(a, mid) > i:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def _bisect(func, lo, hi, tol=1e-15):
    flo = func(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol * hi:
            break
    return 0.5 * (lo + hi)


def beam_roots(count):
    """mu_i with cos(mu) cosh(mu) = 1, mu > 0; the i-th root lies near (i + 1/2) pi."""
    def func(mu):
        # scaled by 1/cosh to stay bounded
        return math.cos(mu) - 1.0 / math.cosh(mu)

    return [_bisect(func, (i + 0.5) * math.pi - 0.4, (i + 0.5) * math.pi + 0.4)
            for i in range(1, count + 1)]


def _bessel_series(order, x, modified):
    # sum_j s^j (x/2)^{2j + order} / (j! (j + order)!), s = +1 for I, -1 for J
    sign = 1.0 if modified else -1.0
    term = (x / 2.0) ** order / math.factorial(order)
    total = term
    j = 0
    while abs(term) > 1e-18 * abs(total) or j < 5:
        j += 1
        term *= sign * (x / 2.0) ** 2 / (j * (j + order))
        total += term
    return total


def disk_root():
    """First k > 0 with J0(k) I1(k) + J1(k) I0(k) = 0 (clamped unit disk, lambda_1 = k^4)."""
    def func(k):
        j0, j1 = _bessel_series(0, k, False), _bessel_series(1, k, False)
        i0, i1 = _bessel_series(0, k, True), _bessel_series(1, k, True)
        return j0 * i1 + j1 * i0

    return _bisect(func, 2.5, 3.8)
