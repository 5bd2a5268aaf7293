"""Dense symmetric eigensolver.

Householder reduction to tridiagonal form, implicit-shift QL for the
eigenvalues, inverse iteration on the tridiagonal matrix for the requested
eigenvectors, then back-transformation through the stored reflectors.
Everything is deterministic: no random start vectors, fixed shift strategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InputError

_EPS = np.finfo(float).eps
_MAX_QL_SWEEPS = 60
_INVERSE_ITERATIONS = 3


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray


def as_symmetric(a, name="matrix"):
    """Return `a` as a float array with exactly equal mirrored entries.

    Rounding-level asymmetry (from products like D.T @ W @ D) is removed by
    averaging; anything larger is rejected.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InputError(f"{name} must be a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    scale = np.max(np.abs(a))
    asym = np.max(np.abs(a - a.T))
    if asym > 1e-12 * scale:
        raise InputError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    if asym:
        a = 0.5 * (a + a.T)
    return a


def householder_tridiagonal(a):
    """Reduce symmetric `a` to tridiagonal form Q^T a Q.

    Returns (diag, offdiag, reflectors) where each reflector is a pair
    (v, beta) acting on trailing rows k+1: as I - beta v v^T, or None when
    the column was already reduced.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    d = np.empty(n)
    e = np.zeros(max(n - 1, 0))
    reflectors = []
    for k in range(n - 2):
        x = a[k + 1:, k]
        alpha = math.sqrt(float(x @ x))
        d[k] = a[k, k]
        if alpha == 0.0:
            reflectors.append(None)
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        beta = 2.0 / float(v @ v)
        sub = a[k + 1:, k + 1:]
        p = beta * (sub @ v)
        w = p - (0.5 * beta * float(v @ p)) * v
        # rank-2 update as one GEMM; much faster than two np.outer calls
        left = np.empty((v.size, 2))
        left[:, 0] = v
        left[:, 1] = w
        sub -= left @ left[:, ::-1].T
        e[k] = alpha
        reflectors.append((v, beta))
    if n >= 2:
        d[n - 2] = a[n - 2, n - 2]
        e[n - 2] = a[n - 1, n - 2]
    d[n - 1] = a[n - 1, n - 1]
    return d, e, reflectors


def tridiagonal_eigenvalues(d, e):
    """All eigenvalues of the symmetric tridiagonal matrix (d, e), ascending.

    Implicit QL with the Wilkinson-type shift from the leading 2x2 block.
    """
    d = [float(t) for t in d]
    e = [float(t) for t in e] + [0.0]
    n = len(d)
    hypot = math.hypot
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= _EPS * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > _MAX_QL_SWEEPS:
                raise ConvergenceError(
                    f"QL iteration did not converge for eigenvalue index {l}", index=l)
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))


def _solve_shifted_tridiagonal(d, e, shift, rhs, tiny):
    # Gaussian elimination with partial pivoting on (T - shift I); zero pivots
    # are replaced by `tiny` so exact eigenvalue shifts stay solvable.
    n = len(d)
    if n == 1:
        piv = d[0] - shift
        return np.array([rhs[0] / (piv if abs(piv) > tiny else tiny)])
    # row i holds (u0, u1, u2): entries at columns i, i+1, i+2 after elimination
    u0 = [0.0] * n
    u1 = [0.0] * n
    u2 = [0.0] * n
    b = [float(t) for t in rhs]
    cur0 = d[0] - shift
    cur1 = e[0]
    cur2 = 0.0
    for i in range(n - 1):
        nxt_sub = e[i]
        nxt0 = d[i + 1] - shift
        nxt1 = e[i + 1] if i + 1 < n - 1 else 0.0
        if abs(nxt_sub) > abs(cur0):
            # swap rows i and i+1
            u0[i], u1[i], u2[i] = nxt_sub, nxt0, nxt1
            b[i], b[i + 1] = b[i + 1], b[i]
            factor = cur0 / nxt_sub
            cur0, cur1 = cur1 - factor * nxt0, cur2 - factor * nxt1
            cur2 = 0.0
        else:
            if abs(cur0) <= tiny:
                cur0 = tiny
            u0[i], u1[i], u2[i] = cur0, cur1, cur2
            factor = nxt_sub / cur0
            cur0, cur1 = nxt0 - factor * cur1, nxt1 - factor * cur2
            cur2 = 0.0
        b[i + 1] -= factor * b[i]
    if abs(cur0) <= tiny:
        cur0 = tiny
    u0[n - 1] = cur0
    x = [0.0] * n
    x[n - 1] = b[n - 1] / u0[n - 1]
    x[n - 2] = (b[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (b[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / u0[i]
    return np.array(x)


def _start_vector(n, attempt):
    # fixed smooth start first, then unit vectors when a cluster swallows it
    if attempt == 0:
        x = np.cos(0.7 * np.arange(n) + 0.3) + 1.5
    else:
        x = np.full(n, 1e-3)
        x[attempt - 1] = 1.0
    return x / np.linalg.norm(x)


def _inverse_iterate(d, e, lam, x, prev, tiny):
    for _ in range(_INVERSE_ITERATIONS):
        x = _solve_shifted_tridiagonal(d, e, lam, x, tiny)
        before = np.linalg.norm(x)
        if prev.shape[1]:
            x -= prev @ (prev.T @ x)
            x -= prev @ (prev.T @ x)
        nrm = np.linalg.norm(x)
        if not np.isfinite(nrm) or nrm <= 1e-10 * before:
            return None
        x /= nrm
    return x


def tridiagonal_eigenvectors(d, e, values):
    """Eigenvectors of tridiagonal (d, e) for the given eigenvalues.

    Inverse iteration from a fixed start vector; each new vector is
    orthogonalized against the earlier ones so clusters and exact
    degeneracies still give an orthonormal set.
    """
    d = [float(t) for t in d]
    e = [float(t) for t in e]
    n = len(d)
    norm_t = max(abs(t) for t in d) + (2 * max(abs(t) for t in e) if e else 0.0)
    tiny = _EPS * max(norm_t, np.finfo(float).tiny)
    vectors = np.zeros((n, len(values)))
    for j, lam in enumerate(values):
        prev = vectors[:, :j]
        for attempt in range(n + 1):
            x = _inverse_iterate(d, e, lam, _start_vector(n, attempt), prev, tiny)
            if x is not None:
                break
        else:
            raise ConvergenceError(f"inverse iteration broke down for eigenvalue index {j}", index=j)
        vectors[:, j] = x
    return vectors


def _apply_reflectors(reflectors, y):
    for k in range(len(reflectors) - 1, -1, -1):
        refl = reflectors[k]
        if refl is None:
            continue
        v, beta = refl
        block = y[k + 1:]
        block -= np.outer(beta * v, v @ block)
    return y


def eigen_symmetric(a, count):
    """The `count` smallest eigenpairs of symmetric `a`, values ascending."""
    a = as_symmetric(a)
    n = a.shape[0]
    count = int(count)
    if not 1 <= count <= n:
        raise InputError(f"count must lie in [1, {n}], got {count}")
    d, e, reflectors = householder_tridiagonal(a)
    values = tridiagonal_eigenvalues(d, e)[:count]
    y = tridiagonal_eigenvectors(d, e, values)
    x = _apply_reflectors(reflectors, y)
    return [EigenPair(float(values[j]), x[:, j].copy()) for j in range(count)]


def eigen_generalized_diag_mass(k, mass, count):
    """Smallest eigenpairs of K x = lambda M x with M = diag(mass).

    Vectors come back M-orthonormal.
    """
    k = as_symmetric(k, "stiffness matrix")
    mass = np.asarray(mass, dtype=float)
    if mass.shape != (k.shape[0],):
        raise InputError(f"mass has shape {mass.shape}, expected ({k.shape[0]},)")
    if not np.all(np.isfinite(mass)) or np.any(mass <= 0):
        bad = int(np.argmin(np.where(np.isfinite(mass), mass, -np.inf)))
        raise InputError(f"mass weights must be positive; entry {bad} is {mass[bad]}")
    # normalizing by the largest weight keeps the pencil's rounding unchanged
    # when K and M are rescaled by powers of two (domain dilations by 2^j)
    top = float(np.max(mass))
    scale = 1.0 / np.sqrt(mass / top)
    reduced = (k / top) * np.outer(scale, scale)
    pairs = eigen_symmetric(0.5 * (reduced + reduced.T), count)
    back = scale / np.sqrt(top)
    return [EigenPair(p.value, p.vector * back) for p in pairs]
