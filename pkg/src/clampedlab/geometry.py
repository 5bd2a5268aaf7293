"""Geometric constants for the submanifold and symmetric-space bounds.

Mean curvature of parametrized immersions, sampled suprema of |H|^2, the
projective-space constants, and pointwise checks of spherical eigenmaps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InputError, SingularityError

_EPS = np.finfo(float).eps


@dataclass
class Immersion:
    """A map from a box of parameters to R^m.

    ``jacobian`` returns the m x n matrix of first derivatives and
    ``hessian`` the m x n x n array of second derivatives; either may be
    omitted, in which case central differences are used (step
    eps^(1/3) * range for first, eps^(1/4) * range for second derivatives).
    """

    name: str
    n: int
    m: int
    position: Callable[[np.ndarray], np.ndarray]
    bounds: list
    jacobian: Optional[Callable] = None
    hessian: Optional[Callable] = None
    periodic: bool = False
    meta: dict = field(default_factory=dict)

    def _steps(self, power):
        return np.array([_EPS ** power * (hi - lo) for lo, hi in self.bounds])

    def first(self, u):
        u = np.asarray(u, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(u), dtype=float)
        steps = self._steps(1 / 3)
        cols = []
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = steps[i]
            cols.append((self.position(u + e) - self.position(u - e)) / (2 * steps[i]))
        return np.column_stack(cols)

    def second(self, u):
        u = np.asarray(u, dtype=float)
        if self.hessian is not None:
            return np.asarray(self.hessian(u), dtype=float)
        steps = self._steps(1 / 4)
        out = np.zeros((self.m, self.n, self.n))
        for i, j in itertools.product(range(self.n), repeat=2):
            ei = np.zeros(self.n)
            ej = np.zeros(self.n)
            ei[i] = steps[i]
            ej[j] = steps[j]
            p = self.position
            out[:, i, j] = (p(u + ei + ej) - p(u + ei - ej) - p(u - ei + ej) + p(u - ei - ej)) / (4 * steps[i] * steps[j])
        return out

    def transformed(self, rotation, translation):
        """The immersion composed with the rigid motion x -> R x + t."""
        rot = np.asarray(rotation, dtype=float)
        t = np.asarray(translation, dtype=float)
        jac = None if self.jacobian is None else (lambda u: rot @ self.jacobian(u))
        hes = None if self.hessian is None else (lambda u: np.einsum("ab,bij->aij", rot, self.hessian(u)))
        return Immersion(self.name, self.n, self.m, lambda u: rot @ self.position(u) + t,
                         self.bounds, jac, hes, self.periodic, dict(self.meta))


def mean_curvature_vector(imm, u):
    """H = (1/n) g^{ij} (d^2 X / du_i du_j) projected to the normal space."""
    jac = imm.first(u)
    metric = jac.T @ jac
    eig = np.linalg.eigvalsh(metric)
    if eig[0] <= 1e-12 * max(eig[-1], 1.0):
        raise SingularityError(f"degenerate first fundamental form at {np.asarray(u).tolist()}")
    inv = np.linalg.inv(metric)
    trace = np.einsum("ij,aij->a", inv, imm.second(u))
    tangential = jac @ (inv @ (jac.T @ trace))
    return (trace - tangential) / imm.n


def mean_curvature_sq(imm, u):
    h = mean_curvature_vector(imm, u)
    return float(h @ h)


@dataclass
class DeltaEstimate:
    value: float
    argmax: tuple
    samples: int
    refinements: int
    note: str = "lower estimate of the supremum from sampling"


def delta_sup(imm, samples=None, per_axis=41, refine_rounds=6):
    """Largest |H|^2 over the samples, with local grid refinement around the max.

    ``samples`` is an explicit array of parameter points (k x n); without it
    a uniform grid of ``per_axis`` points per parameter covers ``imm.bounds``.
    Refinement only evaluates points inside the original parameter box.
    """
    if samples is None:
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in imm.bounds]
        samples = np.array(list(itertools.product(*axes)))
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise InputError("delta_sup needs at least one sample")
    vals = np.array([mean_curvature_sq(imm, u) for u in samples])
    best = int(np.argmax(vals))
    best_u, best_v = samples[best].copy(), float(vals[best])
    count = len(samples)
    lo = np.array([b[0] for b in imm.bounds])
    hi = np.array([b[1] for b in imm.bounds])
    width = (hi - lo) / max(per_axis - 1, 1)
    for _ in range(refine_rounds if refine_rounds else 0):
        axes = [np.linspace(c - w, c + w, 5) for c, w in zip(best_u, width)]
        for u in itertools.product(*axes):
            u = np.array(u)
            if np.any(u < lo) or np.any(u > hi):
                continue
            v = mean_curvature_sq(imm, u)
            count += 1
            if v > best_v:
                best_u, best_v = u, v
        width = width / 2
    return DeltaEstimate(best_v, tuple(map(float, best_u)), count, refine_rounds)


# ---------------------------------------------------------------------------
# rank-one symmetric ambients

AMBIENTS = ("euclidean", "sphere", "real_projective", "complex_projective", "quaternionic_projective")


@dataclass(frozen=True)
class AmbientKind:
    tag: str
    odd_dimensional: bool = False
    totally_real: bool = False

    def __post_init__(self):
        if self.tag not in AMBIENTS:
            raise InputError(f"unknown ambient {self.tag!r}; expected one of {AMBIENTS}")


def projective_constant(ambient, n):
    """The additive constant d(n) for the ambient (1 for the sphere, 0 for R^m)."""
    tag = ambient.tag
    if tag == "euclidean":
        return 0.0
    if tag == "sphere":
        return 1.0
    if tag == "real_projective":
        return 2 * (n + 1) / n
    if tag == "complex_projective":
        return 2 * (n + 2) / n
    return 2 * (n + 4) / n


def delta_prime(ambient, n, delta_h):
    """sup |H|^2 plus the ambient constant, using the sharpest admissible one.

    For complex projective ambients an odd-dimensional M allows
    (2/n)(n + 2 - 1/n) and a totally real X(M) allows 2(n+1)/n.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    if delta_h < 0:
        raise InputError("delta_H must be nonnegative")
    if (ambient.odd_dimensional or ambient.totally_real) and ambient.tag != "complex_projective":
        raise InputError("odd_dimensional / totally_real flags only apply to complex_projective")
    if ambient.odd_dimensional and n % 2 == 0:
        raise InputError(f"odd_dimensional flag contradicts n = {n}")
    candidates = [projective_constant(ambient, n)]
    if ambient.odd_dimensional:
        candidates.append(2.0 / n * (n + 2 - 1.0 / n))
    if ambient.totally_real:
        candidates.append(2.0 * (n + 1) / n)
    return float(delta_h) + min(candidates)


# ---------------------------------------------------------------------------
# catalog


def plane(size=1.0):
    def pos(u):
        return np.array([u[0], u[1], 0.0])

    return Immersion("plane", 2, 3, pos, [(0.0, size), (0.0, size)],
                     jacobian=lambda u: np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
                     hessian=lambda u: np.zeros((3, 2, 2)))


def sphere(radius=1.0):
    """Round sphere in spherical coordinates (theta, phi), poles cut off."""
    r = radius

    def pos(u):
        t, p = u
        return r * np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])

    def jac(u):
        t, p = u
        st, ct, sp, cp = math.sin(t), math.cos(t), math.sin(p), math.cos(p)
        return r * np.array([[ct * cp, -st * sp], [ct * sp, st * cp], [-st, 0.0]])

    def hes(u):
        t, p = u
        st, ct, sp, cp = math.sin(t), math.cos(t), math.sin(p), math.cos(p)
        out = np.zeros((3, 2, 2))
        out[:, 0, 0] = [-st * cp, -st * sp, -ct]
        out[:, 0, 1] = out[:, 1, 0] = [-ct * sp, ct * cp, 0.0]
        out[:, 1, 1] = [-st * cp, -st * sp, 0.0]
        return r * out

    return Immersion("sphere", 2, 3, pos, [(0.05, math.pi - 0.05), (0.0, 2 * math.pi)], jac, hes)


def torus_of_revolution(big_r=2.0, small_r=1.0):
    """(u, v) -> ((R + r cos v) cos u, (R + r cos v) sin u, r sin v)."""
    if not big_r > small_r > 0:
        raise InputError("torus needs R > r > 0")
    R, r = big_r, small_r

    def pos(u):
        a, b = u
        rho = R + r * math.cos(b)
        return np.array([rho * math.cos(a), rho * math.sin(a), r * math.sin(b)])

    def jac(u):
        a, b = u
        rho = R + r * math.cos(b)
        return np.array([[-rho * math.sin(a), -r * math.sin(b) * math.cos(a)],
                         [rho * math.cos(a), -r * math.sin(b) * math.sin(a)],
                         [0.0, r * math.cos(b)]])

    def hes(u):
        a, b = u
        rho = R + r * math.cos(b)
        sa, ca, sb, cb = math.sin(a), math.cos(a), math.sin(b), math.cos(b)
        out = np.zeros((3, 2, 2))
        out[:, 0, 0] = [-rho * ca, -rho * sa, 0.0]
        out[:, 0, 1] = out[:, 1, 0] = [r * sb * sa, -r * sb * ca, 0.0]
        out[:, 1, 1] = [-r * cb * ca, -r * cb * sa, -r * sb]
        return out

    return Immersion("torus_of_revolution", 2, 3, pos, [(0.0, 2 * math.pi), (-math.pi, math.pi)],
                     jac, hes, periodic=True, meta={"R": R, "r": r})


def product_of_circles(r1=1.0, r2=1.0):
    """(x, y) -> (r1 cos(x/r1), r1 sin(x/r1), r2 cos(y/r2), r2 sin(y/r2)), an isometric flat torus."""

    def pos(u):
        x, y = u
        return np.array([r1 * math.cos(x / r1), r1 * math.sin(x / r1),
                         r2 * math.cos(y / r2), r2 * math.sin(y / r2)])

    def jac(u):
        x, y = u
        return np.array([[-math.sin(x / r1), 0.0], [math.cos(x / r1), 0.0],
                         [0.0, -math.sin(y / r2)], [0.0, math.cos(y / r2)]])

    def hes(u):
        x, y = u
        out = np.zeros((4, 2, 2))
        out[0, 0, 0] = -math.cos(x / r1) / r1
        out[1, 0, 0] = -math.sin(x / r1) / r1
        out[2, 1, 1] = -math.cos(y / r2) / r2
        out[3, 1, 1] = -math.sin(y / r2) / r2
        return out

    return Immersion("product_of_circles", 2, 4, pos,
                     [(0.0, 2 * math.pi * r1), (0.0, 2 * math.pi * r2)], jac, hes, periodic=True,
                     meta={"r1": r1, "r2": r2})


# ---------------------------------------------------------------------------
# eigenmaps


@dataclass
class SampledMap:
    """A map on a flat parameter domain with value, gradient and Laplacian access.

    ``value(u) -> (m,)``, ``gradient(u) -> (m, n)``, ``laplacian(u) -> (m,)``.
    Missing derivatives fall back to central differences.
    """

    name: str
    n: int
    value: Callable
    bounds: list
    gradient: Optional[Callable] = None
    laplacian: Optional[Callable] = None

    def grad(self, u):
        if self.gradient is not None:
            return np.asarray(self.gradient(u), dtype=float)
        steps = [_EPS ** (1 / 3) * (hi - lo) for lo, hi in self.bounds]
        cols = []
        for i, h in enumerate(steps):
            e = np.zeros(self.n)
            e[i] = h
            cols.append((self.value(u + e) - self.value(u - e)) / (2 * h))
        return np.column_stack(cols)

    def lap(self, u):
        if self.laplacian is not None:
            return np.asarray(self.laplacian(u), dtype=float)
        steps = [_EPS ** (1 / 4) * (hi - lo) for lo, hi in self.bounds]
        total = 0.0
        for i, h in enumerate(steps):
            e = np.zeros(self.n)
            e[i] = h
            total = total + (self.value(u + e) - 2 * self.value(u) + self.value(u - e)) / h ** 2
        return total


def flat_torus_eigenmap():
    """(1/sqrt 2)(cos x, sin x, cos y, sin y) on R^2 / (2 pi Z)^2, eigenvalue 1."""
    c = 1 / math.sqrt(2)

    def value(u):
        x, y = u
        return c * np.array([math.cos(x), math.sin(x), math.cos(y), math.sin(y)])

    def gradient(u):
        x, y = u
        return c * np.array([[-math.sin(x), 0.0], [math.cos(x), 0.0], [0.0, -math.sin(y)], [0.0, math.cos(y)]])

    def laplacian(u):
        return -value(u)

    return SampledMap("flat_torus_eigenmap", 2, value, [(0.0, 2 * math.pi), (0.0, 2 * math.pi)],
                      gradient, laplacian)


@dataclass
class EigenmapReport:
    lam: float
    tol: float
    norm_residual: float  # max |sum X_p^2 - 1|
    energy_residual: float  # max |sum |grad X_p|^2 - lam|
    equation_residual: float  # max |Lap X_p + lam X_p|
    samples: int

    @property
    def passed(self):
        return max(self.norm_residual, self.energy_residual, self.equation_residual) <= self.tol

    def as_dict(self):
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def eigenmap_check(smap, lam, tol=1e-8, per_axis=33):
    """Check the sphere, energy and eigen-equation identities at grid samples."""
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in smap.bounds]
    norm_r = energy_r = eq_r = 0.0
    count = 0
    for u in itertools.product(*axes):
        u = np.array(u)
        x = smap.value(u)
        g = smap.grad(u)
        lap = smap.lap(u)
        norm_r = max(norm_r, abs(float(x @ x) - 1.0))
        energy_r = max(energy_r, abs(float(np.sum(g * g)) - lam))
        eq_r = max(eq_r, float(np.max(np.abs(lap + lam * x))))
        count += 1
    return EigenmapReport(float(lam), float(tol), norm_r, energy_r, eq_r, count)


def flat_torus_eigenmap_immersion():
    """The flat-torus eigenmap viewed as an immersion into R^4 (induced metric I/2)."""
    emap = flat_torus_eigenmap()

    def hes(u):
        out = np.zeros((4, 2, 2))
        val = emap.value(u)
        out[0:2, 0, 0] = -val[0:2]
        out[2:4, 1, 1] = -val[2:4]
        return out

    return Immersion("flat_torus_eigenmap", 2, 4, emap.value, emap.bounds, emap.gradient, hes,
                     periodic=True)


IMMERSIONS = {
    "plane": plane,
    "flat_torus_eigenmap": flat_torus_eigenmap_immersion,
    "sphere": sphere,
    "torus_of_revolution": torus_of_revolution,
    "product_of_circles": product_of_circles,
}

EIGENMAPS = {"flat_torus_eigenmap": flat_torus_eigenmap}
