"""Finite-difference clamped biharmonic spectra on desk-scale domains.

Every discretization has the same shape: a rectangular matrix ``D`` mapping
the unknown nodal values to a discrete Laplacian at every node where the
Laplacian of a clamped function is nonzero (boundary nodes included, ghost
values eliminated by reflection), row quadrature weights ``W``, and a mass
vector for the unknowns.  The stiffness is ``D^T W D``, which is symmetric by
construction and encodes u = du/dn = 0 at the boundary.

Supported domains: the clamped beam, flat rectangles, and geodesic disks in
the sphere, the plane and the hyperbolic plane (solved mode by mode in
geodesic polar coordinates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy.optimize import brentq

from .errors import DiagnosticError, DomainError, InputError, TruncationError, UnsupportedError
from .numlin import eigen_generalized_diag_mass

KINDS = ("beam", "rectangle", "geodesic_disk")

SampledFunction = Union[float, Callable[..., np.ndarray], None]


@dataclass(frozen=True)
class DomainSpec:
    """Declarative description of a solvable domain.

    ``potential`` and ``weight`` are constants or vectorized callables of the
    node coordinates: ``f(x)`` on the beam, ``f(x, y)`` on rectangles and
    ``f(r)`` on geodesic disks (only radial data keeps Fourier modes
    decoupled).
    """

    kind: str
    grid_n: int = 64
    length: float = 1.0
    width: float = 1.0
    height: float = 1.0
    curvature: int = 0
    radius: float = 1.0
    m_max: Optional[int] = None
    potential: SampledFunction = None
    potential_lower_bound: Optional[float] = None
    weight: SampledFunction = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        if self.grid_n < 8:
            raise InputError(f"grid_n must be at least 8, got {self.grid_n}")
        for name in ("length", "width", "height", "radius"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.curvature not in (-1, 0, 1):
            raise DomainError(f"curvature must be -1, 0 or +1, got {self.curvature}")
        if self.kind == "geodesic_disk" and self.curvature == 1 and self.radius >= math.pi:
            raise DomainError(f"a spherical cap needs radius < pi, got {self.radius}")
        if self.m_max is not None and self.m_max < 0:
            raise InputError("m_max must be nonnegative")

    @property
    def dimension(self):
        return 1 if self.kind == "beam" else 2

    @property
    def is_flat(self):
        return self.kind != "geodesic_disk" or self.curvature == 0

    def scaled(self, t):
        """The same domain dilated by ``t`` (flat kinds only)."""
        if not self.is_flat:
            raise UnsupportedError("dilation only makes sense for flat domains")
        return replace(self, length=self.length * t, width=self.width * t,
                       height=self.height * t, radius=self.radius * t)

    def describe(self):
        out = {"kind": self.kind, "grid_n": self.grid_n}
        if self.kind == "beam":
            out["length"] = self.length
        elif self.kind == "rectangle":
            out.update(width=self.width, height=self.height)
        else:
            out.update(curvature=self.curvature, radius=self.radius, m_max=self.m_max)
        out["potential"] = _describe_sampled(self.potential)
        out["weight"] = _describe_sampled(self.weight)
        return out


def _describe_sampled(obj):
    if obj is None:
        return None
    if callable(obj):
        return getattr(obj, "source", getattr(obj, "__name__", "callable"))
    return float(obj)


@dataclass(frozen=True)
class SpectrumEntry:
    value: float
    mode_label: str
    multiplicity: int = 1


@dataclass
class Spectrum:
    """Computed eigenvalues in nondecreasing order.

    Entries are distinct computed eigenvalues; ``values`` expands them by
    multiplicity.  ``vectors`` holds M-orthonormal eigenvectors on the
    unknown nodes for Cartesian grids (one column per expanded value).
    """

    entries: list
    h: float
    domain: DomainSpec
    dimension: int
    vectors: Optional[np.ndarray] = field(default=None, repr=False)
    nodes: Optional[tuple] = field(default=None, repr=False)

    @property
    def values(self):
        out = []
        for entry in self.entries:
            out.extend([entry.value] * entry.multiplicity)
        return np.array(out)

    def __len__(self):
        return sum(e.multiplicity for e in self.entries)

    def near_degenerate_pairs(self, rel_tol=1e-6):
        """Index pairs (1-based, expanded) of distinct entries closer than rel_tol."""
        vals = self.values
        return [(i + 1, i + 2) for i in range(len(vals) - 1)
                if vals[i + 1] - vals[i] <= rel_tol * abs(vals[i + 1])
                and not _same_entry(self, i)]


def _same_entry(spec, i):
    pos = 0
    for entry in spec.entries:
        if pos <= i < pos + entry.multiplicity - 1:
            return True
        pos += entry.multiplicity
    return False


# ---------------------------------------------------------------------------
# one-dimensional building blocks


def _sk(kappa, r):
    if kappa == 0:
        return np.asarray(r, dtype=float)
    if kappa == 1:
        return np.sin(r)
    return np.sinh(r)


def radial_grid(radius, grid_n):
    """Cell-centred radial nodes r_j = (j + 1/2) h, the last one on r = R."""
    h = radius / (grid_n - 0.5)
    return (np.arange(grid_n) + 0.5) * h, h


def assemble_radial_laplacian(kappa, radius, m, grid_n):
    """Fourier-mode Laplacian on a geodesic disk with clamped outer edge.

    Returns ``(D, row_weights, mass, r)``: ``D`` maps the grid_n - 1 unknowns
    (r_0 .. r_{N-2}) to Laplacian values on all grid_n nodes; the boundary
    row eliminates the ghost at R + h by reflection (du/dr = 0) with u(R) = 0.
    Conservative flux form, so no equation is evaluated at r = 0.
    """
    if kappa not in (-1, 0, 1):
        raise DomainError(f"curvature must be -1, 0 or +1, got {kappa}")
    if kappa == 1 and radius >= math.pi:
        raise DomainError(f"a spherical cap needs radius < pi, got {radius}")
    if m < 0:
        raise InputError("Fourier mode must be nonnegative")
    n = int(grid_n)
    r, h = radial_grid(radius, n)
    s = _sk(kappa, r)
    faces = _sk(kappa, np.arange(n + 1) * h)  # s at r_j - h/2 for j = 0..n
    nu = n - 1
    d = np.zeros((n, nu))
    inv = 1.0 / (s * h * h)
    for j in range(nu):
        d[j, j] = -(faces[j + 1] + faces[j]) * inv[j] - m * m / s[j] ** 2
        if j > 0:
            d[j, j - 1] = faces[j] * inv[j]
        if j + 1 < nu:
            d[j, j + 1] = faces[j + 1] * inv[j]
    # boundary node: u = 0 there, ghost at R + h mirrors r_{N-2}
    d[n - 1, nu - 1] = (faces[n] + faces[n - 1]) * inv[n - 1]
    row_weights = s * h
    row_weights[-1] *= 0.5
    mass = s[:nu] * h
    return d, row_weights, mass, r


def _line_operator(length, grid_n):
    # nodes x_j = j h; unknowns at 1..N-1; Laplacian rows at 0..N with
    # mirrored ghosts x_{-1} ~ x_1 and x_{N+1} ~ x_{N-1}
    n = int(grid_n)
    h = length / n
    d = np.zeros((n + 1, n - 1))
    restrict = np.zeros((n + 1, n - 1))
    for j in range(1, n):
        col = j - 1
        restrict[j, col] = 1.0
        d[j, col] = -2.0 / h ** 2
        d[j - 1, col] += 1.0 / h ** 2
        d[j + 1, col] += 1.0 / h ** 2
    d[0, 0] = 2.0 / h ** 2
    d[n, n - 2] = 2.0 / h ** 2
    weights = np.full(n + 1, h)
    weights[0] = weights[-1] = 0.5 * h
    x = np.arange(n + 1) * h
    return d, restrict, weights, x, h


def assemble_beam(length, grid_n):
    """``(D, row_weights, mass, x_unknown)`` for the clamped beam."""
    d, _, w, x, h = _line_operator(length, grid_n)
    return d, w, np.full(grid_n - 1, h), x[1:-1]


def assemble_rectangle(width, height, grid_n):
    """13-point clamped stencil on a width x height rectangle, as D^T W D."""
    dx, ex, wx, x, hx = _line_operator(width, grid_n)
    dy, ey, wy, y, hy = _line_operator(height, grid_n)
    d = np.kron(dx, ey) + np.kron(ex, dy)
    w = np.kron(wx, wy)
    keep = np.any(d != 0.0, axis=1)  # corner rows vanish identically
    xx, yy = np.meshgrid(x[1:-1], y[1:-1], indexing="ij")
    mass = np.full((grid_n - 1) ** 2, hx * hy)
    return d[keep], w[keep], mass, (xx.ravel(), yy.ravel())


def assemble_masked_disk(radius, grid_n):
    """Cartesian 13-point disk: unknowns at lattice points with r < R.

    Functions are extended by zero off the unknown set, which imposes the
    clamped condition to first order on the staircase boundary.  Used as an
    independent cross-check of the polar mode solver.
    """
    h = radius / grid_n
    ticks = np.arange(-grid_n - 1, grid_n + 2) * h
    xx, yy = np.meshgrid(ticks, ticks, indexing="ij")
    inside = xx ** 2 + yy ** 2 < radius ** 2 * (1 - 1e-12)
    idx = -np.ones(inside.shape, dtype=int)
    idx[inside] = np.arange(inside.sum())
    rows = []
    size = len(ticks)
    for i in range(1, size - 1):
        for j in range(1, size - 1):
            stencil = [(i, j, -4.0), (i - 1, j, 1.0), (i + 1, j, 1.0), (i, j - 1, 1.0), (i, j + 1, 1.0)]
            row = [(idx[a, b], c / h ** 2) for a, b, c in stencil if idx[a, b] >= 0]
            if row:
                rows.append(row)
    d = np.zeros((len(rows), int(inside.sum())))
    for k, row in enumerate(rows):
        for col, c in row:
            d[k, col] = c
    w = np.full(len(rows), h * h)
    mass = np.full(d.shape[1], h * h)
    return d, w, mass, (xx[inside], yy[inside])


# ---------------------------------------------------------------------------
# assembly and solves


def assemble_clamped_biharmonic(d, row_weights, mass, q=None, rho=None):
    """Stiffness ``K = D^T diag(W) D + diag(mass q)`` and mass ``M = mass rho``."""
    d = np.asarray(d, dtype=float)
    row_weights = np.asarray(row_weights, dtype=float)
    mass = np.asarray(mass, dtype=float)
    if d.shape[0] != row_weights.shape[0] or d.shape[1] != mass.shape[0]:
        raise InputError(f"shape mismatch: D {d.shape}, W {row_weights.shape}, mass {mass.shape}")
    k = d.T @ (row_weights[:, None] * d)
    k = 0.5 * (k + k.T)
    if q is not None:
        q = np.broadcast_to(np.asarray(q, dtype=float), mass.shape)
        k[np.diag_indices_from(k)] += mass * q
    if rho is None:
        m = mass.copy()
    else:
        rho = np.broadcast_to(np.asarray(rho, dtype=float), mass.shape)
        if np.any(rho <= 0) or not np.all(np.isfinite(rho)):
            raise InputError("weight rho must be positive and finite at every node")
        m = mass * rho
    return k, m


def _sample(obj, *coords):
    if obj is None:
        return None
    if callable(obj):
        out = np.asarray(obj(*coords), dtype=float)
        return np.broadcast_to(out, np.shape(coords[0])).astype(float)
    return np.full(np.shape(coords[0]), float(obj))


def _potential(spec, *coords):
    q = _sample(spec.potential, *coords)
    bound = spec.potential_lower_bound
    if q is not None and bound is not None and np.min(q) < bound:
        raise DomainError(f"potential sample {np.min(q):.6g} lies below the declared lower bound {bound:.6g}")
    return q


def _solve_pencil(d, w, mass, q, rho, count, want_vectors):
    """Eigenpairs with the potential's best constant lower shift split off.

    With c = min(q / rho), eig(K0 + diag(mass q), M) = eig(K0 + diag(mass (q - c rho)), M) + c
    exactly, so constant potentials shift the computed spectrum by c up to
    one rounding.
    """
    shift = 0.0
    if q is not None:
        rho_s = np.ones_like(q) if rho is None else rho
        if np.any(rho_s <= 0):
            raise InputError("weight rho must be positive at every node")
        shift = float(np.min(q / rho_s))
        q = q - shift * rho_s
        if not np.any(q):
            q = None
    k, m = assemble_clamped_biharmonic(d, w, mass, q, rho)
    count = min(count, k.shape[0])
    pairs = eigen_generalized_diag_mass(k, m, count)
    values = np.array([p.value for p in pairs]) + shift
    vectors = np.column_stack([p.vector for p in pairs]) if want_vectors else None
    return values, vectors


def default_m_max(k_max):
    return 2 * math.ceil(math.sqrt(k_max)) + 8


def solve_spectrum(spec, k_max):
    """Smallest ``k_max`` clamped eigenvalues (with multiplicity) on ``spec``."""
    if k_max < 2:
        raise InputError("k_max must be at least 2")
    if spec.kind == "beam":
        d, w, mass, x = assemble_beam(spec.length, spec.grid_n)
        q, rho = _potential(spec, x), _sample(spec.weight, x)
        values, vectors = _solve_pencil(d, w, mass, q, rho, k_max, True)
        entries = [SpectrumEntry(float(v), f"j={j + 1}") for j, v in enumerate(values)]
        return Spectrum(entries, spec.length / spec.grid_n, spec, 1, vectors, (x,))
    if spec.kind == "rectangle":
        d, w, mass, (x, y) = assemble_rectangle(spec.width, spec.height, spec.grid_n)
        q, rho = _potential(spec, x, y), _sample(spec.weight, x, y)
        values, vectors = _solve_pencil(d, w, mass, q, rho, k_max, True)
        entries = [SpectrumEntry(float(v), f"j={j + 1}") for j, v in enumerate(values)]
        h = max(spec.width, spec.height) / spec.grid_n
        return Spectrum(entries, h, spec, 2, vectors, (x, y))
    return _solve_disk(spec, k_max)


def _disk_mode(spec, m, count):
    d, w, mass, r = assemble_radial_laplacian(spec.curvature, spec.radius, m, spec.grid_n)
    ru = r[:-1]
    q, rho = _potential(spec, ru), _sample(spec.weight, ru)
    values, _ = _solve_pencil(d, w, mass, q, rho, count, False)
    return values


def _solve_disk(spec, k_max):
    explicit = spec.m_max is not None
    m_max = spec.m_max if explicit else default_m_max(k_max)
    h = radial_grid(spec.radius, spec.grid_n)[1]
    cache = {}

    def mode(m):
        if m not in cache:
            cache[m] = _disk_mode(spec, m, k_max)
        return cache[m]

    while True:
        entries = []
        for m in range(m_max + 1):
            for j, v in enumerate(mode(m)):
                entries.append(SpectrumEntry(float(v), f"m={m},j={j + 1}", 1 if m == 0 else 2))
        entries.sort(key=lambda e: (e.value, e.mode_label))
        kept, total = [], 0
        for entry in entries:
            if total >= k_max:
                break
            kept.append(entry)
            total += entry.multiplicity
        if total < k_max:
            raise TruncationError("grid too coarse to resolve k_max eigenvalues")
        # lowest eigenvalue of mode m grows with m, so one mode past the cut certifies it
        if mode(m_max + 1)[0] > kept[-1].value:
            return Spectrum(kept, h, replace(spec, m_max=m_max), 2)
        if explicit:
            raise TruncationError(
                f"m_max={m_max} is too small: mode {m_max + 1} has an eigenvalue "
                f"{mode(m_max + 1)[0]:.6g} below the reported lambda_{k_max}={kept[-1].value:.6g}; "
                "raise m_max")
        m_max *= 2


# ---------------------------------------------------------------------------
# convergence study


def _mesh_h(spec):
    if spec.kind == "beam":
        return spec.length / spec.grid_n
    if spec.kind == "rectangle":
        return max(spec.width, spec.height) / spec.grid_n
    return radial_grid(spec.radius, spec.grid_n)[1]


def observed_order(hs, vals):
    """Order p with v(h) = v* + C h^p through three (h, v) points; also v*."""
    (h1, h2, h3), (v1, v2, v3) = hs, vals
    d12, d23 = v1 - v2, v2 - v3
    if d12 == 0.0 or d23 == 0.0 or (d12 > 0) != (d23 > 0):
        raise DiagnosticError(
            f"non-monotone refinement: values {v1:.12g}, {v2:.12g}, {v3:.12g}")
    ratio = d12 / d23

    def mismatch(p):
        return (h1 ** p - h2 ** p) / (h2 ** p - h3 ** p) - ratio

    if abs(h1 / h2 - 2.0) < 1e-14 and abs(h2 / h3 - 2.0) < 1e-14:
        p = math.log2(ratio)
    else:
        lo, hi = 0.05, 12.0
        if mismatch(lo) * mismatch(hi) > 0:
            raise DiagnosticError(f"cannot fit an order to ratio {ratio:.6g}")
        p = brentq(mismatch, lo, hi, xtol=1e-14)
    extrapolated = v3 - d23 * h3 ** p / (h2 ** p - h3 ** p)
    return p, extrapolated


def richardson_order(spec, k):
    """Extrapolated lambda_1..lambda_k and observed orders from grid_n, 2 grid_n, 4 grid_n."""
    specs = [replace(spec, grid_n=spec.grid_n * f) for f in (1, 2, 4)]
    runs = [solve_spectrum(s, max(k, 2)).values[:k] for s in specs]
    hs = [_mesh_h(s) for s in specs]
    orders, extrapolated = [], []
    for i in range(k):
        p, v = observed_order(hs, [run[i] for run in runs])
        orders.append(p)
        extrapolated.append(v)
    return np.array(extrapolated), np.array(orders)


# ---------------------------------------------------------------------------
# integral identities from the commutator argument


@dataclass
class IdentityReport:
    h: float
    n: int
    values: list
    commutator_trace: list  # sum_p <[[Lap, X_p], X_p] u, u>
    trace_residual: list  # |commutator_trace - 2n|
    gradient_residual: list  # |sum_p ||[Lap, X_p] u||^2 - 4 int |grad u|^2|
    cauchy_schwarz_slack: list  # 4 sqrt(lambda) - 4 int (-Lap u) u

    def as_dict(self):
        return {k: (list(map(float, v)) if isinstance(v, list) else v)
                for k, v in self.__dict__.items()}


def _node_grid_function(spectrum, vec):
    spec = spectrum.domain
    n = spec.grid_n
    full = np.zeros((n + 1,) * spectrum.dimension)
    if spectrum.dimension == 1:
        full[1:-1] = vec
    else:
        full[1:-1, 1:-1] = vec.reshape(n - 1, n - 1)
    return full


def _lap_dirichlet(u, hs):
    # 5-point (3-point) Laplacian at interior nodes of a zero-boundary node function
    out = np.zeros_like(u)
    core = tuple(slice(1, -1) for _ in hs)
    for axis, h in enumerate(hs):
        plus = [slice(1, -1)] * len(hs)
        minus = [slice(1, -1)] * len(hs)
        plus[axis] = slice(2, None)
        minus[axis] = slice(None, -2)
        out[core] += (u[tuple(plus)] - 2 * u[core] + u[tuple(minus)]) / h ** 2
    return out


def verify_proof_identities(spectrum_or_spec, k):
    """Discrete check of the commutator identities behind the flat bounds.

    For each normalized eigenfunction u_i (i <= k) with coordinate functions
    X_p and the Dirichlet difference Laplacian:
      sum_p <[[L, X_p], X_p] u, u>        against 2n,
      sum_p ||[L, X_p] u||^2              against 4 int |grad u|^2,
      4 int (-L u) u                      against 4 sqrt(lambda_i).
    """
    if isinstance(spectrum_or_spec, DomainSpec):
        spec = spectrum_or_spec
        if spec.kind == "geodesic_disk":
            raise UnsupportedError("proof identities need a Cartesian flat grid (beam or rectangle)")
        spectrum = solve_spectrum(spec, max(k, 2))
    else:
        spectrum = spectrum_or_spec
        spec = spectrum.domain
    if spec.kind == "geodesic_disk":
        raise UnsupportedError("proof identities need a Cartesian flat grid (beam or rectangle)")
    if spec.potential is not None or spec.weight is not None:
        raise UnsupportedError("proof identities are checked for q = 0, rho = 1 only")
    dim = spectrum.dimension
    n = spec.grid_n
    if dim == 1:
        hs = [spec.length / n]
        axes = [np.arange(n + 1) * hs[0]]
    else:
        hs = [spec.width / n, spec.height / n]
        axes = [np.arange(n + 1) * hs[0], np.arange(n + 1) * hs[1]]
    coords = np.meshgrid(*axes, indexing="ij")
    cell = float(np.prod(hs))
    core = tuple(slice(1, -1) for _ in hs)
    report = IdentityReport(max(hs), dim, [], [], [], [], [])
    for i in range(k):
        lam = spectrum.values[i]
        u = _node_grid_function(spectrum, spectrum.vectors[:, i])
        u /= math.sqrt(np.sum(u[core] ** 2) * cell)
        lap_u = _lap_dirichlet(u, hs)
        trace = 0.0
        comm_sq = 0.0
        for x in coords:
            double = _lap_dirichlet(x * x * u, hs) - 2 * x * _lap_dirichlet(x * u, hs) + x * x * lap_u
            trace += np.sum(double[core] * u[core]) * cell
            single = _lap_dirichlet(x * u, hs) - x * lap_u
            comm_sq += np.sum(single[core] ** 2) * cell
        grad_sq = 0.0
        for axis, h in enumerate(hs):
            diff = np.diff(u, axis=axis) / h
            grad_sq += np.sum(diff ** 2) * cell
        dirichlet_form = -np.sum(lap_u[core] * u[core]) * cell
        report.values.append(float(lam))
        report.commutator_trace.append(float(trace))
        report.trace_residual.append(float(abs(trace - 2 * dim)))
        report.gradient_residual.append(float(abs(comm_sq - 4 * grad_sq)))
        report.cauchy_schwarz_slack.append(float(4 * math.sqrt(lam) - 4 * dirichlet_form))
    return report
