"""Finite-dimensional tests of the abstract commutator inequality.

For self-adjoint A with eigenpairs (lambda_i, u_i), symmetric B_p and
skew-symmetric T_p, and (f, g) admissible for lambda_{k+1}:

    (sum_i sum_p f(l_i) <[T_p, B_p] u_i, u_i>)^2
        <= 4 (sum_i sum_p g(l_i) <[A, B_p] u_i, B_p u_i>)
             (sum_i sum_p f(l_i)^2 / (g(l_i)(l_{k+1} - l_i)) ||T_p u_i||^2)

Random instances probe it; a failing instance is dumped to a replay file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GapError, InputError
from .families import FGCouple, check_membership
from .numlin import eigen_symmetric

GAP_FRACTION = 1e-6
FUZZ_TOL = 1e-9


@dataclass
class OperatorInstance:
    a: np.ndarray
    b: list
    t: list
    k: int
    complex_mode: bool = False

    @property
    def dim(self):
        return self.a.shape[0]

    def validate(self):
        a = self.a
        if not np.allclose(a, a.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise InputError("A must be Hermitian")
        if len(self.b) != len(self.t) or not self.b:
            raise InputError("need equally many B_p and T_p, at least one")
        for bp in self.b:
            if not np.array_equal(bp, bp.T):
                raise InputError("every B_p must be symmetric")
        for tp in self.t:
            if not np.array_equal(tp, -tp.T):
                raise InputError("every T_p must be skew-symmetric")
        if not 1 <= self.k < self.dim:
            raise InputError(f"k must lie in [1, {self.dim - 1}]")

    def conjugated(self, q):
        """Simultaneous conjugation by a real orthogonal q."""
        def sym(x):
            y = q.T @ x @ q
            return 0.5 * (y + y.T)

        def skew(x):
            y = q.T @ x @ q
            return 0.5 * (y - y.T)

        a = q.T @ self.a @ q
        return OperatorInstance(0.5 * (a + a.conj().T), [sym(bp) for bp in self.b],
                                [skew(tp) for tp in self.t], self.k, self.complex_mode)


def _orthogonal(rng, dim):
    # composition of plane rotations
    q = np.eye(dim)
    for i in range(dim - 1):
        for j in range(i + 1, dim):
            th = rng.uniform(0, 2 * math.pi)
            c, s = math.cos(th), math.sin(th)
            qi, qj = q[:, i].copy(), q[:, j].copy()
            q[:, i] = c * qi - s * qj
            q[:, j] = s * qi + c * qj
    return q


def _unitary(rng, dim):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_instance(dim, n_ops, seed, complex_mode=False):
    """Deterministic random instance with a strictly increasing spectrum for A."""
    if dim < 3 or n_ops < 1:
        raise InputError("need dim >= 3 and n_ops >= 1")
    rng = np.random.default_rng(seed)
    spread = rng.uniform(1.0, 10.0)
    steps = rng.uniform(0.05, 1.0, size=dim)
    diag = np.cumsum(steps) * spread / steps.sum() + rng.uniform(-5.0, 5.0)
    q = _unitary(rng, dim) if complex_mode else _orthogonal(rng, dim)
    a = (q * diag) @ q.conj().T
    a = 0.5 * (a + a.conj().T)
    b, t = [], []
    for _ in range(n_ops):
        m = rng.uniform(-1, 1, size=(dim, dim))
        b.append(np.triu(m) + np.triu(m, 1).T)
        m = rng.uniform(-1, 1, size=(dim, dim))
        t.append(np.triu(m, 1) - np.triu(m, 1).T)
    gaps = np.diff(diag)
    ok = [k for k in range(1, dim) if gaps[k - 1] > GAP_FRACTION * (diag[-1] - diag[0])]
    k = int(ok[rng.integers(len(ok))])
    return OperatorInstance(a, b, t, k, complex_mode)


def _eigensystem(inst):
    if inst.complex_mode or np.iscomplexobj(inst.a):
        vals, vecs = np.linalg.eigh(inst.a)
        return vals, vecs
    pairs = eigen_symmetric(inst.a, inst.dim)
    return np.array([p.value for p in pairs]), np.column_stack([p.vector for p in pairs])


def theorem_sides(inst, couple, check_couple=True, lhs_via_adjoint=False):
    """(lhs, rhs) of the abstract inequality for ``inst``.

    ``lhs_via_adjoint`` computes <[T,B]u,u> as -2 Re <B u, T u>, an identity
    that holds only for skew T; it exists for negative controls.
    """
    vals, vecs = _eigensystem(inst)
    k = inst.k
    lam_next = vals[k]
    spread = vals[-1] - vals[0]
    if lam_next - vals[k - 1] <= GAP_FRACTION * spread:
        raise GapError(f"no eigenvalue gap at k = {k}")
    if check_couple and not check_membership(couple, lam_next - vals[0] + 1.0, 64).passed:
        raise InputError(f"couple {couple.label} is not admissible")
    # couples act on lambda_{k+1} - lambda_i only, which is shift invariant,
    # so evaluate them on gaps shifted into (0, lam_next)
    lam = vals[:k]
    shift = vals[0] - 1.0
    f, g = couple.values(lam_next - shift, lam - shift)
    weight = f ** 2 / (g * (lam_next - lam))
    a = inst.a
    lhs_sum = 0.0
    first = 0.0
    second = 0.0
    for bp, tp in zip(inst.b, inst.t):
        comm_tb = tp @ bp - bp @ tp
        comm_ab = a @ bp - bp @ a
        for i in range(k):
            u = vecs[:, i]
            bu = bp @ u
            tu = tp @ u
            if lhs_via_adjoint:
                term = -2.0 * np.real(np.vdot(bu, tu))
            else:
                term = np.real(np.vdot(u, comm_tb @ u))
            lhs_sum += f[i] * term
            first += g[i] * np.real(np.vdot(bu, comm_ab @ u))
            second += weight[i] * np.real(np.vdot(tu, tu))
    return float(lhs_sum ** 2), float(4.0 * first * second)


def slack_of(lhs, rhs):
    return rhs - lhs


@dataclass
class FuzzReport:
    trials: int
    evaluations: int
    min_slack: float
    min_scaled_slack: float
    violations: list = field(default_factory=list)
    replay_files: list = field(default_factory=list)
    couples: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def as_dict(self):
        return dict(self.__dict__, passed=self.passed)


def trial_seed(seed, index):
    """Per-trial seed independent of scheduling order."""
    return np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0]


def fuzz(trial_count, dim_max, couples, seed, n_ops_max=3, replay_dir=None,
         corrupt=None, complex_mode=False, allow_noncatalog=False):
    """Run random instances against every couple and record the worst slack.

    ``corrupt`` selects a negative control: ``"skew_sign"`` replaces every
    T_p by the symmetric matrix with its lower triangle's sign flipped and
    still evaluates the left side through the skew-only adjoint identity.
    ``allow_noncatalog`` admits probe couples such as power_custom; their
    violations are evidence about membership, not defects.
    """
    if dim_max < 3:
        raise InputError("dim_max must be at least 3")
    for c in couples:
        if c.family == "custom" or not (c.is_catalog or allow_noncatalog):
            raise InputError("fuzz takes catalog couples only")
    report = FuzzReport(trial_count, 0, math.inf, math.inf, couples=[c.label for c in couples])
    for index in range(trial_count):
        rng = np.random.default_rng(trial_seed(seed, index))
        dim = int(rng.integers(3, dim_max + 1))
        n_ops = int(rng.integers(1, n_ops_max + 1))
        inst = random_instance(dim, n_ops, int(rng.integers(2 ** 31)), complex_mode)
        if corrupt == "skew_sign":
            inst = OperatorInstance(inst.a, inst.b, [np.triu(tp) + np.triu(tp, 1).T for tp in inst.t],
                                    inst.k, inst.complex_mode)
        for couple in couples:
            lhs, rhs = theorem_sides(inst, couple, check_couple=False,
                                     lhs_via_adjoint=corrupt == "skew_sign")
            report.evaluations += 1
            slack = rhs - lhs
            scale = max(abs(lhs), abs(rhs), 1.0)
            report.min_slack = min(report.min_slack, slack)
            report.min_scaled_slack = min(report.min_scaled_slack, slack / scale)
            if slack < -FUZZ_TOL * scale:
                record = {"trial": index, "couple": couple.label, "lhs": lhs, "rhs": rhs,
                          "dim": dim, "n_ops": n_ops, "k": inst.k}
                if replay_dir is not None:
                    path = f"{replay_dir}/replay_trial{index}_{couple.family}.txt"
                    write_replay(path, inst, couple, lhs_via_adjoint=corrupt == "skew_sign")
                    record["replay"] = path
                    report.replay_files.append(path)
                report.violations.append(record)
    return report


# ---------------------------------------------------------------------------
# replay files


def _fmt(x):
    return repr(float(x))


def write_replay(path, inst, couple=None, lhs_via_adjoint=False):
    """Self-describing text dump of an instance, reloadable by read_replay."""
    lines = ["# clampedlab operator instance", f"order {inst.dim}", f"n_ops {len(inst.b)}",
             f"k {inst.k}", f"complex {int(bool(inst.complex_mode or np.iscomplexobj(inst.a)))}"]
    if couple is not None:
        lines.append(f"couple {couple.family} {couple.param!r}")
    if lhs_via_adjoint:
        lines.append("lhs adjoint")

    def block(name, m):
        lines.append(name)
        if np.iscomplexobj(m):
            for row in m:
                lines.append(" ".join(f"{_fmt(z.real)}{'+' if z.imag >= 0 else '-'}{_fmt(abs(z.imag))}j" for z in row))
        else:
            for row in m:
                lines.append(" ".join(_fmt(z) for z in row))

    block("A", inst.a)
    for p, (bp, tp) in enumerate(zip(inst.b, inst.t)):
        block(f"B {p}", bp)
        block(f"T {p}", tp)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_replay(path):
    """Inverse of write_replay: returns (instance, couple or None, lhs_via_adjoint)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    header = {}
    pos = 0
    couple = None
    adjoint = False
    while pos < len(lines) and lines[pos].split()[0] in ("order", "n_ops", "k", "complex", "couple", "lhs"):
        parts = lines[pos].split()
        if parts[0] == "couple":
            couple = FGCouple(parts[1], float(parts[2]))
        elif parts[0] == "lhs":
            adjoint = parts[1] == "adjoint"
        else:
            header[parts[0]] = int(parts[1])
        pos += 1
    try:
        order, n_ops, k = header["order"], header["n_ops"], header["k"]
    except KeyError as exc:
        raise InputError(f"{path}: missing header field {exc}") from None
    is_complex = bool(header.get("complex", 0))
    dtype = complex if is_complex else float

    def read_block(name):
        nonlocal pos
        if lines[pos] != name:
            raise InputError(f"{path}: expected block {name!r}, found {lines[pos]!r}")
        rows = [[dtype(v) for v in lines[pos + 1 + r].split()] for r in range(order)]
        pos += order + 1
        return np.array(rows, dtype=dtype)

    a = read_block("A")
    b, t = [], []
    for p in range(n_ops):
        b.append(read_block(f"B {p}"))
        t.append(read_block(f"T {p}"))
    inst = OperatorInstance(a, b, t, k, is_complex)
    return inst, couple, adjoint
