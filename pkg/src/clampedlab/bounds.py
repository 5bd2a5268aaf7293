"""Universal eigenvalue inequalities for the clamped plate and their evaluation.

Every inequality is written as lhs <= rhs with Lambda standing for
lambda_{k+1}; the evaluator takes Lambda explicitly so verification
(Lambda = computed lambda_{k+1}) and bound extraction (Lambda free) share
one code path.

With a potential q the values under square roots and the bare eigenvalue
factors use lambda_i - inf q; gap factors (Lambda - lambda_i) and the
arguments of f, g keep the raw eigenvalues.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (ConfigurationError, DomainError, GapError, InconsistentDataError, InputError,
                     RejectedCoupleError)
from .families import check_membership

GAP_REL_TOL = 1e-8
MEMBERSHIP_GRID = 100

COUPLED = ("main_clamp1", "clamp2", "eigenmap", "hyperbolic")
UNCOUPLED = ("ashbaugh", "hile_yeh_strong", "cheng_yang", "cim_flat_l2", "wang_xia_sphere",
             "cim_sphere", "wx_minimal", "wx_minimal_simple", "cim_submanifold")
INEQUALITIES = UNCOUPLED + COUPLED
QUADRATIC = ("cim_flat_l2", "cim_sphere", "cim_submanifold")

REQUIRED = {
    "cim_submanifold": ("delta",),
    "main_clamp1": ("delta",),
    "clamp2": ("delta_prime",),
    "eigenmap": ("lambda_map",),
}

# which inequalities a geometry tag admits
GEOMETRY_IDS = {
    "flat": ("ashbaugh", "hile_yeh_strong", "cheng_yang", "cim_flat_l2", "wx_minimal",
             "wx_minimal_simple", "cim_submanifold", "main_clamp1", "eigenmap"),
    "euclidean_submanifold": ("cim_submanifold", "main_clamp1"),
    "minimal_submanifold": ("wx_minimal", "wx_minimal_simple", "cim_submanifold", "main_clamp1"),
    "sphere": ("wang_xia_sphere", "cim_sphere", "clamp2"),
    "symmetric": ("clamp2",),
    "eigenmap": ("eigenmap",),
    "hyperbolic": ("hyperbolic",),
}


@dataclass(frozen=True)
class BoundContext:
    n: int
    delta: Optional[float] = None
    delta_prime: Optional[float] = None
    lambda_map: Optional[float] = None
    q_inf: float = 0.0
    geometry: str = "flat"

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be at least 1")
        if self.geometry not in GEOMETRY_IDS:
            raise InputError(f"unknown geometry {self.geometry!r}; expected one of {tuple(GEOMETRY_IDS)}")
        for name in ("delta", "delta_prime"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InputError(f"{name} must be nonnegative")
        if self.lambda_map is not None and self.lambda_map <= 0:
            raise InputError("lambda_map must be positive")

    def applicable(self, ids=INEQUALITIES):
        allowed = GEOMETRY_IDS[self.geometry]
        return [i for i in ids if i in allowed and all(getattr(self, c) is not None
                                                       for c in REQUIRED.get(i, ()))]

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class BoundEntry:
    id: str
    couple: str
    k: int
    lhs: float
    rhs: float
    slack: float
    holds: bool
    tol: float = 0.0
    meta: dict = field(default_factory=dict)

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class BoundReport:
    context: BoundContext
    entries: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def all_hold(self):
        return all(e.holds for e in self.entries)

    @property
    def failures(self):
        return [e for e in self.entries if not e.holds]

    def min_slack(self, ident=None):
        sl = [e.slack for e in self.entries if ident is None or e.id == ident]
        return min(sl) if sl else math.nan


def shifted_values(values, q_inf=0.0):
    """lambda_i - inf q, which must stay positive for the square roots."""
    vals = np.asarray(values, dtype=float)
    if q_inf == 0:
        return vals.copy()
    out = vals - q_inf
    bad = np.flatnonzero(out <= 0)
    if bad.size:
        i = int(bad[0])
        raise DomainError(f"shifted eigenvalue lambda_{i + 1} - q_inf = {out[i]:.6g} is not positive")
    return out


@functools.lru_cache(maxsize=4096)
def _membership_ok(couple, lam):
    if couple.fixed_lambda is not None:
        return check_membership(couple, couple.fixed_lambda, MEMBERSHIP_GRID).passed
    return check_membership(couple, lam, MEMBERSHIP_GRID).passed


def _require(ctx, ident):
    missing = [c for c in REQUIRED.get(ident, ()) if getattr(ctx, c) is None]
    if missing:
        raise ConfigurationError(f"inequality {ident} needs context constant(s): {', '.join(missing)}")


def _sides(ident, lam, big, ctx, couple):
    """(lhs, rhs, meta) for one inequality; lam are lambda_1..lambda_k."""
    n = ctx.n
    k = lam.size
    gap = big - lam
    bar = shifted_values(lam, ctx.q_inf)
    s = np.sqrt(bar)
    c = 8.0 * (n + 2) / n ** 2
    meta = {}
    if ident == "ashbaugh":
        return big - lam[-1], c / k ** 2 * np.sum(s) ** 2, meta
    if ident == "hile_yeh_strong":
        return n ** 2 * k ** 2 / (8.0 * (n + 2)), np.sum(s / gap) * np.sum(s), meta
    if ident == "cheng_yang":
        return np.sum(gap), math.sqrt(c) * np.sum(np.sqrt(bar * gap)), meta
    if ident in ("cim_flat_l2", "wx_minimal_simple"):
        return np.sum(gap ** 2), c * np.sum(gap * bar), meta
    if ident == "wang_xia_sphere":
        first = np.sum(gap ** 2 * (n ** 2 + (2 * n + 4) * s))
        second = np.sum(gap * (n ** 2 + 4 * s))
        return np.sum(gap ** 2), np.sqrt(first) * np.sqrt(second) / n, meta
    if ident == "cim_sphere":
        rhs = np.sum(gap * (2 * (n + 2) * s + n ** 2) * (4 * s + n ** 2)) / n ** 2
        return np.sum(gap ** 2), rhs, meta
    if ident == "wx_minimal":
        rhs = math.sqrt(c) * np.sqrt(np.sum(gap ** 2 * s)) * np.sqrt(np.sum(gap * s))
        return np.sum(gap ** 2), rhs, meta
    if ident == "cim_submanifold":
        nd = n ** 2 * ctx.delta
        rhs = np.sum(gap * (nd + 2 * (n + 2) * s) * (nd + 4 * s)) / n ** 2
        return np.sum(gap ** 2), rhs, meta

    f, g = couple.values(big, lam)
    ratio = f ** 2 / (g * gap)
    if ident in ("main_clamp1", "clamp2"):
        d = ctx.delta if ident == "main_clamp1" else ctx.delta_prime
        first = np.sum(g * (2 * (n + 2) * s + n ** 2 * d))
        second = np.sum(ratio * (s + n ** 2 * d / 4))
        return np.sum(f), 2.0 / n * np.sqrt(first) * np.sqrt(second), meta
    if ident == "eigenmap":
        lm = ctx.lambda_map
        first = np.sum(g * (lm + 6 * s))
        second = np.sum(ratio * (lm + 4 * s))
        return np.sum(f), np.sqrt(first) * np.sqrt(second), meta
    if ident == "hyperbolic":
        corr = (n - 1) ** 2
        first = np.sum(g * (6 * s - corr))
        second = np.sum(ratio * (4 * s - corr))
        meta["first_sum"] = float(first)
        meta["second_sum"] = float(second)
        if first < 0 or second < 0:
            meta["negative_bracket"] = True
            return np.sum(f), math.nan, meta
        return np.sum(f), np.sqrt(first) * np.sqrt(second), meta
    raise InputError(f"unknown inequality {ident!r}")


def evaluate(ident, values, big_lambda, ctx, couple=None, tol_rel=1e-12, tol_abs=0.0,
             check_couple=True):
    """Evaluate one inequality at lambda_1..lambda_k and Lambda = ``big_lambda``."""
    if ident not in INEQUALITIES:
        raise InputError(f"unknown inequality {ident!r}")
    lam = np.asarray(values, dtype=float)
    if lam.ndim != 1 or lam.size < 1:
        raise InputError("need at least one eigenvalue")
    big = float(big_lambda)
    if big - lam[-1] <= GAP_REL_TOL * abs(big):
        raise GapError(f"lambda_k = {lam[-1]:.12g} is not strictly below Lambda = {big:.12g}")
    _require(ctx, ident)
    if ident in COUPLED:
        if couple is None:
            raise InputError(f"inequality {ident} needs an (f, g) couple")
        if check_couple and not _membership_ok(couple, big):
            raise RejectedCoupleError(f"couple {couple.label} fails the membership test for lambda={big:.6g}")
    elif couple is not None:
        raise InputError(f"inequality {ident} takes no couple")
    # out-of-order data (lambda_i > Lambda for some i < k) yields NaN, which fails
    with np.errstate(invalid="ignore"):
        lhs, rhs, meta = _sides(ident, lam, big, ctx, couple)
    lhs, rhs = float(lhs), float(rhs)
    slack = rhs - lhs
    tol = tol_rel * max(abs(lhs), abs(rhs)) + tol_abs
    holds = bool(slack >= -tol) if math.isfinite(slack) else False
    meta.update(Lambda=big, q_inf=ctx.q_inf, n=ctx.n)
    return BoundEntry(ident, couple.label if couple is not None else "-", int(lam.size),
                      lhs, rhs, slack, holds, tol, meta)


def _as_values(spectrum):
    return np.asarray(getattr(spectrum, "values", spectrum), dtype=float)


def check_all(spectrum, ctx, ids=None, couples=(), k_range=range(1, 11), coarse=None,
              tol_factor=10.0, tol_rel=1e-12):
    """Evaluate every applicable (id, couple, k) at Lambda = lambda_{k+1}.

    ``coarse`` (optional) is the same spectrum on a coarser grid; the change
    in slack between the two resolutions is the discretization-error
    estimate, and an entry passes when slack >= -tol_factor * that change.
    """
    vals = _as_values(spectrum)
    cvals = None if coarse is None else _as_values(coarse)
    ids = ctx.applicable(INEQUALITIES if ids is None else ids)
    report = BoundReport(ctx)
    k_range = list(k_range)
    if vals.size < max(k_range) + 1:
        raise InputError(f"spectrum has {vals.size} values; k up to {max(k_range)} needs {max(k_range) + 1}")
    for k in k_range:
        if vals[k] - vals[k - 1] <= GAP_REL_TOL * abs(vals[k]):
            report.skipped.append({"k": k, "reason": "lambda_k = lambda_{k+1} within gap tolerance"})
            continue
        for ident in ids:
            for couple in (couples if ident in COUPLED else (None,)):
                entry = evaluate(ident, vals[:k], vals[k], ctx, couple, tol_rel=tol_rel)
                if cvals is not None and cvals[k] - cvals[k - 1] > GAP_REL_TOL * abs(cvals[k]):
                    ref = evaluate(ident, cvals[:k], cvals[k], ctx, couple, tol_rel=tol_rel)
                    disc = abs(entry.slack - ref.slack)
                    entry.meta["disc_error"] = disc
                    entry.tol += tol_factor * disc
                    entry.holds = bool(entry.slack >= -entry.tol)
                report.entries.append(entry)
    return report


def quadratic_weights(lam, ctx, ident):
    """w_i with the inequality reading sum (L - l_i)^2 <= sum (L - l_i) w_i."""
    if ident not in QUADRATIC:
        raise InputError(f"{ident} is not one of the quadratic inequalities {QUADRATIC}")
    _require(ctx, ident)
    n = ctx.n
    bar = shifted_values(lam, ctx.q_inf)
    s = np.sqrt(bar)
    if ident == "cim_flat_l2":
        return 8.0 * (n + 2) / n ** 2 * bar
    if ident == "cim_sphere":
        return (2 * (n + 2) * s + n ** 2) * (4 * s + n ** 2) / n ** 2
    nd = n ** 2 * ctx.delta
    return (nd + 2 * (n + 2) * s) * (nd + 4 * s) / n ** 2


def next_bound_quadratic(values, ctx, ident="cim_flat_l2"):
    """Upper bound for lambda_{k+1}: larger root of sum (L - l_i)^2 - sum (L - l_i) w_i."""
    lam = np.asarray(values, dtype=float)
    if lam.size < 1:
        raise InputError("need k >= 1 eigenvalues")
    w = quadratic_weights(lam, ctx, ident)
    k = lam.size
    # centre at the mean to keep the linear coefficient free of cancellation
    mean = float(np.mean(lam))
    d = mean - lam
    b = float(np.sum(w))
    c = float(np.sum(d * d) - np.sum(d * w))
    disc = b * b - 4.0 * k * c
    if disc < 0:
        raise InconsistentDataError(f"negative discriminant {disc:.6g}; inconsistent eigenvalue data")
    t = (b + math.sqrt(disc)) / (2.0 * k)
    return mean + t


@dataclass
class BisectionResult:
    bound: Optional[float]
    conclusive: bool
    samples: int
    sign_changes: int
    reason: str = ""


def next_bound_bisection(values, ctx, ident, couple=None, cap=None, samples=400, rel_tol=1e-12,
                         known_next=None):
    """Best-effort bound: the Lambda beyond which the inequality fails at every sample.

    Slack is sampled on a log-spaced grid of gaps Lambda - lambda_k up to
    ``cap``.  The result is conclusive only when the sampled slack is
    nonnegative and then negative with a single sign change; the crossing
    is refined by bisection.  ``known_next`` (a computed lambda_{k+1}) only
    serves to reject k without a strict gap.
    """
    lam = np.asarray(values, dtype=float)
    lam_k = float(lam[-1])
    if known_next is not None and known_next - lam_k <= GAP_REL_TOL * abs(known_next):
        raise GapError(f"lambda_k = lambda_(k+1) = {lam_k:.12g}; no strict gap at k = {lam.size}")
    if cap is None:
        cap = 100.0 * lam_k
    if cap <= lam_k:
        raise InputError("cap must exceed lambda_k")

    def slack(big):
        return evaluate(ident, lam, big, ctx, couple, check_couple=couple is not None
                        and not couple.is_catalog).slack

    lo_gap = lam_k * 2 * GAP_REL_TOL
    gaps = np.geomspace(lo_gap, cap - lam_k, samples)
    trial = lam_k + gaps
    signs = np.array([slack(L) >= 0 for L in trial])
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    if signs[-1]:
        return BisectionResult(None, False, samples, changes, "cap exhausted: inequality still holds at cap")
    if changes != 1 or not signs[0]:
        return BisectionResult(None, False, samples, changes, "slack changes sign non-monotonically")
    j = int(np.flatnonzero(signs[1:] != signs[:-1])[0])
    a, b = trial[j], trial[j + 1]
    while b - a > rel_tol * b:
        mid = 0.5 * (a + b)
        if slack(mid) >= 0:
            a = mid
        else:
            b = mid
    return BisectionResult(b, True, samples, changes)
