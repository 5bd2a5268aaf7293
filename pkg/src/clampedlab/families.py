"""Couples (f, g) of positive functions on (0, lam) and the two-point test.

A couple belongs to the admissible class for ``lam`` when, for all
x != y in (0, lam),

    ((f(x)-f(y))/(x-y))^2
      + (f(x)^2/(g(x)(lam-x)) + f(y)^2/(g(y)(lam-y))) * (g(x)-g(y))/(x-y) <= 0.

Only refutation is decidable on a grid, so a passing check reads
"no violation found".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InputError

CATALOG = ("one_gap_alpha", "gap_gap_beta", "gap_pow_delta")
NEAR_PAIR_FRACTION = 1e-5
MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class FGCouple:
    """A parametric couple.  Catalog families are functions of the gap a = lam - x:

    one_gap_alpha  (1, a^alpha),      alpha >= 0
    gap_gap_beta   (a, a^beta),       beta >= 1/2
    gap_pow_delta  (a^d, a^d),        0 < d <= 2
    power_custom   (a^p_f, a^p_g),    any exponents (not checked against ranges)
    custom         user callables f(x, lam), g(x, lam)
    """

    family: str
    param: float = 0.0
    c_f: float = 1.0
    c_g: float = 1.0
    param_g: Optional[float] = None
    f_func: Optional[Callable] = field(default=None, compare=False)
    g_func: Optional[Callable] = field(default=None, compare=False)
    df_func: Optional[Callable] = field(default=None, compare=False)
    dg_func: Optional[Callable] = field(default=None, compare=False)
    fixed_lambda: Optional[float] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.c_f <= 0 or self.c_g <= 0:
            raise InputError("scale factors c_f, c_g must be positive")
        fam, p = self.family, self.param
        if fam == "one_gap_alpha" and p < 0:
            raise InputError(f"one_gap_alpha needs alpha >= 0, got {p}")
        if fam == "gap_gap_beta" and p < 0.5:
            raise InputError(f"gap_gap_beta needs beta >= 1/2, got {p}")
        if fam == "gap_pow_delta" and not 0 < p <= 2:
            raise InputError(f"gap_pow_delta needs 0 < d <= 2, got {p}")
        if fam == "custom" and (self.f_func is None or self.g_func is None):
            raise InputError("custom couples need f_func and g_func")
        if fam not in CATALOG + ("power_custom", "custom"):
            raise InputError(f"unknown couple family {fam!r}")

    @property
    def label(self):
        if self.name:
            return self.name
        if self.family == "custom":
            return "custom"
        if self.family == "power_custom":
            return f"power_custom(f={self.param:g},g={self._g_exponent():g})"
        return f"{self.family}({self.param:g})"

    @property
    def is_catalog(self):
        return self.family in CATALOG

    def scaled(self, c_f, c_g):
        return _replace(self, c_f=self.c_f * c_f, c_g=self.c_g * c_g)

    def _exponents(self):
        fam, p = self.family, self.param
        if fam == "one_gap_alpha":
            return 0.0, p
        if fam == "gap_gap_beta":
            return 1.0, p
        if fam == "gap_pow_delta":
            return p, p
        if fam == "power_custom":
            return p, self._g_exponent()
        return None

    def _g_exponent(self):
        return self.param if self.param_g is None else self.param_g

    # -- evaluation on gaps ------------------------------------------------

    def values(self, lam, x):
        """(f, g) at points x in (0, lam), vectorized."""
        x = np.asarray(x, dtype=float)
        return self._values_gap(lam, x, lam - x)

    def _values_gap(self, lam, x, a):
        exps = self._exponents()
        if exps is not None:
            ef, eg = exps
            return self.c_f * a ** ef, self.c_g * a ** eg
        f = np.asarray(self.f_func(x, lam), dtype=float) * self.c_f
        g = np.asarray(self.g_func(x, lam), dtype=float) * self.c_g
        return np.broadcast_to(f, x.shape), np.broadcast_to(g, x.shape)

    def _differences(self, lam, x, y, a, b):
        # f(x)-f(y) and g(x)-g(y) without cancellation for power families:
        # a^e - b^e = b^e expm1(e log1p((a-b)/b))
        exps = self._exponents()
        if exps is not None:
            rel = np.log1p((a - b) / b)
            return tuple(c * b ** e * np.expm1(e * rel)
                         for c, e in ((self.c_f, exps[0]), (self.c_g, exps[1])))
        fx, gx = self._values_gap(lam, x, a)
        fy, gy = self._values_gap(lam, y, b)
        return fx - fy, gx - gy

    def log_derivatives(self, lam, x):
        """((ln f)', (ln g)') with respect to x."""
        x = np.asarray(x, dtype=float)
        a = lam - x
        exps = self._exponents()
        if exps is not None:
            return -exps[0] / a, -exps[1] / a
        f, g = self._values_gap(lam, x, a)
        if self.df_func is not None and self.dg_func is not None:
            df = np.asarray(self.df_func(x, lam), dtype=float) * self.c_f
            dg = np.asarray(self.dg_func(x, lam), dtype=float) * self.c_g
        else:
            step = lam * 1e-6
            fp, gp = self._values_gap(lam, x + step, a - step)
            fm, gm = self._values_gap(lam, x - step, a + step)
            df, dg = (fp - fm) / (2 * step), (gp - gm) / (2 * step)
        return df / f, dg / g


def _replace(couple, **changes):
    from dataclasses import replace
    return replace(couple, **changes)


def catalog_couples():
    """The three catalog families at representative parameters used by the checks."""
    return [FGCouple("one_gap_alpha", 1.0), FGCouple("gap_gap_beta", 0.5),
            FGCouple("gap_pow_delta", 2.0)]


def eval_couple(couple, lam, x):
    """(f(x), g(x)) for a single point 0 < x < lam."""
    if not 0 < x < lam:
        raise DomainError(f"x = {x} lies outside (0, {lam})")
    f, g = couple.values(lam, np.array([x]))
    return float(f[0]), float(g[0])


@dataclass
class MembershipReport:
    couple: str
    lam: float
    passed: bool
    max_value: float
    worst_pair: tuple
    tol: float
    pairs_checked: int
    nonincreasing_g: bool
    max_g_slope: float
    warnings: list

    @property
    def verdict(self):
        return "no violation found" if self.passed else "violation found"

    def as_dict(self):
        out = dict(self.__dict__)
        out["verdict"] = self.verdict
        out["worst_pair"] = [float(t) for t in self.worst_pair]
        return out


def membership_grid(lam, grid_n):
    """Open-interval grid plus a partner at distance lam*1e-5 for each point."""
    base = lam * (np.arange(grid_n) + 0.5) / grid_n
    eps = lam * NEAR_PAIR_FRACTION
    partners = base + np.where(base + eps < lam, eps, -eps)
    return np.concatenate([base, partners])


def condition_terms(couple, lam, x, y):
    """The two summands of the two-point condition at pairs (x, y), plus g's slope."""
    return _condition_terms(couple, lam, x, y)[:3]


def _condition_terms(couple, lam, x, y):
    a, b = lam - x, lam - y
    fx, gx = couple._values_gap(lam, x, a)
    fy, gy = couple._values_gap(lam, y, b)
    df, dg = couple._differences(lam, x, y, a, b)
    dx = b - a  # x - y, computed from the gaps so it is consistent with them
    slope_f = df / dx
    slope_g = dg / dx
    weight = fx ** 2 / (gx * a) + fy ** 2 / (gy * b)
    if couple._exponents() is not None:
        rounding = np.zeros_like(slope_f)
    else:
        # plain differences of callables lose ~eps |f| / |x - y| to cancellation
        eps = 4 * np.finfo(float).eps / np.abs(dx)
        err_f = eps * np.maximum(np.abs(fx), np.abs(fy))
        err_g = eps * np.maximum(np.abs(gx), np.abs(gy))
        rounding = 2 * np.abs(slope_f) * err_f + err_f ** 2 + np.abs(weight) * err_g
    return slope_f ** 2, weight * slope_g, slope_g, rounding


def check_membership(couple, lam, grid_n=200):
    """Largest value of the two-point expression over all grid pairs."""
    if grid_n < 16:
        raise InputError("grid_n must be at least 16")
    if not lam > 0:
        raise InputError("lambda must be positive")
    if couple.fixed_lambda is not None and not math.isclose(couple.fixed_lambda, lam, rel_tol=1e-12):
        raise InputError(f"tabulated couple is defined for lambda={couple.fixed_lambda}, not {lam}")
    pts = membership_grid(lam, grid_n)
    i, j = np.triu_indices(pts.size, k=1)
    x, y = pts[i], pts[j]
    with np.errstate(all="ignore"):
        t1, t2, slope_g, rounding = _condition_terms(couple, lam, x, y)
        total = t1 + t2
        scale = np.maximum(np.abs(t1), np.abs(t2))
        tol = MEMBERSHIP_TOL * scale + rounding
    finite = np.isfinite(total) & np.isfinite(tol)
    warnings = []
    if not np.all(finite):
        bad = np.flatnonzero(~finite)
        warnings.append(f"{bad.size} pairs not evaluable (overflow), first at "
                        f"({x[bad[0]]:.6g}, {y[bad[0]]:.6g})")
    excess = np.where(finite, total - tol, -np.inf)
    worst = int(np.argmax(excess))
    passed = bool(excess[worst] <= 0)
    slopes = np.where(np.isfinite(slope_g), slope_g, -np.inf)
    g_scale = np.max(np.abs(couple.values(lam, pts)[1]))
    max_slope = float(np.max(slopes))
    return MembershipReport(
        couple=couple.label, lam=float(lam), passed=passed,
        max_value=float(total[worst]), worst_pair=(float(x[worst]), float(y[worst])),
        tol=float(tol[worst]), pairs_checked=int(x.size),
        nonincreasing_g=bool(max_slope <= MEMBERSHIP_TOL * g_scale / lam),
        max_g_slope=max_slope, warnings=warnings)


def check_necessary_diff(couple, lam, grid_n=200):
    """((ln f)')^2 <= -2/(lam - x) (ln g)' at every grid point, up to 1e-12 relative."""
    x = lam * (np.arange(grid_n) + 0.5) / grid_n
    lf, lg = couple.log_derivatives(lam, x)
    left = lf ** 2
    right = -2.0 / (lam - x) * lg
    scale = np.maximum(np.abs(left), np.abs(right))
    return bool(np.all(left - right <= MEMBERSHIP_TOL * scale))


def load_tabulated_couple(path):
    """Read a custom couple from a text table.

    Format: comment lines starting with ``#``; one of them must read
    ``# lambda = <value>``.  Data rows: ``x f g`` (whitespace or comma
    separated), x strictly increasing inside (0, lambda).  Values between
    rows use monotone cubic interpolation.
    """
    from scipy.interpolate import PchipInterpolator

    lam = None
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                body = text[1:].strip()
                if body.replace(" ", "").lower().startswith("lambda="):
                    lam = float(body.split("=", 1)[1])
                continue
            parts = text.replace(",", " ").split()
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            rows.append([float(p) for p in parts])
    if lam is None:
        raise InputError(f"{path}: missing '# lambda = <value>' header")
    data = np.array(rows)
    if data.shape[0] < 4:
        raise InputError(f"{path}: need at least 4 rows")
    xs, fs, gs = data.T
    if np.any(np.diff(xs) <= 0) or xs[0] <= 0 or xs[-1] >= lam:
        raise InputError(f"{path}: x must increase strictly inside (0, {lam})")
    if np.any(fs <= 0) or np.any(gs <= 0):
        raise InputError(f"{path}: f and g must be positive")
    fi, gi = PchipInterpolator(xs, fs, extrapolate=True), PchipInterpolator(xs, gs, extrapolate=True)
    dfi, dgi = fi.derivative(), gi.derivative()
    return FGCouple("custom", f_func=lambda x, _lam: fi(x), g_func=lambda x, _lam: gi(x),
                    df_func=lambda x, _lam: dfi(x), dg_func=lambda x, _lam: dgi(x),
                    fixed_lambda=lam, name=f"table:{path}")
