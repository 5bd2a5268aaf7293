"""Experiment configuration: an INI file with one section per concern.

Example::

    [domain]
    kind = geodesic_disk      ; beam | rectangle | geodesic_disk
    curvature = 0
    radius = 1
    grid_n = 100
    potential = 5             ; constant, or an expression in x | x, y | r

    [run]
    k_max = 11
    seed = 1

    [bounds]
    ids = ashbaugh, cheng_yang, cim_flat_l2
    couples = one_gap_alpha:1, gap_gap_beta:0.5, gap_pow_delta:2

Every setting can also be overridden from the command line as
``section.key=value``.  Errors name the offending line.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Optional

from .bounds import GEOMETRY_IDS, INEQUALITIES, BoundContext
from .discretize import KINDS, DomainSpec
from .errors import ClampedLabError, ConfigurationError
from .families import FGCouple, catalog_couples, load_tabulated_couple

SCHEMA = {
    "domain": {"kind", "grid_n", "length", "width", "height", "curvature", "radius", "m_max",
               "potential", "potential_lower_bound", "weight", "coarse_grid_n"},
    "run": {"k_max", "seed", "out"},
    "bounds": {"ids", "couples", "geometry", "n", "delta", "delta_prime", "lambda_map", "q_inf",
               "k_min", "k_max", "corrupt_index", "corrupt_factor", "tol_factor"},
    "family": {"couple", "lambda", "grid"},
    "abstract": {"trials", "dim_max", "n_ops_max", "couples", "corrupt", "complex"},
    "convergence": {"k"},
    "identities": {"k"},
}

_VARIABLES = {"beam": ("x",), "rectangle": ("x", "y"), "geodesic_disk": ("r",)}


class _Source:
    """Key to line-number map, rebuilt from the raw text."""

    _section = re.compile(r"^\s*\[([^\]]+)\]")
    _key = re.compile(r"^\s*([^=:;#\s][^=:]*?)\s*[=:]")

    def __init__(self, text):
        self.lines = {}
        section = None
        for number, line in enumerate(text.splitlines(), 1):
            m = self._section.match(line)
            if m:
                section = m.group(1).strip().lower()
                self.lines.setdefault((section, None), number)
                continue
            m = self._key.match(line)
            if m and section is not None and not line[:1].isspace():
                self.lines[(section, m.group(1).strip().lower())] = number

    def line(self, section, key=None):
        return self.lines.get((section, key), self.lines.get((section, None)))


@dataclass
class ExperimentConfig:
    domain: Optional[DomainSpec] = None
    coarse_grid_n: Optional[int] = None
    k_max: int = 10
    seed: int = 0
    out: str = "results"
    ids: Optional[list] = None
    couples: list = field(default_factory=catalog_couples)
    context: dict = field(default_factory=dict)
    k_min: int = 1
    k_top: Optional[int] = None
    corrupt_index: Optional[int] = None
    corrupt_factor: float = 1.0
    tol_factor: float = 10.0
    family_couple: Optional[FGCouple] = None
    family_lambda: float = 1000.0
    family_grid: int = 200
    trials: int = 1000
    dim_max: int = 12
    n_ops_max: int = 3
    abstract_couples: list = field(default_factory=catalog_couples)
    abstract_corrupt: Optional[str] = None
    abstract_complex: bool = False
    convergence_k: int = 3
    identities_k: int = 5

    def bound_context(self):
        """BoundContext from [bounds], filling n and q_inf from the domain when absent."""
        ctx = dict(self.context)
        if "n" not in ctx:
            if self.domain is None:
                raise ConfigurationError("[bounds] n is required when no [domain] is given")
            ctx["n"] = self.domain.dimension
        if "q_inf" not in ctx and self.domain is not None:
            ctx["q_inf"] = potential_infimum(self.domain)
        if "geometry" not in ctx and self.domain is not None:
            ctx["geometry"] = _default_geometry(self.domain)
        return BoundContext(**ctx)

    @property
    def k_range(self):
        top = self.k_top if self.k_top is not None else self.k_max - 1
        return range(self.k_min, top + 1)


def _default_geometry(spec):
    if spec.kind == "geodesic_disk" and spec.curvature == 1:
        return "sphere"
    if spec.kind == "geodesic_disk" and spec.curvature == -1:
        return "hyperbolic"
    return "flat"


def potential_infimum(spec):
    """inf q used for the shifted eigenvalues: the declared bound, else the constant, else 0."""
    if spec.potential is None:
        return 0.0
    if spec.potential_lower_bound is not None:
        return float(spec.potential_lower_bound)
    if not callable(spec.potential):
        return float(spec.potential)
    raise ConfigurationError("a non-constant potential needs potential_lower_bound")


def parse_couple(text):
    """``family:param`` (``power_custom:pf[:pg]``) or ``table:PATH``."""
    text = text.strip()
    if text.startswith("table:"):
        return load_tabulated_couple(text[len("table:"):].strip())
    parts = [p.strip() for p in text.split(":")]
    family = parts[0]
    try:
        nums = [float(p) for p in parts[1:]]
    except ValueError:
        raise ConfigurationError(f"bad couple parameter in {text!r}") from None
    if family == "power_custom" and len(nums) in (1, 2):
        return FGCouple(family, nums[0], param_g=nums[1] if len(nums) == 2 else None)
    if len(nums) != 1:
        raise ConfigurationError(f"couple {text!r} must read family:parameter")
    return FGCouple(family, nums[0])


def parse_function(text, kind):
    """Constant, or a vectorized callable of the node coordinates for ``kind``."""
    try:
        return float(text)
    except ValueError:
        pass
    import sympy

    names = _VARIABLES[kind]
    symbols = sympy.symbols(names)
    try:
        expr = sympy.sympify(text, locals={n: s for n, s in zip(names, symbols)})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigurationError(f"cannot parse expression {text!r}: {exc}") from None
    extra = expr.free_symbols - set(symbols)
    if extra:
        raise ConfigurationError(
            f"expression {text!r} uses {sorted(map(str, extra))}; allowed variables for {kind}: {names}")
    func = sympy.lambdify(symbols, expr, "numpy")

    def sampled(*coords):
        return func(*coords)

    sampled.source = text
    return sampled


def _split_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def load_config(path=None, overrides=()):
    """Parse an INI file (optional) plus ``section.key=value`` overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    text = ""
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            parser.read_string(text, source=str(path))
        except configparser.ParsingError as exc:
            line = exc.errors[0][0] if exc.errors else None
            raise ConfigurationError(f"malformed line {exc.errors[0][1] if exc.errors else ''}", line) from None
        except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
            raise ConfigurationError(exc.message if hasattr(exc, "message") else str(exc), exc.lineno) from None
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigurationError("settings must follow a [section] header", exc.lineno) from None
    source = _Source(text)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigurationError(f"override {item!r} must read section.key=value")
        key, value = item.split("=", 1)
        section, option = key.strip().lower().split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, value.strip())
    return _build(parser, source)


def _build(parser, source):
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]", source.line(section))
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {key!r} in [{section}]", source.line(section, key))

    def get(section, key, conv=str, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        if raw == "":
            return default
        try:
            return conv(raw)
        except ClampedLabError as exc:
            if isinstance(exc, ConfigurationError) and exc.line is not None:
                raise
            raise ConfigurationError(f"[{section}] {key}: {exc}", source.line(section, key)) from None
        except ValueError:
            raise ConfigurationError(f"[{section}] {key}: cannot read {raw!r} as {conv.__name__}",
                                     source.line(section, key)) from None

    def boolean(text):
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(text)

    boolean.__name__ = "boolean"
    cfg = ExperimentConfig()
    if parser.has_section("domain"):
        kind = get("domain", "kind")
        if kind is None:
            raise ConfigurationError("[domain] needs kind", source.line("domain"))
        if kind not in KINDS:
            raise ConfigurationError(f"unknown domain kind {kind!r}; expected one of {KINDS}",
                                     source.line("domain", "kind"))
        fields = {"kind": kind}
        for key, conv in (("grid_n", int), ("length", float), ("width", float), ("height", float),
                          ("curvature", int), ("radius", float), ("m_max", int),
                          ("potential_lower_bound", float)):
            value = get("domain", key, conv)
            if value is not None:
                fields[key] = value
        for key in ("potential", "weight"):
            value = get("domain", key, lambda t: parse_function(t, kind))
            if value is not None:
                fields[key] = value
        try:
            cfg.domain = DomainSpec(**fields)
        except ClampedLabError as exc:
            line = source.line("domain")
            prefix = f"line {line}: " if line is not None else ""
            raise type(exc)(f"{prefix}[domain] {exc}") from None
        cfg.coarse_grid_n = get("domain", "coarse_grid_n", int)
    cfg.k_max = get("run", "k_max", int, cfg.k_max)
    if cfg.k_max < 2:
        raise ConfigurationError("k_max must be at least 2", source.line("run", "k_max"))
    cfg.seed = get("run", "seed", int, cfg.seed)
    cfg.out = get("run", "out", str, cfg.out)

    ids = get("bounds", "ids", _split_list)
    if ids is not None:
        unknown = [i for i in ids if i not in INEQUALITIES]
        if unknown:
            raise ConfigurationError(f"unknown inequality id(s) {unknown}", source.line("bounds", "ids"))
        cfg.ids = ids
    cfg.couples = get("bounds", "couples", lambda t: [parse_couple(c) for c in _split_list(t)],
                      cfg.couples)
    geometry = get("bounds", "geometry")
    if geometry is not None:
        if geometry not in GEOMETRY_IDS:
            raise ConfigurationError(f"unknown geometry {geometry!r}", source.line("bounds", "geometry"))
        cfg.context["geometry"] = geometry
    for key, conv in (("n", int), ("delta", float), ("delta_prime", float),
                      ("lambda_map", float), ("q_inf", float)):
        value = get("bounds", key, conv)
        if value is not None:
            cfg.context[key] = value
    cfg.k_min = get("bounds", "k_min", int, cfg.k_min)
    cfg.k_top = get("bounds", "k_max", int)
    cfg.corrupt_index = get("bounds", "corrupt_index", int)
    cfg.corrupt_factor = get("bounds", "corrupt_factor", float, cfg.corrupt_factor)
    cfg.tol_factor = get("bounds", "tol_factor", float, cfg.tol_factor)

    cfg.family_couple = get("family", "couple", parse_couple)
    cfg.family_lambda = get("family", "lambda", float, cfg.family_lambda)
    cfg.family_grid = get("family", "grid", int, cfg.family_grid)

    cfg.trials = get("abstract", "trials", int, cfg.trials)
    cfg.dim_max = get("abstract", "dim_max", int, cfg.dim_max)
    cfg.n_ops_max = get("abstract", "n_ops_max", int, cfg.n_ops_max)
    cfg.abstract_couples = get("abstract", "couples",
                               lambda t: [parse_couple(c) for c in _split_list(t)], cfg.abstract_couples)
    cfg.abstract_corrupt = get("abstract", "corrupt")
    if cfg.abstract_corrupt not in (None, "skew_sign"):
        raise ConfigurationError("[abstract] corrupt must be skew_sign", source.line("abstract", "corrupt"))
    cfg.abstract_complex = get("abstract", "complex", boolean, False)

    cfg.convergence_k = get("convergence", "k", int, cfg.convergence_k)
    cfg.identities_k = get("identities", "k", int, cfg.identities_k)
    if not math.isfinite(cfg.family_lambda) or cfg.family_lambda <= 0:
        raise ConfigurationError("[family] lambda must be positive", source.line("family", "lambda"))
    return cfg
