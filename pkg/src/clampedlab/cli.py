"""Command-line experiment runner.

Exit status: 0 when every check passes, 2 when a mathematical check fails,
1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .abstractlab import fuzz, read_replay, theorem_sides
from .bounds import COUPLED, QUADRATIC, REQUIRED, check_all, next_bound_bisection, next_bound_quadratic
from .config import load_config
from .discretize import richardson_order, solve_spectrum, verify_proof_identities
from .errors import ClampedLabError, ConfigurationError, DiagnosticError, GapError, InconsistentDataError
from .families import FGCouple, catalog_couples, check_membership, check_necessary_diff

EXIT_OK, EXIT_USAGE, EXIT_MATH = 0, 1, 2


def fmt(x):
    """Machine-readable float: 17 significant digits."""
    return f"{x:.17g}"


def short(x):
    """Summary float: 6 significant digits."""
    return f"{x:.6g}"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


class Output:
    """Writes reports into one directory; only the ``run`` block varies between reruns."""

    def __init__(self, directory):
        self.dir = directory
        os.makedirs(directory, exist_ok=True)
        self.started = time.perf_counter()
        self.written = []

    def path(self, name):
        return os.path.join(self.dir, name)

    def csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
        self.written.append(name)

    def dat(self, name, columns, rows, comment=""):
        """Whitespace-separated plot-ready table with a commented header."""
        with open(self.path(name), "w") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            fh.write("# " + " ".join(columns) + "\n")
            for row in rows:
                fh.write(" ".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v)
                                  for v in row) + "\n")
        self.written.append(name)

    def json(self, name, payload):
        payload = dict(payload)
        payload["run"] = {
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
            "runtime_s": time.perf_counter() - self.started,
            "version": __version__,
        }
        with open(self.path(name), "w") as fh:
            json.dump(_clean(payload), fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.written.append(name)


def _require_domain(cfg):
    if cfg.domain is None:
        raise ConfigurationError("this command needs a [domain] section")
    return cfg.domain


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg, out):
    spec = _require_domain(cfg)
    spectrum = solve_spectrum(spec, cfg.k_max)
    rows, index = [], 1
    for entry in spectrum.entries:
        rows.append([index, entry.value, entry.mode_label, entry.multiplicity, spectrum.h])
        index += entry.multiplicity
    out.csv("spectrum.csv", ["index", "value", "mode_label", "multiplicity", "h"], rows)
    out.dat("spectrum.dat", ["index", "value"],
            [[i + 1, v] for i, v in enumerate(spectrum.values)], "eigenvalues with multiplicity")
    pairs = spectrum.near_degenerate_pairs()
    out.json("spectrum.json", {"command": "solve", "domain": spectrum.domain.describe(),
                               "h": spectrum.h, "grid_n": spec.grid_n, "k_max": cfg.k_max,
                               "dimension": spectrum.dimension, "near_degenerate_pairs": pairs,
                               "values": list(spectrum.values)})
    print(f"solve: {spec.kind}, grid_n={spec.grid_n}, h={short(spectrum.h)}")
    for row in rows:
        print(f"  lambda_{row[0]} = {short(row[1])}  [{row[2]}] x{row[3]}")
    if pairs:
        print(f"  near-degenerate pairs: {pairs}")
    return EXIT_OK


def _spectrum_values(cfg, count):
    spec = _require_domain(cfg)
    values = solve_spectrum(spec, count).values[:count]
    coarse = None
    if cfg.coarse_grid_n is not None:
        coarse = solve_spectrum(replace(spec, grid_n=cfg.coarse_grid_n), count).values[:count]
    if cfg.corrupt_index is not None:
        i = cfg.corrupt_index - 1
        if not 0 <= i < count:
            raise ConfigurationError(f"corrupt_index {cfg.corrupt_index} outside 1..{count}")
        values = values.copy()
        values[i] *= cfg.corrupt_factor
        if coarse is not None:
            coarse = coarse.copy()
            coarse[i] *= cfg.corrupt_factor
    return values, coarse


def _check_requested(cfg, ctx):
    if cfg.ids is None:
        return
    missing = sorted({c for i in cfg.ids for c in REQUIRED.get(i, ()) if getattr(ctx, c) is None})
    if missing:
        raise ConfigurationError(f"missing context constant(s): {', '.join(missing)}")


def cmd_verify(cfg, out):
    ctx = cfg.bound_context()
    _check_requested(cfg, ctx)
    k_range = cfg.k_range
    values, coarse = _spectrum_values(cfg, max(k_range) + 1)
    report = check_all(values, ctx, ids=cfg.ids, couples=cfg.couples, k_range=k_range,
                       coarse=coarse, tol_factor=cfg.tol_factor)
    rows = [[e.id, e.couple, e.k, e.lhs, e.rhs, e.slack, str(e.holds).lower()] for e in report.entries]
    out.csv("bounds.csv", ["id", "couple", "k", "lhs", "rhs", "slack", "holds"], rows)
    out.dat("bounds.dat", ["k", "slack", "lhs", "rhs"],
            [[e.k, e.slack, e.lhs, e.rhs] for e in report.entries],
            "blocks follow bounds.csv row order (id, couple)")
    requested = cfg.ids if cfg.ids is not None else None
    not_applied = [] if requested is None else [i for i in requested if i not in ctx.applicable(requested)]
    out.json("bounds.json", {"command": "verify", "context": ctx.as_dict(),
                             "domain": cfg.domain.describe(), "all_hold": report.all_hold,
                             "skipped_k": report.skipped, "not_applicable": not_applied,
                             "entries": [e.as_dict() for e in report.entries],
                             "values": list(values)})
    ids = sorted({e.id for e in report.entries})
    print(f"verify: {len(report.entries)} evaluations, geometry={ctx.geometry}, n={ctx.n}")
    for ident in ids:
        fails = sum(1 for e in report.entries if e.id == ident and not e.holds)
        status = "PASS" if fails == 0 else f"FAIL ({fails})"
        print(f"  {ident:18s} min slack {short(report.min_slack(ident)):>12s}  {status}")
    if not_applied:
        print(f"  not applicable to geometry {ctx.geometry}: {', '.join(not_applied)}")
    for item in report.skipped:
        print(f"  skipped k={item['k']}: {item['reason']}")
    return EXIT_OK if report.all_hold else EXIT_MATH


def _default_quadratic(ctx):
    if ctx.geometry == "sphere":
        return "cim_sphere"
    if ctx.delta is not None and ctx.geometry in ("euclidean_submanifold", "minimal_submanifold"):
        return "cim_submanifold"
    return "cim_flat_l2"


def cmd_bound(cfg, out):
    ctx = cfg.bound_context()
    _check_requested(cfg, ctx)
    k_range = cfg.k_range
    values, _ = _spectrum_values(cfg, max(k_range) + 1)
    ids = cfg.ids if cfg.ids is not None else [_default_quadratic(ctx)]
    rows, failed = [], False
    for k in k_range:
        lam_next = float(values[k])
        for ident in ids:
            if ident in QUADRATIC:
                jobs = [(ident, "-", None)]
            elif ident in COUPLED:
                jobs = [(ident, c.label, c) for c in cfg.couples]
            else:
                continue
            for name, label, couple in jobs:
                if couple is None:
                    bound, conclusive = next_bound_quadratic(values[:k], ctx, name), True
                else:
                    try:
                        res = next_bound_bisection(values[:k], ctx, name, couple, known_next=lam_next)
                    except GapError:
                        continue
                    bound, conclusive = res.bound, res.conclusive
                ratio = lam_next / bound if conclusive else math.nan
                if conclusive and ratio > 1 + 1e-12:
                    failed = True
                rows.append([k, name, label, lam_next, bound if conclusive else math.nan, ratio])
    out.csv("bound_table.csv", ["k", "id", "couple", "lambda_next", "Lambda_upper", "ratio"], rows)
    out.dat("bound_table.dat", ["k", "lambda_next", "Lambda_upper", "ratio"],
            [[r[0], r[3], r[4], r[5]] for r in rows], "blocks follow bound_table.csv row order")
    out.json("bound_table.json", {"command": "bound", "context": ctx.as_dict(),
                                  "domain": cfg.domain.describe(), "ratio_le_one": not failed,
                                  "rows": [dict(zip(["k", "id", "couple", "lambda_next",
                                                     "Lambda_upper", "ratio"], r)) for r in rows]})
    print("bound: k, id, couple, lambda_{k+1}, Lambda_upper, ratio")
    for r in rows:
        print(f"  {r[0]:3d} {r[1]:14s} {r[2]:22s} {short(r[3]):>12s} {short(r[4]):>12s} {short(r[5]):>9s}")
    return EXIT_MATH if failed else EXIT_OK


def cmd_family_check(cfg, out):
    couple = cfg.family_couple or FGCouple("gap_pow_delta", 2.0)
    lam = couple.fixed_lambda or cfg.family_lambda
    report = check_membership(couple, lam, cfg.family_grid)
    necessary = check_necessary_diff(couple, lam, cfg.family_grid)
    x = lam * (np.arange(cfg.family_grid) + 0.5) / cfg.family_grid
    f, g = couple.values(lam, x)
    out.dat("family.dat", ["x", "f", "g"], np.column_stack([x, f, g]).tolist(), couple.label)
    out.json("family.json", {"command": "family-check", **report.as_dict(),
                             "necessary_differential": necessary})
    status = "PASS" if report.passed else "FAIL"
    print(f"family-check: {couple.label} at lambda={short(lam)}, {report.pairs_checked} pairs: "
          f"{status} ({report.verdict})")
    print(f"  max two-point value {short(report.max_value)} at pair "
          f"({short(report.worst_pair[0])}, {short(report.worst_pair[1])})")
    print(f"  differential necessary condition: {'holds' if necessary else 'fails'}")
    for w in report.warnings:
        print(f"  warning: {w}")
    return EXIT_OK if report.passed else EXIT_MATH


def cmd_abstract_test(cfg, out, replay=None):
    if replay is not None:
        inst, couple, adjoint = read_replay(replay)
        couples = [couple] if couple is not None else catalog_couples()
        results = []
        for c in couples:
            lhs, rhs = theorem_sides(inst, c, check_couple=False, lhs_via_adjoint=adjoint)
            results.append({"couple": c.label, "lhs": lhs, "rhs": rhs, "slack": rhs - lhs})
        out.json("replay.json", {"command": "abstract-test", "replay": replay, "order": inst.dim,
                                 "k": inst.k, "lhs_via_adjoint": adjoint, "results": results})
        bad = False
        print(f"abstract-test replay: order {inst.dim}, k={inst.k}, {len(inst.b)} operator pair(s)")
        for r in results:
            ok = r["slack"] >= -1e-9 * max(abs(r["lhs"]), abs(r["rhs"]), 1.0)
            bad |= not ok
            print(f"  {r['couple']:22s} lhs {short(r['lhs'])}  rhs {short(r['rhs'])}  "
                  f"{'PASS' if ok else 'FAIL'}")
        return EXIT_MATH if bad else EXIT_OK
    report = fuzz(cfg.trials, cfg.dim_max, cfg.abstract_couples, cfg.seed, n_ops_max=cfg.n_ops_max,
                  replay_dir=out.dir, corrupt=cfg.abstract_corrupt, complex_mode=cfg.abstract_complex,
                  allow_noncatalog=True)
    for path in report.replay_files:
        out.written.append(os.path.basename(path))
    out.json("abstract.json", {"command": "abstract-test", "seed": cfg.seed,
                               "corrupt": cfg.abstract_corrupt, **report.as_dict()})
    print(f"abstract-test: {report.trials} trials x {len(report.couples)} couples, seed={cfg.seed}"
          + (f", negative control {cfg.abstract_corrupt}" if cfg.abstract_corrupt else ""))
    print(f"  min slack {short(report.min_slack)}, min scaled slack {short(report.min_scaled_slack)}")
    print(f"  violations: {len(report.violations)}")
    for v in report.violations[:5]:
        print(f"    trial {v['trial']} {v['couple']}: lhs {short(v['lhs'])} > rhs {short(v['rhs'])}")
    return EXIT_OK if report.passed else EXIT_MATH


def cmd_convergence(cfg, out):
    spec = _require_domain(cfg)
    k = cfg.convergence_k
    extrapolated, orders = richardson_order(spec, k)
    rows = [[i + 1, extrapolated[i], orders[i]] for i in range(k)]
    out.dat("convergence.dat", ["i", "extrapolated", "order"], rows)
    out.json("convergence.json", {"command": "convergence", "domain": spec.describe(),
                                  "grids": [spec.grid_n, 2 * spec.grid_n, 4 * spec.grid_n],
                                  "extrapolated": extrapolated, "orders": orders})
    print(f"convergence: {spec.kind}, grids {spec.grid_n}/{2 * spec.grid_n}/{4 * spec.grid_n}")
    for r in rows:
        print(f"  lambda_{r[0]} -> {short(r[1])}  observed order {short(r[2])}")
    return EXIT_OK


def cmd_identities(cfg, out):
    spec = _require_domain(cfg)
    rep = verify_proof_identities(spec, cfg.identities_k)
    data = rep.as_dict()
    out.dat("identities.dat", ["i", "value", "trace_residual", "gradient_residual", "cs_slack"],
            [[i + 1, rep.values[i], rep.trace_residual[i], rep.gradient_residual[i],
              rep.cauchy_schwarz_slack[i]] for i in range(len(rep.values))])
    out.json("identities.json", {"command": "identities", "domain": spec.describe(), **data})
    print(f"identities: {spec.kind}, n={rep.n}, h={short(rep.h)}")
    for i in range(len(rep.values)):
        print(f"  u_{i + 1}: trace residual {short(rep.trace_residual[i])}, gradient residual "
              f"{short(rep.gradient_residual[i])}, Cauchy-Schwarz slack {short(rep.cauchy_schwarz_slack[i])}")
    return EXIT_OK if all(s >= 0 for s in rep.cauchy_schwarz_slack) else EXIT_MATH


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "bound": cmd_bound,
    "family-check": cmd_family_check,
    "abstract-test": cmd_abstract_test,
    "convergence": cmd_convergence,
    "identities": cmd_identities,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="clampedlab",
                                     description="Clamped plate spectra and universal inequality checks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="INI experiment file")
        p.add_argument("--out", metavar="DIR", help="output directory (default: [run] out)")
        p.add_argument("--seed", type=int, help="overrides [run] seed")
        p.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[],
                       help="override one config setting; repeatable")
        if name == "family-check":
            p.add_argument("--couple", help="family:param, power_custom:pf[:pg] or table:PATH")
            p.add_argument("--lam", type=float, help="lambda")
            p.add_argument("--grid", type=int, help="grid points")
        if name == "abstract-test":
            p.add_argument("--trials", type=int)
            p.add_argument("--dim-max", type=int)
            p.add_argument("--replay", metavar="PATH", help="re-evaluate a dumped instance")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.out is not None:
        overrides.append(f"run.out={args.out}")
    for attr, key in (("couple", "family.couple"), ("lam", "family.lambda"), ("grid", "family.grid"),
                      ("trials", "abstract.trials"), ("dim_max", "abstract.dim_max")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    try:
        cfg = load_config(args.config, overrides)
        out = Output(cfg.out)
        if args.command == "abstract-test":
            return cmd_abstract_test(cfg, out, getattr(args, "replay", None))
        return COMMANDS[args.command](cfg, out)
    except (DiagnosticError, InconsistentDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    except (ClampedLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
