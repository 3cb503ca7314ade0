"""Command-line front end.

Subcommands
-----------
test        Monte Carlo goodness-of-fit test of a data file or embedded data set.
critvals    Null 95th percentiles of sqrt(n) J and |sqrt(n) R| over a grid of n.
power       Empirical powers against the simulation-study alternatives.
efficiency  Local approximate Bahadur efficiencies.
constants   Asymptotic constants (variances, limiting critical values, curves).
datasets    List or print the embedded data sets.

Exit codes: 0 = success / null retained, 1 = at least one test rejects,
2 = usage, input or numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, asym
from .datasets import DATASETS, DEFAULT_INVERT, get_dataset, ingest
from .dist import BAHADUR_ALTERNATIVES, POWER_ALTERNATIVES, parse_alternative
from .errors import LevyGofError
from .estimate import EstimatorKind
from .mc import MCConfig, ResultTable, default_workers, mc_critical_values, mc_pvalues, mc_table
from .stats import FAMILIES, J_WEIGHTS, StatisticSpec, Tail

SEED_ENV = "LEVYGOF_SEED"

J_GRID = (1.0, 2.0, 5.0, 10.0)
R_GRID = (0.2, 0.5, 1.0, 2.0, 5.0)
CRIT_SIZES = tuple(range(20, 501, 20))
POWER_SIZES = (25, 50)
POWER_COLUMNS = ("I[1,1]", "J1", "J2", "J5", "J10", "R0.2", "R0.5", "R1", "R2", "R5", "KS", "CVM", "AD", "N1a", "N1b")
IBAR_PAIRS = ((1, 1), (2, 3), (5, 9), (9, 6), (10, 4))
SIGMA0_PAIRS = ((1, 1), (1, 2), (1, 5), (1, 10), (2, 3), (3, 10), (4, 5), (6, 7), (9, 10), (10, 10))

_FAMILY_ALIASES = {f.lower(): f for f in FAMILIES}
_FAMILY_ALIASES.update({"i": "Ibar", "t": "Ibar", "cvm": "CVM", "cm": "CVM"})


class CliError(Exception):
    """Invalid flag combination (exit code 2)."""


# ---------------------------------------------------------------------------
# flag helpers
# ---------------------------------------------------------------------------


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _positive_int(text: str) -> int:
    try:
        v = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1 or v != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _alpha(text: str) -> float:
    v = _positive_float(text)
    if v >= 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return v


def _estimators(choice: str) -> list[EstimatorKind]:
    if choice == "both":
        return [EstimatorKind.MLE, EstimatorKind.MBE]
    return [EstimatorKind.parse(choice)]


def _family_grid(family: str) -> tuple:
    if family == "J":
        return J_GRID
    if family in ("R", "Rstd"):
        return R_GRID
    return (1.0,)


def build_specs(args, default: tuple[str, ...]) -> list[StatisticSpec]:
    """Expand ``--stat/--a/--b/--estimator/--weight/--tail`` into statistic specs.

    A bare family name without ``--a`` expands to its default grid; a full
    label such as ``R0.5`` or ``I[2,3]`` is taken as is.
    """
    tokens = args.stat or list(default)
    ests = _estimators(args.estimator)
    out: list[StatisticSpec] = []
    for tok in tokens:
        fam = _FAMILY_ALIASES.get(tok.strip().lower())
        if fam is None:
            base = [StatisticSpec.parse(tok)]
        else:
            a_vals = args.a if args.a else _family_grid(fam)
            if fam == "Ibar":
                b_vals = args.b if args.b else [1.0]
                if args.a and args.b and len(args.a) != len(args.b):
                    raise CliError("--a and --b must have the same length for Ibar")
                pairs = list(zip(a_vals, b_vals)) if args.b and args.a else [(a, b) for a in a_vals for b in b_vals]
                base = [StatisticSpec("Ibar", a, b) for a, b in pairs]
            elif fam in ("J", "R", "Rstd"):
                base = [StatisticSpec(fam, a) for a in a_vals]
            else:
                base = [StatisticSpec(fam)]
        for sp in base:
            kw = {}
            if sp.family == "J" and getattr(args, "weight", None):
                kw["weight"] = args.weight
            if getattr(args, "tail", None) and sp.family in ("Ibar", "N1a", "N1b"):
                kw["tail_override"] = args.tail
            if kw:
                sp = StatisticSpec(sp.family, sp.a, sp.b, sp.estimator, sp.sigma, kw.get("tail_override", sp.tail_override), kw.get("weight", sp.weight))
            variants = [sp.with_estimator(e) for e in ests] if sp.uses_estimator else [sp]
            for v in variants:
                if v not in out:
                    out.append(v)
    return out


def _mc_config(args, reps_default: int) -> MCConfig:
    seed = args.seed if args.seed is not None else _env_seed()
    workers = args.workers if args.workers else 1
    return MCConfig(
        replications=args.reps or reps_default,
        alpha=args.alpha,
        seed=seed,
        null_lambda=args.lam,
        workers=workers,
    )


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _emit(text: str, args) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _render_table(table: ResultTable, fmt: str, number: str) -> str:
    if fmt == "json":
        return table.to_json()
    if fmt == "csv":
        return table.to_csv()
    return table.to_text(number)


def _records_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _load_sample(args) -> tuple[np.ndarray, dict]:
    if args.data and args.input:
        raise CliError("give either --data or --input, not both")
    src = args.data or args.input
    if src is None:
        raise CliError("no input: use --data NAME or --input PATH")
    key = src.lower()
    if args.input is None and key in DATASETS:
        invert = DEFAULT_INVERT[key] if args.invert is None else args.invert
        return get_dataset(key, invert=invert), {"source": key, "inverted": invert}
    x = ingest(src)
    invert = bool(args.invert)
    return (1.0 / x if invert else x), {"source": str(src), "inverted": invert}


def cmd_test(args) -> int:
    x, info = _load_sample(args)
    specs = build_specs(args, ("R", "J"))
    cfg = _mc_config(args, 10_000)
    reports = mc_pvalues(x, specs, cfg)
    records = [r.as_dict() for r in reports]
    if args.format == "json":
        text = json.dumps({**info, "n": int(x.size), "tests": records}, indent=1)
    elif args.format == "csv":
        text = _records_csv(records)
    else:
        lines = [f"data: {info['source']}  n = {x.size}" + ("  (reciprocals)" if info["inverted"] else "")]
        lines.append(f"null: Lévy, scale unknown; {cfg.replications} replications, seed {cfg.seed}, alpha {cfg.alpha}")
        w = max(len(r["statistic"]) for r in records)
        lines.append(f"{'statistic':<{w}}  {'value':>13}  {'p-value':>8}  decision")
        for r in records:
            lines.append(f"{r['statistic']:<{w}}  {r['observed']:>13.6g}  {r['p_value']:>8.4f}  {r['decision']}")
        text = "\n".join(lines)
    _emit(text, args)
    return 1 if any(r.reject for r in reports) else 0


def cmd_critvals(args) -> int:
    specs = build_specs(args, ("J", "R"))
    bad = [sp.label for sp in specs if sp.family not in ("J", "R", "Rstd")]
    if bad:
        raise CliError(f"critvals supports J, R and Rstd only (got {', '.join(bad)})")
    cfg = _mc_config(args, 100_000)
    sizes = args.n or list(CRIT_SIZES)
    table = mc_critical_values(specs, sizes, cfg, root_n=True)
    if args.asymptotic:
        for sp in specs:
            if sp.family == "R":
                table.set(("inf", 0), sp.label, asym.asymptotic_critical_value(sp.a, cfg.alpha))
    _emit(_render_table(table, args.format, ".5g"), args)
    return 0


def cmd_power(args) -> int:
    if args.full:
        args.estimator = "both"
    specs = build_specs(args, POWER_COLUMNS)
    alts = [parse_alternative(a) for a in args.alt] if args.alt else list(POWER_ALTERNATIVES)
    cfg = _mc_config(args, 10_000)
    sizes = args.n or list(POWER_SIZES)
    table = mc_table(specs, alts, sizes, cfg)
    _emit(_render_table(table, args.format, ".2f"), args)
    return 0


def _efficiency_specs(args) -> list[StatisticSpec]:
    if args.stat:
        specs = build_specs(args, ())
    else:
        specs = [StatisticSpec.parse(s) for s in POWER_COLUMNS[:10]]
        if args.full:
            specs += [StatisticSpec("Ibar", a, b) for a, b in IBAR_PAIRS[1:]]
    bad = [sp.label for sp in specs if sp.family not in ("J", "R", "Ibar")]
    if bad:
        raise CliError(f"efficiencies are available for J, R and Ibar only (got {', '.join(bad)})")
    # estimator choice does not enter the asymptotics
    uniq = []
    for sp in specs:
        sp = sp.with_estimator(EstimatorKind.MLE)
        if sp not in uniq:
            uniq.append(sp)
    return uniq


def cmd_efficiency(args) -> int:
    specs = _efficiency_specs(args)
    alts = [parse_alternative(a) for a in args.alt] if args.alt else list(BAHADUR_ALTERNATIVES)
    cells = asym.efficiency_table(specs, alts)
    table = ResultTable("efficiency", [a.label for a in alts], meta={"statistic_rows": True})
    failed = False
    for sp, row in zip(specs, cells):
        lab = sp.label.split("/")[0] if sp.family != "J" or sp.weight == "table" else sp.label
        for alt, cell in zip(alts, row):
            if isinstance(cell, Exception):
                failed = True
                table.set((lab, 0), alt.label, math.nan, math.nan, f"{type(cell).__name__}: {cell}")
            else:
                table.set((lab, 0), alt.label, cell.efficiency)
    _emit(_render_table(table, args.format, ".4f"), args)
    if failed:
        for (r, _, c), msg in table.errors.items():
            print(f"levygof: {r} vs {c}: {msg}", file=sys.stderr)
        return 2
    return 0


def _curve(args) -> tuple[np.ndarray, np.ndarray, str]:
    kind = args.dump_curve
    a = args.a[0] if args.a else 1.0
    if kind == "sigma2":
        t, v = asym.curve_sigma2(a, points=args.points)
        return t, v, f"sigma2(t), a={a:g}"
    alt = parse_alternative(args.alt[0] if args.alt else "g2")
    t, v = asym.curve_A(a, alt, points=args.points)
    return t, v, f"A(t), a={a:g}, alternative {alt.label}"


def cmd_constants(args) -> int:
    if args.dump_curve:
        t, v, title = _curve(args)
        if args.format == "json":
            text = json.dumps({"curve": title, "t": t.tolist(), "value": v.tolist()}, indent=1)
        else:
            text = "t,value\n" + "\n".join(f"{ti!r},{vi!r}" for ti, vi in zip(t.tolist(), v.tolist()))
        _emit(text, args)
        return 0
    records = []
    for a in R_GRID:
        s2 = asym.sigma_R2(a)
        records.append({"name": "sigma2_R", "a": a, "b": None, "value": s2})
        records.append({"name": "R_crit_inf_95", "a": a, "b": None, "value": 1.959963984540054 * math.sqrt(s2)})
    records.append({"name": "sigma2_T", "a": 1.0, "b": 1.0, "value": asym.sigma_T2()})
    for a, b in SIGMA0_PAIRS:
        records.append({"name": "sigma2_0", "a": float(a), "b": float(b), "value": asym.sigma_0ab(a, b)})
    for a in J_GRID:
        t, v = asym.sup_sigma2(a)
        records.append({"name": "sup_sigma2_J", "a": a, "b": None, "value": v})
        records.append({"name": "argsup_sigma2_J", "a": a, "b": None, "value": t})
    if args.format == "json":
        text = json.dumps(records, indent=1)
    elif args.format == "csv":
        text = _records_csv(records)
    else:
        lines = []
        for r in records:
            ab = f"a={r['a']:g}" + (f", b={r['b']:g}" if r["b"] is not None else "")
            lines.append(f"{r['name']:<16} {ab:<14} {r['value']:.10g}")
        text = "\n".join(lines)
    _emit(text, args)
    return 0


def cmd_datasets(args) -> int:
    names = [args.name.lower()] if args.name else sorted(DATASETS)
    out = {}
    for nm in names:
        invert = DEFAULT_INVERT.get(nm, False) if args.invert is None else args.invert
        out[nm] = {"inverted": invert, "values": get_dataset(nm, invert=invert).tolist()}
    if args.format == "json":
        text = json.dumps(out, indent=1)
    elif args.name:
        text = "\n".join(repr(v) for v in out[names[0]]["values"])
    else:
        text = "\n".join(
            f"{nm:<10} n={len(d['values']):<3} default orientation: {'reciprocal' if DEFAULT_INVERT[nm] else 'raw'}"
            for nm, d in out.items()
        )
    _emit(text, args)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_stat_flags(p: argparse.ArgumentParser, weights: bool = True) -> None:
    g = p.add_argument_group("statistic")
    g.add_argument(
        "--stat", action="append", metavar="S",
        help="family (J, R, Rstd, Ibar, KS, CVM, AD, N1a, N1b) or a label such as R0.5, I[2,3]; repeatable",
    )
    g.add_argument("--a", type=_positive_float, nargs="+", metavar="A", help="tuning parameter(s)")
    g.add_argument("--b", type=_positive_float, nargs="+", metavar="B", help="second Ibar parameter(s)")
    g.add_argument("--estimator", default="mle", choices=["mle", "mbe", "med", "both"], help="scale estimator (default mle)")
    if weights:
        g.add_argument("--weight", choices=J_WEIGHTS, help="J weight convention (default table)")
        g.add_argument("--tail", choices=Tail.ALL, help="rejection region for Ibar/N1a/N1b")


def _add_mc_flags(p: argparse.ArgumentParser, reps_default: int) -> None:
    g = p.add_argument_group("Monte Carlo")
    g.add_argument("--reps", type=_positive_int, help=f"replications (default {reps_default})")
    g.add_argument("--seed", type=int, help=f"RNG seed (default ${SEED_ENV} or 0)")
    g.add_argument("--alpha", type=_alpha, default=0.05, help="level (default 0.05)")
    g.add_argument("--lambda", dest="lam", type=_positive_float, default=1.0, help="scale of simulated null samples")
    g.add_argument("--workers", type=int, default=None, help=f"worker processes (default 1; up to {default_workers()} useful)")


def _add_output_flags(p: argparse.ArgumentParser, default: str = "text") -> None:
    p.add_argument("--format", choices=["text", "json", "csv"], default=default)
    p.add_argument("-o", "--output", help="write to a file instead of stdout")


def _add_orientation(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--invert", dest="invert", action="store_const", const=True, help="use reciprocals of the data")
    g.add_argument("--raw", dest="invert", action="store_const", const=False, help="use the data as printed")
    p.set_defaults(invert=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levygof", description="Goodness-of-fit tests for the Lévy distribution.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test a sample for the Lévy law")
    p.add_argument("--data", help="embedded data set (rainfall, hillside) or a file path")
    p.add_argument("--input", help="file with one value per line or a single CSV column")
    _add_orientation(p)
    _add_stat_flags(p)
    _add_mc_flags(p, 10_000)
    _add_output_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("critvals", help="null 95th percentiles of sqrt(n) J and |sqrt(n) R|")
    p.add_argument("--n", type=_positive_int, nargs="+", help="sample sizes (default 20, 40, ..., 500)")
    p.add_argument("--asymptotic", action="store_true", help="append the half-normal limit row for R")
    _add_stat_flags(p)
    _add_mc_flags(p, 100_000)
    _add_output_flags(p)
    p.set_defaults(func=cmd_critvals)

    p = sub.add_parser("power", help="empirical power against alternatives")
    p.add_argument("--alt", action="append", help="alternative, e.g. 'W(2,1)', 'LN(0,1)'; repeatable")
    p.add_argument("--n", type=_positive_int, nargs="+", help="sample sizes (default 25 50)")
    p.add_argument("--full", action="store_true", help="both estimators (the MLE and median tables)")
    _add_stat_flags(p)
    _add_mc_flags(p, 10_000)
    _add_output_flags(p)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("efficiency", help="local approximate Bahadur efficiencies")
    p.add_argument("--alt", action="append", help="g1[L], g2, g3[B], g4, g5 (optionally @theta); repeatable")
    p.add_argument("--full", action="store_true", help="also the generalized Ibar rows")
    _add_stat_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("constants", help="asymptotic constants")
    p.add_argument("--dump-curve", choices=["sigma2", "A"], help="emit (t, value) pairs instead")
    p.add_argument("--a", type=_positive_float, nargs=1, help="tuning parameter for --dump-curve")
    p.add_argument("--alt", action="append", help="alternative for --dump-curve A (default g2)")
    p.add_argument("--points", type=_positive_int, default=999)
    _add_output_flags(p)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("datasets", help="list or print embedded data sets")
    p.add_argument("name", nargs="?", choices=sorted(DATASETS))
    _add_orientation(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_datasets)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except (CliError, LevyGofError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"levygof: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
