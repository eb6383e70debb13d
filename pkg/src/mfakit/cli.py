"""Command line interface: ``mfakit {synth,mfa,similarity,consensus,stats}``.

Every run writes ``manifest.json`` into its output directory with the
effective parameters and SHA-256 digests of all inputs. Exit codes: 0 on
success, 2 on input or configuration errors, 3 on numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .community import daily_mfas
from .consensus import co_association, persistent_mfas
from .odm import AreaUniverse, load_odm, read_holidays
from .partition import (
    RESIDUAL,
    read_admin_mapping,
    read_partition_csv,
    write_partition_csv,
    write_partition_geojson,
    write_partition_json,
)
from .similarity import compare_to_admin, intraweek_series, similarity_matrix, write_weekday_series
from .stats import (
    ConvergenceError,
    coefficient_timeline,
    read_district_cases,
    read_zones,
    redistribute_cases,
    summarize_mfas,
    weekly_eta_table,
)
from .synth import SynthSpecError, read_spec, write_fixture

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

DEFAULT_THRESHOLD = 0.15
STRICT_THRESHOLD = 0.30

_DATE_IN_NAME = re.compile(r"(\d{4}-\d{2}-\d{2})")


class InputError(Exception):
    """Bad arguments, configuration or input files (exit code 2)."""


# --------------------------------------------------------------------------
# helpers


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "NA"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".10g")
    return str(x)


def _round(x):
    """Round floats to 10 significant digits for JSON output."""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(format(x, ".10g"))
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, command: str, params: dict, inputs, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "parameters": _round(params),
        "inputs": {str(p): _sha256(p) for p in inputs},
    }
    if extra:
        manifest.update(_round(extra))
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, allow_nan=False, default=str)
        fh.write("\n")


def _write_frame(df, dest) -> None:
    """CSV with floats at 10 significant digits and NaN as ``NA``."""
    df = df.copy()
    for col in df.columns:
        df[col] = [_fmt(v.isoformat() if isinstance(v, dt.date) else v) for v in df[col]]
    df.to_csv(dest, index=False, lineterminator="\n")


def _date_arg(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid ISO date {text!r}") from None


def _fraction_arg(low_open=True, high_open=True):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
        lo_ok = v > 0 if low_open else v >= 0
        hi_ok = v < 1 if high_open else v <= 1
        if not (lo_ok and hi_ok and math.isfinite(v)):
            lo, hi = "(" if low_open else "[", ")" if high_open else "]"
            raise argparse.ArgumentTypeError(f"{v} is outside {lo}0, 1{hi}")
        return v
    return parse


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _require(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    return p


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _date_window(args):
    before = getattr(args, "before", None)
    between = getattr(args, "between", None)
    if before is not None and between is not None:
        raise InputError("--before and --between are mutually exclusive")

    def keep(d: dt.date) -> bool:
        if before is not None and not d < before:
            return False
        if between is not None and not between[0] <= d <= between[1]:
            return False
        if args.weekdays_only and d.weekday() >= 5:
            return False
        return True
    return keep


def _holidays(args) -> set:
    if not args.holidays:
        return set()
    return read_holidays(_require(args.holidays))


def _threshold(args) -> float:
    if args.strict and args.threshold is not None:
        raise InputError("--strict and --threshold are mutually exclusive")
    if args.strict:
        return STRICT_THRESHOLD
    return DEFAULT_THRESHOLD if args.threshold is None else args.threshold


def _partition_files(paths) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(q for q in p.glob("*.csv")))
        else:
            files.append(_require(p))
    if not files:
        raise InputError("no partition files given")
    return files


def _load_partitions(paths, args=None, universe: AreaUniverse | None = None):
    """Read partition CSVs; dates come from ``YYYY-MM-DD`` in file names."""
    files = _partition_files(paths)
    parts = []
    for f in files:
        m = _DATE_IN_NAME.search(f.stem)
        date = dt.date.fromisoformat(m.group(1)) if m else None
        try:
            p = read_partition_csv(f, universe, label=f.stem, date=date)
        except (ValueError, KeyError) as exc:
            raise InputError(f"{f}: {exc}") from None
        if universe is None:
            universe = p.universe
        parts.append((f, p))
    if args is not None:
        keep = _date_window(args)
        hol = _holidays(args)
        dated = [(f, p) for f, p in parts if p.date is not None]
        if (args.before or args.between or args.weekdays_only or hol) and len(dated) != len(parts):
            raise InputError("date filters need dates in partition file names (name_YYYY-MM-DD.csv)")
        parts = [(f, p) for f, p in parts if p.date is None or (keep(p.date) and p.date not in hol)]
    return parts


# --------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    spec_path = _require(args.spec)
    try:
        spec = read_spec(spec_path)
    except SynthSpecError as exc:
        raise InputError(f"{spec_path}: {exc}") from None
    out = _out_dir(args)
    paths = write_fixture(spec, out)
    _write_manifest(out, "synth", {"spec": str(spec_path)}, [spec_path],
                    {"outputs": {k: os.path.basename(v) for k, v in sorted(paths.items())}})
    return EXIT_OK


def cmd_mfa(args) -> int:
    odm_path = _require(args.odm)
    thr = _threshold(args)
    hol = _holidays(args)
    keep = _date_window(args)
    odms = [o for o in load_odm(odm_path) if keep(o.date) and o.date not in hol]
    out = _out_dir(args)
    part_dir = out / "partitions"
    part_dir.mkdir(exist_ok=True)
    results = daily_mfas(
        odms, threshold=thr, walk_length=args.walk_length, include_diagonal=not args.exclude_diagonal,
        jobs=args.jobs, return_dendrograms=args.dendrograms,
    )
    parts, dends = results if args.dendrograms else (results, [None] * len(results))
    days = []
    inputs = [odm_path] + ([Path(args.holidays)] if args.holidays else [])
    if args.geometry:
        inputs.append(_require(args.geometry))
    for part, dend in zip(parts, dends):
        stem = f"mfa_{part.date.isoformat()}"
        write_partition_csv(part, part_dir / f"{stem}.csv")
        if args.geometry:
            write_partition_geojson(part, args.geometry, part_dir / f"{stem}.geojson")
        if dend is not None:
            with open(part_dir / f"{stem}.dendrogram.json", "w", encoding="utf-8") as fh:
                json.dump(_round(dend.to_dict()), fh, indent=1, sort_keys=True)
                fh.write("\n")
        days.append({
            "date": part.date.isoformat(),
            "n_mfas": part.n_mfas,
            "n_residual": int(np.sum(np.asarray(part.labels) == RESIDUAL)),
            "modularity": part.modularity,
        })
    params = {
        "threshold": thr, "walk_length": args.walk_length, "include_diagonal": not args.exclude_diagonal,
        "weekdays_only": args.weekdays_only, "holidays": args.holidays,
        "before": args.before, "between": args.between, "jobs": args.jobs,
    }
    _write_manifest(out, "mfa", params, inputs, {"days": days})
    return EXIT_OK


def cmd_similarity(args) -> int:
    parts = _load_partitions(args.partitions, args)
    if not parts:
        raise InputError("no partitions left after date filtering")
    out = _out_dir(args)
    ps = [p for _, p in parts]
    inc = not args.exclude_residual
    report = similarity_matrix(ps, include_residual=inc)
    report.to_square_csv(out / "similarity_matrix.csv")
    report.to_long_csv(out / "similarity_long.csv")
    write_weekday_series(intraweek_series(ps, include_residual=inc), out / "weekday_series.csv")
    inputs = [f for f, _ in parts]
    if args.admin:
        admin_path = _require(args.admin)
        try:
            admin = read_admin_mapping(admin_path, ps[0].universe, group_column=args.admin_column)
            scores = compare_to_admin(ps, admin, include_residual=inc)
        except (ValueError, KeyError) as exc:
            raise InputError(f"{admin_path}: {exc}") from None
        with open(out / "admin_similarity.csv", "w", encoding="utf-8") as fh:
            fh.write("label,score\n")
            for label, score in zip(report.labels, scores):
                fh.write(f"{label},{_fmt(score)}\n")
        inputs.append(admin_path)
    params = {"include_residual": inc, "weekdays_only": args.weekdays_only,
              "before": args.before, "between": args.between, "holidays": args.holidays}
    _write_manifest(out, "similarity", params, inputs, {"labels": list(report.labels)})
    return EXIT_OK


def cmd_consensus(args) -> int:
    parts = _load_partitions(args.partitions, args)
    if not parts:
        raise InputError("no partitions left after date filtering")
    out = _out_dir(args)
    ps = [p for _, p in parts]
    co = co_association(ps, residual_together=args.residual_together)
    co.write_csv(out / "co_matrix.csv")
    persistent = persistent_mfas(ps, cut=args.cut, walk_length=args.walk_length, label=args.label,
                                 residual_together=args.residual_together)
    write_partition_csv(persistent, out / f"{args.label}.csv")
    write_partition_json(persistent, out / f"{args.label}.json")
    inputs = [f for f, _ in parts]
    if args.geometry:
        inputs.append(_require(args.geometry))
        write_partition_geojson(persistent, args.geometry, out / f"{args.label}.geojson")
    params = {"cut": args.cut, "walk_length": args.walk_length, "residual_together": args.residual_together,
              "weekdays_only": args.weekdays_only, "before": args.before, "between": args.between,
              "holidays": args.holidays, "label": args.label}
    extra = {"ensemble": [p.label for p in ps], "n_mfas": persistent.n_mfas,
             "modularity": persistent.modularity}
    _write_manifest(out, "consensus", params, inputs, extra)
    return EXIT_OK


def cmd_stats(args) -> int:
    zones_path, cases_path, part_path = _require(args.zones), _require(args.cases), _require(args.partition)
    try:
        zones = read_zones(zones_path)
        cases = read_district_cases(cases_path, window=args.window)
        zf = redistribute_cases(cases, zones)
        partition = read_partition_csv(part_path)
        zf.labels_for(partition)
    except (ValueError, KeyError) as exc:
        raise InputError(str(exc)) from None
    keep = _date_window(args)
    hol = _holidays(args)
    dates = [d for d in zf.dates if keep(d) and d not in hol]
    out = _out_dir(args)

    eta_end = args.eta_end
    eta = weekly_eta_table(zf, partition, start=dates[0] if dates else None, end=eta_end or (dates[-1] if dates else None))
    if not dates:
        eta = eta.iloc[0:0]
    _write_frame(eta, out / "eta_squared.csv")

    tl = coefficient_timeline(zf, partition, dates, drop_zero=args.drop_zero, alpha=args.alpha)
    if dates and not tl.ols and not tl.random_intercept:
        kinds = {kind for _, _, kind, _ in tl.failures}
        msg = f"no model could be fit on any date ({tl.failures[0][3]})"
        if kinds <= {"ValueError", "RankDeficientError"}:
            raise InputError(msg)
        raise ConvergenceError(msg)
    _write_frame(tl.coefficients("ols"), out / "coefficients_ols.csv")
    _write_frame(tl.coefficients("random_intercept"), out / "coefficients_random_intercept.csv")
    _write_frame(tl.fit_summary(), out / "fit_summary.csv")
    grid = tl.significance_grid()
    _write_frame(grid, out / "significance_grid.csv")
    if dates:
        _write_frame(summarize_mfas(zf, partition, grid, date=dates[-1]), out / "mfa_summary.csv")
    with open(out / "failures.csv", "w", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "model", "kind", "message"])
        for d, model, kind, msg in tl.failures:
            w.writerow([d.isoformat(), model, kind, msg])
    params = {"window": args.window, "drop_zero": args.drop_zero, "alpha": args.alpha,
              "eta_end": args.eta_end, "weekdays_only": args.weekdays_only,
              "before": args.before, "between": args.between, "holidays": args.holidays}
    inputs = [zones_path, cases_path, part_path] + ([Path(args.holidays)] if args.holidays else [])
    _write_manifest(out, "stats", params, inputs, {"n_dates": len(dates), "n_failures": len(tl.failures)})
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file of option defaults; command-line flags win")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--threshold", type=_fraction_arg(), default=None,
                   help=f"edge threshold on normalized flows (default {DEFAULT_THRESHOLD})")
    p.add_argument("--strict", action="store_true", help=f"use the strict threshold {STRICT_THRESHOLD}")
    p.add_argument("--walk-length", type=_positive_int, default=4, help="random-walk length (default 4)")
    p.add_argument("--weekdays-only", action="store_true", help="drop Saturdays and Sundays")
    p.add_argument("--holidays", metavar="FILE", help="file of ISO dates to drop")
    p.add_argument("--cut", type=_fraction_arg(high_open=False), default=0.5,
                   help="consensus co-association cut (default 0.5)")
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel worker processes")
    p.add_argument("--before", type=_date_arg, metavar="DATE", help="keep dates strictly before DATE")
    p.add_argument("--between", type=_date_arg, nargs=2, metavar=("FIRST", "LAST"),
                   help="keep dates in [FIRST, LAST]")
    p.add_argument("--geometry", metavar="FILE", help="GeoJSON or id->geometry JSON; adds GeoJSON outputs")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="mfakit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic fixture from a spec file")
    p.add_argument("spec", help="synth spec file (key = value)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mfa", parents=[common], help="daily MFAs from an ODM CSV")
    p.add_argument("odm", help="CSV with date,origin,destination,count")
    p.add_argument("--exclude-diagonal", action="store_true",
                   help="leave internal trips out of the row totals")
    p.add_argument("--dendrograms", action="store_true", help="also write merge histories as JSON")
    p.set_defaults(func=cmd_mfa)

    p = sub.add_parser("similarity", parents=[common], help="pairwise and weekday similarity of partitions")
    p.add_argument("partitions", nargs="+", help="partition CSVs or directories of them")
    p.add_argument("--admin", metavar="FILE", help="zones CSV mapping area_id to a district column")
    p.add_argument("--admin-column", default="gkz", help="district column of --admin (default gkz)")
    p.add_argument("--exclude-residual", action="store_true", help="leave the residual group out")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("consensus", parents=[common], help="persistent MFAs from an ensemble of partitions")
    p.add_argument("partitions", nargs="+", help="partition CSVs or directories of them")
    p.add_argument("--label", default="persistent", help="output name stem (default persistent)")
    p.add_argument("--residual-together", action="store_true",
                   help="count two residual areas as grouped together")
    p.set_defaults(func=cmd_consensus)

    p = sub.add_parser("stats", parents=[common], help="eta squared and regression timelines")
    p.add_argument("--zones", required=True, help="CSV area_id,gkz,population")
    p.add_argument("--cases", required=True, help="CSV gkz,date,cases_7d (or daily cases with --window)")
    p.add_argument("--partition", required=True, help="MFA partition CSV")
    p.add_argument("--window", type=_positive_int, help="sum daily cases over this many days")
    p.add_argument("--drop-zero", action="store_true", help="drop zero-case zones and use log(cases)")
    p.add_argument("--alpha", type=_fraction_arg(), default=0.01, help="significance level (default 0.01)")
    p.add_argument("--eta-end", type=_date_arg, metavar="DATE", help="last date of the eta squared table")
    p.set_defaults(func=cmd_stats)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    """Load ``--config`` and install its values as subcommand defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{known.config}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subparsers.choices.items():
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in cfg.items():
            if key not in actions or key in ("config", "help"):
                continue
            act = actions[key]
            if act.type is not None and value is not None:
                try:
                    if isinstance(value, list):
                        value = [act.type(str(v)) for v in value]
                    else:
                        value = act.type(str(value))
                except argparse.ArgumentTypeError as exc:
                    raise InputError(f"config {key}: {exc}") from None
            defaults[key] = value
        sp.set_defaults(**defaults)
    unknown = [k for k in cfg if not any(k in {a.dest for a in sp._actions} for sp in subparsers.choices.values())]
    if unknown:
        raise InputError(f"unknown config key(s): {', '.join(sorted(unknown))}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_OK if exc.code == 0 else EXIT_INPUT
        return args.func(args)
    except InputError as exc:
        print(f"mfakit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"mfakit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        print(f"mfakit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
