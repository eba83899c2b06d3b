"""Command-line entry point: calibrate, test, simulate, figures.

Exit codes: 0 success (or null retained by ``test``), 1 numerical failure,
2 usage or input error, 3 null rejected by ``test``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .asymptotics import Case1, case2_L, case_from_name, log_bayes_factor
from .errors import ConvergenceError, DomainError
from .sampling import SampleFormatError, read_sample
from .testing import (
    calibrate_threshold,
    estimate_level,
    level_for_threshold,
    run_test,
)

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_REJECT = 0, 1, 2, 3

HYPER_FLAG = {"ratio": "beta0", "ratio-mean": "b0", "full": "r0"}
CONFIG_KEYS = {
    "case", "beta0", "b0", "r0", "level", "levels", "n", "reps", "seed",
    "mode", "out", "format", "threshold", "workers",
}
FIGURES = ("level-vs-threshold", "threshold-vs-beta", "bayes-factor")
SIM_HEADER = ["case", "hyper", "level", "threshold", "n", "reps", "seed", "mode", "p_hat", "se"]


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """12 significant digits; parses back to the same printed value."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _reps(text: str) -> int:
    value = _positive_int(text)
    if value < 100:
        raise argparse.ArgumentTypeError(f"reps must be at least 100, got {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a probability, got {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"probability must lie in (0, 1), got {text!r}")
    return value


def _probability_list(text: str) -> list[float]:
    return [_probability(t) for t in str(text).split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [_positive_int(t) for t in str(text).split(",") if t.strip()]


def _add_case_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--case", choices=sorted(HYPER_FLAG), help="ratio | ratio-mean | full")
    p.add_argument("--beta0", type=float, help="case 'ratio' hyperparameter")
    p.add_argument("--b0", type=float, help="case 'ratio-mean' hyperparameter")
    p.add_argument("--r0", type=float, help="case 'full' hyperparameter")


def _add_output_args(p: argparse.ArgumentParser, default_format: str) -> None:
    p.add_argument("--out", help="write output to this path instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homogtest",
        description="Bayesian marginal-likelihood-ratio test of homogeneity for normal mixtures.",
    )
    parser.add_argument("--config", help="flat 'key = value' file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="level-alpha threshold of the statistic")
    _add_case_args(p)
    p.add_argument("--level", type=_probability)
    p.add_argument("--levels", type=_probability_list)
    p.add_argument("--mode", choices=("asymptotic", "exact"), default="asymptotic")
    _add_output_args(p, "json")

    p = sub.add_parser("test", help="run the test on a data file")
    p.add_argument("data", help="newline-delimited observations, optional 'x' header")
    _add_case_args(p)
    p.add_argument("--level", type=_probability, default=0.05)
    p.add_argument("--mode", choices=("asymptotic", "exact"), default="asymptotic")
    p.add_argument("--threshold", type=float, help="use this threshold instead of calibrating")
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("simulate", help="Monte Carlo level under the null")
    _add_case_args(p)
    p.add_argument("--level", type=_probability)
    p.add_argument("--levels", type=_probability_list)
    p.add_argument("--n", type=_int_list, default=[100], help="sample size(s), comma separated")
    p.add_argument("--reps", type=_reps, default=10000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--mode", choices=("asymptotic", "exact"), default="asymptotic")
    p.add_argument("--threshold", type=float, help="fixed threshold instead of calibrating")
    p.add_argument("--workers", type=_positive_int, default=1)
    _add_output_args(p, "csv")

    p = sub.add_parser("figures", help="emit figure data as CSV")
    p.add_argument("which", choices=FIGURES)
    p.add_argument("--out", help="file or existing directory for the CSV")
    return parser


def _read_config(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    raw = _read_config(known.config)
    converters = {
        "beta0": float, "b0": float, "r0": float, "threshold": float,
        "level": _probability, "levels": _probability_list, "n": _int_list,
        "reps": _reps, "seed": _seed, "workers": _positive_int,
    }
    try:
        values = {k: converters.get(k, str)(v) for k, v in raw.items()}
    except (argparse.ArgumentTypeError, ValueError) as exc:
        raise UsageError(f"config {known.config}: {exc}") from None
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in values.items() if k in dests})


def _case(args):
    if not args.case:
        raise UsageError("--case is required")
    given = [f for f in ("beta0", "b0", "r0") if getattr(args, f) is not None]
    wanted = HYPER_FLAG[args.case]
    if given != [wanted]:
        raise UsageError(f"case {args.case!r} takes exactly one hyperparameter, --{wanted}")
    try:
        return case_from_name(args.case, getattr(args, wanted))
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _levels(args) -> list[float]:
    levels = []
    if getattr(args, "level", None) is not None:
        levels.append(args.level)
    levels.extend(getattr(args, "levels", None) or [])
    if not levels:
        raise UsageError("give --level or --levels")
    return levels


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _render(records: list[dict], fmt_name: str) -> str:
    if fmt_name == "json":
        payload = records[0] if len(records) == 1 else records
        return json.dumps(_jsonable(payload), indent=2) + "\n"
    header = list(records[0])
    return _csv_text(header, [[r[k] for k in header] for r in records])


def cmd_calibrate(args) -> int:
    case = _case(args)
    records = [
        {"case": case.name, "hyper": case.hyper, "level": lv,
         "threshold": calibrate_threshold(case, lv, args.mode)}
        for lv in _levels(args)
    ]
    _emit(_render(records, args.format), args.out)
    return EXIT_OK


def cmd_test(args) -> int:
    case = _case(args)
    try:
        sample = read_sample(args.data)
    except SampleFormatError as exc:
        raise UsageError(f"{args.data}: {exc}") from None
    except OSError as exc:
        raise UsageError(f"cannot read {args.data!r}: {exc.strerror}") from None
    report = run_test(sample, case, args.level, args.mode, threshold=args.threshold)
    _emit(json.dumps(_jsonable(report.as_dict()), indent=2) + "\n", args.out)
    return EXIT_REJECT if report.rejected else EXIT_OK


def cmd_simulate(args) -> int:
    case = _case(args)
    levels = _levels(args)
    rows = []
    for lv in levels:
        threshold = args.threshold if args.threshold is not None else calibrate_threshold(
            case, lv, args.mode)
        for n in args.n:
            est = estimate_level(case, n, lv, args.reps, args.seed, args.mode,
                                 threshold=threshold, workers=args.workers)
            rows.append({"case": case.name, "hyper": case.hyper, "level": lv,
                         "threshold": threshold, "n": n, "reps": args.reps,
                         "seed": args.seed, "mode": args.mode,
                         "p_hat": est.p_hat, "se": est.se})
    _emit(_render(rows, args.format), args.out)
    return EXIT_OK


def figure_rows(which: str):
    """Header and rows for one of the figure datasets."""
    if which == "level-vs-threshold":
        thresholds = np.round(np.arange(0, 101) * 0.05, 10)
        rows = [(b, t, level_for_threshold(Case1(b), float(t)))
                for b in (0.5, 1.0, 1.5, 2.0) for t in thresholds]
        return ["beta0", "threshold", "level"], rows
    if which == "threshold-vs-beta":
        betas = np.round(np.arange(1, 41) * 0.1, 10)
        return ["beta0", "threshold_5pct"], [
            (float(b), calibrate_threshold(Case1(float(b)), 0.05)) for b in betas]
    if which == "bayes-factor":
        xi = np.round(np.linspace(-4.0, 4.0, 161), 10)
        rows = []
        for B0 in (0.25, 0.5, 1.0, 2.0):
            F = log_bayes_factor(case2_L(xi, B0))
            rows.extend((B0, float(x), float(f)) for x, f in zip(xi, F))
        return ["B0", "xi", "F"], rows
    raise UsageError(f"unknown figure {which!r}")


def cmd_figures(args) -> int:
    header, rows = figure_rows(args.which)
    out = args.out
    if out and Path(out).is_dir():
        out = str(Path(out) / f"{args.which}.csv")
    _emit(_csv_text(header, rows), out)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "test": cmd_test,
    "simulate": cmd_simulate,
    "figures": cmd_figures,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"homogtest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"homogtest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ConvergenceError, FloatingPointError) as exc:
        print(f"homogtest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
