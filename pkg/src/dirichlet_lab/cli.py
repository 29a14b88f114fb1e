"""Command-line front end.

Exit codes: 0 success, 1 usage or config error, 2 runtime or I/O error,
3 when any reconciliation reports Tension.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from . import bc_criteria as bc
from .dist_models import LawError
from .experiment import (
    QUANTITIES,
    TENSION,
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    aggregate,
    build_report,
    evaluate_criteria,
    load_config,
    run_trials,
    sweep,
    trials_to_csv,
)
from .extreal import fmt
from .seqexpr import RuleError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_TENSION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _eps(text: str) -> str | float:
    if text in ("grid", "half"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("eps must be 'grid', 'half' or a number") from None


def _rho_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("rho must be a number or comma-separated numbers") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--seed", type=_u64, help="master seed (overrides config)")
    common.add_argument("--out", metavar="DIR", help="directory for output files")
    common.add_argument("--k", type=_positive_int, help="truncation K (overrides config)")
    common.add_argument("--trials", type=_positive_int, help="number of trials (overrides config)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = _Parser(prog="dal", description="Random Dirichlet series abscissas and Borel-Cantelli criteria.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("estimate", parents=[common], help="per-trial abscissa and tail estimates")
    c = sub.add_parser("criterion", parents=[common], help="evaluate one criterion on the laws")
    c.add_argument("--criterion", required=True, help=f"one of {', '.join(x.lower() for x in bc.CRITERIA)}")
    c.add_argument("--rho", type=float, help="target abscissa bound")
    c.add_argument("--eps", type=_eps, help="eps for fixed-eps criteria: number, 'grid' or 'half'")
    sub.add_parser("experiment", parents=[common], help="trials, criteria and reconciliation")
    s = sub.add_parser("sweep", parents=[common], help="criteria across a rho grid with bracketing")
    s.add_argument("--rho", type=_rho_list, help="comma-separated rho grid (overrides config)")
    s.add_argument("--eps", type=_eps, help="eps policy (overrides config)")
    r = sub.add_parser("report", parents=[common], help="re-emit a saved report.json")
    r.add_argument("path", help="report.json or a directory containing it")
    return p


def _config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError(f"--config is required for {args.command}")
    cfg = load_config(args.config)
    over = {"master_seed": args.seed, "K": args.k, "trials": args.trials}
    if getattr(args, "eps", None) is not None:
        over["eps_policy"] = args.eps
    return cfg.replace(**over)


def _emit(text: str) -> None:
    sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _cmd_estimate(args) -> int:
    cfg = _config(args)
    recs = run_trials(cfg)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trials.csv").write_text(trials_to_csv(recs), encoding="utf-8")
    if args.format == "csv":
        _emit(trials_to_csv(recs))
    else:
        aggs = {q: aggregate([getattr(r, q) for r in recs]) for q in QUANTITIES}
        _emit(_dump({"trials": [r.to_dict() for r in recs], "aggregates": aggs}))
    return EXIT_OK


def _trace_csv(rep: bc.CriterionReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "partial_sum"])
    for k, s in rep.term_trace:
        w.writerow([k, fmt(s)])
    return buf.getvalue()


def _cmd_criterion(args) -> int:
    cfg = _config(args)
    cid = next((c for c in bc.CRITERIA if c.lower() == args.criterion.lower()), None)
    if cid is None:
        raise ConfigError(f"unknown criterion {args.criterion!r}")
    grid = [args.rho] if args.rho is not None else list(cfg.rho_grid)
    needs_rho = cid not in ("Cor1", "Cor2", "Cor4", "Thm2b")
    if needs_rho and not grid:
        raise ConfigError(f"{cid} needs --rho")
    cfg = cfg.replace(criteria=[cid], rho_grid=grid)
    reps = evaluate_criteria(cfg)
    if not reps:
        raise ConfigError(f"rho={grid} is outside the domain of {cid}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for rep in reps:
            (out / f"trace_{rep.criterion_id}_{fmt(rep.rho)}.csv").write_text(_trace_csv(rep), encoding="utf-8")
    if args.format == "csv":
        view = ExperimentReport(cfg.to_dict(), [], {}, reps, [], {})
        _emit(view.criteria_csv())
    else:
        _emit(_dump([r.to_dict() for r in reps]))
    return EXIT_OK


def _tension_lines(recon) -> list[str]:
    return [f"tension: {r.criterion} rho={fmt(r.rho)} claim '{r.claim}' violated by "
            f"{r.violated_fraction:.0%} of trials" for r in recon if r.status == TENSION]


def _finish(report: ExperimentReport, args) -> int:
    if args.out:
        report.write(args.out)
    _emit(report.to_json() if args.format == "json" else report.trials_csv())
    lines = _tension_lines(report.reconciliation)
    for line in lines:
        print(line, file=sys.stderr)
    return EXIT_TENSION if lines else EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = _config(args)
    if args.out is None and cfg.output_dir is not None:
        args.out = cfg.output_dir
    report = build_report(cfg, run_trials(cfg), evaluate_criteria(cfg))
    return _finish(report, args)


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.rho is not None:
        cfg = cfg.replace(rho_grid=args.rho)
    res = sweep(cfg)
    text = _dump(res.to_dict()) if args.format == "json" else res.to_csv()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / ("sweep.json" if args.format == "json" else "sweep.csv")).write_text(text, encoding="utf-8")
    _emit(text)
    if res.has_tension:
        print("tension: at least one reconciliation in the sweep is Tension", file=sys.stderr)
        return EXIT_TENSION
    return EXIT_OK


def _cmd_report(args) -> int:
    p = Path(args.path)
    if p.is_dir():
        p = p / "report.json"
    if not p.is_file():
        raise ConfigError(f"report not found: {p}")
    try:
        report = ExperimentReport.from_json(p.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"not a report file: {exc}") from None
    return _finish(report, args)


COMMANDS = {
    "estimate": _cmd_estimate,
    "criterion": _cmd_criterion,
    "experiment": _cmd_experiment,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"dal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, LawError, RuleError) as exc:
        print(f"dal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"dal: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
