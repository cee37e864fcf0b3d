"""
Command-line entry point.

    python cli.py design --scenario desk.cfg --out design.json
    python cli.py evaluate --design design.json --trials 10000 --compare
    python cli.py sweep --scenario desk.cfg --rates 2,4,6 --upsilons 1,2 --m-values 16,36 --out sweep.csv
    python cli.py selftest

Exit codes: 0 success, 1 selftest failure, 2 malformed scenario,
3 optimizer failure (the partial trace goes to <out>.failed_trace.csv).
"""

import argparse
import logging
import math
import sys
from typing import List, Optional

from exceptions import OptimizerError, RandomizationError, ScenarioError, SolverError
from harness import (
    compare_schemes,
    design_from_file,
    design_scenario,
    design_to_file,
    evaluate,
    sweep_power_vs_rate,
    trace_frame,
    write_csv,
    write_report,
)
from scenario import EVAL_MODES, load_scenario, resolve_seed, with_overrides
from selftest import run_selftest
from summary_report import SummaryReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_SCENARIO = 2
EXIT_OPTIMIZER = 3


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _int_list(text: str) -> List[int]:
    values = _float_list(text)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")
    return [int(v) for v in values]


def _square_counts(text: str) -> List[int]:
    counts = _int_list(text)
    for m in counts:
        if m < 1 or math.isqrt(m) ** 2 != m:
            raise argparse.ArgumentTypeError(f"IRS element counts must be perfect squares, got {m}")
    return counts


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging level")
    common.add_argument("--seed", type=int, default=None, help="seed for every random stream (overrides the file); evaluate uses it for the error draws only")
    common.add_argument("--paper-profile", action="store_true",
                        help="allow profile = paper (N = 16, M = 100)")
    common.add_argument("--workers", type=int, default=None, help="threads for Monte Carlo trials and sweep points")

    parser = argparse.ArgumentParser(description="Robust IRS beamforming under user location uncertainty",
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    design = sub.add_parser("design", parents=[common], help="solve one scenario")
    design.add_argument("--scenario", required=True, help="scenario file")
    design.add_argument("--out", required=True, help="design record (JSON); trace and summary are written next to it")

    ev = sub.add_parser("evaluate", parents=[common], help="Monte Carlo evaluation of a design")
    ev.add_argument("--design", required=True, help="design record written by 'design'")
    ev.add_argument("--trials", type=int, default=None, help="number of location-error draws")
    ev.add_argument("--mode", choices=EVAL_MODES, default=None, help="channel used for the statistics")
    ev.add_argument("--out", default=None, help="per-trial CSV (default: <design>.eval.csv)")
    ev.add_argument("--compare", action="store_true", help="also evaluate the non-robust design at equal power")

    sweep = sub.add_parser("sweep", parents=[common], help="required power over a (M, upsilon, r) grid")
    sweep.add_argument("--scenario", required=True, help="scenario file")
    sweep.add_argument("--rates", type=_float_list, required=True, help="target rates in bits/s/Hz, e.g. 2,4,6")
    sweep.add_argument("--upsilons", type=_float_list, required=True, help="uncertainty radii in m, e.g. 1,2")
    sweep.add_argument("--m-values", type=_square_counts, required=True, help="IRS element counts, e.g. 16,36")
    sweep.add_argument("--out", required=True, help="sweep CSV")

    sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    return parser


def _write_summary(report: SummaryReport, path: str) -> str:
    summary_path = f"{path}.summary.txt"
    with open(summary_path, "w") as f:
        f.write(report.generate_report())
    return summary_path


def _run_design(args) -> int:
    scen = load_scenario(args.scenario, args.paper_profile)
    scen = resolve_seed(with_overrides(scen, seed=args.seed, workers=args.workers))
    design, _, _ = design_scenario(scen)
    design_to_file(design, scen, args.out)
    write_csv(trace_frame(design.trace), f"{args.out}.trace.csv")
    report = SummaryReport()
    report.add_design(design)
    summary_path = _write_summary(report, args.out)
    print(f"power {design.power:.6e} W, exact worst-case rate {design.exact_worst_case_rate:.4f} bits/s/Hz, "
          f"{design.iterations} iterations")
    print(f"wrote {args.out} and {summary_path}")
    return EXIT_OK


def _run_evaluate(args) -> int:
    design, scen = design_from_file(args.design)
    # the channel stays the one the design was made for; --seed only redraws the location errors
    scen = with_overrides(scen, workers=args.workers)
    out = args.out or f"{args.design}.eval.csv"
    report = SummaryReport()
    report.add_design(design)
    if args.compare:
        robust, nonrobust = compare_schemes(design, scen, args.trials, args.mode, rng_seed=args.seed)
        write_csv(robust.records, out)
        write_csv(nonrobust.records, f"{out}.nonrobust.csv")
        report.add_evaluation(robust)
        report.add_evaluation(nonrobust)
        print(f"outage robust {100 * robust.outage:.2f}%, nonrobust {100 * nonrobust.outage:.2f}%")
    else:
        robust = evaluate(design, scen, args.trials, args.mode, rng_seed=args.seed)
        write_report(robust, out)
        report.add_evaluation(robust)
        print(f"outage {100 * robust.outage:.2f}%, min rate {robust.min_rate:.4f} bits/s/Hz")
    summary_path = _write_summary(report, out)
    print(f"wrote {out} and {summary_path}")
    return EXIT_OK


def _run_sweep(args) -> int:
    scen = load_scenario(args.scenario, args.paper_profile)
    scen = resolve_seed(with_overrides(scen, seed=args.seed, workers=args.workers))
    table = sweep_power_vs_rate(scen, args.rates, args.upsilons, args.m_values)
    write_csv(table, args.out)
    report = SummaryReport()
    report.add_sweep(table)
    summary_path = _write_summary(report, args.out)
    print(f"{int((table['status'] == 'failed').sum())} of {len(table)} points failed")
    print(f"wrote {args.out} and {summary_path}")
    return EXIT_OK


def _run_selftest(args) -> int:
    results = run_selftest(seed=args.seed or 0)
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'}  {result.name}: {result.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_SELFTEST


COMMANDS = {
    "design": _run_design,
    "evaluate": _run_evaluate,
    "sweep": _run_sweep,
    "selftest": _run_selftest,
}


def _failed_trace_path(args) -> Optional[str]:
    out = getattr(args, "out", None) or getattr(args, "design", None)
    return f"{out}.failed_trace.csv" if out else None


def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s - %(levelname)s - %(message)s')
    if args.workers is not None and args.workers < 1:
        parser.error("--workers must be >= 1")
    if getattr(args, "trials", None) is not None and args.trials < 1:
        parser.error("--trials must be >= 1")

    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (OptimizerError, SolverError, RandomizationError) as exc:
        print(f"optimizer failure: {exc}", file=sys.stderr)
        path = _failed_trace_path(args)
        if path is not None:
            write_csv(trace_frame(getattr(exc, "trace", [])), path)
            print(f"partial trace: {path}", file=sys.stderr)
        return EXIT_OPTIMIZER


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
