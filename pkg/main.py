#!/usr/bin/env python3
"""
vtl-scuc - stochastic security-constrained unit commitment with storage and
virtual transmission lines.

Solves the Base, PT (physical line), BESS and VTL model variants over
renewable scenarios, prices the result and compares the variants.
"""

import argparse
import sys
from typing import List, Optional, Sequence

from dotenv import load_dotenv

# Environment first: config reads it at import time
load_dotenv()

from config import APP_CONFIG, RunConfig, ScenarioSource  # noqa: E402
from exceptions import ScucError  # noqa: E402
from models import ModelVariant  # noqa: E402
from runner import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, ScucRunner  # noqa: E402
from scenarios import SigmaSchedule  # noqa: E402

VARIANT_CHOICES = [v.value for v in ModelVariant]


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _variant_list(text: str) -> List[str]:
    names = [v.strip().lower() for v in text.split(",") if v.strip()]
    bad = [n for n in names if n not in VARIANT_CHOICES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown variant(s) {', '.join(bad)}; choose from {', '.join(VARIANT_CHOICES)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--solver", default=APP_CONFIG.solver_backend,
                        help="Solver backend: highs or pyomo:<solver> (default: %(default)s)")
    common.add_argument("--mip-gap", type=float, default=APP_CONFIG.mip_gap,
                        help="Relative MIP gap (default: %(default)s)")
    common.add_argument("--time-limit", type=float, default=APP_CONFIG.time_limit_seconds,
                        help="Solver time limit in seconds (default: %(default)s)")
    common.add_argument("--threads", type=int, default=None, help="Solver threads")
    common.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                        default=APP_CONFIG.deterministic, help="Reproducible solver settings")
    common.add_argument("--congestion-eps", type=float, default=APP_CONFIG.congestion_epsilon,
                        help="Relative tolerance for a line to count as congested "
                             "(default: the case's congestion_epsilon)")
    common.add_argument("--lmp-convention", choices=["expected", "unweighted"],
                        default=APP_CONFIG.lmp_convention, help="Load-payment weighting (default: %(default)s)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        default="WARNING", help="Set logging level (default: %(default)s)")
    common.add_argument("--log-file", help="Path to log file (logs to stderr only if not specified)")

    scenario_source = argparse.ArgumentParser(add_help=False)
    scenario_source.add_argument("--scenarios", metavar="FILE",
                                 help="Scenario file, or 'builtin' for a bundled case's own scenarios")
    scenario_source.add_argument("--count", type=int, help="Generate this many scenarios instead of reading a file")
    scenario_source.add_argument("--seed", type=int, help="Seed for generated scenarios")
    scenario_source.add_argument("--probs", type=_float_list, help="Comma-separated scenario probabilities")

    parser = argparse.ArgumentParser(
        prog="vtl-scuc",
        description="Stochastic SCUC with storage and virtual transmission lines",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Solve the VTL variant of a case on a scenario file
  vtl-scuc solve --case data/toy1.json --variant vtl --scenarios scen.json --out runs/a

  # Draw three weighted scenarios for the 24-bus case
  vtl-scuc gen-scenarios --case builtin:rts24_vtl --count 3 --seed 7 --probs 0.25,0.35,0.40 --out scen.json

  # Compare all four variants, with WS/RP/EEV diagnostics and plots
  vtl-scuc compare --case builtin:storage_pair --scenarios builtin --variants base,pt,bess,vtl \\
      --out runs/cmp --diagnostics --plots

  # Rebuild comparison tables from finished runs
  vtl-scuc report --runs runs/a runs/b --baseline base --out runs/report
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common, scenario_source], help="Solve one variant")
    solve.add_argument("--case", required=True, help="Case file or builtin:<name>")
    solve.add_argument("--variant", choices=VARIANT_CHOICES, default="base")
    solve.add_argument("--out", default=APP_CONFIG.output_dir, help="Output directory")
    solve.add_argument("--dump-model", metavar="FILE", help="Write one line per constraint to FILE")

    compare = sub.add_parser("compare", parents=[common, scenario_source], help="Solve and compare variants")
    compare.add_argument("--case", required=True, help="Case file or builtin:<name>")
    compare.add_argument("--variants", type=_variant_list, default=list(VARIANT_CHOICES),
                         help="Comma-separated variants (default: base,pt,bess,vtl)")
    compare.add_argument("--baseline", help="Label the others are expressed against (default: base)")
    compare.add_argument("--out", default=APP_CONFIG.output_dir, help="Output directory")
    compare.add_argument("--diagnostics", action="store_true", help="Also compute WS/RP/EEV/VSS/EVPI")
    compare.add_argument("--plots", action="store_true", help="Write branch-loading and commitment PNGs")

    gen = sub.add_parser("gen-scenarios", parents=[common], help="Draw renewable scenarios")
    gen.add_argument("--case", required=True, help="Case file or builtin:<name>")
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--probs", type=_float_list)
    gen.add_argument("--sigma-solar", type=float, help="Constant solar sigma instead of the hourly default")
    gen.add_argument("--sigma-wind", type=float, help="Constant wind sigma instead of the default")
    gen.add_argument("--out", required=True, help="Scenario file to write")

    report = sub.add_parser("report", parents=[common], help="Compare finished solve runs")
    report.add_argument("--runs", nargs="+", required=True, help="Run directories written by solve")
    report.add_argument("--baseline", default="base")
    report.add_argument("--out", required=True, help="Output directory")

    validate = sub.add_parser("validate", parents=[common], help="Check a case (and scenarios)")
    validate.add_argument("--case", required=True, help="Case file or builtin:<name>")
    validate.add_argument("--scenarios", metavar="FILE")
    validate.add_argument("--variant", choices=VARIANT_CHOICES)

    return parser


def _run_config(args: argparse.Namespace, variant: str) -> RunConfig:
    source = ScenarioSource(
        path=args.scenarios,
        count=args.count,
        seed=args.seed,
        probabilities=tuple(args.probs) if args.probs else None,
    )
    return RunConfig(
        case_path=args.case,
        variant=variant,
        scenarios=source,
        output_dir=args.out,
        solver_backend=args.solver,
        mip_gap=args.mip_gap,
        time_limit_seconds=args.time_limit,
        threads=args.threads,
        deterministic=args.deterministic,
        lmp_convention=args.lmp_convention,
        congestion_epsilon=args.congestion_eps,
        dump_model_path=getattr(args, "dump_model", None),
    )


def _schedule(args: argparse.Namespace) -> SigmaSchedule:
    default = SigmaSchedule()
    return SigmaSchedule(
        solar=(args.sigma_solar,) * 24 if args.sigma_solar is not None else default.solar,
        wind=(args.sigma_wind,) * 24 if args.sigma_wind is not None else default.wind,
    )


def _dispatch(runner: ScucRunner, args: argparse.Namespace) -> int:
    if args.command == "solve":
        code = runner.run_solve(_run_config(args, args.variant))
        sol = runner.last_run.solution
        if code == EXIT_OK:
            print(f"✅ {args.variant}: {sol.status}, objective {sol.objective:.4f}")
            if not sol.verified:
                print(f"⚠️  point fails verification in: {', '.join(sol.verification_failures)}")
            print(f"   Results in {args.out}")
        elif code == EXIT_INFEASIBLE:
            family = sol.infeasible_family or "unknown"
            print(f"❌ {args.variant}: infeasible (feasible without {family} constraints)", file=sys.stderr)
        else:
            print(f"❌ {args.variant}: solver stopped with {sol.status}: {sol.message}", file=sys.stderr)
        return code

    if args.command == "compare":
        code = runner.run_compare(_run_config(args, args.variants[0]), args.variants,
                                  baseline=args.baseline, diagnostics=args.diagnostics, plots=args.plots)
        print(f"\n📊 Comparison (baseline {runner.last_table.baseline})")
        print("=" * 50)
        for label in runner.last_table.labels:
            cell = runner.last_table.cell(label, "operational_cost")
            if not cell.available:
                print(f"{label:<10} unavailable")
            elif cell.percent is None:
                print(f"{label:<10} cost {cell.value:,.2f}")
            else:
                print(f"{label:<10} cost {cell.value:,.2f} ({cell.percent:.1f}%)")
        print("=" * 50)
        print(f"Results in {args.out}")
        return code

    if args.command == "gen-scenarios":
        scen = runner.run_gen_scenarios(args.case, args.count, args.seed, args.out,
                                        args.probs, _schedule(args))
        print(f"✅ Wrote {scen.count} scenario(s) to {args.out}")
        return EXIT_OK

    if args.command == "report":
        code = runner.run_report(args.runs, args.baseline, args.out)
        print(f"✅ Compared {len(args.runs)} run(s); tables in {args.out}")
        return code

    if args.command == "validate":
        report = runner.run_validate(args.case, args.scenarios, args.variant)
        if report.ok:
            print("✅ All validations passed!")
            return EXIT_OK
        print(f"❌ {len(report)} issue(s):")
        for issue in report.issues:
            print(f"   {issue}")
        return EXIT_ERROR

    raise ValueError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    runner = ScucRunner(log_level=args.log_level, log_file=args.log_file)
    try:
        return _dispatch(runner, args)
    except KeyboardInterrupt:
        print("\n⏹️  Stopped by user", file=sys.stderr)
        return EXIT_ERROR
    except (ScucError, ValueError, OSError) as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        runner.logger.debug("Command failed", exc_info=True)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
