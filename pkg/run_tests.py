#!/usr/bin/env python3
"""
Test runner for vtl-scuc.

Wraps pytest with the selections used day to day: tests that never touch a
solver, the end-to-end solves, or everything including the 24-bus runs.
"""

import argparse
import os
import subprocess
import sys


def run_pytest(cmd, env=None):
    """Run pytest and return its exit code (127 when it cannot be started)."""
    print(f"\n{'=' * 60}")
    print(f"Command: {' '.join(cmd)}")
    if env and env.get("SCUC_SOLVER_BACKEND"):
        print(f"Backend: {env['SCUC_SOLVER_BACKEND']}")
    print(f"{'=' * 60}")

    try:
        return subprocess.run(cmd, env=env).returncode
    except FileNotFoundError:
        print(f"❌ Command not found: {cmd[0]}")
        print("Install the test requirements first: pip install -r requirements.txt")
        return 127


def marker_expression(args):
    markers = []
    if args.unit:
        markers.append("not integration")
    elif args.integration:
        markers.append("integration")
    if not args.slow:
        markers.append("not slow")
    return " and ".join(markers)


def build_command(args):
    cmd = [sys.executable, "-m", "pytest"]

    if args.file:
        name = args.file if args.file.startswith("test_") else f"test_{args.file}"
        cmd.append(os.path.join("tests", f"{name}.py"))
    if args.test:
        cmd += ["-k", args.test]
    expression = marker_expression(args)
    if expression:
        cmd += ["-m", expression]

    if args.verbose:
        cmd.append("-v")
    elif args.quiet:
        cmd.append("-q")
    if args.parallel:
        cmd += ["-n", "auto"]
    if args.lf:
        cmd.append("--lf")
    if args.exitfirst:
        cmd.append("-x")
    if args.cov:
        cmd += ["--cov=.", "--cov-report=term-missing", "--cov-report=html:htmlcov"]
    return cmd


def build_parser():
    parser = argparse.ArgumentParser(
        description="Run the vtl-scuc test suite",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_tests.py                          # everything except the 24-bus runs
  python run_tests.py --slow                   # include the 24-bus runs
  python run_tests.py --unit                   # no solver calls
  python run_tests.py --file gateway -x        # one file, stop at first failure
  python run_tests.py --backend pyomo:glpk     # default backend for the run
  python run_tests.py --parallel --cov         # parallel, with coverage
        """,
    )

    selection = parser.add_argument_group("selection")
    only = selection.add_mutually_exclusive_group()
    only.add_argument("--unit", action="store_true", help="Only tests that do not solve")
    only.add_argument("--integration", action="store_true", help="Only tests that solve")
    selection.add_argument("--slow", action="store_true", help="Include the 24-bus runs")
    selection.add_argument("--file", help="One test file, e.g. gateway")
    selection.add_argument("--test", help="A -k expression")
    selection.add_argument("--lf", action="store_true", help="Only the tests that failed last time")

    output = parser.add_argument_group("execution")
    output.add_argument("--backend", help="Value for SCUC_SOLVER_BACKEND during the run")
    output.add_argument("--parallel", action="store_true", help="Spread tests over all cores (pytest-xdist)")
    output.add_argument("--cov", action="store_true", help="Collect coverage (pytest-cov)")
    output.add_argument("--verbose", "-v", action="store_true")
    output.add_argument("--quiet", "-q", action="store_true")
    output.add_argument("--exitfirst", "-x", action="store_true", help="Stop at the first failure")
    return parser


def main():
    args = build_parser().parse_args()
    env = dict(os.environ)
    if args.backend:
        env["SCUC_SOLVER_BACKEND"] = args.backend

    code = run_pytest(build_command(args), env)
    if code == 0:
        print("\n✅ All selected tests passed")
        if args.cov:
            print("📊 Coverage report: htmlcov/index.html")
    else:
        print(f"\n❌ pytest exited with code {code}")
    sys.exit(code)


if __name__ == "__main__":
    main()
