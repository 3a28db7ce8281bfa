"""Run orchestrator: case and scenario ingestion, variant solves, metrics and output files."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from builder import Solution, build_model
from cases import BundledCase, is_builtin, load_builtin
from config import APP_CONFIG, RunConfig, ScenarioSource
from exceptions import BadProbabilities, ScenarioCaseMismatch, ScucError
from gateway import get_backend, price_solution, solve_milp
from logging_config import ContextLogger, PerformanceLogger, setup_logging
from metrics import (
    MetricsReport,
    StochasticDiagnostics,
    branch_loading_rows,
    build_metrics,
    compare_variants,
    congestion_tolerance,
    derived_claims,
    stochastic_diagnostics,
)
from models import CaseFile, ModelVariant
from persistence import PersistenceManager, RunManifest, case_digest, file_digest
from plotting import plot_branch_loading, plot_commitment
from reporting import ReportWriter
from scenarios import ScenarioSet, SigmaSchedule, generate_scenarios, validate_scenario_set
from solvers import SolverBackend, SolverOptions
from validation import ValidationReport, validate_case
from variants import EffectiveCase, apply_variant

BUILTIN_SCENARIOS = "builtin"

# Exit codes
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

RUN_FILES = {
    "case": "case.json",
    "scenarios": "scenarios.json",
    "solution": "solution.json",
    "metrics_json": "metrics.json",
    "metrics_csv": "metrics.csv",
    "branch_loading": "branch_loading.csv",
    "manifest": "manifest.json",
}


def unique_labels(variants: Sequence[str]) -> List[str]:
    """``base, base`` -> ``base, base#2`` so every compared column has its own label."""
    seen: Dict[str, int] = {}
    labels = []
    for name in variants:
        seen[name] = seen.get(name, 0) + 1
        labels.append(name if seen[name] == 1 else f"{name}#{seen[name]}")
    return labels


@dataclass
class VariantRun:
    """Everything produced by solving one variant."""

    label: str
    variant: str
    eff: Optional[EffectiveCase] = None
    solution: Optional[Solution] = None
    metrics: Optional[MetricsReport] = None
    error: str = ""


class ScucRunner:
    """Drives the solve, compare, gen-scenarios, report and validate commands."""

    def __init__(self, log_level: str = "INFO", log_file: Optional[str] = None,
                 logger: Optional[logging.Logger] = None):
        """
        Initialize the runner.

        Args:
            log_level: Logging level
            log_file: Optional log file path
            logger: Use this logger instead of configuring one
        """
        self.logger = logger or setup_logging(log_level, log_file)
        self.persistence = PersistenceManager(self.logger)
        self.reports = ReportWriter(self.persistence, self.logger)

        # Results of the latest command, for callers that want more than an exit code
        self.last_run: Optional[VariantRun] = None
        self.last_runs: List[VariantRun] = []
        self.last_table = None
        self.last_claims: Dict = {}
        self.last_diagnostics: Dict[str, StochasticDiagnostics] = {}

    # Inputs

    def resolve_case(self, spec: str) -> Tuple[CaseFile, Optional[BundledCase]]:
        """Load a case file, or a bundled case for ``builtin:<name>``."""
        if is_builtin(spec):
            try:
                bundled = load_builtin(spec)
            except KeyError as e:
                raise ScucError(str(e.args[0])) from e
            self.logger.info(f"Using bundled case {bundled.case.name!r}")
            return bundled.case, bundled
        return self.persistence.load_case(spec), None

    def case_source_digest(self, spec: str, case: CaseFile) -> str:
        return case_digest(case) if is_builtin(spec) else file_digest(spec)

    def resolve_scenarios(
        self,
        case: CaseFile,
        source: ScenarioSource,
        bundled: Optional[BundledCase] = None,
    ) -> Tuple[ScenarioSet, str]:
        """
        Load or generate the scenario set and check it against the case.

        Returns:
            The scenario set and a content hash of its source

        Raises:
            BadProbabilities: probabilities fail validation
            ScenarioCaseMismatch: coverage or horizon disagree with the case
        """
        if source.is_file and source.path == BUILTIN_SCENARIOS:
            if bundled is None:
                raise ScenarioCaseMismatch("builtin scenarios need a builtin case")
            scen = bundled.scenario_set()
            digest = scen.digest()
        elif source.is_file:
            scen = self.persistence.load_scenarios(source.path)
            digest = file_digest(source.path)
        else:
            seed = source.seed if source.seed is not None else (bundled.seed if bundled else 0)
            scen = generate_scenarios(case, SigmaSchedule(), source.count, seed, source.probabilities)
            digest = scen.digest()

        report = validate_scenario_set(scen, case)
        for issue in report.issues:
            if issue.rule in ("all probabilities > 0", "probabilities sum to 1", "one probability per scenario"):
                raise BadProbabilities(str(issue))
        if report:
            raise ScenarioCaseMismatch(str(report.issues[0]))
        return scen, digest

    @staticmethod
    def solver_options(cfg: RunConfig) -> SolverOptions:
        return SolverOptions(
            relative_mip_gap=cfg.mip_gap,
            time_limit_seconds=cfg.time_limit_seconds,
            threads=cfg.threads,
            deterministic_mode=cfg.deterministic,
        )

    # Solving

    def solve_variant(
        self,
        case: CaseFile,
        scen: ScenarioSet,
        variant: str,
        label: str,
        cfg: RunConfig,
        opts: SolverOptions,
        backend: SolverBackend,
        dump_model_path: Optional[str] = None,
    ) -> VariantRun:
        """Build, solve, price and measure one variant."""
        log = ContextLogger(self.logger, {"variant": label, "scenarios": scen.count})
        eff = apply_variant(case, variant)
        with PerformanceLogger(self.logger, f"building {label} model", logging.DEBUG):
            model = build_model(eff, scen)
        log.info(f"{model.num_vars} variables ({len(model.binary_columns)} binary), "
                 f"{model.num_constraints} constraints")
        if dump_model_path:
            self.persistence.write_text(dump_model_path, model.dump())
            log.info(f"Model dumped to {dump_model_path}")

        with PerformanceLogger(self.logger, f"solving {label}"):
            sol = solve_milp(model, opts, backend)
        lmp = price_solution(model, sol, opts, backend) if sol.is_feasible else None
        if sol.status == "infeasible" and sol.infeasible_family:
            log.warning(f"infeasible; feasible again without {sol.infeasible_family} constraints")

        metrics = build_metrics(
            sol, eff, scen, lmp,
            label=label, convention=cfg.lmp_convention, eps=cfg.congestion_epsilon,
            case_digest=case_digest(case),
        )
        return VariantRun(label, eff.variant.value, eff, sol, metrics)

    def _write_run(self, out: Path, run: VariantRun, case: CaseFile, scen: ScenarioSet) -> Dict[str, str]:
        files = {}
        self.persistence.save_case(out / RUN_FILES["case"], case)
        self.persistence.save_scenarios(out / RUN_FILES["scenarios"], scen)
        self.persistence.save_solution(out / RUN_FILES["solution"], run.solution)
        self.persistence.save_metrics(out / RUN_FILES["metrics_json"], run.metrics)
        self.reports.write_metrics_csv(out / RUN_FILES["metrics_csv"], run.metrics)
        for key in ("case", "scenarios", "solution", "metrics_json", "metrics_csv"):
            files[key] = RUN_FILES[key]
        if run.solution.is_feasible:
            rows = branch_loading_rows(run.solution, run.eff, run.label)
            self.reports.write_branch_loading(out / RUN_FILES["branch_loading"], rows)
            files["branch_loading"] = RUN_FILES["branch_loading"]
        return files

    def run_solve(self, cfg: RunConfig) -> int:
        """
        Solve one variant and write solution, scenarios, metrics and manifest.

        Returns:
            0 on an optimal/feasible point, 2 when infeasible, 1 otherwise
        """
        start = time.perf_counter()
        cfg.validate()
        case, bundled = self.resolve_case(cfg.case_path)
        scen, scen_digest = self.resolve_scenarios(case, cfg.scenarios, bundled)
        backend = get_backend(cfg.solver_backend or None, self.logger)
        opts = self.solver_options(cfg)
        variant = ModelVariant.parse(cfg.variant).value

        run = self.solve_variant(case, scen, variant, variant, cfg, opts, backend, cfg.dump_model_path)
        out = Path(cfg.output_dir)
        files = self._write_run(out, run, case, scen)

        manifest = RunManifest(
            command="solve",
            variant=variant,
            label=run.label,
            case_source=cfg.case_path,
            case_sha256=self.case_source_digest(cfg.case_path, case),
            scenarios_source=cfg.scenarios.path or "generated",
            scenarios_sha256=scen_digest,
            seed=scen.provenance.get("seed"),
            solver_backend=backend.label,
            solver_options=asdict(opts),
            lmp_convention=cfg.lmp_convention,
            congestion_epsilon=run.metrics.congestion_epsilon,
            status=run.solution.status,
            objective=run.solution.objective if run.solution.is_feasible else None,
            infeasible_family=run.solution.infeasible_family,
            verification_failures=list(run.solution.verification_failures),
            wall_seconds=round(time.perf_counter() - start, 3),
            files=files,
        )
        self.persistence.save_manifest(out / RUN_FILES["manifest"], manifest)
        self.last_run = run

        if run.solution.is_feasible:
            return EXIT_OK
        if run.solution.status == "infeasible":
            return EXIT_INFEASIBLE
        return EXIT_ERROR

    def run_compare(
        self,
        cfg: RunConfig,
        variants: Sequence[str],
        baseline: Optional[str] = None,
        diagnostics: bool = False,
        plots: bool = False,
    ) -> int:
        """
        Solve every listed variant on the same scenarios and write the comparison.

        A variant that fails is reported and its table cells are marked
        unavailable; the command still succeeds.
        """
        if len(variants) < 2:
            raise ValueError("compare needs at least two variants")
        start = time.perf_counter()
        cfg.validate()
        names = [ModelVariant.parse(v).value for v in variants]
        labels = unique_labels(names)
        baseline = baseline or (ModelVariant.BASE.value if ModelVariant.BASE.value in labels else labels[0])

        case, bundled = self.resolve_case(cfg.case_path)
        scen, scen_digest = self.resolve_scenarios(case, cfg.scenarios, bundled)
        backend = get_backend(cfg.solver_backend or None, self.logger)
        opts = self.solver_options(cfg)
        out = Path(cfg.output_dir)
        digest = case_digest(case)

        def solve_one(item: Tuple[str, str]) -> VariantRun:
            name, label = item
            try:
                return self.solve_variant(case, scen, name, label, cfg, opts, backend)
            except ScucError as e:
                self.logger.error(f"{label}: {e}")
                failed = MetricsReport(label=label, variant=name, status="error",
                                       lmp_convention=cfg.lmp_convention,
                                       congestion_epsilon=congestion_tolerance(case, cfg.congestion_epsilon),
                                       case_digest=digest, scenario_digest=scen.digest())
                return VariantRun(label, name, metrics=failed, error=str(e))

        workers = max(1, APP_CONFIG.max_concurrent_solves)
        items = list(zip(names, labels))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                runs = list(pool.map(solve_one, items))
        else:
            runs = [solve_one(item) for item in items]

        loading: List[Dict] = []
        for run in runs:
            if run.solution is None:
                continue
            self._write_run(out / run.label, run, case, scen)
            if run.solution.is_feasible:
                loading.extend(branch_loading_rows(run.solution, run.eff, run.label))
        self.reports.write_branch_loading(out / RUN_FILES["branch_loading"], loading)

        reports = [run.metrics for run in runs]
        table = compare_variants(reports, baseline)
        reference = ModelVariant.VTL.value if ModelVariant.VTL.value in labels else labels[-1]
        claims = derived_claims(table, reference)

        diags: Dict[str, StochasticDiagnostics] = {}
        if diagnostics:
            for run in runs:
                if run.solution is None or not run.solution.is_feasible:
                    continue
                try:
                    diags[run.label] = stochastic_diagnostics(case, scen, run.variant, opts, backend)
                except ScucError as e:
                    self.logger.warning(f"Diagnostics for {run.label} failed: {e}")

        self.reports.write_comparison(out, table, reports, claims, diags)
        if plots:
            plot_branch_loading(loading, out / "plots")
            plot_commitment({r.label: r.solution for r in runs if r.solution is not None}, out / "plots")

        manifest = RunManifest(
            command="compare",
            variant=",".join(names),
            label=",".join(labels),
            case_source=cfg.case_path,
            case_sha256=self.case_source_digest(cfg.case_path, case),
            scenarios_source=cfg.scenarios.path or "generated",
            scenarios_sha256=scen_digest,
            seed=scen.provenance.get("seed"),
            solver_backend=backend.label,
            solver_options=asdict(opts),
            lmp_convention=cfg.lmp_convention,
            congestion_epsilon=congestion_tolerance(case, cfg.congestion_epsilon),
            status=",".join(r.metrics.status for r in runs),
            wall_seconds=round(time.perf_counter() - start, 3),
            files={label: label for label in labels},
        )
        self.persistence.save_manifest(out / RUN_FILES["manifest"], manifest)
        self.last_runs = runs
        self.last_table = table
        self.last_claims = claims
        self.last_diagnostics = diags

        failed = [r.label for r in runs if not r.metrics.available]
        if failed:
            self.logger.warning(f"Unavailable variants: {', '.join(failed)}")
        return EXIT_OK

    # Thin wrappers

    def run_gen_scenarios(
        self,
        case_spec: str,
        count: int,
        seed: int,
        out_path: str,
        probabilities: Optional[Sequence[float]] = None,
        schedule: Optional[SigmaSchedule] = None,
    ) -> ScenarioSet:
        case, _ = self.resolve_case(case_spec)
        scen = generate_scenarios(case, schedule or SigmaSchedule(), count, seed, probabilities)
        self.persistence.save_scenarios(out_path, scen)
        self.logger.info(f"Wrote {scen.count} scenario(s) to {out_path}")
        return scen

    def regenerate_metrics(self, run_dir: Path) -> Tuple[MetricsReport, RunManifest]:
        """Recompute a solve run's metrics from its persisted files, without re-solving."""
        run_dir = Path(run_dir)
        manifest = self.persistence.load_manifest(run_dir / RUN_FILES["manifest"])
        case = self.persistence.load_case(run_dir / RUN_FILES["case"])
        scen = self.persistence.load_scenarios(run_dir / RUN_FILES["scenarios"])
        sol = self.persistence.load_solution(run_dir / RUN_FILES["solution"])
        eff = apply_variant(case, sol.variant)
        report = build_metrics(
            sol, eff, scen, None,
            label=manifest.label, convention=manifest.lmp_convention, eps=manifest.congestion_epsilon,
            case_digest=case_digest(case),
        )
        return report, manifest

    def run_report(self, run_dirs: Sequence[str], baseline: str, out_dir: str) -> int:
        """
        Compare persisted solve runs.

        Writes ``<run>.metrics.csv`` per run (identical to the solve-time
        file) and the comparison tables.
        """
        out = Path(out_dir)
        reports = []
        for run_dir in run_dirs:
            report, _ = self.regenerate_metrics(Path(run_dir))
            self.reports.write_metrics_csv(out / f"{Path(run_dir).name}.metrics.csv", report)
            reports.append(report)

        for report, label in zip(reports, unique_labels([r.label for r in reports])):
            report.label = label
        table = compare_variants(reports, baseline)
        labels = [r.label for r in reports]
        reference = ModelVariant.VTL.value if ModelVariant.VTL.value in labels else labels[-1]
        self.reports.write_comparison(out, table, reports, derived_claims(table, reference))
        self.last_table = table
        return EXIT_OK

    def run_validate(
        self,
        case_spec: str,
        scenarios_path: Optional[str] = None,
        variant: Optional[str] = None,
    ) -> ValidationReport:
        """Structural checks of a case, and optionally of a scenario file and a variant."""
        case, _ = self.resolve_case(case_spec)
        report = validate_case(case)
        if scenarios_path:
            report.extend(validate_scenario_set(self.persistence.load_scenarios(scenarios_path), case))
        if variant and report.ok:
            try:
                apply_variant(case, variant)
            except ScucError as e:
                report.add("CaseFile", case.name, "variant prerequisites", str(e))
        return report
