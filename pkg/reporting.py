"""Tables for metrics and variant comparisons: CSV files and the JSON report bundle."""

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import pandas as pd

from config import APP_CONFIG
from metrics import REPORT_SCHEMA, ComparisonTable, MetricsReport, StochasticDiagnostics
from persistence import PersistenceManager

METRICS_COLUMNS = ["label", "variant", "status", "metric", "value"]
COST_PAYMENT_COLUMNS = [
    "variant", "status", "operational_cost", "operational_cost_pct",
    "load_payment", "load_payment_pct", "load_payment_expected", "load_payment_unweighted", "available",
]
CONGESTION_COLUMNS = [
    "variant", "scenario", "congested_lines", "congested_lines_pct", "congested_line_hours", "available",
]
CURTAILMENT_COLUMNS = [
    "variant", "scenario", "solar_mwh", "wind_mwh", "total_mwh", "total_pct", "absolute", "available",
]
DIAGNOSTICS_COLUMNS = ["variant", "WS", "RP", "EEV", "VSS", "EVPI", "eev_feasible", "eev_message"]
BRANCH_LOADING_COLUMNS = ["variant", "scenario", "branch", "hour", "loading_fraction"]

TABLE_FILES = {
    "cost_payment": "cost_payment.csv",
    "congestion": "congestion.csv",
    "curtailment": "curtailment.csv",
    "diagnostics": "diagnostics.csv",
}


def _clean(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def to_csv_text(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> str:
    """Render rows with a fixed column order and float format (stable bytes)."""
    frame = pd.DataFrame(list(rows), columns=list(columns))
    return frame.to_csv(index=False, float_format=APP_CONFIG.csv_float_format, lineterminator="\n")


def metrics_rows(report: MetricsReport) -> List[Dict[str, Any]]:
    """Long-format rows of one run's metrics."""
    return [
        {"label": report.label, "variant": report.variant, "status": report.status,
         "metric": metric, "value": _clean(value)}
        for metric, value in report.metric_values().items()
    ]


def cost_payment_rows(table: ComparisonTable, reports: Sequence[MetricsReport]) -> List[Dict[str, Any]]:
    rows = []
    for report in reports:
        cost = table.cell(report.label, "operational_cost")
        payment_metric = f"load_payment_{report.lmp_convention}"
        payment = table.cells.get((report.label, payment_metric))
        rows.append({
            "variant": report.label,
            "status": report.status,
            "operational_cost": _clean(cost.value),
            "operational_cost_pct": cost.percent,
            "load_payment": None if payment is None else _clean(payment.value),
            "load_payment_pct": None if payment is None else payment.percent,
            "load_payment_expected": _clean(report.load_payment.get("expected")),
            "load_payment_unweighted": _clean(report.load_payment.get("unweighted")),
            "available": report.available,
        })
    return rows


def _scenario_count(reports: Sequence[MetricsReport]) -> int:
    return max((len(r.congestion_counts) for r in reports), default=0)


def congestion_rows(table: ComparisonTable, reports: Sequence[MetricsReport]) -> List[Dict[str, Any]]:
    rows = []
    for s in range(_scenario_count(reports)):
        for report in reports:
            lines = table.cells.get((report.label, f"congestion_s{s}"))
            hours = table.cells.get((report.label, f"congestion_line_hours_s{s}"))
            available = lines is not None and lines.available
            rows.append({
                "variant": report.label,
                "scenario": s,
                "congested_lines": int(lines.value) if available else None,
                "congested_lines_pct": lines.percent if available else None,
                "congested_line_hours": int(hours.value) if hours is not None and hours.available else None,
                "available": available,
            })
    return rows


def curtailment_rows(table: ComparisonTable, reports: Sequence[MetricsReport]) -> List[Dict[str, Any]]:
    """Per scenario curtailment; the percentage is of the baseline's total in that scenario."""
    rows = []
    for s in range(_scenario_count(reports)):
        for report in reports:
            total = table.cells.get((report.label, f"curtailment_total_s{s}"))
            available = total is not None and total.available
            split = report.curtailment_mwh[s] if available and s < len(report.curtailment_mwh) else {}
            rows.append({
                "variant": report.label,
                "scenario": s,
                "solar_mwh": split.get("solar_mwh"),
                "wind_mwh": split.get("wind_mwh"),
                "total_mwh": total.value if available else None,
                "total_pct": total.percent if available else None,
                "absolute": total.absolute if available else False,
                "available": available,
            })
    return rows


def diagnostics_rows(diagnostics: Mapping[str, StochasticDiagnostics]) -> List[Dict[str, Any]]:
    rows = []
    for label, diag in diagnostics.items():
        values = diag.to_dict()
        rows.append({
            "variant": label,
            **{key: values[key] for key in ("WS", "RP", "EEV", "VSS", "EVPI")},
            "eev_feasible": values["eev_feasible"],
            "eev_message": values["eev_message"],
        })
    return rows


def report_bundle(
    table: ComparisonTable,
    reports: Sequence[MetricsReport],
    claims: Dict[str, Any],
    diagnostics: Optional[Mapping[str, StochasticDiagnostics]] = None,
) -> Dict[str, Any]:
    """The single JSON document holding every comparison table."""
    return {
        "schema": REPORT_SCHEMA,
        "baseline": table.baseline,
        "variants": list(table.labels),
        "tables": {
            "cost_payment": cost_payment_rows(table, reports),
            "congestion": congestion_rows(table, reports),
            "curtailment": curtailment_rows(table, reports),
            "diagnostics": diagnostics_rows(diagnostics or {}),
        },
        "derived_claims": claims,
        "comparison": [{k: _clean(v) for k, v in row.items()} for row in table.rows()],
    }


class ReportWriter:
    """Writes run metrics and comparison tables through the persistence layer."""

    def __init__(self, persistence: PersistenceManager, logger: logging.Logger):
        self.persistence = persistence
        self.logger = logger

    def write_metrics_csv(self, path: Path, report: MetricsReport) -> Path:
        text = to_csv_text(metrics_rows(report), METRICS_COLUMNS)
        self.persistence.write_text(path, text)
        return path

    def write_branch_loading(self, path: Path, rows: Sequence[Mapping[str, Any]]) -> Path:
        self.persistence.write_text(path, to_csv_text(rows, BRANCH_LOADING_COLUMNS))
        return path

    def write_comparison(
        self,
        out_dir: Path,
        table: ComparisonTable,
        reports: Sequence[MetricsReport],
        claims: Dict[str, Any],
        diagnostics: Optional[Mapping[str, StochasticDiagnostics]] = None,
    ) -> List[Path]:
        """
        Write the cost/payment, congestion, curtailment and diagnostics CSVs
        plus ``report.json``.

        Returns:
            Paths written, in order
        """
        out_dir = Path(out_dir)
        bundle = report_bundle(table, reports, claims, diagnostics)
        columns = {
            "cost_payment": COST_PAYMENT_COLUMNS,
            "congestion": CONGESTION_COLUMNS,
            "curtailment": CURTAILMENT_COLUMNS,
            "diagnostics": DIAGNOSTICS_COLUMNS,
        }
        written = []
        for name, filename in TABLE_FILES.items():
            path = out_dir / filename
            self.persistence.write_text(path, to_csv_text(bundle["tables"][name], columns[name]))
            written.append(path)
        report_path = out_dir / "report.json"
        self.persistence.save_report(report_path, bundle)
        written.append(report_path)
        self.logger.info(f"Wrote comparison of {len(reports)} variant(s) to {out_dir}")
        return written
