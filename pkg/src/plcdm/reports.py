"""Report bundle assembly and emission."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .classify import ScorePosteriorTable
from .fileio import SCHEMA_VERSION, atomic_write, dumps, params_to_dict, write_csv
from .model import FitResult

FILE_NAMES = ("fit.json", "params.csv", "classifications.csv", "score_table.csv",
              "item_bars.csv", "diagnostics.json", "invariance.json", "simulation.csv")


def parameter_table(fit: FitResult) -> list:
    est = fit.params.to_vector()
    rows = []
    for k, name in enumerate(fit.parameter_names):
        row = {"parameter": name, "estimate": float(est[k]), "se": None,
               "ci_lower": None, "ci_upper": None, "boundary": False}
        if fit.standard_errors is not None:
            row.update(se=float(fit.standard_errors[k]), ci_lower=float(fit.ci95[k, 0]),
                       ci_upper=float(fit.ci95[k, 1]), boundary=bool(fit.boundary_flags[k]))
        rows.append(row)
    return rows


def fit_summary(fit: FitResult) -> dict:
    return {
        "family": fit.spec.family.value,
        "loglik": fit.loglik,
        "n_params": fit.n_params,
        "aic": fit.aic,
        "bic": fit.bic,
        "converged": fit.converged,
        "n_iterations": fit.n_iterations,
        "n_examinees": fit.n_examinees,
        "loglik_trace": list(fit.loglik_trace),
        "data_fingerprint": fit.data_fingerprint,
        "params": params_to_dict(fit.params, fit.spec, fit.item_ids),
        "parameter_table": parameter_table(fit),
        "warnings": list(fit.warnings),
    }


def score_table_rows(table: ScorePosteriorTable) -> list:
    return [{"total_score": r.total_score, "count": r.count, "n_distinct": len(r.posteriors),
             "posteriors": list(r.posteriors)} for r in table.rows]


@dataclass
class ReportBundle:
    manifest: dict
    timestamps: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    classifications: Optional[list] = None
    score_tables: dict = field(default_factory=dict)
    item_bars: dict = field(default_factory=dict)
    diagnostics: Optional[dict] = None
    comparison: Optional[dict] = None
    experiments: Optional[dict] = None
    simulation: Optional[dict] = None

    def to_dict(self) -> dict:
        doc = {"schema_version": SCHEMA_VERSION, "manifest": self.manifest}
        for key in ("fits", "classifications", "score_tables", "item_bars", "diagnostics",
                    "comparison", "experiments", "simulation"):
            value = getattr(self, key)
            if value:
                doc[key] = value
        return doc


def make_manifest(command: str, config_echo: dict, fingerprint: Optional[str]) -> dict:
    return {
        "tool": "plcdm",
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config_echo,
        "data_fingerprint": fingerprint,
    }


def emit_reports(bundle: ReportBundle, formats, out_dir) -> list:
    """Write the bundle; returns the paths written.

    Reports are deterministic for identical inputs; wall-clock timestamps go
    to ``manifest.json`` only.
    """
    out = Path(out_dir)
    formats = set(formats)
    written = []

    def put(name, text):
        atomic_write(out / name, text)
        written.append(out / name)

    if "json" in formats:
        put("fit.json", dumps(bundle.to_dict()))
        if bundle.diagnostics:
            put("diagnostics.json", dumps({"schema_version": SCHEMA_VERSION,
                                           "manifest": bundle.manifest,
                                           "diagnostics": bundle.diagnostics}))
        if bundle.experiments:
            put("invariance.json", dumps({"schema_version": SCHEMA_VERSION,
                                          "manifest": bundle.manifest,
                                          "experiments": bundle.experiments}))
        put("manifest.json", dumps({**bundle.manifest, "timestamps": bundle.timestamps}))

    if "csv" in formats:
        if bundle.fits:
            rows = [[label, r["parameter"], r["estimate"], r["se"], r["ci_lower"], r["ci_upper"],
                     r["boundary"]]
                    for label, summary in bundle.fits.items()
                    for r in summary["parameter_table"]]
            _write(out / "params.csv", ["model", "parameter", "estimate", "se", "ci_lower",
                                        "ci_upper", "boundary"], rows, written)
        if bundle.classifications:
            rows = [[c["examinee_id"], c["total_score"], c["complete"],
                     c["posterior_proficient"], c["status"]] for c in bundle.classifications]
            _write(out / "classifications.csv", ["examinee_id", "total_score", "complete",
                                                 "posterior_proficient", "status"], rows, written)
        if bundle.score_tables:
            rows = [[label, r["total_score"], r["count"], r["n_distinct"],
                     ";".join(repr(float(p)) for p in r["posteriors"])]
                    for label, table in bundle.score_tables.items() for r in table]
            _write(out / "score_table.csv", ["model", "total_score", "count", "n_distinct",
                                             "posteriors"], rows, written)
        if bundle.item_bars:
            rows = [[label, rank + 1, item, p0, p1]
                    for label, bars in bundle.item_bars.items()
                    for rank, (item, p0, p1) in enumerate(bars)]
            _write(out / "item_bars.csv", ["model", "rank", "item_id", "p_nonproficient",
                                           "p_proficient"], rows, written)
        if bundle.simulation:
            _write(out / "simulation.csv", bundle.simulation["header"],
                   bundle.simulation["rows"], written)
    return written


def _write(path, header, rows, written):
    write_csv(path, header, [["" if v is None else v for v in row] for row in rows])
    written.append(path)
