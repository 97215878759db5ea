"""Command-line front end.

Usage::

    plcdm fit --responses data.csv --model 1plcdm --out results/
    plcdm compare --responses data.csv --out results/
    plcdm classify --responses data.csv --params results/fit.json --out scored/

Any flag may also be set in a YAML/JSON config file passed with ``--config``;
flags given on the command line win.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import yaml

from . import diagnostics as diag
from .classify import classify_all, derive_cutscore, score_posterior_table
from . import invariance, simulate
from .em import EmConfig, evaluate, fit, fit_indices, lr_test
from .errors import InputError, PlcdmError, ReportIOError, UsageError
from .fileio import ingest_qmatrix, ingest_responses, load_params, write_responses
from .model import Family, ModelSpec, ParameterSet
from .reports import ReportBundle, emit_reports, fit_summary, make_manifest, score_table_rows

logger = logging.getLogger("plcdm")

COMMANDS = ("fit", "classify", "diagnose", "invariance", "simulate", "compare")
STUDIES = ("none", "recovery", "robustness", "probe")
# paths and output choices are left out of the config echo so reports do not
# depend on where they are written
_NOT_ECHOED = {"out", "config_path", "formats"}


@dataclass
class RunConfig:
    command: str
    responses: Optional[str] = None
    qmatrix: Optional[str] = None
    params: Optional[str] = None
    model: str = "1plcdm"
    threshold: float = 0.5
    seed: int = 0
    starts: int = 5
    max_iter: int = 2000
    tol: float = 1e-8
    out: str = "plcdm-out"
    formats: tuple = ("json", "csv")
    missing_token: str = "NA"
    k: Optional[int] = None
    n_examinees: int = 873
    missing_rate: float = 0.0
    study: str = "none"
    replicates: int = 20
    spreads: tuple = (0.0, 0.5, 1.0, 1.5)
    config_path: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if not 0 < self.threshold < 1:
            raise UsageError("--threshold must lie strictly between 0 and 1")
        try:
            Family(self.model)
        except ValueError:
            raise UsageError("--model must be 'lcdm' or '1plcdm'")
        if self.study not in STUDIES:
            raise UsageError(f"--study must be one of {', '.join(STUDIES)}")
        for name in ("responses", "qmatrix", "params"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise UsageError(f"--{name} file {path!r} does not exist")
        self.formats = tuple(self.formats)
        self.spreads = tuple(float(s) for s in self.spreads)

    def em_config(self, compute_se=True) -> EmConfig:
        return EmConfig(max_iterations=self.max_iter, loglik_tol=self.tol, n_starts=self.starts,
                        seed=self.seed, compute_se=compute_se)

    def echo(self) -> dict:
        doc = {k: v for k, v in asdict(self).items() if k not in _NOT_ECHOED}
        for key in ("responses", "qmatrix", "params"):
            if doc[key] is not None:
                doc[key] = Path(doc[key]).name
        return doc


# --- pipelines ---------------------------------------------------------------

def _data(cfg):
    if cfg.responses is None:
        raise UsageError(f"`{cfg.command}` needs --responses")
    return ingest_responses(cfg.responses, cfg.missing_token)


def _spec(cfg, data, family=None):
    family = Family(family or cfg.model)
    if cfg.qmatrix:
        item_attribute, n_attr = ingest_qmatrix(cfg.qmatrix, data.item_ids)
        return ModelSpec(family, item_attribute, n_attr)
    return ModelSpec.single(family, data.n_items)


def _classification_rows(result, data, threshold):
    return [{"examinee_id": c.examinee_id, "total_score": c.total_score, "complete": c.complete,
             "posterior_proficient": c.posterior_proficient, "status": c.status.value}
            for c in classify_all(result, data, threshold)]


def _property_report(result, data, threshold):
    doc = {}
    if data is not None:
        suff = diag.check_sufficiency(result, data)
        mono = diag.check_monotonicity(suff.per_score)
        doc["sufficiency"] = {"holds": suff.holds,
                              "max_within_score_spread": suff.max_within_score_spread,
                              "tolerance": suff.tolerance,
                              "n_incomplete_rows": suff.per_score.n_incomplete}
        doc["monotonicity"] = {"holds": mono.holds, "strict": mono.strict,
                               "violations": mono.violations}
    iio = diag.check_invariant_item_ordering(result)
    ipo = diag.check_invariant_person_ordering(result)
    doc["invariant_item_ordering"] = {"holds": iio.holds, "ordering_by_class": iio.ordering_by_class,
                                      "violations": iio.violations, "ties": iio.ties}
    doc["invariant_person_ordering"] = {"holds": ipo.holds, "violations": ipo.violations}
    if result.spec.family is Family.ONE_PLCDM:
        doc["cutscore"] = derive_cutscore(result, threshold)
        doc["threshold"] = threshold
    return doc


def _fit_or_load(cfg, data):
    """Estimated fit, or a fit wrapper around --params; second value says which."""
    if cfg.params:
        params, spec, item_ids = load_params(cfg.params)
        if data is not None:
            if tuple(item_ids) != tuple(data.item_ids):
                raise InputError("item ids in the parameter file do not match the responses")
            return evaluate(params, spec, data, item_ids), False
        return _ParamsOnly(params, spec, item_ids), False
    result = fit(data, _spec(cfg, data), cfg.em_config())
    return result, True


@dataclass
class _ParamsOnly:
    params: ParameterSet
    spec: ModelSpec
    item_ids: tuple


def run_fit(cfg, bundle):
    data = _data(cfg)
    result = fit(data, _spec(cfg, data), cfg.em_config())
    bundle.fits[cfg.model] = fit_summary(result)
    return data


def run_classify(cfg, bundle):
    data = _data(cfg)
    result, estimated = _fit_or_load(cfg, data)
    if estimated:
        bundle.fits[result.spec.family.value] = fit_summary(result)
    bundle.classifications = _classification_rows(result, data, cfg.threshold)
    bundle.score_tables[result.spec.family.value] = score_table_rows(
        score_posterior_table(result, data))
    if result.spec.family is Family.ONE_PLCDM:
        bundle.diagnostics = {"cutscore": derive_cutscore(result, cfg.threshold),
                              "threshold": cfg.threshold}
    return data


def run_diagnose(cfg, bundle):
    if cfg.params is None and cfg.responses is None:
        raise UsageError("`diagnose` needs --params, --responses, or both")
    data = _data(cfg) if cfg.responses else None
    result, estimated = _fit_or_load(cfg, data)
    label = result.spec.family.value
    if estimated:
        bundle.fits[label] = fit_summary(result)
    doc = _property_report(result, data, cfg.threshold)
    if data is not None:
        bundle.score_tables[label] = score_table_rows(score_posterior_table(result, data))
    bundle.diagnostics = {label: doc}
    bundle.item_bars[label] = diag.item_bar_chart_data(result)
    return data


def run_compare(cfg, bundle):
    data = _data(cfg)
    config = cfg.em_config()
    full = fit(data, _spec(cfg, data, Family.LCDM), config)
    reduced = fit(data, _spec(cfg, data, Family.ONE_PLCDM), config)
    for result in (full, reduced):
        label = result.spec.family.value
        bundle.fits[label] = fit_summary(result)
        if result.spec.n_attributes == 1:
            bundle.score_tables[label] = score_table_rows(score_posterior_table(result, data))
            bundle.item_bars[label] = diag.item_bar_chart_data(result)
    idx_full, idx_red = fit_indices(full), fit_indices(reduced)
    bundle.comparison = {
        "lr_test": lr_test(full, reduced),
        "indices": {"lcdm": idx_full, "1plcdm": idx_red},
        "delta_aic": idx_red["aic"] - idx_full["aic"],
        "delta_bic": idx_red["bic"] - idx_full["bic"],
    }
    if full.spec.n_attributes == 1:
        bundle.diagnostics = {r.spec.family.value: _property_report(r, data, cfg.threshold)
                              for r in (full, reduced)}
    return data


def run_invariance(cfg, bundle):
    data = _data(cfg)
    spec = _spec(cfg, data)
    k = cfg.k or max(1, round(2 * data.n_items / 3))
    item_free = invariance.item_free_experiment(data, spec, cfg.em_config(compute_se=False), k,
                                                cfg.threshold)
    person_free = invariance.person_free_experiment(data, spec, cfg.em_config(), cfg.seed)
    groups = {}
    for key, g in [("complete", person_free.complete), *person_free.groups.items()]:
        groups[key] = {"composition": g.composition,
                       "estimates": g.item_estimates,
                       "ci95": g.item_ci,
                       "structural": g.fit.params.structural}
    bundle.experiments = {
        "item_free": {
            "k": k,
            "easy_items": item_free.easy_items,
            "hard_items": item_free.hard_items,
            "proficiency_proportions": item_free.proficiency_proportions,
            "posterior_correlation": item_free.posterior_correlation,
            "classification_agreement": item_free.classification_agreement,
            "n_examinees": item_free.n_examinees,
        },
        "person_free": {
            "parameters": person_free.parameter_names,
            "groups": groups,
            "within_ci_flags": person_free.within_ci_flags,
            "ci_overlap_flags": person_free.ci_overlap_flags,
            "bias_summary": person_free.bias_summary,
            "median_score": person_free.median_score,
            "rounding_rule": person_free.rounding_rule,
            "within_ci_rate_intercepts": person_free.within_ci_rate(),
            "all_ci_overlap": person_free.all_overlap(),
        },
    }
    return data


def run_simulate(cfg, bundle):
    if cfg.params:
        params, spec, _ = load_params(cfg.params)
    else:
        params, spec = simulate.reference_truth(family=Family(cfg.model))
    gen = simulate.GenSpec(params, spec, cfg.n_examinees, cfg.seed, cfg.missing_rate)
    em_cfg = cfg.em_config(compute_se=cfg.study == "recovery")
    if cfg.study == "none":
        sim = simulate.simulate(gen)
        write_responses(sim.data, Path(cfg.out) / "responses.csv", cfg.missing_token)
        bundle.simulation = {
            "header": ["examinee_id", "true_class"],
            "rows": [[e, "".join(map(str, c))] for e, c in zip(sim.data.examinee_ids, sim.true_classes)],
        }
        bundle.manifest["data_fingerprint"] = sim.data.fingerprint()
        return None
    if cfg.study == "recovery":
        report = simulate.recovery_study(gen, cfg.replicates, em_cfg)
        rows = report.rows()
        bundle.simulation = {"header": list(rows[0]), "rows": [list(r.values()) for r in rows]}
        summary = {"classification_accuracy": report.classification_accuracy,
                   "n_replicates": report.n_replicates, "n_failed": report.n_failed}
    elif cfg.study == "robustness":
        rows = simulate.robustness_study(cfg.spreads, gen, cfg.replicates, em_cfg)
        bundle.simulation = {"header": list(rows[0]), "rows": [list(r.values()) for r in rows]}
        summary = {"n_replicates": cfg.replicates}
    else:
        probe = simulate.multiattribute_sufficiency_probe(gen, em_cfg)
        rows = [{"source": src, "attribute": r.attribute + 1, "max_spread": r.max_spread,
                 "holds": r.holds}
                for src, reps in (("truth", probe.truth), ("fitted", probe.fitted)) for r in reps]
        bundle.simulation = {"header": list(rows[0]), "rows": [list(r.values()) for r in rows]}
        summary = {"truth_correlation": probe.truth_correlation,
                   "fitted_correlation": probe.fitted_correlation}
    bundle.experiments = {"study": cfg.study, "summary": summary, "table": rows}
    return None


PIPELINES = {
    "fit": run_fit,
    "classify": run_classify,
    "diagnose": run_diagnose,
    "invariance": run_invariance,
    "simulate": run_simulate,
    "compare": run_compare,
}


def run(cfg: RunConfig) -> ReportBundle:
    """Run one command and write its reports; returns the bundle."""
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    bundle = ReportBundle(make_manifest(cfg.command, cfg.echo(), None))
    data = PIPELINES[cfg.command](cfg, bundle)
    if data is not None:
        bundle.manifest["data_fingerprint"] = data.fingerprint()
    bundle.timestamps = {"started": started,
                         "finished": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    emit_reports(bundle, cfg.formats, cfg.out)
    return bundle


# --- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plcdm", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", dest="config_path", help="YAML or JSON file of flag values")
    parser.add_argument("--responses", help="CSV of 0/1 responses, header row + id column")
    parser.add_argument("--qmatrix", help="CSV item-to-attribute map (multi-attribute models)")
    parser.add_argument("--params", help="parameter file written by `fit` (fit.json)")
    parser.add_argument("--model", choices=[f.value for f in Family])
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--starts", type=int)
    parser.add_argument("--max-iter", dest="max_iter", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--out")
    parser.add_argument("--format", dest="format", choices=["json", "csv", "both"])
    parser.add_argument("--missing-token", dest="missing_token")
    parser.add_argument("--k", type=int, help="subtest length for the item-free experiment")
    parser.add_argument("--n-examinees", dest="n_examinees", type=int)
    parser.add_argument("--missing-rate", dest="missing_rate", type=float)
    parser.add_argument("--study", choices=STUDIES)
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--spreads", type=lambda s: [float(v) for v in s.split(",")])
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _read_config_file(path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {path!r} does not exist")
    except yaml.YAMLError as exc:
        raise UsageError(f"config file {path!r} is not valid YAML/JSON: {exc}")
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a key-value mapping")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def config_from_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values = {}
    if ns.config_path:
        values.update(_read_config_file(ns.config_path))
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("verbose",)}
    values.update(flags)
    fmt = values.pop("format", None)
    if fmt is not None:
        values["formats"] = ("json", "csv") if fmt == "both" else (fmt,)
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"unknown configuration key(s): {', '.join(unknown)}")
    return RunConfig(**values)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if "-v" in argv or "--verbose" in argv else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(argv)
        run(cfg)
    except PlcdmError as exc:
        print(json.dumps({"error": exc.to_record()}), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        err = ReportIOError(str(exc))
        print(json.dumps({"error": err.to_record()}), file=sys.stderr)
        return err.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort structured record
        logger.exception("unexpected failure")
        print(json.dumps({"error": {"code": "internal", "message": repr(exc), "location": None}}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
