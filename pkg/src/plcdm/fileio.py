"""Reading response files and (de)serializing parameters and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError, ReportIOError
from .model import Family, ModelSpec, ParameterSet, ResponseMatrix

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


def ingest_responses(path, missing_token: str = "NA", delimiter: str = ","):
    """Read a CSV of scored responses.

    The header row gives item ids after a leading id column; each following row
    is an examinee id and one cell per item. Error locations are 1-based
    (line, column) positions in the file.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh, delimiter=delimiter))
    except FileNotFoundError:
        raise InputError(f"response file {str(path)!r} does not exist")
    except OSError as exc:
        raise ReportIOError(f"cannot read {str(path)!r}: {exc}")
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise InputError(f"response file {str(path)!r} is empty")
    header, body = rows[0], rows[1:]
    item_ids = [h.strip() for h in header[1:]]
    if not item_ids:
        raise ParseError("header row lists no items", location=[1, 1])
    if not body:
        raise InputError(f"response file {str(path)!r} has no examinee rows")
    cells = np.empty((len(body), len(item_ids)))
    ids = []
    for r, row in enumerate(body):
        line = r + 2
        if len(row) != len(header):
            raise ParseError(
                f"line {line} has {len(row)} fields, expected {len(header)}", location=[line, None])
        ids.append(row[0].strip())
        for c, raw in enumerate(row[1:]):
            token = raw.strip()
            if token == missing_token:
                cells[r, c] = np.nan
            elif token in ("0", "1"):
                cells[r, c] = float(token)
            else:
                raise ParseError(
                    f"non-binary cell {token!r} at line {line}, column {c + 2}",
                    location=[line, c + 2])
    data = ResponseMatrix(cells, tuple(ids), tuple(item_ids))
    logger.info("read %d examinees x %d items, %d missing cells",
                data.n_examinees, data.n_items, data.n_missing)
    return data


def write_responses(data, path, missing_token: str = "NA"):
    def fmt(v):
        return missing_token if np.isnan(v) else str(int(v))

    lines = [["examinee_id", *data.item_ids]]
    lines += [[eid, *map(fmt, row)] for eid, row in zip(data.examinee_ids, data.cells)]
    atomic_write(path, _csv_text(lines))


def ingest_qmatrix(path, item_ids):
    """Item-to-attribute map from a CSV with one 0/1 column per attribute.

    Returns ``(item_attribute, n_attributes)``; every item must load on exactly
    one attribute.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"Q-matrix file {str(path)!r} does not exist")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise InputError("Q-matrix file is empty")
    n_attr = len(rows[0]) - 1
    mapping = {}
    for line, row in enumerate(rows[1:], start=2):
        try:
            flags = [int(v) for v in row[1:]]
        except ValueError:
            raise ParseError(f"non-integer Q-matrix entry on line {line}", location=[line, None])
        if len(flags) != n_attr or sorted(flags) != [0] * (n_attr - 1) + [1]:
            raise InputError(f"Q-matrix line {line} must mark exactly one attribute",
                             location=[line, None])
        mapping[row[0].strip()] = flags.index(1)
    missing = [i for i in item_ids if i not in mapping]
    if missing:
        raise InputError(f"Q-matrix has no row for item(s) {missing}")
    return tuple(mapping[i] for i in item_ids), n_attr


def params_to_dict(params: ParameterSet, spec: ModelSpec, item_ids) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "family": spec.family.value,
        "n_attributes": spec.n_attributes,
        "item_attribute": list(spec.item_attribute),
        "main_effect_floor": spec.main_effect_floor,
        "item_ids": list(item_ids),
        "intercepts": [float(v) for v in params.intercepts],
        "main_effects": [float(v) for v in params.main_effects],
        "structural": [float(v) for v in params.structural],
    }


def params_from_dict(doc: dict):
    """Inverse of :func:`params_to_dict`; returns ``(params, spec, item_ids)``."""
    try:
        spec = ModelSpec(Family(doc["family"]), tuple(doc["item_attribute"]),
                         int(doc["n_attributes"]), float(doc["main_effect_floor"]))
        params = ParameterSet(doc["intercepts"], doc["main_effects"], doc["structural"])
        item_ids = tuple(doc["item_ids"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed parameter document: {exc}")
    params.validate(spec, enforce_floor=False)
    return params, spec, item_ids


def load_params(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"parameter file {str(path)!r} does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"parameter file is not valid JSON: {exc}",
                         location=[exc.lineno, exc.colno])
    # a full fit report nests the parameters
    if "params" in doc and "family" not in doc:
        doc = doc["params"]
    elif "fits" in doc and "family" not in doc:
        doc = next(iter(doc["fits"].values()))["params"]
    return params_from_dict(doc)


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(doc) -> str:
    return json.dumps(to_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def atomic_write(path, text: str):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise ReportIOError(f"cannot write {str(path)!r}: {exc}")


def write_csv(path, header, rows):
    atomic_write(path, _csv_text([header, *rows]))
