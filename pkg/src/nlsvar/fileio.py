"""JSON model files and CSV tables.

Model files look like::

    {"p": 2, "k": 1, "c": [0, 0],
     "family": {"type": "linear", "phi": [PHI_0, PHI_1]}}

Matrices are row-major nested lists. Family objects:

* ``linear``: ``phi`` is the list of k+1 matrices.
* ``threshold``: ``a``, ``tau`` (L-1 increasing values), ``phi[i][l]`` for
  lag i and regime l, optional ``offsets[i][l]`` (default zero).
* ``conic``: ``basis`` (rows a_1..a_p), ``cone_regimes`` (2^p regime indices
  indexed by the bitmask of ``a_j'z >= 0``), ``phi[i][l]``.
* ``smoothed``: ``sigma`` and ``base``, a threshold family object.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from nlsvar.errors import ModelError
from nlsvar.model import Conic, Linear, ModelSpec, Smoothed, Threshold


class InputError(Exception):
    """A file could not be read or does not match its schema."""


_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM}
_MAT = {"type": "array", "items": _VEC}
_MATS = {"type": "array", "items": _MAT}

_THRESHOLD = {
    "type": "object",
    "required": ["type", "a", "tau", "phi"],
    "properties": {
        "type": {"const": "threshold"},
        "a": _VEC,
        "tau": _VEC,
        "phi": {"type": "array", "items": _MATS},
        "offsets": {"type": "array", "items": {"type": "array", "items": _VEC}},
    },
    "additionalProperties": False,
}

FAMILY_SCHEMAS = {
    "linear": {
        "type": "object",
        "required": ["type", "phi"],
        "properties": {"type": {"const": "linear"}, "phi": _MATS},
        "additionalProperties": False,
    },
    "threshold": _THRESHOLD,
    "conic": {
        "type": "object",
        "required": ["type", "basis", "cone_regimes", "phi"],
        "properties": {
            "type": {"const": "conic"},
            "basis": _MAT,
            "cone_regimes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "phi": {"type": "array", "items": _MATS},
        },
        "additionalProperties": False,
    },
    "smoothed": {
        "type": "object",
        "required": ["type", "sigma", "base"],
        "properties": {
            "type": {"const": "smoothed"},
            "sigma": {"type": "number", "exclusiveMinimum": 0},
            "base": _THRESHOLD,
        },
        "additionalProperties": False,
    },
}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["p", "k", "family"],
    "properties": {
        "p": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "c": _VEC,
        "family": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": sorted(FAMILY_SCHEMAS)}},
        },
    },
    "additionalProperties": False,
}


def _json_path(prefix: str, path) -> str:
    out = prefix
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def _schema_errors(schema: dict, doc, prefix: str) -> list[str]:
    errs = sorted(Draft202012Validator(schema).iter_errors(doc), key=lambda e: list(e.absolute_path))
    return [f"{_json_path(prefix, e.absolute_path)}: {e.message}" for e in errs]


def check_model_document(doc) -> list[str]:
    """Schema problems in a parsed model document, one line per problem."""
    errs = _schema_errors(MODEL_SCHEMA, doc, "$")
    if errs:
        return errs
    return _schema_errors(FAMILY_SCHEMAS[doc["family"]["type"]], doc["family"], "$.family")


def _threshold_from(d: dict, p: int, k: int) -> Threshold:
    phi = np.asarray(d["phi"], dtype=float)
    if phi.ndim != 4:
        raise ModelError("phi must be indexed [lag][regime][row][col]")
    offsets = d.get("offsets")
    offsets = np.zeros(phi.shape[:3]) if offsets is None else np.asarray(offsets, dtype=float)
    return Threshold(np.asarray(d["a"], float), np.asarray(d["tau"], float).reshape(-1), phi, offsets)


def model_from_dict(doc) -> ModelSpec:
    errs = check_model_document(doc)
    if errs:
        raise InputError("model document does not match the schema:\n  " + "\n  ".join(errs))
    p, k = doc["p"], doc["k"]
    c = np.asarray(doc.get("c", [0.0] * p), dtype=float)
    fam = doc["family"]
    try:
        kind = fam["type"]
        if kind == "linear":
            family = Linear(np.asarray(fam["phi"], dtype=float))
        elif kind == "threshold":
            family = _threshold_from(fam, p, k)
        elif kind == "conic":
            family = Conic(np.asarray(fam["basis"], float), np.asarray(fam["cone_regimes"]), np.asarray(fam["phi"], float))
        else:
            family = Smoothed(_threshold_from(fam["base"], p, k), float(fam["sigma"]))
        return ModelSpec(p, k, c, family)
    except ValueError as exc:
        # ragged nested lists end up here as well as dimension mismatches
        raise InputError(f"$.family: {exc}") from exc


def _threshold_dict(fam: Threshold) -> dict:
    return {
        "type": "threshold",
        "a": fam.a.tolist(),
        "tau": fam.tau.tolist(),
        "phi": fam.phi.tolist(),
        "offsets": fam.offsets.tolist(),
    }


def model_to_dict(model: ModelSpec) -> dict:
    fam = model.family
    if isinstance(fam, Linear):
        fd = {"type": "linear", "phi": fam.phi.tolist()}
    elif isinstance(fam, Threshold):
        fd = _threshold_dict(fam)
    elif isinstance(fam, Conic):
        fd = {"type": "conic", "basis": fam.basis.tolist(), "cone_regimes": fam.cone_regimes.tolist(), "phi": fam.phi.tolist()}
    else:
        fd = {"type": "smoothed", "sigma": fam.sigma, "base": _threshold_dict(fam.base)}
    return {"p": model.p, "k": model.k, "c": model.c.tolist(), "family": fd}


def read_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def load_model(path) -> ModelSpec:
    return model_from_dict(read_json(path))


def dump_model(model: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


# CSV


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x) + 0.0, ".17g")  # no negative zero


def write_csv(path, columns: list[str], rows, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(x) for x in row])


_FLAGS = {"true": 1.0, "false": 0.0}


def _cell(text: str) -> float:
    t = text.strip()
    return _FLAGS[t] if t in _FLAGS else float(t)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header names and a float array; lines starting with '#' are skipped.

    ``true``/``false`` cells read as 1/0 so flag columns round-trip.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    if not lines:
        raise InputError(f"{path} has no header row")
    rows = list(csv.reader(lines))
    cols = [c.strip() for c in rows[0]]
    try:
        data = np.array([[_cell(x) for x in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from exc
    if data.size == 0:
        data = np.zeros((0, len(cols)))
    if data.shape[1] != len(cols):
        raise InputError(f"{path}: rows do not match the header width {len(cols)}")
    return cols, data


def columns(path, cols: list[str], data: np.ndarray, prefix: str, n: int) -> np.ndarray:
    """Extract columns ``prefix_1..prefix_n`` by name."""
    names = [f"{prefix}_{j}" for j in range(1, n + 1)]
    missing = [c for c in names if c not in cols]
    if missing:
        raise InputError(f"{path}: missing column(s) {', '.join(missing)}")
    return data[:, [cols.index(c) for c in names]]
