"""Versioned JSON files for fitted calibrators.

Layout (schema version 1)::

    {"format": "splinecalib.calibrator", "schema_version": 1, "kind": <kind>, ...}

kind-specific fields:

* ``spline``: ``knots``, ``intercept``, ``coefficients``, ``lambda``,
  ``transform`` (``{"epsilon": e}`` or ``null``), ``lambda_report``
  (``grid``, ``cv_losses``, ``chosen``, ``fold_count``, ``seed``)
* ``platt``: ``slope``, ``intercept``
* ``isotonic``: ``boundaries``, ``block_values``
* ``clipping``: ``p_min``
* ``multiclass``: ``class_names`` and ``per_class``, a list of nested
  calibrator objects without the format/version header

Floats are written with ``repr`` precision, so a round trip is exact.
"""

import json
from pathlib import Path

import numpy as np

from .calibrators import (
    ClippingCalibrator,
    IsotonicCalibrator,
    MulticlassCalibrator,
    PlattCalibrator,
    SplineCalibrator,
)
from .errors import CorruptFileError, SchemaVersionMismatchError
from .ridge_glm import LambdaSearchReport, RidgeLogisticModel
from .spline_basis import KnotSet
from .transforms import CompactLogitParams

FORMAT_TAG = "splinecalib.calibrator"
SCHEMA_VERSION = 1


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=np.float64).ravel()]


def _report_to_dict(rep):
    if rep is None:
        return None
    return {
        "grid": _floats(rep.grid),
        "cv_losses": _floats(rep.cv_losses),
        "chosen": float(rep.chosen),
        "fold_count": int(rep.fold_count),
        "seed": int(rep.seed),
    }


def _report_from_dict(d):
    if d is None:
        return None
    return LambdaSearchReport(
        np.asarray(d["grid"], dtype=np.float64),
        np.asarray(d["cv_losses"], dtype=np.float64),
        float(d["chosen"]),
        int(d["fold_count"]),
        int(d["seed"]),
    )


def calibrator_to_dict(cal):
    kind = getattr(cal, "kind", None)
    if kind == "spline":
        return {
            "kind": kind,
            "knots": _floats(cal.knots.knots),
            "intercept": float(cal.model.intercept),
            "coefficients": _floats(cal.model.coefficients),
            "lambda": float(cal.model.lam),
            "transform": None if cal.transform is None else {"epsilon": cal.transform.epsilon},
            "lambda_report": _report_to_dict(cal.lambda_report),
        }
    if kind == "platt":
        return {"kind": kind, "slope": float(cal.slope), "intercept": float(cal.intercept)}
    if kind == "isotonic":
        return {"kind": kind, "boundaries": _floats(cal.boundaries), "block_values": _floats(cal.block_values)}
    if kind == "clipping":
        return {"kind": kind, "p_min": float(cal.p_min)}
    if kind == "multiclass":
        return {
            "kind": kind,
            "class_names": list(cal.class_names),
            "per_class": [calibrator_to_dict(c) for c in cal.per_class],
        }
    raise TypeError(f"cannot serialize {type(cal).__name__}")


def calibrator_from_dict(d):
    if not isinstance(d, dict):
        raise CorruptFileError("calibrator entry is not a JSON object")
    kind = d.get("kind")
    try:
        if kind == "spline":
            transform = d["transform"]
            return SplineCalibrator(
                KnotSet(np.asarray(d["knots"], dtype=np.float64)),
                RidgeLogisticModel(
                    float(d["intercept"]),
                    np.asarray(d["coefficients"], dtype=np.float64),
                    float(d["lambda"]),
                ),
                None if transform is None else CompactLogitParams(transform["epsilon"]),
                _report_from_dict(d.get("lambda_report")),
            )
        if kind == "platt":
            return PlattCalibrator(float(d["slope"]), float(d["intercept"]))
        if kind == "isotonic":
            return IsotonicCalibrator(d["boundaries"], d["block_values"])
        if kind == "clipping":
            return ClippingCalibrator(float(d["p_min"]))
        if kind == "multiclass":
            if any(c.get("kind") in ("multiclass", "clipping") for c in d["per_class"]):
                raise CorruptFileError("multiclass entries must be binary calibrators")
            return MulticlassCalibrator(
                tuple(calibrator_from_dict(c) for c in d["per_class"]), tuple(d["class_names"])
            )
    except CorruptFileError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptFileError(f"malformed {kind} calibrator: {exc}") from exc
    raise CorruptFileError(f"unknown calibrator kind {kind!r}")


def dumps(cal):
    body = {"format": FORMAT_TAG, "schema_version": SCHEMA_VERSION}
    body.update(calibrator_to_dict(cal))
    return json.dumps(body, indent=1)


def loads(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"not valid JSON: {exc}") from exc
    if not isinstance(d, dict) or d.get("format") != FORMAT_TAG:
        raise CorruptFileError("not a calibrator file (missing format tag)")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatchError(
            f"calibrator schema version {d.get('schema_version')!r}; this build reads {SCHEMA_VERSION}"
        )
    return calibrator_from_dict(d)


def save_calibrator(cal, path):
    Path(path).write_text(dumps(cal), encoding="utf-8")


def load_calibrator(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return loads(path.read_text(encoding="utf-8"))
