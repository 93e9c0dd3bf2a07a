"""Model files: a JSON scorecard holding the schema, per-feature quantizers,
coefficients and fit metadata.

Floats are written with ``repr`` precision, so a saved model predicts
bit-for-bit like the in-memory one.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .baselines import AllrModel
from .data import FeatureKind, Schema
from .glm import FitResult, LogisticParams
from .quantization import CategoricalQuantizer, ContinuousQuantizer, Quantization
from .trainer import EpochRecord, GlmdiscModel, QuantizedLogisticModel, TrainConfig

FORMAT = "glmdisc-scorecard/1"


class ModelFormatError(ValueError):
    pass


def _quantizer_to_dict(qz, labels) -> dict:
    if isinstance(qz, ContinuousQuantizer):
        return {"cutpoints": list(qz.cutpoints)}
    return {"groups": {lab: g for lab, g in zip(labels, qz.group_of)}}


def _quantizer_from_dict(entry: dict, labels):
    if "cutpoints" in entry:
        return ContinuousQuantizer(tuple(entry["cutpoints"]))
    groups = entry["groups"]
    if set(groups) != set(labels):
        raise ModelFormatError("group mapping does not cover the schema levels")
    return CategoricalQuantizer(tuple(groups[lab] for lab in labels))


def _labels(schema: Schema, j: int):
    return schema.categorical_levels.get(schema.feature_names[j], ())


def model_to_dict(model, include_history: bool = True) -> dict:
    schema = model.schema
    out = {
        "format": FORMAT,
        "method": model.method,
        "schema": schema.to_dict(),
        "schema_fingerprint": schema.fingerprint(),
    }
    if isinstance(model, AllrModel):
        feats = []
        for j, name in enumerate(schema.feature_names):
            coef = model.coefs[j]
            if schema.kinds[j] is FeatureKind.CONTINUOUS:
                feats.append({"name": name, "kind": "continuous", "coefficient": float(coef)})
            else:
                feats.append({"name": name, "kind": "categorical",
                              "coefficients": {lab: float(c) for lab, c in zip(_labels(schema, j), coef)}})
        out.update(intercept=model.intercept, features=feats, bic=model.bic,
                   loglik=model.loglik, nu=model.nu)
        out["meta"] = dict(model.meta)
        return out

    feats = []
    for j, (qz, th) in enumerate(zip(model.quantization, model.params.theta_blocks)):
        entry = {"name": schema.feature_names[j], "kind": schema.kinds[j].value}
        entry.update(_quantizer_to_dict(qz, _labels(schema, j)))
        entry["coefficients"] = [float(v) for v in th]
        feats.append(entry)
    out.update(intercept=model.params.theta0, features=feats, bic=model.bic)
    out["meta"] = {k: v for k, v in model.meta.items()}
    if isinstance(model, GlmdiscModel):
        cfg = model.config or TrainConfig()
        out.update(best_epoch=model.best_epoch, epochs=cfg.epochs, seed=cfg.seed, config=cfg.to_dict())
        if include_history:
            out["history"] = [
                {"epoch": rec.epoch, "bic": rec.fit.bic, "loglik": rec.fit.loglik, "nu": rec.fit.nu,
                 "relaxed_loglik": rec.relaxed_loglik, "m_hat": list(rec.hard_q.block_sizes),
                 "features": [_quantizer_to_dict(qz, _labels(schema, j))
                              for j, qz in enumerate(rec.hard_q)]}
                for rec in model.history
            ]
    return out


def _config_from_dict(cfg: dict) -> TrainConfig:
    cfg = dict(cfg)
    if isinstance(cfg.get("m_max"), list):
        cfg["m_max"] = tuple(cfg["m_max"])
    return TrainConfig(**cfg)


def model_from_dict(doc: dict):
    if doc.get("format") != FORMAT:
        raise ModelFormatError(f"unsupported model format {doc.get('format')!r}")
    schema = Schema.from_dict(doc["schema"])
    if schema.fingerprint() != doc.get("schema_fingerprint"):
        raise ModelFormatError("schema fingerprint mismatch")
    method = doc["method"]
    feats = doc["features"]
    if [f["name"] for f in feats] != list(schema.feature_names):
        raise ModelFormatError("feature list does not match the schema")

    if method == "allr":
        coefs = []
        for j, f in enumerate(feats):
            if schema.kinds[j] is FeatureKind.CONTINUOUS:
                coefs.append(float(f["coefficient"]))
            else:
                coefs.append(np.array([f["coefficients"][lab] for lab in _labels(schema, j)]))
        return AllrModel(schema, doc["intercept"], coefs, doc.get("loglik", math.nan),
                         doc.get("nu", 0), doc.get("bic", math.nan), meta=doc.get("meta", {}))

    q = Quantization([_quantizer_from_dict(f, _labels(schema, j)) for j, f in enumerate(feats)])
    params = LogisticParams(doc["intercept"], [np.array(f["coefficients"], float) for f in feats])
    if params.block_sizes != q.block_sizes:
        raise ModelFormatError("coefficient blocks do not match the quantizers")
    common = dict(schema=schema, quantization=q, params=params, bic=doc["bic"],
                  method=method, meta=doc.get("meta", {}))
    if method != "glmdisc":
        return QuantizedLogisticModel(**common)
    history = []
    for h in doc.get("history", []):
        hq = Quantization([_quantizer_from_dict(f, _labels(schema, j)) for j, f in enumerate(h["features"])])
        fit = FitResult(None, h["loglik"], h["nu"], h["bic"], True, 0)
        history.append(EpochRecord(h["epoch"], hq, fit, h["relaxed_loglik"]))
    return GlmdiscModel(**common, best_epoch=doc["best_epoch"], history=history,
                        config=_config_from_dict(doc["config"]))


def save_model(model, path, include_history: bool = True) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, include_history), indent=2) + "\n",
                          encoding="utf-8")


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a JSON model file ({exc})") from None
    return model_from_dict(doc)


def _interval(lo, hi) -> str:
    left = "(-inf" if lo is None else f"({lo:.6g}"
    right = "+inf)" if hi is None else f"{hi:.6g}]"
    return f"{left}, {right}"


def scorecard_rows(model) -> list[dict]:
    """Human-readable table: one row per interval, level group or slope."""
    schema = model.schema
    rows = [{"feature": "(intercept)", "bin": "", "coefficient": float(
        model.intercept if isinstance(model, AllrModel) else model.params.theta0)}]
    if isinstance(model, AllrModel):
        for j, name in enumerate(schema.feature_names):
            coef = model.coefs[j]
            if schema.kinds[j] is FeatureKind.CONTINUOUS:
                rows.append({"feature": name, "bin": "slope", "coefficient": float(coef)})
            else:
                for lab, c in zip(_labels(schema, j), coef):
                    rows.append({"feature": name, "bin": lab, "coefficient": float(c)})
        return rows
    for j, (qz, th) in enumerate(zip(model.quantization, model.params.theta_blocks)):
        name = schema.feature_names[j]
        if isinstance(qz, ContinuousQuantizer):
            edges = [None, *qz.cutpoints, None]
            for h in range(qz.m):
                rows.append({"feature": name, "bin": _interval(edges[h], edges[h + 1]),
                             "coefficient": float(th[h])})
        else:
            labels = _labels(schema, j)
            for g in range(qz.m):
                members = [lab for lab, gg in zip(labels, qz.group_of) if gg == g]
                rows.append({"feature": name, "bin": "{" + ", ".join(members) + "}",
                             "coefficient": float(th[g])})
    return rows
