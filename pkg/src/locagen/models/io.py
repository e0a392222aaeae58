"""Model container.

Text file, UTF-8::

    LOCAGEN-MODEL
    format-version: 1
    {json body}

The JSON body holds ``kind``, ``metadata``, a ``scaler`` block (``mean``,
``std``) and a ``learner`` block.  Random forests store, per tree, the flat
arrays ``feature, threshold, left, right, value``; MLPs store ``weights``
and ``biases`` per layer.  Floats are written with ``repr`` precision, so
a round trip is bit-exact.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

MAGIC = "LOCAGEN-MODEL"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _dump_learner(model) -> dict:
    from .forest import RandomForest
    from .mlp import MlpRegressor

    L = model.learner
    if isinstance(L, RandomForest):
        p = L.params
        return {
            "n_classes": L.n_classes,
            "params": {"n_trees": p.n_trees, "max_depth": p.max_depth,
                       "min_samples_leaf": p.min_samples_leaf, "max_features": p.max_features,
                       "bootstrap": p.bootstrap, "seed": p.seed},
            "trees": [{"feature": t.feature.tolist(), "threshold": t.threshold.tolist(),
                       "left": t.left.tolist(), "right": t.right.tolist(),
                       "value": t.value.tolist()} for t in L.trees],
        }
    if isinstance(L, MlpRegressor):
        return {"weights": [w.tolist() for w in L.weights],
                "biases": [b.tolist() for b in L.biases],
                "loss_history": list(L.loss_history)}
    raise TypeError(f"cannot serialize learner {type(L).__name__}")


def _load_learner(kind: str, d: dict):
    from .forest import DecisionTree, ForestParams, RandomForest
    from .mlp import MlpRegressor

    if kind == "rf":
        p = ForestParams(**d["params"])
        n_classes = int(d["n_classes"])
        trees = [DecisionTree(np.array(t["feature"], dtype=np.int64),
                              np.array(t["threshold"], dtype=float),
                              np.array(t["left"], dtype=np.int64),
                              np.array(t["right"], dtype=np.int64),
                              np.array(t["value"], dtype=float).reshape(-1, n_classes),
                              p.max_depth, p.min_samples_leaf) for t in d["trees"]]
        return RandomForest(trees, n_classes, p)
    if kind == "mlp":
        return MlpRegressor([np.array(w, dtype=float) for w in d["weights"]],
                            [np.array(b, dtype=float) for b in d["biases"]],
                            list(d.get("loss_history", [])))
    raise ModelFormatError(f"unknown model kind {kind!r}")


def _body(model) -> dict:
    return {
        "kind": model.kind,
        "metadata": model.metadata,
        "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
        "learner": _dump_learner(model),
    }


def model_fingerprint(model) -> str:
    """Hash of every stored parameter (training history excluded)."""
    body = _body(model)
    body["learner"].pop("loss_history", None)
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_model(model, path) -> None:
    text = f"{MAGIC}\nformat-version: {FORMAT_VERSION}\n" + json.dumps(
        _body(model), sort_keys=True, separators=(",", ":")) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_model(path):
    from . import TrainedModel
    from ..dataset import FeatureScaler

    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n", 2)
    if len(lines) < 3 or lines[0] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (missing {MAGIC} header)")
    if not lines[1].startswith("format-version:"):
        raise ModelFormatError(f"{path}: missing format-version line")
    try:
        version = int(lines[1].split(":", 1)[1])
    except ValueError:
        raise ModelFormatError(f"{path}: unreadable format version {lines[1]!r}") from None
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: format version {version} unsupported "
                               f"(this build reads {FORMAT_VERSION})")
    try:
        body = json.loads(lines[2])
        scaler = FeatureScaler(np.array(body["scaler"]["mean"], dtype=float),
                               np.array(body["scaler"]["std"], dtype=float))
        learner = _load_learner(body["kind"], body["learner"])
        return TrainedModel(body["kind"], scaler, learner, body.get("metadata", {}))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError(f"{path}: corrupt or truncated model body ({e})") from None
