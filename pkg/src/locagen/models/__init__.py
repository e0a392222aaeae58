"""Learned azimuth correctors.

``rf``   random forest over azimuth bins (12 or 24), predicts bin centers.
``mlp``  regressor of ``(sin, cos)`` of the azimuth (or the raw angle).

Both wrap their learner together with the feature scaler fitted on the
same training rows in a :class:`TrainedModel`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset, FeatureScaler, bin_center, fit_scaler
from .forest import DegenerateModelWarning, DecisionTree, ForestParams, RandomForest, fit_forest
from .io import ModelFormatError, load_model, model_fingerprint, save_model
from .mlp import MlpParams, MlpRegressor, TrainingError
from .mlp import train as _train_mlp

__all__ = [
    "TrainedModel",
    "ForestParams",
    "MlpParams",
    "RandomForest",
    "DecisionTree",
    "MlpRegressor",
    "TrainingError",
    "ModelFormatError",
    "DegenerateModelWarning",
    "train_rf",
    "predict_rf",
    "train_mlp",
    "predict_mlp",
    "circular_error",
    "circular_mae",
    "sincos_to_azimuth",
    "save_model",
    "load_model",
    "model_fingerprint",
]


@dataclass
class TrainedModel:
    kind: str                       # "rf" or "mlp"
    scaler: FeatureScaler
    learner: object
    metadata: dict = field(default_factory=dict)

    def predict_azimuth(self, features) -> np.ndarray:
        if self.kind == "rf":
            return predict_rf(self, features)[1]
        return predict_mlp(self, features)

    def fingerprint(self) -> str:
        return model_fingerprint(self)


def _features(data):
    return data.features if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, dtype=float))


def train_rf(train: Dataset, params: ForestParams = ForestParams(), n_bins: int = 12,
             threads: int = 1) -> TrainedModel:
    """Forest over azimuth bins using standardized ``(tau21, tau31, ratio)``."""
    scaler = fit_scaler(train)
    X = scaler.transform(train.features)
    forest = fit_forest(X, train.labels(n_bins), n_bins, params, threads)
    meta = {"n_bins": n_bins, "n_trees": params.n_trees, "seed": params.seed,
            "n_train": len(train), "dataset": train.fingerprint()}
    return TrainedModel("rf", scaler, forest, meta)


def predict_rf(model: TrainedModel, features):
    """Majority-vote bin and its center angle in degrees."""
    X = model.scaler.transform(_features(features))
    b = model.learner.predict(X)
    return b, bin_center(b, model.learner.n_classes)


def sincos_to_azimuth(s, c):
    az = np.mod(np.degrees(np.arctan2(s, c)), 360.0)
    return np.where(az >= 360.0, 0.0, az)


def train_mlp(train: Dataset, params: MlpParams = MlpParams(), target: str = "sincos",
              callback=None) -> TrainedModel:
    """Regress the true azimuth from standardized features.

    ``target="sincos"`` fits ``(sin, cos)`` of the angle, which has no
    wrap-around discontinuity; ``target="angle"`` fits the raw angle mapped
    to ``[-1, 1)``.
    """
    if target not in ("sincos", "angle"):
        raise ValueError(f"unknown target {target!r}")
    scaler = fit_scaler(train)
    X = scaler.transform(train.features)
    rad = np.radians(train.azimuth_deg)
    Y = (np.column_stack([np.sin(rad), np.cos(rad)]) if target == "sincos"
         else (train.azimuth_deg / 180.0 - 1.0)[:, None])
    net = _train_mlp(X, Y, params, callback)
    meta = {"target": target, "epochs": params.epochs, "seed": params.seed,
            "hidden": list(params.hidden), "n_train": len(train),
            "dataset": train.fingerprint()}
    return TrainedModel("mlp", scaler, net, meta)


def predict_mlp(model: TrainedModel, features) -> np.ndarray:
    out = model.learner.forward(model.scaler.transform(_features(features)))
    if model.metadata.get("target", "sincos") == "angle":
        az = np.mod((out[:, 0] + 1.0) * 180.0, 360.0)
        return np.where(az >= 360.0, 0.0, az)
    return sincos_to_azimuth(out[:, 0], out[:, 1])


def circular_error(predicted, truth) -> np.ndarray:
    """Absolute angular difference on the circle, degrees in [0, 180]."""
    d = np.mod(np.abs(np.asarray(predicted, dtype=float) - np.asarray(truth, dtype=float)), 360.0)
    return np.minimum(d, 360.0 - d)


def circular_mae(predicted, truth) -> float:
    p = np.asarray(predicted, dtype=float).ravel()
    t = np.asarray(truth, dtype=float).ravel()
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} vs {t.size}")
    if p.size == 0:
        raise ValueError("need at least one angle")
    return float(circular_error(p, t).mean())
