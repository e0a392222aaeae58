"""Model-versus-baseline azimuth error reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .geometry import ArrayGeometry, Medium
from .locate import DEFAULT_RADIUS_BOUND, multilaterate_batch
from .models import TrainedModel, circular_error, predict_rf
from .stats import DistributionTable, cdf, histogram

__all__ = ["EvalReport", "baseline_azimuths", "evaluate"]


def baseline_azimuths(data: Dataset, geometry: ArrayGeometry, medium: Medium,
                      radius_bound: float = DEFAULT_RADIUS_BOUND) -> np.ndarray:
    """Azimuth of the geometric best fit to each row's quantized TDOAs."""
    if len(data) == 0:
        return np.zeros(0)
    out = multilaterate_batch(geometry, medium, np.column_stack([data.tau21, data.tau31]),
                              radius_bound)
    return out["azimuth"]


@dataclass
class EvalReport:
    kind: str
    n: int
    truth: np.ndarray
    model_azimuth: np.ndarray
    baseline_azimuth: np.ndarray
    model_mae: float
    baseline_mae: float
    per_bin_accuracy: dict | None
    model_hist: DistributionTable
    baseline_hist: DistributionTable
    model_cdf: DistributionTable
    baseline_cdf: DistributionTable
    hist_width: float

    @property
    def improvement(self) -> float:
        """Fractional MAE reduction relative to the baseline."""
        return 1.0 - self.model_mae / self.baseline_mae if self.baseline_mae > 0 else 0.0

    def summary_text(self) -> str:
        rows = [
            ("model_kind", self.kind),
            ("n", str(self.n)),
            ("model_mae_deg", repr(self.model_mae)),
            ("baseline_mae_deg", repr(self.baseline_mae)),
            ("improvement_fraction", repr(self.improvement)),
        ]
        if self.per_bin_accuracy is not None:
            for b, acc in sorted(self.per_bin_accuracy.items()):
                rows.append((f"bin_accuracy[{b}]", "nan" if acc is None else repr(acc)))
        return "".join(f"{k}={v}\n" for k, v in rows)

    def histogram_csv(self) -> str:
        """Side-by-side counts on a shared bin grid."""
        lines = ["bin_lo_deg,bin_hi_deg,model_count,baseline_count"]
        e = self.model_hist.edges
        for i in range(e.size - 1):
            lines.append(f"{float(e[i])!r},{float(e[i + 1])!r},{int(self.model_hist.counts[i])},"
                         f"{int(self.baseline_hist.counts[i])}")
        return "\n".join(lines) + "\n"

    def cdf_csv(self) -> str:
        """Both empirical CDFs evaluated on the union of observed errors."""
        grid = np.union1d(self.model_cdf.values, self.baseline_cdf.values)
        lines = ["error_deg,model_cdf,baseline_cdf"]
        for g in grid:
            lines.append(f"{float(g)!r},{_step(self.model_cdf, g)!r},{_step(self.baseline_cdf, g)!r}")
        return "\n".join(lines) + "\n"


def _step(table: DistributionTable, x: float) -> float:
    i = int(np.searchsorted(table.values, x, side="right"))
    return 0.0 if i == 0 else float(table.fractions[i - 1])


def _hist_pair(a, b, width):
    top = max(float(np.max(a)), float(np.max(b)))
    ha = histogram(np.append(a, top), width, start=0.0)
    hb = histogram(np.append(b, top), width, start=0.0)
    # the appended sentinel only fixes a common bin range
    ca, cb = ha.counts.copy(), hb.counts.copy()
    ca[int(np.floor(top / width))] -= 1
    cb[int(np.floor(top / width))] -= 1
    return (DistributionTable("histogram", edges=ha.edges, counts=ca),
            DistributionTable("histogram", edges=hb.edges, counts=cb))


def evaluate(model: TrainedModel, data: Dataset, geometry: ArrayGeometry, medium: Medium,
             radius_bound: float = DEFAULT_RADIUS_BOUND, hist_width: float = 5.0) -> EvalReport:
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    truth = data.azimuth_deg
    pred = model.predict_azimuth(data.features)
    base = baseline_azimuths(data, geometry, medium, radius_bound)
    em, eb = circular_error(pred, truth), circular_error(base, truth)

    per_bin = None
    if model.kind == "rf":
        n_bins = model.learner.n_classes
        bins, _ = predict_rf(model, data.features)
        labels = data.labels(n_bins)
        per_bin = {}
        for b in range(n_bins):
            m = labels == b
            per_bin[b] = float(np.mean(bins[m] == b)) if m.any() else None

    hm, hb = _hist_pair(em, eb, hist_width)
    return EvalReport(model.kind, len(data), truth, pred, base, float(em.mean()),
                      float(eb.mean()), per_bin, hm, hb, cdf(em), cdf(eb), hist_width)
