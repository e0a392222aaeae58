"""Labeled samples for the learned correctors, plus the CSV interchange file.

File layout (one header line, then one row per sample)::

    index,tau21_s,tau31_s,ratio,azimuth_deg,bin12,bin24,x_m,y_m

Floats are written with 17 significant digits so a save/load round trip
is bit-exact.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, azimuth_deg
from .simulate import Observation, tdoa_ratio

__all__ = [
    "HEADER",
    "LabeledSample",
    "Dataset",
    "FeatureScaler",
    "SplitDataset",
    "DatasetFormatError",
    "bin_index",
    "bin_center",
    "feature_matrix",
    "to_labeled",
    "from_observations",
    "fit_scaler",
    "split",
    "save",
    "load",
]

HEADER = ("index", "tau21_s", "tau31_s", "ratio", "azimuth_deg", "bin12", "bin24", "x_m", "y_m")


class DatasetFormatError(ValueError):
    pass


def bin_index(azimuth, n_bins: int = 12):
    """Nearest bin center (multiples of ``360/n_bins``), wrapping at 360."""
    width = 360.0 / n_bins
    out = np.mod(np.round(np.asarray(azimuth, dtype=float) / width), n_bins).astype(int)
    return int(out) if out.ndim == 0 else out


def bin_center(index, n_bins: int = 12):
    return np.asarray(index) * (360.0 / n_bins)


def feature_matrix(tau21, tau31) -> np.ndarray:
    """Columns ``tau21, tau31, ratio``."""
    t21 = np.asarray(tau21, dtype=float).ravel()
    t31 = np.asarray(tau31, dtype=float).ravel()
    return np.column_stack([t21, t31, tdoa_ratio(t21, t31)])


@dataclass(frozen=True)
class LabeledSample:
    tau21: float
    tau31: float
    ratio: float
    azimuth_deg: float
    bin12: int
    bin24: int
    source_x: float
    source_y: float
    sample_index: int

    @property
    def features(self) -> tuple[float, float, float]:
        return (self.tau21, self.tau31, self.ratio)


def to_labeled(obs: Observation, geometry: ArrayGeometry) -> LabeledSample:
    """Features from the estimated TDOAs, label from the true source azimuth."""
    az = obs.source.azimuth(geometry)
    t21, t31 = obs.estimated.tau21, obs.estimated.tau31
    return LabeledSample(t21, t31, tdoa_ratio(t21, t31), az, bin_index(az, 12),
                         bin_index(az, 24), obs.source.x, obs.source.y, obs.sample_index)


class Dataset:
    """Column store of labeled samples.

    Row access returns :class:`LabeledSample`; ``subset`` returns a new
    dataset.  Columns are read-only arrays.
    """

    _int_cols = ("index", "bin12", "bin24")

    def __init__(self, index, tau21, tau31, azimuth_deg, x, y, ratio=None):
        cols = {
            "index": np.asarray(index, dtype=np.int64).ravel(),
            "tau21": np.asarray(tau21, dtype=float).ravel(),
            "tau31": np.asarray(tau31, dtype=float).ravel(),
            "azimuth_deg": np.asarray(azimuth_deg, dtype=float).ravel(),
            "x": np.asarray(x, dtype=float).ravel(),
            "y": np.asarray(y, dtype=float).ravel(),
        }
        n = cols["index"].size
        if any(c.size != n for c in cols.values()):
            raise ValueError("column lengths differ")
        cols["ratio"] = (tdoa_ratio(cols["tau21"], cols["tau31"]) if ratio is None
                         else np.asarray(ratio, dtype=float).ravel())
        cols["ratio"] = np.atleast_1d(cols["ratio"]).astype(float)
        cols["bin12"] = np.atleast_1d(bin_index(cols["azimuth_deg"], 12)).astype(np.int64)
        cols["bin24"] = np.atleast_1d(bin_index(cols["azimuth_deg"], 24)).astype(np.int64)
        for k, v in cols.items():
            v = v.copy()
            v.setflags(write=False)
            setattr(self, k, v)

    def __len__(self):
        return int(self.index.size)

    def __getitem__(self, i) -> LabeledSample:
        return LabeledSample(float(self.tau21[i]), float(self.tau31[i]), float(self.ratio[i]),
                             float(self.azimuth_deg[i]), int(self.bin12[i]), int(self.bin24[i]),
                             float(self.x[i]), float(self.y[i]), int(self.index[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("index", "tau21", "tau31", "ratio", "azimuth_deg", "x", "y"))

    @property
    def features(self) -> np.ndarray:
        return np.column_stack([self.tau21, self.tau31, self.ratio])

    def labels(self, n_bins: int = 12) -> np.ndarray:
        if n_bins == 12:
            return self.bin12
        if n_bins == 24:
            return self.bin24
        return np.atleast_1d(bin_index(self.azimuth_deg, n_bins))

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.index[rows], self.tau21[rows], self.tau31[rows],
                       self.azimuth_deg[rows], self.x[rows], self.y[rows], self.ratio[rows])

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for k in ("index", "tau21", "tau31", "ratio", "azimuth_deg", "x", "y"):
            h.update(np.ascontiguousarray(getattr(self, k)).tobytes())
        return h.hexdigest()[:16]

    @classmethod
    def empty(cls) -> "Dataset":
        z = np.zeros(0)
        return cls(z, z, z, z, z, z)


def from_observations(observations, geometry: ArrayGeometry) -> Dataset:
    obs = list(observations)
    src = np.array([[o.source.x, o.source.y] for o in obs]).reshape(-1, 2)
    ref = geometry.reference
    return Dataset(
        [o.sample_index for o in obs],
        [o.estimated.tau21 for o in obs],
        [o.estimated.tau31 for o in obs],
        azimuth_deg(src[:, 0], src[:, 1], ref),
        src[:, 0], src[:, 1],
    )


@dataclass(frozen=True)
class FeatureScaler:
    """Per-column standardization with population statistics.

    Columns whose fitted std is zero are flagged constant and map to 0.
    """

    mean: np.ndarray
    std: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.std == 0

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        den = np.where(self.constant, 1.0, self.std)
        return np.where(self.constant, 0.0, (X - self.mean) / den)

    def inverse_transform(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.asarray(Z) * self.std + self.mean


def fit_scaler(X) -> FeatureScaler:
    X = np.asarray(X.features if isinstance(X, Dataset) else X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two training rows to fit a scaler")
    return FeatureScaler(X.mean(axis=0), X.std(axis=0))


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    validation: Dataset
    split_seed: int
    fraction: float = 0.8


def split(data: Dataset, fraction: float = 0.8, seed: int = 0) -> SplitDataset:
    """Seeded shuffle, then the first ``round(fraction * N)`` rows train."""
    if not 0 < fraction < 1:
        raise ValueError("fraction must be in (0, 1)")
    n = len(data)
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(fraction * n))
    return SplitDataset(data.subset(np.sort(perm[:k])), data.subset(np.sort(perm[k:])),
                        seed, fraction)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save(data: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for i in range(len(data)):
            w.writerow([int(data.index[i]), _fmt(data.tau21[i]), _fmt(data.tau31[i]),
                        _fmt(data.ratio[i]), _fmt(data.azimuth_deg[i]), int(data.bin12[i]),
                        int(data.bin24[i]), _fmt(data.x[i]), _fmt(data.y[i])])


def load(path) -> Dataset:
    """Read a dataset file; malformed content raises with the line number."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: line 1: empty file, expected header") from None
        if tuple(h.strip() for h in header) != HEADER:
            raise DatasetFormatError(f"{path}: line 1: unexpected header {header!r}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(HEADER):
                raise DatasetFormatError(
                    f"{path}: line {line}: expected {len(HEADER)} columns, got {len(row)}")
            try:
                rows.append((int(row[0]), *(float(v) for v in row[1:5]), int(row[5]),
                             int(row[6]), float(row[7]), float(row[8])))
            except ValueError as e:
                raise DatasetFormatError(f"{path}: line {line}: {e}") from None
    if not rows:
        return Dataset.empty()
    cols = list(zip(*rows))
    data = Dataset(cols[0], cols[1], cols[2], cols[4], cols[7], cols[8], ratio=cols[3])
    if not (np.array_equal(data.bin12, cols[5]) and np.array_equal(data.bin24, cols[6])):
        bad = int(np.flatnonzero((data.bin12 != np.asarray(cols[5]))
                                 | (data.bin24 != np.asarray(cols[6])))[0])
        raise DatasetFormatError(f"{path}: line {bad + 2}: bin label disagrees with azimuth")
    return data
