"""Train the two learned correctors and compare them with the baseline.

Defaults are scaled down so the script runs in well under a minute; pass
``--n 24000 --epochs 300`` for the full-size experiment.
"""

import argparse

from locagen.dataset import from_observations, split
from locagen.evaluate import evaluate
from locagen.geometry import ArrayGeometry, Medium, SamplingSpec
from locagen.models import ForestParams, MlpParams, train_mlp, train_rf
from locagen.simulate import SimConfig, run_batch

ap = argparse.ArgumentParser()
ap.add_argument("--n", type=int, default=6000)
ap.add_argument("--epochs", type=int, default=60)
ap.add_argument("--fs", type=float, default=10_000.0)
args = ap.parse_args()

geo, med = ArrayGeometry.equilateral(0.1), Medium()
data = from_observations(run_batch(SimConfig(geo, med, SamplingSpec(args.fs)), args.n), geo)
parts = split(data, 0.8, 0)

models = {
    "rf (12 bins)": train_rf(parts.train, ForestParams(n_trees=50)),
    "rf (24 bins)": train_rf(parts.train, ForestParams(n_trees=50), n_bins=24),
    "mlp": train_mlp(parts.train, MlpParams(epochs=args.epochs)),
}
for name, model in models.items():
    rep = evaluate(model, parts.validation, geo, med)
    print(f"{name:13s} MAE {rep.model_mae:6.2f} deg   baseline {rep.baseline_mae:6.2f} deg   "
          f"reduction {rep.improvement:6.1%}")
