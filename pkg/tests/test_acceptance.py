"""Acceptance suite: one line per criterion, PASS or FAIL at the stated tolerance.

Full-scale datasets and models come from session fixtures in conftest.py.
"""

import math
import time

import numpy as np
import pytest

from locagen import dsp
from locagen.cli import main
from locagen.dsp import Waveform
from locagen.geometry import ArrayGeometry, Medium, SourcePosition, quantization_floor, true_toa
from locagen.locate import MultilaterationProblem, multilaterate_batch, objective_gradient
from locagen.models import MlpRegressor, circular_error, circular_mae
from locagen.simulate import SimConfig, run_batch, run_offset_experiment
from locagen.stats import offset_anova
from oracles import objective_gradient_fd

pytestmark = pytest.mark.slow

GEO = ArrayGeometry.equilateral(0.1)
MED = Medium()


def bayes_floor(data):
    """Lowest circular MAE any function of the features can reach on ``data``."""
    keys = np.round(data.features[:, :2] * 1e12).astype(np.int64)
    _, group = np.unique(keys, axis=0, return_inverse=True)
    grid = np.arange(0.0, 360.0, 0.1)
    total = 0.0
    for g in np.unique(group):
        az = data.azimuth_deg[group == g]
        total += circular_error(grid[:, None], az[None]).sum(1).min()
    return total / len(data)


def test_01_quantization_floor(report):
    mm = quantization_floor(343.0, 48_000.0) * 1000
    ok = 7.14 <= mm <= 7.15
    report(1, ok, f"quantization_floor(343, 48000) = {mm:.4f} mm, need [7.14, 7.15]")
    assert ok


def test_02_low_rate_azimuth_clustering(report):
    t0 = time.perf_counter()
    obs = run_batch(SimConfig(GEO), 10_000)
    tau = [(o.estimated.tau21, o.estimated.tau31) for o in obs]
    az = multilaterate_batch(GEO, MED, tau)["azimuth"]
    frac = float(np.mean(circular_error(30.0 * np.round(az / 30.0), az) <= 5.0))
    ok = frac >= 0.95
    report(2, ok, f"baseline azimuths within 5 deg of a multiple of 30: {frac:.1%}, need >= 95% "
                  f"({time.perf_counter() - t0:.0f} s)")
    assert ok


def test_03_rf_accuracy(report, full10, rf10):
    mae = circular_mae(rf10.predict_azimuth(full10.validation.features),
                       full10.validation.azimuth_deg)
    ok = mae <= 16.0
    report(3, ok, f"RF validation MAE (12 bins, 10 kHz) = {mae:.2f} deg, need <= 16")
    assert ok


def test_04_mlp_accuracy_10k(report, full10, mlp10):
    mae = circular_mae(mlp10.predict_azimuth(full10.validation.features),
                       full10.validation.azimuth_deg)
    ok = mae <= 16.0
    report(4, ok, f"MLP validation MAE (10 kHz) = {mae:.2f} deg, need <= 16")
    assert ok


def test_05_mlp_accuracy_48k(report, full48, mlp48):
    mae = circular_mae(mlp48.predict_azimuth(full48.validation.features),
                       full48.validation.azimuth_deg)
    ok = mae <= 6.0
    report(5, ok, f"MLP validation MAE (48 kHz) = {mae:.2f} deg, need <= 6")
    assert ok


def test_06_improvement_over_baseline(report, full10, mlp10, rf10, baseline10):
    val = full10.validation
    base = circular_mae(baseline10, val.azimuth_deg)
    mlp = circular_mae(mlp10.predict_azimuth(val.features), val.azimuth_deg)
    rf = circular_mae(rf10.predict_azimuth(val.features), val.azimuth_deg)
    floor = bayes_floor(val)
    ok = mlp <= 0.5 * base
    report(6, ok, f"MLP MAE {mlp:.2f} vs 0.5 x baseline {0.5 * base:.2f} deg "
                  f"(baseline {base:.2f}, RF {rf:.2f}, best achievable on these features "
                  f"{floor:.2f})")
    assert ok


def test_07_offset_anova(report):
    t0 = time.perf_counter()
    table = run_offset_experiment(SimConfig(GEO), 10_000)
    a2, a3 = offset_anova(table)
    ok = a2.p_value > 0.05 and a3.p_value > 0.05
    report(7, ok, f"offset ANOVA p = {a2.p_value:.3f} (mic 2), {a3.p_value:.3f} (mic 3), "
                  f"need both > 0.05 ({time.perf_counter() - t0:.0f} s)")
    assert ok


def _ncc_argmax(a, b, max_lag):
    best, arg = -np.inf, None
    for L in range(-max_lag, max_lag + 1):
        u, v = (a[:a.size - L], b[L:]) if L >= 0 else (a[-L:], b[:b.size + L])
        den = math.sqrt(np.dot(u, u) * np.dot(v, v))
        val = np.dot(u, v) / den if den > 0 else 0.0
        if val > best:
            best, arg = val, L
    return arg


def test_08_gcc_phat_oracle(report):
    rng = np.random.default_rng(2024)
    hits = {True: [0, 0], False: [0, 0]}
    for i in range(200):
        n = int(rng.integers(64, 2049))
        k = int(rng.integers(-32, 33))
        clean = i % 2 == 0
        x = rng.standard_normal(n)
        y = np.zeros(n)
        if k >= 0:
            y[k:] = x[:n - k]
        else:
            y[:n + k] = x[-k:]
        if not clean:
            y = y + 0.3 * rng.standard_normal(n)
        lag = dsp.gcc_phat(Waveform(x, 1.0), Waveform(y, 1.0), 40, "none").peak_lag
        hits[clean][0] += lag == _ncc_argmax(x, y, 40)
        hits[clean][1] += 1
    total = (hits[True][0] + hits[False][0]) / 200
    clean_rate = hits[True][0] / hits[True][1]
    ok = total >= 0.99 and clean_rate == 1.0
    report(8, ok, f"GCC-PHAT = brute-force NCC argmax in {total:.1%} of 200 pairs "
                  f"(noise-free {clean_rate:.0%}), need >= 99% and 100%")
    assert ok


def test_09_multilateration(report):
    rng = np.random.default_rng(9)
    c = GEO.centroid
    r = np.sqrt(rng.uniform(1.0, 100.0 ** 2, 1000))
    th = rng.uniform(0, 2 * np.pi, 1000)
    src = [SourcePosition(c[0] + ri * math.cos(t), c[1] + ri * math.sin(t)) for ri, t in zip(r, th)]
    truth = np.array([s.azimuth(GEO) for s in src])
    tau = []
    for s in src:
        t = true_toa(GEO, MED, s)
        tau.append((t[1] - t[0], t[2] - t[0]))
    err = circular_error(multilaterate_batch(GEO, MED, tau)["azimuth"], truth)
    within = float(np.mean(err <= 0.5))

    worst = 0.0
    for i in range(100):
        p = MultilaterationProblem(GEO, MED, *tau[i])
        x, y = rng.uniform(-80, 80, 2)
        g = objective_gradient(p, x, y)
        fd = objective_gradient_fd(p, x, y)
        worst = max(worst, float(np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-15)))
    ok = within == 1.0 and worst <= 1e-6
    report(9, ok, f"exact-TDOA azimuth within 0.5 deg: {within:.1%} (max error {err.max():.2e} deg); "
                  f"gradient vs finite differences max rel {worst:.1e}, need 100% and <= 1e-6")
    assert ok


def test_10_mlp_gradient(report):
    rng = np.random.default_rng(10)
    X, Y = rng.standard_normal((5, 3)), rng.standard_normal((5, 2))
    net = MlpRegressor.init([3, 64, 64, 2], rng)
    _, gW, gb = net.gradients(X, Y)
    worst, h = 0.0, 1e-6
    for params, grads in ((net.weights, gW), (net.biases, gb)):
        for P, G in zip(params, grads):
            for idx in np.ndindex(P.shape):
                old = P[idx]
                P[idx] = old + h
                up = net.loss(X, Y)
                P[idx] = old - h
                dn = net.loss(X, Y)
                P[idx] = old
                fd = (up - dn) / (2 * h)
                worst = max(worst, abs(fd - G[idx]) / max(abs(fd), abs(G[idx]), 1e-7))
    ok = worst <= 1e-4
    report(10, ok, f"MLP analytic vs central-difference gradient, max rel {worst:.1e}, need <= 1e-4")
    assert ok


def test_11_determinism(report, tmp_path, capsys):
    def run_all(d):
        d.mkdir()
        outs = []
        cmds = [
            ["simulate", "--n", "400", "--out", d / "data.csv"],
            ["train", "--data", d / "data.csv", "--kind", "rf", "--n-trees", "10", "--out", d / "rf.model"],
            ["train", "--data", d / "data.csv", "--kind", "mlp", "--epochs", "5", "--out", d / "mlp.model"],
            ["eval", "--model", d / "rf.model", "--data", d / "data.csv", "--out-prefix", d / "rf"],
            ["eval", "--model", d / "mlp.model", "--data", d / "data.csv", "--out-prefix", d / "mlp"],
            ["synth", "--x", "12", "--y", "-30", "--out", d / "s.wav"],
            ["locate", "--audio", d / "s.wav", "--model", d / "mlp.model"],
            ["locate", "--data", d / "data.csv", "--row", "7"],
            ["offsets", "--n", "200", "--out", d / "offsets.csv"],
        ]
        for c in cmds:
            code = main([str(a) for a in c] + ["--threads", "2"])
            outs.append((code, capsys.readouterr().out))
        files = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
        return outs, files

    a_out, a_files = run_all(tmp_path / "a")
    b_out, b_files = run_all(tmp_path / "b")
    same_stdout = a_out == b_out and all(code == 0 for code, _ in a_out)
    same_files = a_files == b_files
    ok = same_stdout and same_files
    report(11, ok, f"all {len(a_out)} subcommand runs byte-identical on rerun "
                   f"(stdout {same_stdout}, {len(a_files)} output files {same_files})")
    assert ok
