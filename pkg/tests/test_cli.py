import numpy as np
import pytest

from locagen import audio, dsp
from locagen.cli import build_parser, main
from locagen.config import KEYS
from locagen.models import circular_error


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_smoke_and_bytes(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    code, out, _ = run(capsys, "simulate", "--n", 10, "--out", a)
    assert code == 0 and "n=10" in out
    run(capsys, "simulate", "--n", 10, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 11


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--out", tmp_path / "x.csv",
                       "--set", "geometry.spacing=-2")
    assert code != 0 and "geometry.spacing" in err
    assert not (tmp_path / "x.csv").exists()


def test_train_eval_locate(tmp_path, capsys):
    d, m = tmp_path / "d.csv", tmp_path / "m.model"
    run(capsys, "simulate", "--n", 300, "--out", d)
    assert run(capsys, "train", "--data", d, "--kind", "rf", "--n-trees", 5, "--out", m)[0] == 0
    code, out, _ = run(capsys, "eval", "--model", m, "--data", d, "--out-prefix", tmp_path / "r")
    assert code == 0 and "model_mae_deg=" in out and "baseline_mae_deg=" in out
    assert "bin_accuracy[0]" in out
    hist = (tmp_path / "r_histogram.csv").read_text().splitlines()
    assert hist[0] == "bin_lo_deg,bin_hi_deg,model_count,baseline_count"
    again = run(capsys, "eval", "--model", m, "--data", d)[1]
    assert again == out
    code, out, _ = run(capsys, "locate", "--data", d, "--row", 2, "--model", m)
    assert code == 0 and "corrected=true" in out


def test_synth_then_locate(tmp_path, capsys):
    w = tmp_path / "s.wav"
    x, y = 30.0, 40.0
    run(capsys, "synth", "--x", x, "--y", y, "--fs", 48000, "--out", w)
    code, out, _ = run(capsys, "locate", "--audio", w, "--set", "sampling.sample_rate=48000")
    assert code == 0
    az = float(dict(l.split("=") for l in out.split())["azimuth_deg"])
    truth = np.degrees(np.arctan2(y, x))
    # one sample of path-difference error across a 0.1 m baseline
    bound = np.degrees(np.arcsin(343.0 / 48000 / 0.1))
    assert circular_error(az, truth) <= bound
    code, out2, _ = run(capsys, "locate", "--audio", w, "--resample", 10000)
    assert code == 0 and "azimuth_deg=" in out2


def test_locate_rejects_two_channels_and_silence(tmp_path, capsys):
    two, quiet = tmp_path / "two.wav", tmp_path / "quiet.wav"
    audio.write_wav(two, [np.ones(100), np.ones(100)], 8000)
    code, _, err = run(capsys, "locate", "--audio", two)
    assert code != 0 and "channels" in err
    audio.write_wav(quiet, [np.zeros(400)] * 3, 8000)
    code, _, err = run(capsys, "locate", "--audio", quiet)
    assert code != 0 and "silent" in err


def test_mono_files(tmp_path, capsys):
    chans = [dsp.chirp(10000.0, 0.05).samples] * 3
    paths = []
    for i, c in enumerate(chans):
        p = tmp_path / f"m{i}.wav"
        audio.write_wav(p, [c * 0.5], 10000)
        paths.append(p)
    code, out, _ = run(capsys, "locate", "--mono", *paths)
    assert code == 0 and "azimuth_deg=" in out


def test_offsets_smoke(tmp_path, capsys):
    t, r = tmp_path / "t.csv", tmp_path / "r.txt"
    code, out, _ = run(capsys, "offsets", "--n", 100, "--out", t, "--report", r)
    assert code == 0
    for f in ("offset2.p_value", "offset3.p_value", "offset2.f_statistic", "offset3.df_within"):
        assert f in out
    assert len(t.read_text().splitlines()) == 101
    assert r.read_text() == out


def test_help_documents_every_key(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    for name, sp in sub.items():
        text = sp.format_help()
        for s, k, *_ in KEYS:
            assert f"{s}.{k}" in text, (name, s, k)
