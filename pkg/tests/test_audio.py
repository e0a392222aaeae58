import numpy as np
import pytest

from locagen import audio


def test_round_trip_formats(tmp_path):
    rng = np.random.default_rng(0)
    ch = [0.5 * rng.standard_normal(500).clip(-1, 1) for _ in range(3)]
    p = tmp_path / "f.wav"
    audio.write_wav(p, ch, 10000, "float32")
    rec = audio.read_wav(p)
    assert rec.sample_rate == 10000 and rec.bit_depth == 32
    assert np.allclose(rec.channels[1], ch[1], atol=1e-7)
    audio.write_wav(p, ch, 10000, "pcm16")
    rec = audio.read_wav(p)
    assert rec.bit_depth == 16
    assert np.allclose(rec.channels[2], ch[2], atol=1 / 16000)


def test_channel_count_and_mono(tmp_path):
    p = tmp_path / "two.wav"
    audio.write_wav(p, [np.zeros(10), np.zeros(10)], 8000)
    with pytest.raises(audio.AudioError, match="3 channels"):
        audio.read_wav(p)
    paths = []
    for i in range(3):
        q = tmp_path / f"m{i}.wav"
        audio.write_wav(q, [np.full(20, 0.1 * i)], 8000)
        paths.append(q)
    rec = audio.read_mono_files(paths)
    assert rec.n_channels == 3 and np.allclose(rec.channels[2], 0.2, atol=1e-4)


def test_unreadable(tmp_path):
    p = tmp_path / "x.wav"
    p.write_bytes(b"not a wave file")
    with pytest.raises(audio.AudioError):
        audio.read_wav(p)


def test_unequal_lengths_rejected():
    with pytest.raises(audio.AudioError):
        audio.AudioInput((np.zeros(3), np.zeros(4), np.zeros(3)), 100.0, 16)
