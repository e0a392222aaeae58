"""RIFF WAVE input and output for three-microphone recordings.

Accepted: 16-bit PCM and 32-bit float, either one 3-channel file or three
mono files (assumed already sample-synchronized).  Channel order follows
the microphone order of the geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .dsp import Waveform

__all__ = ["AudioInput", "AudioError", "read_wav", "read_mono_files", "write_wav"]


class AudioError(ValueError):
    pass


@dataclass(frozen=True)
class AudioInput:
    channels: tuple
    sample_rate: float
    bit_depth: int

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise AudioError("sample rate must be positive")
        lengths = {len(c) for c in self.channels}
        if len(lengths) > 1:
            raise AudioError(f"channel lengths differ: {sorted(lengths)}")

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def waveforms(self) -> list[Waveform]:
        return [Waveform(c, self.sample_rate) for c in self.channels]


def _to_float(data: np.ndarray) -> tuple[np.ndarray, int]:
    if data.dtype == np.int16:
        return data.astype(float) / 32768.0, 16
    if data.dtype == np.float32:
        return data.astype(float), 32
    raise AudioError(f"unsupported sample format {data.dtype} (need 16-bit PCM or 32-bit float)")


def _read(path):
    try:
        fs, data = wavfile.read(path)
    except (ValueError, OSError, EOFError) as e:
        raise AudioError(f"{path}: cannot read WAVE file ({e})") from None
    x, bits = _to_float(data)
    return float(fs), (x[:, None] if x.ndim == 1 else x), bits


def read_wav(path, expected_channels: int = 3) -> AudioInput:
    fs, x, bits = _read(path)
    if x.shape[1] != expected_channels:
        raise AudioError(f"{path}: expected {expected_channels} channels, found {x.shape[1]}")
    return AudioInput(tuple(np.ascontiguousarray(x[:, i]) for i in range(x.shape[1])), fs, bits)


def read_mono_files(paths) -> AudioInput:
    paths = list(paths)
    if len(paths) != 3:
        raise AudioError(f"need one file per microphone (3), got {len(paths)}")
    chans, rates, depths = [], set(), set()
    for p in paths:
        fs, x, bits = _read(p)
        if x.shape[1] != 1:
            raise AudioError(f"{p}: expected a mono file, found {x.shape[1]} channels")
        chans.append(x[:, 0])
        rates.add(fs)
        depths.add(bits)
    if len(rates) != 1:
        raise AudioError(f"sample rates differ across files: {sorted(rates)}")
    return AudioInput(tuple(chans), rates.pop(), max(depths))


def write_wav(path, channels, sample_rate: float, fmt: str = "pcm16") -> None:
    """Write channels (equal length, nominal range [-1, 1]) as one WAVE file."""
    x = np.column_stack([np.asarray(c, dtype=float) for c in channels])
    if fmt == "pcm16":
        data = np.clip(np.round(x * 32767.0), -32768, 32767).astype(np.int16)
    elif fmt == "float32":
        data = x.astype(np.float32)
    else:
        raise AudioError(f"unknown format {fmt!r}")
    wavfile.write(path, int(round(sample_rate)), data)
