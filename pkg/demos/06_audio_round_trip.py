"""Write a simulated 3-channel recording, then localize it from the file.

This is the offline path a real recording would take: WAVE file in,
GCC-PHAT delays, multilateration.  The 48 kHz capture is also
downsampled to 10 kHz to show what the lower rate costs.
"""

import tempfile
from pathlib import Path

from locagen import audio, dsp
from locagen.geometry import ArrayGeometry, Medium, SamplingSpec, SourcePosition
from locagen.locate import localize_pipeline
from locagen.simulate import SimConfig, WaveformParams, synthesize_channels

geo, med = ArrayGeometry.equilateral(0.1), Medium()
cfg = SimConfig(geo, med, SamplingSpec(48_000.0), mode="waveform",
                waveform=WaveformParams(noise_rel=0.05))
src = SourcePosition(-25.0, 60.0)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "capture.wav"
    chans = synthesize_channels(cfg, geo, src)
    audio.write_wav(path, [c.samples * 0.5 for c in chans], 48_000.0)
    rec = audio.read_wav(path)

print(f"true azimuth {src.azimuth(geo):7.2f} deg")
for fs in (48_000.0, 10_000.0):
    waves = [dsp.resample(w, fs) for w in rec.waveforms()]
    est = localize_pipeline(geo, med, waveforms=waves, interpolation="parabolic")
    print(f"{fs:>7.0f} Hz: azimuth {est.azimuth:7.2f} deg  residual {est.residual:.1e}"
          f"  range unreliable: {est.range_unreliable}")
