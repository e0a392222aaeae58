"""Recover a known sub-sample delay with GCC-PHAT.

A chirp is delayed by a fractional number of samples.  The integer peak
is off by up to half a sample; the parabolic fit through the peak and
its neighbours gets most of the fraction back.
"""

import numpy as np

from locagen import dsp

fs = 10_000.0
chirp = dsp.chirp(fs, 0.1)
ref = dsp.Waveform(np.concatenate([chirp.samples, np.zeros(256)]), fs)

for true_delay in (0.0, 1.25, 3.4, 7.5, -2.6):
    lo = max(0.0, -true_delay)
    a = dsp.synthesize_delayed(ref, lo / fs, 0.02, rng_seed=1)
    b = dsp.synthesize_delayed(ref, (lo + true_delay) / fs, 0.02, rng_seed=2)
    coarse = dsp.gcc_phat(a, b, 20, "none")
    fine = dsp.gcc_phat(a, b, 20, "parabolic")
    print(f"true {true_delay:5.2f} samples  integer peak {coarse.peak_lag:3d}  "
          f"parabolic {fine.tau_hat * fs:6.3f}")
