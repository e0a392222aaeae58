"""How coarse is a small array at a given sample rate?

A delay can only be measured in whole samples, so a path difference is
known to within c/fs.  Across a 10 cm baseline that is a large slice of
the possible range, and the far-field angle inherits it.
"""

import numpy as np

from locagen.geometry import doa_from_tdoa, quantization_floor

c, d = 343.0, 0.1
for fs in (10_000, 24_000, 44_100, 48_000):
    floor = quantization_floor(c, fs)
    steps = int(np.floor(d / floor))
    # broadside is the best case: one sample of delay moves the angle this much
    one_step = doa_from_tdoa(1 / fs, d, c)
    print(f"fs={fs:>6} Hz  floor={floor * 1000:6.2f} mm  "
          f"delay cells across d: {2 * steps + 1:2d}  first step off broadside: {one_step:5.2f} deg")
