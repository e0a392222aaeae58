"""Waveform-level signal processing.

Test excitations, windowed-sinc fractional delay, GCC-PHAT delay
estimation and rational-ratio resampling.

Sign convention used throughout: a positive delay means the second signal
lags the first, ``xj(t) = xi(t - tau)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal as _signal

__all__ = [
    "Waveform",
    "CrossCorrelation",
    "DelayEstimate",
    "DspError",
    "NoPeakError",
    "next_pow2",
    "fft",
    "ifft",
    "cross_power_spectrum",
    "phat_weight",
    "gcc_phat_correlation",
    "gcc_phat",
    "fractional_delay",
    "synthesize_delayed",
    "resample",
    "make_excitation",
    "chirp",
    "noise_burst",
    "tone",
]


class DspError(ValueError):
    pass


class NoPeakError(DspError):
    """The correlation has no peak, e.g. because an input is silent."""


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise DspError("waveform must be a non-empty 1-D array")
        if not np.all(np.isfinite(x)):
            raise DspError("waveform samples must be finite")
        if not self.sample_rate > 0:
            raise DspError("sample rate must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples ** 2)))


@dataclass(frozen=True)
class CrossCorrelation:
    """Correlation values on the lag axis ``-max_lag .. +max_lag`` (samples)."""

    values: np.ndarray
    max_lag: int
    sample_rate: float

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.max_lag, self.max_lag + 1)


@dataclass(frozen=True)
class DelayEstimate:
    tau_hat: float
    peak_lag: int
    sub_sample_fraction: float
    peak_value: float


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _as_samples(x):
    return x.samples if isinstance(x, Waveform) else np.asarray(x, dtype=float)


def fft(x, n: int | None = None) -> np.ndarray:
    """One-sided spectrum of a real signal.

    By default the signal is zero-padded to the next power of two at least
    twice its length so that products of spectra give linear correlation.
    """
    x = _as_samples(x)
    if x.size == 0:
        raise DspError("cannot transform an empty signal")
    if n is None:
        n = next_pow2(2 * x.size)
    return np.fft.rfft(x, n)


def ifft(spectrum: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`fft` for an ``n``-point transform."""
    return np.fft.irfft(spectrum, n)


def cross_power_spectrum(Xi: np.ndarray, Xj: np.ndarray) -> np.ndarray:
    Xi, Xj = np.asarray(Xi), np.asarray(Xj)
    if Xi.shape != Xj.shape:
        raise DspError(f"spectrum length mismatch: {Xi.shape} vs {Xj.shape}")
    # spelled out so the rounding does not depend on numpy's complex kernels
    re = Xi.real * Xj.real + Xi.imag * Xj.imag
    im = Xi.imag * Xj.real - Xi.real * Xj.imag
    return re + 1j * im


def phat_weight(R: np.ndarray, epsilon: float = 0.0) -> np.ndarray:
    """Keep only the phase: each bin divided by ``max(|R|, epsilon)``.

    Bins that are exactly zero map to zero.
    """
    if epsilon < 0:
        raise DspError("epsilon must be non-negative")
    R = np.asarray(R)
    mag = np.abs(R)
    den = np.maximum(mag, epsilon)
    out = np.zeros_like(R, dtype=complex)
    nz = den > 0
    out[nz] = R[nz] / den[nz]
    return out


def gcc_phat_correlation(xi, xj, max_lag: int | None = None,
                         epsilon_rel: float = 1e-12) -> CrossCorrelation:
    """PHAT-weighted generalized cross-correlation over a symmetric lag window."""
    fs = _common_rate(xi, xj)
    a, b = _as_samples(xi), _as_samples(xj)
    n = max(a.size, b.size)
    if max_lag is None:
        max_lag = n - 1
    max_lag = int(max_lag)
    if not 0 <= max_lag < n:
        raise DspError(f"max_lag must be in [0, {n}), got {max_lag}")

    nfft = next_pow2(2 * n)
    R = cross_power_spectrum(fft(a, nfft), fft(b, nfft))
    peak = np.max(np.abs(R))
    if peak == 0:
        raise NoPeakError("cross-power spectrum is identically zero (silent input?)")
    r = ifft(phat_weight(R, epsilon_rel * peak), nfft)
    # r[k] = sum_n a[n + k] b[n]; b lagging a by L samples peaks at k = -L
    lags = np.arange(-max_lag, max_lag + 1)
    return CrossCorrelation(r[(-lags) % nfft], max_lag, fs)


def gcc_phat(xi, xj, max_lag: int | None = None, interpolation: str = "parabolic",
             epsilon_rel: float = 1e-12) -> DelayEstimate:
    """Estimate how far ``xj`` lags ``xi``.

    Parameters
    ----------
    xi, xj : Waveform
        Signals at the same sample rate.
    max_lag : int, optional
        Search window half-width in samples.  Defaults to the full range.
    interpolation : {"parabolic", "none"}
        ``"none"`` returns the integer-lag argmax; ``"parabolic"`` refines it
        with a three-point parabola through the peak and its neighbours.

    Returns
    -------
    DelayEstimate
        ``tau_hat = (peak_lag + sub_sample_fraction) / fs``.
    """
    if interpolation not in ("none", "parabolic"):
        raise DspError(f"unknown interpolation {interpolation!r}")
    cc = gcc_phat_correlation(xi, xj, max_lag, epsilon_rel)
    v = cc.values
    i = int(np.argmax(v))
    frac = 0.0
    if interpolation == "parabolic" and 0 < i < v.size - 1:
        ym, y0, yp = v[i - 1], v[i], v[i + 1]
        den = ym - 2.0 * y0 + yp
        if den < 0:
            lim = np.nextafter(0.5, 0.0)
            frac = float(np.clip(0.5 * (ym - yp) / den, -lim, lim))
    lag = i - cc.max_lag
    return DelayEstimate((lag + frac) / cc.sample_rate, lag, frac, float(v[i]))


def _common_rate(xi, xj) -> float:
    fi = xi.sample_rate if isinstance(xi, Waveform) else None
    fj = xj.sample_rate if isinstance(xj, Waveform) else None
    if fi is None or fj is None:
        raise DspError("gcc_phat needs Waveform inputs (sample rate required)")
    if fi != fj:
        raise DspError(f"sample rates differ: {fi} vs {fj}")
    return fi


def _sinc_kernel(frac: float, half_width: int, beta: float) -> np.ndarray:
    m = np.arange(-half_width, half_width + 1)
    t = m - frac
    arg = 1.0 - (t / (half_width + 1)) ** 2
    w = np.i0(beta * np.sqrt(np.clip(arg, 0.0, None))) / np.i0(beta)
    return np.sinc(t) * w


def fractional_delay(x: np.ndarray, delay_samples: float, half_width: int = 32,
                     beta: float = 8.0) -> np.ndarray:
    """Delay ``x`` by a possibly non-integer number of samples.

    Kaiser-windowed sinc interpolation; output has the input's length and
    is zero before the delayed signal starts.
    """
    x = np.asarray(x, dtype=float)
    d_int = int(np.floor(delay_samples))
    frac = float(delay_samples - d_int)
    h = _sinc_kernel(frac, half_width, beta)
    conv = np.convolve(x, h)
    # y[n] = sum_m h_m x[n - d_int - m] = conv[n - d_int + half_width]
    idx = np.arange(x.size) - d_int + half_width
    y = np.zeros(x.size)
    ok = (idx >= 0) & (idx < conv.size)
    y[ok] = conv[idx[ok]]
    return y


def synthesize_delayed(source_signal: Waveform, delay: float, noise_sigma: float = 0.0,
                       rng_seed=None) -> Waveform:
    """Delayed copy of ``source_signal`` plus white Gaussian noise.

    ``noise_sigma`` is an absolute standard deviation in signal units.
    """
    fs = source_signal.sample_rate
    n = len(source_signal)
    if delay < 0 or delay * fs >= n:
        raise DspError(f"delay {delay} s outside [0, {n / fs}) s")
    if noise_sigma < 0:
        raise DspError("noise_sigma must be non-negative")
    y = fractional_delay(source_signal.samples, delay * fs)
    if noise_sigma > 0:
        rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
        y = y + rng.normal(0.0, noise_sigma, n)
    return Waveform(y, fs)


def resample(x: Waveform, target_fs: float, max_denominator: int = 1000) -> Waveform:
    """Polyphase resampling by the rational ratio ``target_fs / fs``."""
    if not target_fs > 0:
        raise DspError("target sample rate must be positive")
    if target_fs == x.sample_rate:
        return x
    ratio = Fraction(target_fs / x.sample_rate).limit_denominator(max_denominator)
    y = _signal.resample_poly(x.samples, ratio.numerator, ratio.denominator)
    return Waveform(y, x.sample_rate * ratio.numerator / ratio.denominator)


def chirp(fs: float, duration: float = 0.1, f0: float = 500.0, f1: float = 3000.0,
          amplitude: float = 1.0) -> Waveform:
    t = np.arange(int(round(duration * fs))) / fs
    return Waveform(amplitude * _signal.chirp(t, f0, duration, f1, method="linear"), fs)


def tone(fs: float, frequency: float, duration: float = 0.1, amplitude: float = 1.0) -> Waveform:
    t = np.arange(int(round(duration * fs))) / fs
    return Waveform(amplitude * np.sin(2 * np.pi * frequency * t), fs)


def noise_burst(fs: float, duration: float = 0.1, amplitude: float = 1.0, rng_seed=0) -> Waveform:
    rng = np.random.default_rng(rng_seed)
    return Waveform(amplitude * rng.standard_normal(int(round(duration * fs))), fs)


def make_excitation(kind: str, fs: float, duration: float = 0.1, **kw) -> Waveform:
    """Build one of the supported test signals: chirp, noise-burst or tone."""
    if kind == "chirp":
        return chirp(fs, duration, **kw)
    if kind in ("noise", "noise-burst"):
        return noise_burst(fs, duration, **kw)
    if kind == "tone":
        kw.setdefault("frequency", 1000.0)
        return tone(fs, duration=duration, **kw)
    raise DspError(f"unknown excitation {kind!r}")
