"""Digital twin of the array: quantized, noisy TDOA observations with ground truth.

Two modes:

``event``
    Arrival times are computed analytically and snapped to the next
    sampling instant of each microphone's clock (a microphone only
    "sees" the wavefront at its first sample after arrival).
``waveform``
    A test signal is fractionally delayed per microphone, noise is added,
    and GCC-PHAT recovers the delays.

Every observation draws its randomness from ``(master_seed, index)`` only,
so batches are reproducible regardless of evaluation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import dsp
from .geometry import (
    ArrayGeometry,
    Medium,
    SamplingSpec,
    SourcePosition,
    apply_placement_jitter,
    true_toa,
)

__all__ = [
    "RATIO_EPSILON",
    "RATIO_CAP",
    "TdoaPair",
    "WaveformParams",
    "SimConfig",
    "Observation",
    "tdoa_ratio",
    "quantize_toa",
    "sample_source_uniform_disk",
    "simulate_observation",
    "run_batch",
    "run_offset_experiment",
    "synthesize_channels",
    "DEFAULT_OFFSET_LEVELS",
]

RATIO_EPSILON = 1e-9
RATIO_CAP = 1e6
DEFAULT_OFFSET_LEVELS = (0.0, 0.25, 0.5, 0.75)

# spawn-key slots so each random quantity has its own stream
_POS, _JITTER, _NOISE, _OFFSET, _WAVE = range(5)


def tdoa_ratio(tau21, tau31):
    """``tau21 / tau31`` with a finite stand-in when ``|tau31| < 1e-9 s``.

    Near-zero denominators are replaced by ``RATIO_EPSILON`` (so the
    result is ``tau21 * 1e9``); everything is clipped to ``+-RATIO_CAP``.
    Vectorized.
    """
    t21 = np.asarray(tau21, dtype=float)
    t31 = np.asarray(tau31, dtype=float)
    small = np.abs(t31) < RATIO_EPSILON
    den = np.where(small, RATIO_EPSILON, t31)
    out = np.clip(t21 / den, -RATIO_CAP, RATIO_CAP)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TdoaPair:
    tau21: float
    tau31: float

    @property
    def ratio(self) -> float:
        return tdoa_ratio(self.tau21, self.tau31)

    def as_array(self) -> np.ndarray:
        return np.array([self.tau21, self.tau31])


@dataclass(frozen=True)
class WaveformParams:
    excitation: str = "chirp"
    duration: float = 0.1
    noise_rel: float = 0.0          # noise std as a fraction of signal RMS
    interpolation: str = "none"
    pad: float = 0.01               # leading silence, seconds


@dataclass(frozen=True)
class SimConfig:
    geometry: ArrayGeometry
    medium: Medium = field(default_factory=Medium)
    sampling: SamplingSpec = field(default_factory=lambda: SamplingSpec(10_000.0))
    placement_tolerance: float = 0.001
    toa_noise_sigma: float = 0.0
    mode: str = "event"
    waveform: WaveformParams = field(default_factory=WaveformParams)
    master_seed: int = 0
    exclusion_radius: float = 1.0

    def __post_init__(self):
        if self.toa_noise_sigma < 0:
            raise ValueError("toa_noise_sigma must be non-negative")
        if self.placement_tolerance < 0:
            raise ValueError("placement_tolerance must be non-negative")
        if self.exclusion_radius < 0:
            raise ValueError("exclusion_radius must be non-negative")
        if self.mode not in ("event", "waveform"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def sample_rate(self) -> float:
        return self.sampling.sample_rate


@dataclass(frozen=True)
class Observation:
    estimated: TdoaPair
    true_tdoa: TdoaPair
    source: SourcePosition
    sample_index: int


def _seed(master_seed: int, index: int, slot: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index), slot))


def quantize_toa(toa, sample_rate: float, phase_offsets=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Snap arrival times up to the next sampling instant of each mic's clock."""
    toa = np.asarray(toa, dtype=float)
    phi = np.asarray(phase_offsets, dtype=float)
    return np.ceil((toa - phi) * sample_rate) / sample_rate + phi


def sample_source_uniform_disk(radius: float, rng_seed, center=(0.0, 0.0),
                               min_radius: float = 0.0) -> SourcePosition:
    """Area-uniform draw from a disk (or annulus when ``min_radius > 0``)."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    if not 0 <= min_radius < radius:
        raise ValueError("min_radius must be in [0, radius)")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    u, v = rng.random(2)
    r = math.sqrt(min_radius ** 2 + u * (radius ** 2 - min_radius ** 2))
    t = 2.0 * math.pi * v
    return SourcePosition(center[0] + r * math.cos(t), center[1] + r * math.sin(t))


def _pair_from_times(t: np.ndarray, geometry: ArrayGeometry) -> TdoaPair:
    ref = geometry.reference_mic_index
    a, b = geometry.others
    return TdoaPair(float(t[a] - t[ref]), float(t[b] - t[ref]))


def simulate_observation(config: SimConfig, source: SourcePosition,
                         sample_index: int) -> Observation:
    """One observation of ``source``; deterministic in ``(master_seed, sample_index)``."""
    geo = apply_placement_jitter(config.geometry, config.placement_tolerance,
                                 _seed(config.master_seed, sample_index, _JITTER))
    toa = true_toa(geo, config.medium, source)
    true_pair = _pair_from_times(toa, geo)

    if config.mode == "event":
        rec = quantize_toa(toa, config.sample_rate, config.sampling.phase_offsets)
        if config.toa_noise_sigma > 0:
            rng = np.random.default_rng(_seed(config.master_seed, sample_index, _NOISE))
            rec = rec + rng.normal(0.0, config.toa_noise_sigma, 3)
        est = _pair_from_times(rec, geo)
    else:
        est = _waveform_tdoa(config, geo, source, sample_index)
    return Observation(est, true_pair, source, int(sample_index))


def synthesize_channels(config: SimConfig, geometry: ArrayGeometry, source: SourcePosition,
                        sample_index: int = 0) -> list[dsp.Waveform]:
    """Three microphone recordings of the configured excitation from ``source``.

    Channel ``i`` samples at ``n/fs + phi_i``, so it sees the excitation
    delayed by ``toa_i - phi_i``; delays are shifted so the earliest
    channel starts after ``pad`` seconds of silence.
    """
    p = config.waveform
    fs = config.sample_rate
    toa = true_toa(geometry, config.medium, source)
    excitation = dsp.make_excitation(p.excitation, fs, p.duration)
    rel = toa - np.asarray(config.sampling.phase_offsets)
    rel = rel - rel.min() + p.pad
    n_pad = int(math.ceil((rel.max() + 0.001) * fs))
    base = dsp.Waveform(np.concatenate([excitation.samples, np.zeros(n_pad)]), fs)
    sigma = p.noise_rel * excitation.rms()
    seeds = _seed(config.master_seed, sample_index, _WAVE).spawn(3)
    return [dsp.synthesize_delayed(base, rel[i], sigma, np.random.default_rng(seeds[i]))
            for i in range(3)]


def _waveform_tdoa(config: SimConfig, geo: ArrayGeometry, source: SourcePosition,
                   sample_index: int) -> TdoaPair:
    chans = synthesize_channels(config, geo, source, sample_index)
    spread = geo.pair_distances().max() / config.medium.speed_of_sound
    max_lag = int(math.ceil(spread * config.sample_rate)) + 2
    interp = config.waveform.interpolation
    ref = chans[geo.reference_mic_index]
    a, b = geo.others
    return TdoaPair(dsp.gcc_phat(ref, chans[a], max_lag, interp).tau_hat,
                    dsp.gcc_phat(ref, chans[b], max_lag, interp).tau_hat)


def _draw_source(config: SimConfig, index: int, radius: float) -> SourcePosition:
    c = config.geometry.centroid
    return sample_source_uniform_disk(
        radius, np.random.default_rng(_seed(config.master_seed, index, _POS)),
        center=(float(c[0]), float(c[1])), min_radius=min(config.exclusion_radius, radius / 2),
    )


def run_batch(config: SimConfig, n: int, radius: float = 100.0, threads: int = 1,
              start_index: int = 0) -> list[Observation]:
    """``n`` observations with sources drawn area-uniformly from the disk.

    Output is ordered by sample index and independent of ``threads``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")

    def one(i):
        return simulate_observation(config, _draw_source(config, i, radius), i)

    idx = range(start_index, start_index + n)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, idx))
    return [one(i) for i in idx]


def run_offset_experiment(config: SimConfig, n: int,
                          offset_levels=DEFAULT_OFFSET_LEVELS, radius: float = 100.0,
                          radius_bound: float | None = None) -> dict:
    """Sampling-phase-offset experiment.

    Each trial gives the two non-reference microphones an offset level
    (fraction of one sampling period) drawn uniformly from
    ``offset_levels``, localizes a random source from the quantized TDOAs
    and records the Euclidean position error.

    Returns
    -------
    dict of arrays
        ``index, offset2_level, offset3_level, x_true, y_true, x_est,
        y_est, position_error_m``.
    """
    from .locate import DEFAULT_RADIUS_BOUND, multilaterate_batch

    if n < 1:
        raise ValueError("n must be at least 1")
    levels = np.asarray(sorted(set(float(l) for l in offset_levels)))
    if levels.size == 0 or levels.min() < 0 or levels.max() >= 1:
        raise ValueError("offset levels must lie in [0, 1)")
    fs = config.sample_rate
    ref = config.geometry.reference_mic_index
    a, b = config.geometry.others

    lv = np.empty((n, 2))
    truth = np.empty((n, 2))
    tau = np.empty((n, 2))
    for i in range(n):
        rng = np.random.default_rng(_seed(config.master_seed, i, _OFFSET))
        l2, l3 = levels[rng.integers(levels.size, size=2)]
        frac = [0.0, 0.0, 0.0]
        frac[a], frac[b] = l2, l3
        cfg = replace(config, sampling=SamplingSpec.with_offset_levels(fs, frac))
        src = _draw_source(cfg, i, radius)
        obs = simulate_observation(cfg, src, i)
        lv[i] = (l2, l3)
        truth[i] = (src.x, src.y)
        tau[i] = (obs.estimated.tau21, obs.estimated.tau31)

    bound = DEFAULT_RADIUS_BOUND if radius_bound is None else radius_bound
    est = multilaterate_batch(config.geometry, config.medium, tau, bound)
    err = np.hypot(est["x"] - truth[:, 0], est["y"] - truth[:, 1])
    return {
        "index": np.arange(n),
        "offset2_level": lv[:, 0],
        "offset3_level": lv[:, 1],
        "x_true": truth[:, 0],
        "y_true": truth[:, 1],
        "x_est": est["x"],
        "y_est": est["y"],
        "position_error_m": err,
    }
