"""Array geometry, propagation constants and closed-form DOA helpers.

All positions are in meters, times in seconds.  Angles cross the public
API in degrees and are handled in radians internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArrayGeometry",
    "GeometryError",
    "Medium",
    "SamplingSpec",
    "SourcePosition",
    "DEFAULT_SPEED_OF_SOUND",
    "speed_of_sound",
    "azimuth_deg",
    "true_toa",
    "doa_from_tdoa",
    "quantization_floor",
    "pair_count",
    "apply_placement_jitter",
]

DEFAULT_SPEED_OF_SOUND = 343.0
_ENDFIRE_TOL = 8 * np.finfo(float).eps


class GeometryError(ValueError):
    """Raised for degenerate geometry or out-of-domain arguments."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ArrayGeometry:
    """Three microphones in the plane.

    ``nominal_spacing`` is what estimators assume; ``mic_positions`` is where
    the microphones really are (they differ after placement jitter).
    """

    mic_positions: np.ndarray
    nominal_spacing: float
    reference_mic_index: int = 0

    def __post_init__(self):
        pos = _frozen(self.mic_positions)
        if pos.shape != (3, 2):
            raise GeometryError(f"need exactly 3 microphones in 2-D, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise GeometryError("microphone positions must be finite")
        if self.reference_mic_index not in (0, 1, 2):
            raise GeometryError("reference_mic_index must be 0, 1 or 2")
        object.__setattr__(self, "mic_positions", pos)
        if np.any(self.pair_distances() <= 0):
            raise GeometryError("microphones must be at distinct positions")

    @classmethod
    def equilateral(cls, d: float) -> "ArrayGeometry":
        """Reference mic at the origin, the others at (d, 0) and (d/2, d*sqrt(3)/2)."""
        if not d > 0:
            raise GeometryError("spacing must be positive")
        pos = [[0.0, 0.0], [d, 0.0], [d / 2.0, d * math.sqrt(3.0) / 2.0]]
        return cls(pos, float(d), 0)

    @property
    def reference(self) -> np.ndarray:
        return self.mic_positions[self.reference_mic_index]

    @property
    def centroid(self) -> np.ndarray:
        return self.mic_positions.mean(axis=0)

    @property
    def others(self) -> tuple[int, int]:
        """Indices of the two non-reference microphones, in order."""
        return tuple(i for i in range(3) if i != self.reference_mic_index)

    def pair_distances(self) -> np.ndarray:
        """Distances for pairs (0,1), (0,2), (1,2)."""
        p = self.mic_positions
        return np.array([
            np.linalg.norm(p[0] - p[1]),
            np.linalg.norm(p[0] - p[2]),
            np.linalg.norm(p[1] - p[2]),
        ])

    def circumcenter(self) -> np.ndarray:
        (ax, ay), (bx, by), (cx, cy) = self.mic_positions
        den = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
        if den == 0:
            raise GeometryError("collinear microphones have no circumcenter")
        a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
        ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / den
        uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / den
        return np.array([ux, uy])

    def rotated(self, angle_deg: float, about=None) -> "ArrayGeometry":
        """Rigid rotation of all microphones (default pivot: reference mic)."""
        pivot = self.reference if about is None else np.asarray(about, dtype=float)
        R = _rotation(math.radians(angle_deg))
        pos = (self.mic_positions - pivot) @ R.T + pivot
        return ArrayGeometry(pos, self.nominal_spacing, self.reference_mic_index)

    def with_positions(self, positions) -> "ArrayGeometry":
        return ArrayGeometry(positions, self.nominal_spacing, self.reference_mic_index)


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def speed_of_sound(temperature_c: float) -> float:
    """Linear dry-air approximation, m/s."""
    return 331.3 + 0.606 * temperature_c


@dataclass(frozen=True)
class Medium:
    speed_of_sound: float = DEFAULT_SPEED_OF_SOUND
    temperature_c: float | None = None

    def __post_init__(self):
        if not (self.speed_of_sound > 0 and math.isfinite(self.speed_of_sound)):
            raise GeometryError("speed of sound must be positive and finite")

    @classmethod
    def from_temperature(cls, temperature_c: float = 20.0) -> "Medium":
        return cls(speed_of_sound(temperature_c), temperature_c)


@dataclass(frozen=True)
class SamplingSpec:
    """Sample rate plus a per-microphone sampling-clock phase offset (s)."""

    sample_rate: float
    phase_offsets: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise GeometryError("sample rate must be positive")
        offs = tuple(float(o) for o in self.phase_offsets)
        if len(offs) != 3:
            raise GeometryError("need one phase offset per microphone")
        period = 1.0 / self.sample_rate
        for o in offs:
            if not 0.0 <= o < period:
                raise GeometryError(f"phase offset {o} outside [0, 1/fs)")
        object.__setattr__(self, "phase_offsets", offs)

    @property
    def period(self) -> float:
        return 1.0 / self.sample_rate

    @classmethod
    def with_offset_levels(cls, sample_rate: float, levels) -> "SamplingSpec":
        """Offsets given as fractions of one sampling period."""
        return cls(sample_rate, tuple(float(l) / sample_rate for l in levels))


@dataclass(frozen=True)
class SourcePosition:
    x: float
    y: float

    @classmethod
    def polar(cls, radius: float, azimuth: float, origin=(0.0, 0.0)) -> "SourcePosition":
        """Place a source ``radius`` m from ``origin`` at ``azimuth`` degrees."""
        t = math.radians(azimuth)
        return cls(origin[0] + radius * math.cos(t), origin[1] + radius * math.sin(t))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def azimuth(self, geometry: ArrayGeometry) -> float:
        return azimuth_deg(self.x, self.y, geometry.reference)


def azimuth_deg(x, y, reference=(0.0, 0.0)):
    """Angle from the reference point's horizontal, degrees in [0, 360).

    Vectorized over ``x`` and ``y``.
    """
    a = np.degrees(np.arctan2(np.asarray(y) - reference[1], np.asarray(x) - reference[0]))
    a = np.mod(a, 360.0)
    # mod can round -tiny up to exactly 360.0
    a = np.where(a >= 360.0, 0.0, a)
    return float(a) if a.ndim == 0 else a


def true_toa(geometry: ArrayGeometry, medium: Medium, source: SourcePosition) -> np.ndarray:
    """Exact time of flight from the source to each microphone."""
    dist = np.linalg.norm(geometry.mic_positions - source.as_array(), axis=1)
    if np.any(dist == 0):
        raise GeometryError("source coincides with a microphone")
    return dist / medium.speed_of_sound


def doa_from_tdoa(tau: float, d: float, c: float) -> float:
    """Two-microphone far-field direction of arrival, degrees in [-90, 90]."""
    s = c * tau / d
    if abs(s) > 1.0 + _ENDFIRE_TOL:
        raise GeometryError(f"|c*tau/d| = {abs(s):.6g} > 1; delay inconsistent with spacing")
    if abs(s) >= 1.0 - _ENDFIRE_TOL:
        # rounding in c*tau/d near endfire; asin is too steep there to trust the last bits
        s = math.copysign(1.0, s)
    return math.degrees(math.asin(s))


def quantization_floor(c: float, fs: float) -> float:
    """Smallest resolvable path difference c/fs, meters."""
    if not fs > 0:
        raise GeometryError("sample rate must be positive")
    return c / fs


def pair_count(n_mics: int) -> int:
    if n_mics < 2:
        raise GeometryError("need at least two microphones")
    return n_mics * (n_mics - 1) // 2


def apply_placement_jitter(geometry: ArrayGeometry, tolerance: float, rng_seed) -> ArrayGeometry:
    """Displace each microphone uniformly within a disk of radius ``tolerance``.

    ``rng_seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if tolerance < 0:
        raise GeometryError("tolerance must be non-negative")
    if tolerance == 0:
        return geometry
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    r = tolerance * np.sqrt(rng.random(3))
    t = 2.0 * np.pi * rng.random(3)
    delta = np.column_stack([r * np.cos(t), r * np.sin(t)])
    return geometry.with_positions(geometry.mic_positions + delta)
