"""Experiment configuration: INI file with sections, overridable per key.

Precedence: built-in defaults < config file < command-line overrides.
Every key is declared once in :data:`KEYS`; the CLI help is generated
from the same table.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .geometry import ArrayGeometry, GeometryError, Medium, SamplingSpec
from .locate import DEFAULT_RADIUS_BOUND
from .models import ForestParams, MlpParams
from .simulate import DEFAULT_OFFSET_LEVELS, SimConfig, WaveformParams

__all__ = ["KEYS", "ConfigError", "RunConfig", "load_config", "keys_help"]


class ConfigError(ValueError):
    """Raised with a ``section.key`` prefix naming the offending field."""


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(s).replace(" ", "").split(",") if v)


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(s).replace(" ", "").split(",") if v)


def _bool(s) -> bool:
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s):
    return None if str(s).strip().lower() in ("", "none", "auto") else int(s)


def _opt_float(s):
    return None if str(s).strip().lower() in ("", "none") else float(s)


# (section, key, parser, default, help)
KEYS = [
    ("geometry", "spacing", float, 0.1, "microphone spacing d of the equilateral array, m"),
    ("geometry", "placement_tolerance", float, 0.001, "max placement error per mic in simulation, m"),
    ("medium", "speed_of_sound", _opt_float, 343.0, "speed of sound, m/s (ignored if temperature_c is set)"),
    ("medium", "temperature_c", _opt_float, None, "air temperature; sets c = 331.3 + 0.606*T"),
    ("sampling", "sample_rate", float, 10_000.0, "sample rate, Hz"),
    ("sampling", "phase_offsets", _floats, (0.0, 0.0, 0.0), "per-mic clock offsets as fractions of 1/fs"),
    ("simulation", "mode", str, "event", "event | waveform"),
    ("simulation", "n", int, 24_000, "number of samples to simulate"),
    ("simulation", "radius", float, 100.0, "source disk radius, m"),
    ("simulation", "exclusion_radius", float, 1.0, "no sources closer than this to the array centroid, m"),
    ("simulation", "toa_noise_sigma", float, 0.0, "Gaussian arrival-time noise, s (event mode)"),
    ("simulation", "seed", int, 0, "master seed"),
    ("simulation", "excitation", str, "chirp", "waveform mode test signal: chirp | noise-burst | tone"),
    ("simulation", "duration", float, 0.1, "waveform mode signal length, s"),
    ("simulation", "noise_rel", float, 0.0, "waveform mode noise std relative to signal RMS"),
    ("simulation", "interpolation", str, "none", "GCC-PHAT peak refinement: none | parabolic"),
    ("split", "fraction", float, 0.8, "training fraction"),
    ("split", "seed", int, 0, "split shuffle seed"),
    ("rf", "n_trees", int, 100, "trees in the forest"),
    ("rf", "max_depth", int, 12, "maximum tree depth"),
    ("rf", "min_samples_leaf", int, 2, "minimum rows per leaf"),
    ("rf", "max_features", _opt_int, None, "features tried per split (auto: floor(sqrt(n_features)))"),
    ("rf", "bootstrap", _bool, True, "bootstrap rows per tree"),
    ("rf", "n_bins", int, 12, "azimuth classes: 12 (30 deg) or 24 (15 deg)"),
    ("rf", "seed", int, 0, "forest seed"),
    ("mlp", "hidden", _ints, (64, 64), "hidden layer widths"),
    ("mlp", "learning_rate", float, 1e-3, "Adam step size"),
    ("mlp", "batch_size", int, 64, "mini-batch size"),
    ("mlp", "epochs", int, 300, "training epochs"),
    ("mlp", "target", str, "sincos", "sincos | angle"),
    ("mlp", "seed", int, 0, "initialization and shuffling seed"),
    ("locate", "radius_bound", float, DEFAULT_RADIUS_BOUND, "search disk radius around the reference mic, m"),
    ("offsets", "n", int, 10_000, "trials in the sampling-offset experiment"),
    ("offsets", "levels", _floats, DEFAULT_OFFSET_LEVELS, "offset levels, fractions of 1/fs"),
    ("report", "hist_width", float, 5.0, "histogram bin width, degrees"),
]

_PARSERS = {(s, k): p for s, k, p, _, _ in KEYS}


def keys_help() -> str:
    lines = ["config keys (INI section.key, default):"]
    for s, k, _, d, h in KEYS:
        dv = ",".join(str(v) for v in d) if isinstance(d, tuple) else d
        lines.append(f"  {s}.{k} = {dv}    {h}")
    return "\n".join(lines)


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, dotted: str):
        return self.values[tuple(dotted.split(".", 1))]

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry.equilateral(self["geometry.spacing"])

    def medium(self) -> Medium:
        t = self["medium.temperature_c"]
        if t is not None:
            return Medium.from_temperature(t)
        return Medium(self["medium.speed_of_sound"])

    def sampling(self) -> SamplingSpec:
        return SamplingSpec.with_offset_levels(self["sampling.sample_rate"],
                                               self["sampling.phase_offsets"])

    def sim_config(self) -> SimConfig:
        wp = WaveformParams(self["simulation.excitation"], self["simulation.duration"],
                            self["simulation.noise_rel"], self["simulation.interpolation"])
        return SimConfig(self.geometry(), self.medium(), self.sampling(),
                         self["geometry.placement_tolerance"], self["simulation.toa_noise_sigma"],
                         self["simulation.mode"], wp, self["simulation.seed"],
                         self["simulation.exclusion_radius"])

    def forest_params(self) -> ForestParams:
        return ForestParams(self["rf.n_trees"], self["rf.max_depth"], self["rf.min_samples_leaf"],
                            self["rf.max_features"], self["rf.bootstrap"], self["rf.seed"])

    def mlp_params(self) -> MlpParams:
        return MlpParams(hidden=self["mlp.hidden"], learning_rate=self["mlp.learning_rate"],
                         batch_size=self["mlp.batch_size"], epochs=self["mlp.epochs"],
                         seed=self["mlp.seed"])

    def validate(self) -> "RunConfig":
        """Check every field against the consuming module's preconditions."""
        checks = [
            ("geometry.spacing", lambda v: v > 0, "must be positive"),
            ("geometry.placement_tolerance", lambda v: v >= 0, "must be non-negative"),
            ("sampling.sample_rate", lambda v: v > 0, "must be positive"),
            ("sampling.phase_offsets", lambda v: len(v) == 3 and all(0 <= x < 1 for x in v),
             "needs three values in [0, 1)"),
            ("simulation.mode", lambda v: v in ("event", "waveform"), "must be event or waveform"),
            ("simulation.n", lambda v: v >= 1, "must be at least 1"),
            ("simulation.radius", lambda v: v > 0, "must be positive"),
            ("simulation.exclusion_radius", lambda v: v >= 0, "must be non-negative"),
            ("simulation.toa_noise_sigma", lambda v: v >= 0, "must be non-negative"),
            ("simulation.excitation", lambda v: v in ("chirp", "noise", "noise-burst", "tone"),
             "must be chirp, noise-burst or tone"),
            ("simulation.duration", lambda v: v > 0, "must be positive"),
            ("simulation.noise_rel", lambda v: v >= 0, "must be non-negative"),
            ("simulation.interpolation", lambda v: v in ("none", "parabolic"), "must be none or parabolic"),
            ("split.fraction", lambda v: 0 < v < 1, "must be in (0, 1)"),
            ("rf.n_trees", lambda v: v >= 1, "must be at least 1"),
            ("rf.max_depth", lambda v: v >= 0, "must be non-negative"),
            ("rf.min_samples_leaf", lambda v: v >= 1, "must be at least 1"),
            ("rf.max_features", lambda v: v is None or 1 <= v <= 3, "must be 1..3 or auto"),
            ("rf.n_bins", lambda v: v in (12, 24), "must be 12 or 24"),
            ("mlp.hidden", lambda v: len(v) >= 1 and all(h >= 1 for h in v), "needs positive widths"),
            ("mlp.learning_rate", lambda v: v > 0, "must be positive"),
            ("mlp.batch_size", lambda v: v >= 1, "must be at least 1"),
            ("mlp.epochs", lambda v: v >= 1, "must be at least 1"),
            ("mlp.target", lambda v: v in ("sincos", "angle"), "must be sincos or angle"),
            ("locate.radius_bound", lambda v: v > 0, "must be positive"),
            ("offsets.n", lambda v: v >= 1, "must be at least 1"),
            ("offsets.levels", lambda v: len(v) >= 1 and all(0 <= x < 1 for x in v),
             "needs values in [0, 1)"),
            ("report.hist_width", lambda v: v > 0, "must be positive"),
        ]
        for key, ok, msg in checks:
            if not ok(self[key]):
                raise ConfigError(f"{key}: {msg} (got {self[key]!r})")
        c, t = self["medium.speed_of_sound"], self["medium.temperature_c"]
        try:
            self.medium()
        except GeometryError as e:
            raise ConfigError(f"medium.{'temperature_c' if t is not None else 'speed_of_sound'}: {e}"
                              f" (got {t if t is not None else c!r})") from None
        return self


def _parse(section: str, key: str, raw):
    if (section, key) not in _PARSERS:
        raise ConfigError(f"{section}.{key}: unknown config key")
    try:
        return _PARSERS[(section, key)](raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({e})") from None


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build and validate a configuration.

    ``overrides`` maps ``"section.key"`` to raw strings or typed values.
    """
    values = {(s, k): d for s, k, _, d, _ in KEYS}
    if path is not None:
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"{path}: {e}") from None
        for section in cp.sections():
            for key, raw in cp.items(section):
                values[(section, key)] = _parse(section, key, raw)
    for dotted, raw in (overrides or {}).items():
        if raw is None:
            continue
        if "." not in dotted:
            raise ConfigError(f"{dotted}: override keys look like section.key")
        s, k = dotted.split(".", 1)
        values[(s, k)] = _parse(s, k, raw) if isinstance(raw, str) else raw
        if (s, k) not in _PARSERS:
            raise ConfigError(f"{dotted}: unknown config key")
    return RunConfig(values).validate()
