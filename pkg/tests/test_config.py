import pytest

from locagen.config import KEYS, ConfigError, keys_help, load_config


def test_defaults_valid():
    cfg = load_config()
    assert cfg["sampling.sample_rate"] == 10_000.0
    assert cfg.sim_config().placement_tolerance == 0.001
    assert cfg.medium().speed_of_sound == 343.0


def test_file_then_flags(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[sampling]\nsample_rate = 48000\n[rf]\nn_trees = 7\n")
    cfg = load_config(p, {"rf.n_trees": "9"})
    assert cfg["sampling.sample_rate"] == 48000.0
    assert cfg["rf.n_trees"] == 9


def test_temperature_sets_speed():
    cfg = load_config(overrides={"medium.temperature_c": "20"})
    assert cfg.medium().speed_of_sound == pytest.approx(343.42)


@pytest.mark.parametrize("key,value", [
    ("geometry.spacing", "0"),
    ("sampling.phase_offsets", "0,0"),
    ("simulation.mode", "live"),
    ("rf.n_bins", "10"),
    ("split.fraction", "1.5"),
    ("mlp.epochs", "zero"),
    ("nosuch.key", "1"),
])
def test_field_level_errors(key, value):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        load_config(overrides={key: value})


def test_unknown_key_in_file(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[rf]\ntrees = 3\n")
    with pytest.raises(ConfigError, match=r"rf\.trees"):
        load_config(p)


def test_help_lists_every_key():
    text = keys_help()
    for s, k, *_ in KEYS:
        assert f"{s}.{k}" in text
