import pytest
import yaml
from hypothesis import given, strategies as st

from pydiffau import (
    ConfigurationError,
    RunConfig,
    TaperWindow,
    apply_overrides,
    config_from_dict,
    echo_config,
    load_config,
    parse_override,
)


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    monkeypatch.delenv("PYDIFFAU_CONFIG", raising=False)


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_defaults():
    cfg = load_config()
    assert cfg == RunConfig()
    assert cfg.stft.window is TaperWindow.sqrt_hann
    assert (cfg.amplitude.alpha, cfg.amplitude.beta) == (0.5, 0.15)
    assert cfg.model[1].block_order == 1 and cfg.training[2].block_order == 2
    assert cfg.sampler.predictor_steps == 30


def test_parse_override():
    assert parse_override("sampler.snr=0.3") == (("sampler", "snr"), 0.3)
    assert parse_override("model.2.depth=4") == (("model", 2, "depth"), 4)
    assert parse_override("paths.dataset=/tmp/data") == (("paths", "dataset"), "/tmp/data")
    assert parse_override("sampler.noise_removal=true") == (("sampler", "noise_removal"), True)
    assert parse_override("dataset.split_fractions={train: 1.0}") == (
        ("dataset", "split_fractions"),
        {"train": 1.0},
    )
    assert parse_override("paths.outputs=") == (("paths", "outputs"), None)
    for bad in ("sampler.snr", "=3", "sampler.snr=[1, 2"):
        with pytest.raises(ConfigurationError):
            parse_override(bad)


@given(st.integers(min_value=-(10**6), max_value=10**6))
def test_integer_overrides_keep_their_value(value):
    assert parse_override(f"seed={value}") == (("seed",), value)


def test_apply_overrides():
    data = {"sampler": {"snr": 0.2}}
    apply_overrides(data, ["sampler.snr=0.4", "model.1.base_width=16", "jobs=3"])
    assert data == {"sampler": {"snr": 0.4}, "model": {1: {"base_width": 16}}, "jobs": 3}
    with pytest.raises(ConfigurationError):
        apply_overrides({"jobs": 3}, ["jobs.count=2"])


def test_file_then_overrides(tmp_path):
    path = write_yaml(tmp_path / "run.yaml", {"sampler": {"snr": 0.2, "predictor_steps": 10}, "model": {"2": {"depth": 2}}})
    cfg = load_config(path, ["sampler.snr=0.4"])
    assert cfg.sampler.snr == 0.4
    assert cfg.sampler.predictor_steps == 10
    assert cfg.model[2].depth == 2 and cfg.model[2].block_order == 2


def test_environment_variable(tmp_path, monkeypatch):
    path = write_yaml(tmp_path / "env.yaml", {"seed": 11})
    monkeypatch.setenv("PYDIFFAU_CONFIG", str(path))
    assert load_config().seed == 11
    other = write_yaml(tmp_path / "explicit.yaml", {"seed": 12})
    assert load_config(other).seed == 12


def test_file_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.yaml")
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_config(listing)
    broken = tmp_path / "broken.yaml"
    broken.write_text("stft: {hop: [\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_config(broken)


@pytest.mark.parametrize(
    "data",
    [
        {"vocoder": {}},
        {"sampler": {"temperature": 1.0}},
        {"sampler": 3},
        {"model": {3: {}}},
        {"model": {1: {"block_order": 2}}},
        {"schedule": {"sigma_min": 1.0, "sigma_max": 0.5}},
        {"stft": {"window": "boxcar"}},
        {"stft": {"hop": 600}},
        {"seed": "abc"},
        {"jobs": -1},
    ],
)
def test_invalid_settings(data):
    with pytest.raises(ConfigurationError):
        config_from_dict(data)


def test_echo_round_trip(tmp_path):
    cfg = load_config(overrides=["sampler.snr=0.25", "training.1.total_steps=7", "paths.dataset=data", "seed=5"])
    path = echo_config(cfg, tmp_path)
    assert path.name == "config.yaml"
    assert load_config(path) == cfg
