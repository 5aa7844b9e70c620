import math

import pytest

from holobeam.config import ConfigError, OptimizerSettings, SystemConfig, load_config


def test_defaults():
    cfg = SystemConfig()
    assert (cfg.num_users, cfg.num_feeds, cfg.num_elements) == (6, 8, 36)
    assert cfg.p_max == 1.0 and cfg.r_min == 5.0
    assert cfg.optimizer.learning_rate == 0.01
    assert cfg.optimizer.tolerance == 1e-5
    assert cfg.free_space_wavenumber == pytest.approx(200 * math.pi)
    assert cfg.surface_wavenumber == pytest.approx(200 * math.sqrt(3) * math.pi)
    assert cfg.spacing == pytest.approx(0.01 / 3)


def test_noise_variance_from_snr():
    cfg = SystemConfig(p_max=2.0)
    assert cfg.noise_variance(10) == pytest.approx(0.2)
    assert cfg.noise_variance(0) == pytest.approx(2.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"num_elements": 35},
        {"num_users": 9},
        {"p_max": 0},
        {"r_min": -1},
        {"realizations": 0},
        {"scheme": "oracle"},
        {"array_normalization": "other"},
        {"scale_factors": (1.0,)},
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(ConfigError):
        SystemConfig(**kwargs)


def test_invalid_optimizer():
    with pytest.raises(ConfigError):
        OptimizerSettings(learning_rate=0)
    with pytest.raises(ConfigError):
        OptimizerSettings(max_iterations=0)


def test_load_yaml_with_overrides(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("num_elements: 64\nlearning_rate: 0.05\nsnr_db: [10, 20]\nseed: 7\n")
    cfg = load_config(path, seed=9)
    assert cfg.num_elements == 64
    assert cfg.optimizer.learning_rate == 0.05
    assert cfg.snr_db == (10.0, 20.0)
    assert cfg.seed == 9


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("num_elements: 36\nlearnin_rate: 0.1\n")
    with pytest.raises(ConfigError, match="learnin_rate"):
        load_config(path)


def test_nested_value_rejected(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("optimizer:\n  learning_rate: 0.1\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_user_count_change_keeps_scale_ladder():
    assert SystemConfig.from_flat_dict({"num_users": 3, "num_feeds": 3}).scale_factors == (1.2, 1.0, 0.8)


def test_flat_dict_round_trip_and_digest():
    cfg = SystemConfig(num_elements=64, seed=5).replace(learning_rate=0.02)
    again = SystemConfig.from_flat_dict(cfg.to_flat_dict())
    assert again == cfg
    assert again.digest() == cfg.digest()
    assert cfg.digest() != SystemConfig().digest()
