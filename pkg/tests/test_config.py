import dataclasses

import numpy as np
import pytest

from posefusion.config import (
    CONFIG_KEY_FIELDS,
    RunConfig,
    config_from_mapping,
    default_config,
    default_config_text,
    load_config,
    parse_config_text,
)


def test_default_config_benchmark_values(bench_cfg):
    cfg = bench_cfg
    assert cfg.dt == 0.001
    assert cfg.duration == 20.0
    assert (cfg.c1, cfg.c2) == (20.0, 60.0)
    assert (cfg.k1, cfg.k2, cfg.k3) == (64.0, 48.0, 12.0)
    assert cfg.contraction_rate == 2.0
    assert cfg.bias_bound == 1.83
    assert np.allclose(cfg.gravity, [0.0, 0.0, 9.80665])
    assert np.allclose(cfg.truth_gyro_bias, [0.1, -0.02, 0.05])
    assert np.allclose(cfg.truth_accel_bias, [-0.1, 0.4, 0.2])
    assert np.allclose(cfg.obs_p0, [1.68, -1.94, 2.01])
    assert np.allclose(cfg.obs_v0, [-4.35, 1.51, 2.44])
    assert np.allclose(cfg.obs_q0, [1.0, 0.0, 0.0, 0.0])
    assert np.linalg.norm(cfg.truth_q0) == pytest.approx(1.0, abs=1e-15)
    assert cfg.feed_mode == "estimated"
    assert cfg.omega_dot_mode == "fd"
    assert cfg.pose_decimation == 1
    assert not cfg.randomize_init


def test_key_map_is_a_bijection_onto_fields():
    field_names = {f.name for f in dataclasses.fields(RunConfig)}
    assert set(CONFIG_KEY_FIELDS.values()) == field_names
    assert len(set(CONFIG_KEY_FIELDS.values())) == len(CONFIG_KEY_FIELDS)


def test_shipped_file_sets_every_key():
    mapping = parse_config_text(default_config_text())
    assert set(mapping) == set(CONFIG_KEY_FIELDS)


def test_parse_comments_blanks_and_last_wins():
    text = """
    # leading comment
    sim.dt = 0.01   # trailing comment

    sim.dt = 0.02
    """
    assert parse_config_text(text) == {"sim.dt": "0.02"}


def test_parse_rejects_bad_line():
    with pytest.raises(ValueError, match="line 2"):
        parse_config_text("sim.dt = 0.01\nnonsense\n")


def test_mapping_rejects_unknown_key():
    mapping = parse_config_text(default_config_text())
    mapping["sim.step"] = "0.01"
    with pytest.raises(ValueError, match="sim.step"):
        config_from_mapping(mapping)


def test_mapping_rejects_missing_required_key():
    mapping = parse_config_text(default_config_text())
    del mapping["gains.c1"]
    with pytest.raises(ValueError, match="gains.c1"):
        config_from_mapping(mapping)


def test_bool_parsing_variants():
    for raw, want in (("true", True), ("Yes", True), ("on", True), ("1", True),
                      ("false", False), ("No", False), ("off", False), ("0", False)):
        cfg = load_config(overrides={"init.randomize": raw})
        assert cfg.randomize_init is want
    with pytest.raises(ValueError):
        load_config(overrides={"init.randomize": "maybe"})


def test_vector_parsing_error():
    with pytest.raises(ValueError, match="gravity"):
        load_config(overrides={"gravity.vector": "0, 0, down"})


def test_layering_file_then_overrides(tmp_path):
    user_file = tmp_path / "user.cfg"
    user_file.write_text("gains.c1 = 5\nsim.duration = 2.5\n")
    cfg = load_config(str(user_file))
    assert cfg.c1 == 5.0 and cfg.duration == 2.5
    cfg = load_config(str(user_file), overrides={"gains.c1": "7"})
    assert cfg.c1 == 7.0 and cfg.duration == 2.5   # flag beats file, file beats default


def test_with_overrides_round_trip(bench_cfg):
    other = bench_cfg.with_overrides(duration=3.0)
    assert other.duration == 3.0
    assert other.dt == bench_cfg.dt
    assert bench_cfg.duration == 20.0   # original untouched


def test_validation_collects_problems():
    with pytest.raises(ValueError) as exc:
        default_config().with_overrides(dt=-1.0, c1=0.0)
    msg = str(exc.value)
    assert "sim.dt" in msg and "gains.c1" in msg


def test_validation_rejects_bad_modes_and_shapes():
    cfg = default_config()
    with pytest.raises(ValueError, match="feed.mode"):
        cfg.with_overrides(feed_mode="guessed")
    with pytest.raises(ValueError, match="omega_dot"):
        cfg.with_overrides(omega_dot_mode="magic")
    with pytest.raises(ValueError, match="pose_decimation"):
        cfg.with_overrides(pose_decimation=0)
    with pytest.raises(ValueError, match="gravity"):
        cfg.with_overrides(gravity=np.array([0.0, 9.8]))
    with pytest.raises(ValueError, match="finite"):
        cfg.with_overrides(truth_p0=np.array([np.inf, 0.0, 0.0]))


def test_quaternions_normalized_or_rejected():
    cfg = default_config().with_overrides(truth_q0=np.array([0.7071, 0.0, 0.7071, 0.0]))
    assert np.linalg.norm(cfg.truth_q0) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError, match="unit norm"):
        default_config().with_overrides(obs_q0=np.array([2.0, 0.0, 0.0, 0.0]))
