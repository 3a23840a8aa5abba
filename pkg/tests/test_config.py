import pytest

from measint.cluster import ClusterConfig
from measint.config import PRESETS, SECTIONS, ConfigError, cluster_from_config, load, validate


def test_presets_are_valid():
    for name in PRESETS:
        cfg = load(preset=name)
        assert cfg["preset"] == name
        if "cluster" in cfg:
            assert isinstance(cluster_from_config(cfg["cluster"]), ClusterConfig)


def test_unknown_keys_all_listed():
    with pytest.raises(ConfigError) as err:
        validate({"cluster": {"m_bins": 4, "mbins": 4, "delay": [1]}, "colour": "red"})
    msg = str(err.value)
    assert "cluster.mbins" in msg and "cluster.delay" in msg and "colour" in msg


def test_type_errors():
    with pytest.raises(ConfigError):
        validate({"cluster": {"m_bins": "4"}})
    with pytest.raises(ConfigError):
        validate({"cluster": {"m_bins": True}})
    with pytest.raises(ConfigError):
        validate({"seed": 1.5})
    with pytest.raises(ConfigError):
        validate({"condition": {"window": {"start": 1, "width": 3}}})
    with pytest.raises(ConfigError):
        validate({"cluster": 4})


def test_sections_restricted_per_command():
    validate({"cluster": {"m_bins": 4}}, SECTIONS["build-cluster"])
    with pytest.raises(ConfigError):
        validate({"haar_run": {"n_bins": 10}}, SECTIONS["build-cluster"])


def test_toml_merges_over_preset(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("seed = 9\n[cluster]\nm_bins = 30\n")
    cfg = load(str(path), "paper-geometry")
    assert cfg["seed"] == 9
    assert cfg["cluster"]["m_bins"] == 30
    assert cfg["cluster"]["delays"] == [1, 8]


def test_bad_toml_and_preset(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("cluster = [")
    with pytest.raises(ConfigError):
        load(str(path))
    with pytest.raises(ConfigError):
        load(preset="nope")
    with pytest.raises(OSError):
        load(str(tmp_path / "missing.toml"))


def test_cluster_from_config_errors():
    with pytest.raises(ConfigError):
        cluster_from_config({"delays": [1]})
    with pytest.raises(ConfigError):
        cluster_from_config({"m_bins": 4, "delays": [5]})
    cfg = cluster_from_config({"m_bins": 4, "delays": [1], "r_in": [0.1, 0.2], "loss_eta": 0.9})
    assert cfg.r_in == (0.1, 0.2) and cfg.delays == (1,)
