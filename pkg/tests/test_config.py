import pytest

from rlandau.config import (
    ConfigError,
    config_hash,
    default_config,
    load_config,
    validate_config,
)


class TestDefaults:
    def test_sections_present(self):
        cfg = default_config()
        for sec in (
            "momentum",
            "space",
            "collision",
            "linearized",
            "weights",
            "euler",
            "hilbert",
            "solver",
            "sweep",
            "run",
        ):
            assert sec in cfg

    def test_defaults_validate(self):
        assert validate_config(default_config()) == default_config()

    def test_none_path_gives_defaults(self):
        assert load_config(None) == default_config()


class TestValidation:
    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown config section"):
            validate_config({"bogus": {}})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            validate_config({"momentum": {"bogus": 1}})

    def test_wrong_type(self):
        with pytest.raises(ConfigError, match="wrong type"):
            validate_config({"momentum": {"radius": "six"}})

    def test_bool_is_not_a_number(self):
        with pytest.raises(ConfigError, match="wrong type"):
            validate_config({"momentum": {"radius": True}})

    def test_out_of_range(self):
        with pytest.raises(ConfigError, match="out of range"):
            validate_config({"momentum": {"points_per_axis": 7}})

    def test_epsilons_must_decrease(self):
        with pytest.raises(ConfigError, match="out of range"):
            validate_config({"sweep": {"epsilons": [0.025, 0.05, 0.1]}})

    def test_epsilons_need_three(self):
        with pytest.raises(ConfigError, match="out of range"):
            validate_config({"sweep": {"epsilons": [0.1, 0.05]}})

    def test_imex_order_choices(self):
        with pytest.raises(ConfigError, match="out of range"):
            validate_config({"solver": {"imex_order": 3}})

    def test_partial_override_keeps_defaults(self):
        cfg = validate_config({"space": {"cells": 16}})
        assert cfg["space"]["cells"] == 16
        assert cfg["space"]["length"] == default_config()["space"]["length"]


class TestFiles:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.toml")

    def test_parse_error(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("momentum = [unterminated")
        with pytest.raises(ConfigError, match="parse error"):
            load_config(p)

    def test_round_trip(self, tmp_path):
        p = tmp_path / "ok.toml"
        p.write_text("[space]\ncells = 12\n[solver]\nimex_order = 2\n")
        cfg = load_config(p)
        assert cfg["space"]["cells"] == 12
        assert cfg["solver"]["imex_order"] == 2


class TestHash:
    def test_stable(self):
        assert config_hash(default_config()) == config_hash(default_config())

    def test_sensitive_to_values(self):
        cfg = default_config()
        cfg["space"]["cells"] = 16
        assert config_hash(cfg) != config_hash(default_config())
