"""Tests for configuration files, overrides and environment settings."""

import pytest

from nehari_bif.core import KirchhoffModel, NEPModel, parse_config
from nehari_bif.core.config import load_env_settings
from nehari_bif.core.errors import ConfigError, InvalidExponentError, ValidationError


def _write(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestParseConfig:
    """Tests for the INI configuration layer."""

    def test_defaults(self):
        """Without a file the documented defaults apply."""
        config = parse_config()
        assert isinstance(config.model, KirchhoffModel)
        assert (config.model.a, config.model.q, config.model.grid.n) == (1.0, 3.0, 200)
        assert config.optimizer.restarts == 8
        assert config.sweep.grid.kind == "geometric"
        assert config.sweep.grid.count == 64
        assert config.sweep.warm_start is True

    def test_file(self, tmp_path):
        """Sections build the model, optimizer and sweep."""
        path = _write(
            tmp_path,
            "# nep run\n"
            "[model]\n"
            "model = nep\n"
            "gamma = 5\n"
            "q = 2.5  ; inline comment\n"
            "mu = 2\n"
            "n = 50\n"
            "[optimizer]\n"
            "restarts = 3\n"
            "seed = 9\n"
            "[sweep]\n"
            "grid = explicit\n"
            "values = 0.1, 0.2,0.4\n"
            "warm_start = false\n",
        )
        config = parse_config(path)
        assert isinstance(config.model, NEPModel)
        assert (config.model.gamma, config.model.q, config.model.mu) == (5.0, 2.5, 2.0)
        assert config.model.grid.n == 50
        assert (config.optimizer.restarts, config.optimizer.seed) == (3, 9)
        assert config.sweep.grid.values == (0.1, 0.2, 0.4)
        assert config.sweep.warm_start is False
        assert config.sweep.model is config.model

    def test_overrides_win(self, tmp_path):
        """--set values replace file values."""
        path = _write(tmp_path, "[model]\nn = 50\n")
        config = parse_config(path, ["model.n=30", "optimizer.seed = 4"])
        assert config.model.grid.n == 30
        assert config.optimizer.seed == 4

    def test_missing_file(self, tmp_path):
        """A missing file names its path."""
        missing = str(tmp_path / "absent.ini")
        with pytest.raises(ConfigError) as info:
            parse_config(missing)
        assert info.value.path == missing
        assert info.value.exit_code == 2

    def test_malformed_line(self, tmp_path):
        """A line without a delimiter is reported with its line number."""
        path = _write(tmp_path, "[model]\nq 3\n")
        with pytest.raises(ConfigError) as info:
            parse_config(path)
        assert info.value.lineno == 2

    def test_line_outside_section(self, tmp_path):
        """Keys before the first section header are reported at line 1."""
        path = _write(tmp_path, "q = 3\n")
        with pytest.raises(ConfigError) as info:
            parse_config(path)
        assert info.value.lineno == 1

    def test_unknown_keys_reported_together(self, tmp_path):
        """All unknown keys of a section appear in one error."""
        path = _write(tmp_path, "[model]\nalpha = 1\nbeta = 2\n")
        with pytest.raises(ConfigError) as info:
            parse_config(path)
        assert "alpha" in str(info.value) and "beta" in str(info.value)

    def test_unknown_section(self, tmp_path):
        """Unknown sections are refused."""
        path = _write(tmp_path, "[solver]\nx = 1\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    @pytest.mark.parametrize("item", ["model.n", "n=3", "plot.size=3"])
    def test_bad_override(self, item):
        """Overrides must be section.key=value with a known section."""
        with pytest.raises(ConfigError):
            parse_config(overrides=[item])

    def test_type_error(self):
        """Values of the wrong type name the key."""
        with pytest.raises(ConfigError) as info:
            parse_config(overrides=["model.n=many"])
        assert "n" in str(info.value)

    def test_domain_messages_match_api(self):
        """Hypothesis violations read the same as from the constructors."""
        with pytest.raises(InvalidExponentError) as from_config:
            parse_config(overrides=["model.model=nep", "model.gamma=2.5"])
        with pytest.raises(InvalidExponentError) as from_api:
            NEPModel(gamma=2.5, q=3.0)
        assert str(from_config.value) == str(from_api.value)

    def test_kirchhoff_gamma_fixed(self):
        """Kirchhoff refuses a gamma other than 4."""
        with pytest.raises(ValidationError):
            parse_config(overrides=["model.gamma=5"])
        assert parse_config(overrides=["model.gamma=4"]).model.exps.gamma == 4.0

    def test_snapshot_canonical(self, tmp_path):
        """Equivalent inputs give the same snapshot; different ones do not."""
        path = _write(tmp_path, "[model]\nn = 50\nq = 3.0\n")
        a = parse_config(path).snapshot
        b = parse_config(overrides=["model.q=3", "model.n=50"]).snapshot
        c = parse_config(overrides=["model.n=51"]).snapshot
        assert a == b
        assert a != c
        assert "[optimizer]" in a


class TestEnvSettings:
    """Tests for NEHARI_* environment settings."""

    def test_defaults(self, monkeypatch):
        """Without variables the defaults apply."""
        for name in ("NEHARI_THREADS", "NEHARI_OUTPUT_DIR", "NEHARI_LOG_LEVEL"):
            monkeypatch.delenv(name, raising=False)
        env = load_env_settings()
        assert (env.threads, env.output_dir, env.log_level) == (1, ".", "INFO")

    def test_from_environment(self, monkeypatch):
        """Variables with the NEHARI_ prefix are read."""
        monkeypatch.setenv("NEHARI_THREADS", "4")
        monkeypatch.setenv("NEHARI_OUTPUT_DIR", "/tmp/out")
        assert load_env_settings().threads == 4
        assert load_env_settings().output_dir == "/tmp/out"

    def test_invalid(self, monkeypatch):
        """Malformed values are configuration errors."""
        monkeypatch.setenv("NEHARI_THREADS", "several")
        with pytest.raises(ConfigError):
            load_env_settings()
