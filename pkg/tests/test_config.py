import json

import pytest

from striptrial.cli import bundled_config_path
from striptrial.config import ConfigError, load_config


class TestDefaults:
    def test_empty_config_is_full_study(self):
        config = load_config({})
        assert config.raw["n_rows"] == 93
        assert config.raw["n_ranges"] == 20
        assert config.replicates == 100
        assert config.designs == ["randomised", "systematic"]
        assert config.responses == ["linear", "quadratic"]
        assert config.etas == [1.0, 0.1]
        assert config.spatials == ["ns", "ar1", "matern"]
        assert config.bandwidth_policies == ["fixed5", "fixed9", "aicc"]
        assert config.bandwidth_search == (1.0, 93.0)
        assert config.fixed_bandwidth("fixed5") == 5.0
        assert config.fixed_bandwidth("fixed9") == 9.0

    def test_grid_and_specs_constructible(self):
        config = load_config({})
        assert config.grid().n == 1860
        assert config.treatment_levels().levels == (0.0, 35.0, 70.0, 105.0, 140.0)
        assert config.response(0).b == (65.0, 0.05)
        assert config.response(1).b == (65.0, 0.05, -0.0003)
        assert config.within(0).eta == 1.0
        assert config.spatial(2).kind == "matern"

    def test_bundled_configs_load(self):
        smoke = load_config(bundled_config_path("smoke"))
        paper = load_config(bundled_config_path("paper"))
        assert smoke.replicates == 5 and smoke.grid().n == 310
        assert paper.replicates == 100 and paper.grid().n == 1860


class TestValidation:
    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            load_config({"bandwidth": 5})

    def test_bad_replicates(self):
        with pytest.raises(ConfigError):
            load_config({"replicates": 0})

    def test_bad_design(self):
        with pytest.raises(ConfigError):
            load_config({"designs": ["chequerboard"]})

    def test_indivisible_levels(self):
        with pytest.raises(ConfigError):
            load_config({"n_ranges": 7})

    def test_bad_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(str(path))

    def test_non_object_root(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="root"):
            load_config(str(path))


class TestDigest:
    def test_digest_stable_and_sensitive(self):
        a = load_config({})
        b = load_config({"seed": 20220901})  # same as default
        c = load_config({"seed": 1})
        assert a.digest() == b.digest()
        assert a.digest() != c.digest()
        json.loads(a.to_json())  # round-trippable
