import pytest

from hgct.config import RunConfig, default_config_text, parse_config
from hgct.errors import ConfigError


class TestParse:
    def test_defaults_roundtrip(self):
        cfg = parse_config(default_config_text())
        assert cfg == RunConfig()

    def test_values_and_comments(self):
        text = """
        # a comment
        seed = 7
        sigma_d = 0.25   # trailing comment
        graph_order = fog

        theta_cmp_override = 0.9
        nms_radius = none
        """
        cfg = parse_config(text)
        assert cfg.seed == 7
        assert cfg.sigma_d == 0.25
        assert cfg.graph_order == "fog"
        assert cfg.theta_cmp_override == 0.9
        assert cfg.nms_radius is None

    def test_unknown_key_named_with_line(self):
        with pytest.raises(ConfigError) as err:
            parse_config("seed = 1\nbogus_key = 2\n")
        assert "line 2" in str(err.value)
        assert "bogus_key" in str(err.value)

    def test_bad_value_reports_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config("seed = banana\n")
        assert "seed" in str(err.value)

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_config("seed 1\n")


class TestDerivedConfigs:
    def test_nms_radius_defaults_to_sigma_d(self):
        cfg = parse_config("sigma_d = 0.5\n")
        assert cfg.pipeline_config().nms_radius == 0.5

    def test_nms_radius_explicit_wins(self):
        cfg = parse_config("sigma_d = 0.5\nnms_radius = 0.2\n")
        assert cfg.pipeline_config().nms_radius == 0.2

    def test_compat_config_override(self):
        cfg = parse_config("theta_cmp_override = 0.8\n")
        assert cfg.compat_config().theta_override == 0.8
        assert parse_config("").compat_config().theta_override is None

    def test_graph_order_enum(self):
        from hgct.compat import GraphOrder
        assert parse_config("graph_order = fog\n").compat_config().order is GraphOrder.FOG

    def test_train_and_synth_configs(self):
        cfg = parse_config("epochs = 3\nlr = 0.01\nn_corrs = 42\nseed = 5\n")
        tc = cfg.train_config()
        assert tc.epochs == 3 and tc.lr == 0.01 and tc.seed == 5
        assert cfg.synth_config().n_corrs == 42

    def test_every_key_documented_in_defaults(self):
        import dataclasses
        text = default_config_text()
        for f in dataclasses.fields(RunConfig):
            assert f.name in text
