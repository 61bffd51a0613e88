import pytest

from fairx.config import ConfigError, ExperimentConfig

MINIMAL = """\
env:
  kind: mab
  means: [0.2, 0.5]
merit: {kind: exp, c: [1, 2]}
algorithms:
  - fairx_ts
  - {name: fairx_ucb, grid: {alpha: [0.1, theory]}}
horizon: 100
"""


class TestParse:
    def test_defaults(self):
        cfg = ExperimentConfig.from_yaml(MINIMAL)
        assert cfg.num_seeds == 10
        assert (cfg.validation_fraction, cfg.test_fraction) == (0.2, 0.8)
        assert cfg.pgd == {"step_size": 0.01, "num_steps": 10}
        assert [a.name for a in cfg.algorithms] == ["fairx_ts", "fairx_ucb"]

    def test_merit_sweep(self):
        merits = ExperimentConfig.from_yaml(MINIMAL).merits()
        assert [v for v, _ in merits] == [1.0, 2.0]
        assert merits[1][1].param == 2.0

    def test_round_trip(self):
        cfg = ExperimentConfig.from_yaml(MINIMAL)
        again = ExperimentConfig.from_yaml(cfg.to_yaml())
        assert again == cfg
        assert again.to_yaml() == cfg.to_yaml()

    def test_presets_round_trip(self, configs_dir):
        for path in sorted(configs_dir.glob("*.yaml")):
            cfg = ExperimentConfig.load(path)
            assert ExperimentConfig.from_yaml(cfg.to_yaml(), cfg.base_dir) == cfg


class TestErrors:
    @pytest.mark.parametrize("text,field,line", [
        (MINIMAL.replace("horizon: 100", "horizon: lots"), "horizon", 8),
        (MINIMAL.replace("kind: mab", "kind: casino"), "env.kind", 2),
        (MINIMAL.replace("fairx_ts", "fairx_tss"), "algorithms.0.name", 6),
        (MINIMAL + "colour: red\n", "colour", 9),
        (MINIMAL.replace("means: [0.2, 0.5]", "means: [0.2, 0.5]\n  sigma: wide"), "env.sigma", 4),
    ])
    def test_field_and_line(self, text, field, line):
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig.from_yaml(text)
        assert exc.value.field_path == field
        assert exc.value.line == line
        assert f"line {line}" in str(exc.value)

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="horizon"):
            ExperimentConfig.from_yaml(MINIMAL.replace("horizon: 100\n", ""))

    def test_invalid_yaml(self):
        with pytest.raises(ConfigError, match="line"):
            ExperimentConfig.from_yaml("env: [unclosed\n")

    def test_fractions(self):
        with pytest.raises(ConfigError, match="sum to 1"):
            ExperimentConfig.from_yaml(MINIMAL + "test_fraction: 0.5\n")

    def test_bad_merit(self):
        with pytest.raises(ConfigError, match="merit"):
            ExperimentConfig.from_yaml(MINIMAL.replace("{kind: exp, c: [1, 2]}", "{kind: exp}"))

    def test_unknown_pgd_field(self):
        with pytest.raises(ConfigError, match="pgd.momentum"):
            ExperimentConfig.from_yaml(MINIMAL + "pgd: {momentum: 0.9}\n")


class TestOverrides:
    def test_scalar(self):
        cfg = ExperimentConfig.from_yaml(MINIMAL).with_overrides({"horizon": "7", "pgd.step_size": "0.5"})
        assert cfg.horizon == 7 and cfg.pgd["step_size"] == 0.5

    def test_list_entry(self):
        cfg = ExperimentConfig.from_yaml(MINIMAL).with_overrides({"env.means.1": "0.9"})
        assert cfg.env["means"] == [0.2, 0.9]

    def test_type_checked(self):
        with pytest.raises(ConfigError, match="does not match"):
            ExperimentConfig.from_yaml(MINIMAL).with_overrides({"horizon": "ten"})
        with pytest.raises(ConfigError, match="does not match"):
            ExperimentConfig.from_yaml(MINIMAL).with_overrides({"horizon": "1.5"})

    def test_unknown_list_entry(self):
        with pytest.raises(ConfigError, match="no such list entry"):
            ExperimentConfig.from_yaml(MINIMAL).with_overrides({"algorithms.5.name": "ts"})
