"""
Test Cases for the Run Configuration and Command Line
"""

import json

import pytest

from fracground.cli.main import (
    EXIT_CONFIG,
    EXIT_HYPOTHESIS,
    EXIT_OK,
    exit_code_for,
    main,
    parse_command,
)
from fracground.config.run_config import DEFAULT_CONFIG, apply_overrides, load_run_config, parse_run_config
from fracground.config.settings import NumericalDefaults, Settings, settings
from fracground.exceptions import ConfigError, ConvergenceError, FiberingError, HypothesisError

SMALL = [
    "--set", "problem.truncation_R=4",
    "--set", "problem.n_nodes=513",
    "--set", "problem.lambda_list=[10, 100]",
    "--set", "multistart.starts=2",
]

# the coarse grid is not held to the reference acceptance levels
RELAXED = [
    "--set", "sweep.tail_mass_limit=1",
    "--set", "sweep.h_alpha_distance_limit=1",
]


class TestRunConfig:
    def test_reference_file(self):
        config = load_run_config()
        assert DEFAULT_CONFIG.name == "reference.yaml"
        assert config.problem.alpha == 0.75
        assert config.problem.lam == 100.0
        assert config.problem.lambda_list == [10.0, 100.0, 1000.0, 10000.0]
        assert config.multistart.starts == 20
        assert config.embedding.c_inf is None
        assert (config.sweep.tail_mass_limit, config.sweep.h_alpha_distance_limit) == (0.05, 0.1)

    def test_alias_and_echo(self):
        config = parse_run_config("problem:\n  lambda: 50\n")
        assert config.problem.lam == 50.0
        resolved = config.resolved()
        assert resolved['problem']['lambda'] == 50.0
        assert set(resolved) == {"problem", "potential", "weight", "optimizer", "multistart", "sweep", "embedding"}

    def test_build_problem(self):
        config = parse_run_config("problem:\n  truncation_R: 4\n  n_nodes: 513\n")
        problem = config.build_problem(lam=10.0)
        assert problem.lam == 10.0
        assert problem.order.alpha == 0.75
        assert problem.potential.theta == 3.0
        assert problem.weight.sublevel_measure_exact > 1.5

    def test_yaml_error_reports_line(self):
        with pytest.raises(ConfigError) as info:
            parse_run_config("problem:\n  alpha: 0.75\n  lambda: [1, 2\n")
        assert info.value.line is not None
        assert info.value.line >= 3

    def test_invalid_value_reports_field(self):
        with pytest.raises(ConfigError) as info:
            parse_run_config("problem:\n  alpha: 0.3\n")
        assert info.value.field == "problem.alpha"

    def test_unknown_key_reports_field(self):
        with pytest.raises(ConfigError) as info:
            parse_run_config("weight:\n  slope: 2\n")
        assert info.value.field == "weight.slope"

    def test_descending_lambdas(self):
        with pytest.raises(ConfigError) as info:
            parse_run_config("problem:\n  lambda_list: [100, 10]\n")
        assert info.value.field == "problem"

    def test_section_must_be_mapping(self):
        with pytest.raises(ConfigError):
            parse_run_config("problem: 3\n")

    def test_overrides(self):
        data = apply_overrides({'problem': {'alpha': 0.75}}, ["problem.alpha=0.8", "sweep.warm_start=false",
                                                              "problem.lambda_list=[1, 2, 3]"])
        assert data['problem'] == {'alpha': 0.8, 'lambda_list': [1, 2, 3]}
        assert data['sweep'] == {'warm_start': False}
        config = load_run_config(overrides=["optimizer.gradient_tol=1e-7", "multistart.seed=5"])
        assert config.optimizer.gradient_tol == 1e-7
        assert config.multistart.seed == 5

    def test_bad_overrides(self):
        with pytest.raises(ConfigError):
            apply_overrides({}, ["problem.alpha"])
        with pytest.raises(ConfigError) as info:
            apply_overrides({}, ["unknown.key=1"])
        assert info.value.field == "unknown.key"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "absent.yaml")


class TestCommandParsing:
    def test_defaults(self):
        command = parse_command(["validate"])
        assert command.subcommand == "validate"
        assert command.config_path is None
        assert command.overrides == []
        assert command.seed is None

    def test_options(self, tmp_path):
        command = parse_command(["sweep", "--output-dir", str(tmp_path), "--seed", "3",
                                 "--set", "multistart.starts=2", "-vv"])
        assert command.output_dir == tmp_path
        assert command.seed == 3
        assert command.overrides == ["multistart.starts=2"]
        assert command.verbose == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            parse_command(["train"])

    def test_exit_codes(self):
        assert exit_code_for(ConfigError("x")) == EXIT_CONFIG
        assert exit_code_for(HypothesisError("x")) == EXIT_HYPOTHESIS
        assert exit_code_for(FiberingError("x")) == 4
        assert exit_code_for(ConvergenceError("x")) == 4
        assert exit_code_for(ValueError("x")) == EXIT_CONFIG
        assert exit_code_for(KeyError("x")) == 1


class TestCommands:
    def test_validate(self, tmp_path):
        assert main(["validate", "--output-dir", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "validation.csv").read_text().splitlines()
        assert lines[0] == "# seed: 0"
        assert lines[1].startswith("# config: {")
        document = json.loads((tmp_path / "validation.json").read_text())
        assert document['passed'] is True
        assert document['config']['problem']['lambda'] == 100.0
        assert len(document['checks']) == 12

    def test_validate_failure(self, tmp_path):
        code = main(["validate", "--output-dir", str(tmp_path), "--set", "embedding.c_inf=1.0"])
        assert code == EXIT_HYPOTHESIS
        assert json.loads((tmp_path / "validation.json").read_text())['passed'] is False

    def test_hypothesis_error(self, tmp_path):
        code = main(["validate", "--output-dir", str(tmp_path), "--set", "potential.theta=2.0"])
        assert code == EXIT_HYPOTHESIS
        error = json.loads((tmp_path / "error.json").read_text())
        assert error['exit_code'] == EXIT_HYPOTHESIS
        assert error['error_type'] == "HypothesisError"
        assert error['config']['potential']['theta'] == 2.0
        assert error['seed'] == 0

    def test_config_error(self, tmp_path):
        code = main(["solve", "--output-dir", str(tmp_path), "--set", "problem.alpha=1.5"])
        assert code == EXIT_CONFIG
        error = json.loads((tmp_path / "error.json").read_text())
        assert error['field'] == "problem.alpha"

    def test_config_file_error(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("problem:\n  alpha: [0.7\n")
        code = main(["validate", "--config", str(path), "--output-dir", str(tmp_path / "out")])
        assert code == EXIT_CONFIG
        assert "line" in json.loads((tmp_path / "out" / "error.json").read_text())

    def test_operators(self, tmp_path):
        assert main(["operators", "--output-dir", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "operators.csv").read_text().splitlines()
        assert lines[2].split(",")[:3] == ["n_nodes", "h", "max_error"]

    def test_bvp(self, tmp_path):
        code = main(["bvp", "--output-dir", str(tmp_path)] + SMALL)
        assert code == EXIT_OK
        document = json.loads((tmp_path / "bvp_ground_state.json").read_text())
        assert document['problem'] == "bvp"
        assert document['scalars']['gradient_norm'] <= 1e-6
        assert len(document['t']) == len(document['u']) == 65
        assert (tmp_path / "bvp_profile.txt").exists()
        assert (tmp_path / "bvp_multistart.csv").exists()
        records = (tmp_path / "bvp_iterations.jsonl").read_text().splitlines()
        assert set(json.loads(records[0])) == {"config", "seed"}


class TestSweepCommand:
    def test_sweep_is_deterministic(self, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["sweep", "--output-dir", str(first)] + SMALL + RELAXED) == EXIT_OK
        assert main(["sweep", "--output-dir", str(second)] + SMALL + RELAXED) == EXIT_OK
        table = (first / "sweep.csv").read_bytes()
        assert table == (second / "sweep.csv").read_bytes()
        lines = table.decode().splitlines()
        assert lines[0] == "# seed: 0"
        assert lines[2] == "lambda,c_lambda,x_norm_sq,tail_mass_fraction,h_alpha_distance,bound_ratio"
        assert len(lines) == 5
        assert (first / "profiles" / "u_tilde.txt").exists()
        assert (first / "profiles" / "u_lambda_100.txt").exists()
        summary = json.loads((first / "sweep.json").read_text())
        assert summary['complete'] is True
        assert len(summary['records']) == 2

    def test_distance_limit_fails_sweep(self, tmp_path):
        strict = ["--set", "sweep.tail_mass_limit=1", "--set", "sweep.h_alpha_distance_limit=1.0e-6"]
        code = main(["sweep", "--output-dir", str(tmp_path), "--seed", "2"] + SMALL + strict)
        assert code == 4
        assert (tmp_path / "sweep.csv").exists()
        error = json.loads((tmp_path / "error.json").read_text())
        assert error['exit_code'] == 4
        assert "h_alpha_distance_below_limit" in error['message']
        assert error['flags']['h_alpha_distance_below_limit'] is False
        assert error['flags']['tail_mass_below_limit'] is True
        assert error['seed'] == 2
        assert error['config']['sweep']['h_alpha_distance_limit'] == 1e-6
        assert len(error['records']) == 2


class TestEnvironment:
    def test_only_output_dir_is_read(self, monkeypatch, tmp_path):
        monkeypatch.setenv("FRACGROUND_OUTPUT_DIR", str(tmp_path))
        monkeypatch.setenv("FRACGROUND_MAX_WORKERS", "64")
        monkeypatch.setenv("FRACGROUND_BOUNDARY_TOLERANCE", "0.5")
        assert Settings().OUTPUT_DIR == str(tmp_path)
        assert not hasattr(Settings(), "MAX_WORKERS")
        assert NumericalDefaults().MAX_WORKERS == 4
        assert NumericalDefaults().BOUNDARY_TOLERANCE == 1e-3

    def test_output_dir_default_follows_settings(self, monkeypatch, tmp_path):
        monkeypatch.setattr(settings, "OUTPUT_DIR", str(tmp_path / "runs"))
        assert parse_command(["validate"]).output_dir == tmp_path / "runs"
