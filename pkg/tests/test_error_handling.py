"""Tests for error handling and user feedback."""

import pytest
import yaml
from click.testing import CliRunner

from ridesim.cli.main import cli
from ridesim.generator import generate_instance


class TestErrorHandling:
    """Test error handling scenarios."""

    def setup_method(self):
        """Setup test runner."""
        self.runner = CliRunner()

    def test_validate_missing_config(self, tmp_path):
        """Test validation of a non-existent run configuration."""
        result = self.runner.invoke(cli, ['validate', '-c', str(tmp_path / 'run.yaml')])
        assert result.exit_code != 0
        assert "File not found" in result.output

    def test_validate_invalid_yaml_syntax(self, tmp_path):
        """Test validation with invalid YAML syntax."""
        config = tmp_path / "run.yaml"
        config.write_text("invalid: yaml: syntax: :")
        result = self.runner.invoke(cli, ['validate', '-c', str(config)])
        assert result.exit_code != 0
        assert "Invalid YAML syntax" in result.output

    def test_validate_missing_required_fields(self, tmp_path):
        """Test validation with missing required fields."""
        config = tmp_path / "run.yaml"
        config.write_text(yaml.dump({"network": "network.txt"}))
        result = self.runner.invoke(cli, ['validate', '-c', str(config)])
        assert result.exit_code != 0
        assert "Configuration error" in result.output

    def test_validate_broken_network(self, tmp_path):
        """Test that a malformed network file is listed as a validation error."""
        generate_instance(tmp_path, rows=2, cols=2, vehicle_count=1, request_count=2)
        (tmp_path / "network.txt").write_text("vertices 2\nveh 0 5 10\n")
        result = self.runner.invoke(cli, ['validate', '-c', str(tmp_path / 'run.yaml')])
        assert result.exit_code != 0
        assert "Validation Errors" in result.output
        assert "Network:" in result.output

    def test_run_invalid_instance(self, tmp_path):
        """Test that run reports requests outside the network."""
        generate_instance(tmp_path, rows=2, cols=2, vehicle_count=1, request_count=2)
        (tmp_path / "requests.txt").write_text("request 0 0 7 0\n")
        result = self.runner.invoke(cli, ['run', '-c', str(tmp_path / 'run.yaml')])
        assert result.exit_code != 0
        assert "Invalid instance" in result.output

    def test_run_missing_vehicle_file(self, tmp_path):
        """Test that a missing instance file is reported."""
        generate_instance(tmp_path, rows=2, cols=2, vehicle_count=1, request_count=2)
        (tmp_path / "vehicles.txt").unlink()
        result = self.runner.invoke(cli, ['run', '-c', str(tmp_path / 'run.yaml')])
        assert result.exit_code != 0
        assert "File not found" in result.output
        assert "Vehicle file not found" in result.output

    @pytest.mark.parametrize("strategy", ["a-star", ""])
    def test_run_invalid_strategy(self, strategy):
        """Test that unknown strategies are rejected by the command line."""
        result = self.runner.invoke(cli, ['run', '--strategy-pals', strategy])
        assert result.exit_code != 0
        assert "Invalid value" in result.output

    def test_build_ch_missing_network(self, tmp_path):
        """Test build-ch with a missing network file."""
        result = self.runner.invoke(
            cli, ['build-ch', '--network', str(tmp_path / 'none.txt'), '--out', str(tmp_path / 'cache')]
        )
        assert result.exit_code != 0
        assert "Network file not found" in result.output
