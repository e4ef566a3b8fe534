"""
Integration tests for the czgrid command line
"""
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

import czgrid.hardy_bmo
from czgrid.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, cli

pytestmark = pytest.mark.integration

CHAIN_FIRST_LINE = (
    '{"schema_version":1,"kind":"chain","half":"omega1","j":0,"k":5,'
    '"t":"1","r":"1","ext":"horizontal","set":"1 5 0 1 1"}'
)


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _lines(path: Path):
    return path.read_text(encoding="utf-8").splitlines()


def test_grid_command(runner: CliRunner, config_file: Path, temp_dir: Path):
    """Test grid verification writes a passing report"""
    out = temp_dir / "out"
    result = runner.invoke(cli, ["grid", "--config", str(config_file), "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    report = json.loads((out / "grid.json").read_text(encoding="utf-8"))
    assert report["passed"] is True
    assert report["growth_fit"]["n"] == 1
    assert (out / "grid.jsonl").exists()
    assert (out / "grid.csv").exists()


def test_grid_is_deterministic(runner: CliRunner, config_file: Path, temp_dir: Path):
    """Test identical seeds give byte-identical results"""
    for name in ("a", "b"):
        result = runner.invoke(cli, ["grid", "--config", str(config_file), "--out", str(temp_dir / name)])
        assert result.exit_code == EXIT_OK, result.output
    for suffix in ("json", "jsonl"):
        a = (temp_dir / "a" / f"grid.{suffix}").read_bytes()
        b = (temp_dir / "b" / f"grid.{suffix}").read_bytes()
        assert a == b


def test_maximal_command(runner: CliRunner, config_file: Path, temp_dir: Path):
    out = temp_dir / "out"
    result = runner.invoke(cli, ["maximal", "--config", str(config_file), "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    summary = json.loads((out / "maximal.json").read_text(encoding="utf-8"))
    assert summary["finite"] is True
    assert set(summary["a_p"]) == {"2.0"}
    assert summary["literal_constant_exceedances"] >= 0
    experiments = {json.loads(line)["experiment"] for line in _lines(out / "maximal.jsonl")}
    assert {"weak11", "witness_dyadic", "witness_restricted"} <= experiments


def test_czdecomp_command(runner: CliRunner, config_file: Path, temp_dir: Path):
    out = temp_dir / "out"
    result = runner.invoke(cli, ["czdecomp", "--config", str(config_file), "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    rows = [json.loads(line) for line in _lines(out / "czdecomp.jsonl")]
    assert rows
    assert all(row["violations"] == [] for row in rows)


class TestCounterexampleCommand:
    """Tests for the counterexample table"""

    def test_default_scales(self, runner: CliRunner, config_file: Path, temp_dir: Path):
        out = temp_dir / "out"
        result = runner.invoke(cli, ["counterexample", "--config", str(config_file), "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        rows = [json.loads(line) for line in _lines(out / "counterexample.jsonl")]
        assert sorted(r["ell"] for r in rows) == [-20, -10, -5]
        pairings = {r["ell"]: r["pairing"] for r in rows}
        assert pairings[-5] == pytest.approx(2.2329, abs=1e-4)
        assert pairings[-20] == pytest.approx(7.4315, abs=1e-4)
        summary = json.loads((out / "counterexample.json").read_text(encoding="utf-8"))
        assert summary["slope"] == pytest.approx(0.34657359, abs=1e-8)

    def test_single_scale(self, runner: CliRunner, temp_dir: Path):
        """Test one scale gives one row and no slope"""
        config = temp_dir / "single.conf"
        config.write_text("j_list = -5\n", encoding="utf-8")
        out = temp_dir / "out"
        result = runner.invoke(cli, ["counterexample", "--config", str(config), "--out", str(out)])
        assert result.exit_code == EXIT_OK, result.output
        assert len(_lines(out / "counterexample.jsonl")) == 1
        summary = json.loads((out / "counterexample.json").read_text(encoding="utf-8"))
        assert summary["slope"] is None

    def test_failed_verification(
        self, runner: CliRunner, config_file: Path, temp_dir: Path, monkeypatch: pytest.MonkeyPatch
    ):
        """Test a broken quadrature is reported with exit code 2"""
        monkeypatch.setattr(czgrid.hardy_bmo, "graded_log_quadrature", lambda h: 0.0)
        result = runner.invoke(
            cli, ["counterexample", "--config", str(config_file), "--out", str(temp_dir / "out")]
        )
        assert result.exit_code == EXIT_FAILED


class TestUsageErrors:
    """Tests for exit code 1 on bad input"""

    def test_zero_trials(self, runner: CliRunner, temp_dir: Path):
        result = runner.invoke(cli, ["maximal", "--trials", "0", "--out", str(temp_dir)])
        assert result.exit_code == EXIT_USAGE

    def test_inverted_levels(self, runner: CliRunner, temp_dir: Path):
        result = runner.invoke(cli, ["grid", "--j-lo", "0", "--j-hi", "-1", "--out", str(temp_dir)])
        assert result.exit_code == EXIT_USAGE

    def test_unknown_option(self, runner: CliRunner):
        result = runner.invoke(cli, ["grid", "--bogus"])
        assert result.exit_code == EXIT_USAGE

    def test_unknown_config_key(self, runner: CliRunner, temp_dir: Path):
        config = temp_dir / "bad.conf"
        config.write_text("colour = blue\n", encoding="utf-8")
        result = runner.invoke(cli, ["grid", "--config", str(config)])
        assert result.exit_code == EXIT_USAGE

    def test_missing_config(self, runner: CliRunner, temp_dir: Path):
        result = runner.invoke(cli, ["chain", "--config", str(temp_dir / "nope.conf")])
        assert result.exit_code == EXIT_USAGE


class TestChainCommand:
    """Tests for the grid dump"""

    def test_golden_first_line(self, runner: CliRunner, temp_dir: Path):
        out = temp_dir / "out"
        result = runner.invoke(cli, ["chain", "--point", "0,0", "--out", str(out), "--no-csv"])
        assert result.exit_code == EXIT_OK, result.output
        lines = _lines(out / "chain.jsonl")
        assert lines[0] == CHAIN_FIRST_LINE
        located = json.loads(lines[-1])
        assert located["kind"] == "id"
        assert located["id"] == "omega1:N:0:0:"
        assert located["set"] == "1 5 0 1 1"
        assert not (out / "chain.csv").exists()

    def test_bad_point(self, runner: CliRunner, temp_dir: Path):
        result = runner.invoke(cli, ["chain", "--point", "zero", "--out", str(temp_dir)])
        assert result.exit_code == EXIT_USAGE
