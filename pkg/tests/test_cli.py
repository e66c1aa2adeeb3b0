"""End-to-end checks of the command-line interface against fixture files."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from measurelp import canonical_json, load_report
from measurelp.cli import run_cli

FIXTURES = Path(__file__).parent / "fixtures"


def fixture(name: str) -> str:
    return str(FIXTURES / name)


class TestExitCodes:
    def test_solve_converged(self, capsys):
        assert run_cli(["solve", fixture("cauchy_schwarz.json")]) == 0
        out = capsys.readouterr().out
        assert "status: strong_duality_numerically" in out
        assert "gap (dual - primal):" in out

    def test_solve_piecewise(self, capsys):
        assert run_cli(["solve", fixture("piecewise.json")]) == 0
        assert "(moment)" in capsys.readouterr().out

    def test_solve_infeasible(self, capsys):
        assert run_cli(["solve", fixture("contradictory.json")]) == 3
        assert "primal_infeasible" in capsys.readouterr().out

    def test_solve_density_flat(self, capsys):
        assert run_cli(["solve", fixture("density_flat.json")]) == 0
        out = capsys.readouterr().out
        assert "(lp_density, p=2)" in out
        assert "status: strong_duality_numerically" in out

    def test_solve_density_concentration(self, capsys):
        assert run_cli(["solve", fixture("density_concentration.json")]) == 0
        out = capsys.readouterr().out
        assert "optimizer escapes the density class" in out

    def test_dual_iteration_limited(self, capsys):
        code = run_cli(
            ["dual", fixture("cauchy_schwarz.json"), "--tol", "1e-12", "--max-iters", "1"]
        )
        assert code == 2
        assert "not_converged" in capsys.readouterr().out

    def test_primal_moment(self, capsys):
        assert run_cli(["primal", fixture("cauchy_schwarz.json"), "--grid", "129"]) == 0
        out = capsys.readouterr().out
        assert "value: 1" in out
        assert "atom: weight 1 at (1.0,)" in out

    def test_primal_density(self, capsys):
        assert run_cli(["primal", fixture("density_flat.json"), "--grid", "8"]) == 0
        assert "value: 1" in capsys.readouterr().out

    def test_dual_moment(self, capsys):
        assert run_cli(["dual", fixture("cauchy_schwarz.json"), "--tol", "1e-6"]) == 0
        assert "converged" in capsys.readouterr().out

    def test_dual_density(self, capsys):
        assert run_cli(["dual", fixture("density_flat.json"), "--tol", "1e-6"]) == 0
        assert "value: 1" in capsys.readouterr().out

    def test_slater_moment(self, capsys):
        assert run_cli(["slater", fixture("cauchy_schwarz.json")]) == 0
        out = capsys.readouterr().out
        assert "primal margin:" in out
        assert "dual margin:" in out

    def test_slater_infeasible(self, capsys):
        assert run_cli(["slater", fixture("contradictory.json")]) == 3
        out = capsys.readouterr().out
        assert "feasible: False" in out
        assert "rank deficient" in out

    def test_slater_density(self, capsys):
        assert run_cli(["slater", fixture("density_flat.json")]) == 0
        assert "margin: 0.5" in capsys.readouterr().out

    def test_validate_good_files(self, capsys):
        assert run_cli(["validate", fixture("cauchy_schwarz.json")]) == 0
        assert "valid moment problem" in capsys.readouterr().out
        assert run_cli(["validate", fixture("density_flat.json")]) == 0
        assert "valid lp_density problem" in capsys.readouterr().out

    def test_option_bound(self, capsys):
        code = run_cli(
            [
                "option-bound",
                "--domain", "0", "4",
                "--forward", "1",
                "--payoff", "max(x1 - 2, 0)",
                "--direction", "sup",
                "--grid", "257",
                "--tol", "1e-6",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "certified bound: 0.5" in out


class TestValidationDiagnostics:
    def test_overlap_names_the_boxes(self, capsys):
        assert run_cli(["validate", fixture("overlapping.json")]) == 4
        err = capsys.readouterr().err
        assert "boxes 0 and 1 overlap" in err
        assert "lies in 2 boxes" in err

    def test_volume_deficit_reports_volumes(self, capsys):
        assert run_cli(["validate", fixture("volume_deficit.json")]) == 4
        err = capsys.readouterr().err
        assert "volume deficit" in err
        assert "boxes sum to 1.0, hull volume is 2.0" in err
        assert "lies in 0 boxes" in err

    def test_bad_expression_reports_offset(self, capsys):
        assert run_cli(["validate", fixture("bad_expression.json")]) == 4
        err = capsys.readouterr().err
        assert "objective[0]" in err
        assert "byte offset" in err

    def test_missing_file(self, capsys):
        assert run_cli(["validate", fixture("no_such_file.json")]) == 4
        assert "input error" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert run_cli(["validate", str(path)]) == 4
        assert "input error" in capsys.readouterr().err

    def test_unknown_solver_key(self, tmp_path, capsys):
        doc = json.loads(Path(fixture("cauchy_schwarz.json")).read_text())
        doc["solver"] = {"bogus": 3}
        path = tmp_path / "bad_solver.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        assert run_cli(["validate", str(path)]) == 4
        assert "solver.bogus" in capsys.readouterr().err

    def test_no_arguments(self, capsys):
        assert run_cli([]) == 4

    def test_unknown_subcommand(self, capsys):
        assert run_cli(["frobnicate"]) == 4

    def test_help_exits_zero(self, capsys):
        assert run_cli(["--help"]) == 0
        assert "solve" in capsys.readouterr().out


class TestReports:
    def strip_timings(self, path: Path) -> tuple[str, dict]:
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc.pop("timings")
        return canonical_json(doc), doc

    def test_solve_report_is_byte_stable(self, tmp_path, capsys):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for path in paths:
            code = run_cli(["solve", fixture("cauchy_schwarz.json"), "--report", str(path)])
            assert code == 0
        first, doc = self.strip_timings(paths[0])
        second, _ = self.strip_timings(paths[1])
        assert first == second
        assert doc["kind"] == "moment"
        assert doc["format_version"] == "1"
        assert doc["status"] == "strong_duality_numerically"
        assert doc["gap"] == doc["dual_value"] - doc["primal_value"]

    def test_density_report_is_byte_stable(self, tmp_path, capsys):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for path in paths:
            code = run_cli(["solve", fixture("density_flat.json"), "--report", str(path)])
            assert code == 0
        first, doc = self.strip_timings(paths[0])
        second, _ = self.strip_timings(paths[1])
        assert first == second
        assert doc["kind"] == "lp_density"
        assert doc["slater"]["margin"] == pytest.approx(0.5, abs=1e-9)

    def test_report_round_trips_through_loader(self, tmp_path, capsys):
        path = tmp_path / "report.json"
        run_cli(["solve", fixture("piecewise.json"), "--report", str(path)])
        doc = load_report(path)
        assert doc["kind"] == "moment"
        assert doc["primal_value"] == pytest.approx(1.0, abs=1e-6)
        assert "total_seconds" in doc["timings"]

    def test_option_bound_report(self, tmp_path, capsys):
        path = tmp_path / "option.json"
        code = run_cli(
            [
                "option-bound",
                "--domain", "0", "4",
                "--forward", "1",
                "--quote", "1", "0.4",
                "--payoff", "max(x1 - 2, 0)",
                "--direction", "sup",
                "--grid", "513",
                "--tol", "1e-6",
                "--report", str(path),
            ]
        )
        assert code == 0
        doc = load_report(path)
        assert doc["status"] == "strong_duality_numerically"
        assert doc["dual_value"] == pytest.approx(4.0 / 15.0, abs=1e-3)
