import io
import json
import re
from pathlib import Path

import pandas as pd
import pytest

import main
from commands.common import ExitCode, dumps

GOLDEN = Path(__file__).resolve().parent / "golden"

_NUMBER = re.compile(r"(?<![\w.])(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)(?![\w.])")


def run_cli(capsys, *argv):
    code = main.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def write_variant(tmp_path, source, name="variant.json", **changes):
    doc = json.loads(source.read_text())
    for key, value in changes.items():
        if value is None:
            doc.pop(key, None)
        else:
            doc[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def assert_matches_golden(out, name, atol=1e-7):
    """Same text as the golden file; numbers only have to agree to ``atol``."""
    expected = (GOLDEN / name).read_text()
    got_parts, expected_parts = _NUMBER.split(out), _NUMBER.split(expected)
    assert got_parts[::2] == expected_parts[::2]
    got = [float(x) for x in got_parts[1::2]]
    assert got == pytest.approx([float(x) for x in expected_parts[1::2]], abs=atol)


@pytest.fixture
def s1_file(problems_dir):
    return problems_dir / "s1.json"


@pytest.fixture
def stimulus_file(problems_dir):
    return problems_dir / "stimulus.json"


@pytest.fixture
def stimulus_regularized(tmp_path, stimulus_file):
    # f + k u with u = (-2, 0)
    return write_variant(tmp_path, stimulus_file, f={"kind": "poly", "coeffs": [[[-0.5, 1.0]], [[0.2]]]}, K=None)


def test_analyze_s1(capsys, s1_file):
    code, out = run_cli(capsys, "analyze", s1_file)
    report = json.loads(out)
    assert code == ExitCode.UNSOLVABLE
    assert report["solvable"] is False
    assert report["ranks"]["d1"] == 1
    assert report["ranks"]["d2"] == 0
    assert report["residuals"]["cond1"] == pytest.approx(1.0, abs=1e-8)
    assert report["control"]["regularizable"] is True
    assert report["control"]["u_min_norm"] == pytest.approx([-1.0], abs=1e-8)
    assert report["control"]["control_dim"] == 0


def test_analyze_s1_without_forcing(capsys, problems_dir):
    code, out = run_cli(capsys, "analyze", problems_dir / "s1_regularized.json")
    report = json.loads(out)
    assert code == ExitCode.OK
    assert report["solvable"] is True
    assert report["ranks"]["r2"] == 1
    assert report["control"] is None


def test_analyze_stimulus(capsys, stimulus_file):
    code, out = run_cli(capsys, "analyze", stimulus_file)
    report = json.loads(out)
    assert code == ExitCode.UNSOLVABLE
    assert report["ranks"] == {"rank_D": 0, "r1": 5, "d1": 1, "rank_Q": 3, "r2": 2, "d2": 0}
    assert report["residuals"]["cond1"] == pytest.approx(1.5, abs=1e-10)
    assert report["control"]["u_min_norm"] == pytest.approx([-2.0, 0.0], abs=1e-10)
    assert report["control"]["control_dim"] == 1


@pytest.mark.parametrize("command", ["analyze", "solve", "regularize", "verify"])
@pytest.mark.parametrize("document", ["s1.json", "s1_regularized.json", "stimulus.json"])
def test_output_is_byte_identical_across_runs(capsys, problems_dir, command, document):
    argv = (command, problems_dir / document, "--oracle-nodes", 32)
    first = run_cli(capsys, *argv)
    assert run_cli(capsys, *argv) == first


@pytest.mark.parametrize(
    "command, document, golden, code",
    [
        ("analyze", "s1.json", "analyze_s1.json", ExitCode.UNSOLVABLE),
        ("analyze", "stimulus.json", "analyze_stimulus.json", ExitCode.UNSOLVABLE),
        ("regularize", "s1.json", "regularize_s1.json", ExitCode.OK),
        ("regularize", "stimulus.json", "regularize_stimulus.json", ExitCode.OK),
        ("verify", "s1_regularized.json", "verify_s1_regularized.json", ExitCode.OK),
    ],
)
def test_reports_match_golden_files(capsys, problems_dir, command, document, golden, code):
    result, out = run_cli(capsys, command, problems_dir / document)
    assert result == code
    assert_matches_golden(out, golden)


def test_regularized_stimulus_matches_golden_files(capsys, stimulus_regularized):
    code, out = run_cli(capsys, "solve", stimulus_regularized, "--samples", 3, "--params", "0,0")
    assert code == ExitCode.OK
    assert_matches_golden(out, "solve_stimulus_regularized.csv")
    code, out = run_cli(capsys, "verify", stimulus_regularized)
    assert code == ExitCode.OK
    assert_matches_golden(out, "verify_stimulus_regularized.json")


def test_verify_writes_the_oracle_grid(capsys, tmp_path, problems_dir):
    grid = tmp_path / "grid.csv"
    code, out = run_cli(capsys, "verify", problems_dir / "s1_regularized.json", "--oracle-nodes", 16, "--grid", grid)
    assert code == ExitCode.OK
    assert json.loads(out)["oracle"]["verdict"] == "solvable"
    table = pd.read_csv(grid)
    assert list(table.columns) == ["t", "side", "x1"]
    assert len(table) == 16
    assert table.side.iloc[0] == "right"
    assert table.side.iloc[-1] == "left"
    # every member of the family is c·t
    assert table.x1.iloc[0] == pytest.approx(0.0, abs=1e-8)
    slopes = table.x1.iloc[1:] / table.t.iloc[1:]
    assert float(slopes.max() - slopes.min()) < 1e-8


def test_unwritable_grid_file_exits_2(capsys, tmp_path, problems_dir):
    missing_dir = tmp_path / "missing" / "grid.csv"
    code, _ = run_cli(capsys, "verify", problems_dir / "s1_regularized.json", "--oracle-nodes", 16, "--grid", missing_dir)
    assert code == ExitCode.INVALID_INPUT


def test_floats_are_printed_with_17_significant_digits():
    assert dumps({"x": 0.1, "y": 2.0, "z": [1, True, None]}) == (
        '{\n  "x": 0.10000000000000001,\n  "y": 2.0,\n  "z": [\n    1,\n    true,\n    null\n  ]\n}'
    )


def test_regularize_s1(capsys, s1_file):
    code, out = run_cli(capsys, "regularize", s1_file)
    result = json.loads(out)
    assert code == ExitCode.OK
    assert result["u"] == pytest.approx([-1.0], abs=1e-8)
    assert result["objective"] == "minnorm"
    assert result["family"]["r2"] == 1
    assert result["solvable"] is True


def test_regularize_stimulus_min_norm_and_weighted(capsys, tmp_path, stimulus_file):
    code, out = run_cli(capsys, "regularize", stimulus_file)
    result = json.loads(out)
    assert code == ExitCode.OK
    assert result["u"] == pytest.approx([-2.0, 0.0], abs=1e-10)
    assert result["control_dim"] == 1
    assert result["family"] == {"r1": 5, "rank_Q": 3, "r2": 2, "d2": 0}

    weight, uref = tmp_path / "W.json", tmp_path / "u.json"
    weight.write_text("[[1.0, 0.0], [0.0, 1.0]]")
    uref.write_text("[-2.0, 1.0]")
    code, out = run_cli(capsys, "regularize", stimulus_file, "--objective", "weighted", "--weight", weight, "--uref", uref)
    result = json.loads(out)
    assert code == ExitCode.OK
    assert result["objective"] == "weighted"
    assert result["u"] == pytest.approx([-2.0, 1.0], abs=1e-10)


def test_weighted_objective_needs_a_weight(capsys, stimulus_file):
    code, _ = run_cli(capsys, "regularize", stimulus_file, "--objective", "weighted")
    assert code == ExitCode.INVALID_INPUT


def test_zero_kernel_is_not_regularizable(capsys, tmp_path, s1_file):
    path = write_variant(tmp_path, s1_file, K={"kind": "poly2", "coeffs": [[[[0.0]]]]})
    code, out = run_cli(capsys, "regularize", path)
    assert code == ExitCode.NOT_REGULARIZABLE
    result = json.loads(out)
    assert result["regularizable"] is False
    assert result["criterion_residual"] == pytest.approx(1.0, abs=1e-8)
    code, _ = run_cli(capsys, "analyze", path)
    assert code == ExitCode.NOT_REGULARIZABLE


def test_regularize_without_kernel_is_invalid(capsys, problems_dir):
    code, _ = run_cli(capsys, "regularize", problems_dir / "s1_regularized.json")
    assert code == ExitCode.INVALID_INPUT


def test_analyze_without_kernel_and_unsolvable(capsys, tmp_path, s1_file):
    code, out = run_cli(capsys, "analyze", write_variant(tmp_path, s1_file, K=None))
    assert code == ExitCode.NOT_REGULARIZABLE
    assert json.loads(out)["control"] is None


def test_solve_s1_regularized_csv(capsys, problems_dir):
    code, out = run_cli(capsys, "solve", problems_dir / "s1_regularized.json", "--params", "2", "--samples", 3)
    assert code == ExitCode.OK
    assert_matches_golden(out, "solve_s1_regularized.csv")
    assert out.splitlines()[0] == "t,side,x1"
    table = pd.read_csv(io.StringIO(out))
    assert list(table.side) == ["both"] * 3
    assert list(table.t) == pytest.approx([0.0, 0.5, 1.0])
    assert list(table.x1) == pytest.approx([0.0, 1.0, 2.0], abs=1e-12)


def test_solve_json_output(capsys, problems_dir):
    code, out = run_cli(
        capsys, "solve", problems_dir / "s1_regularized.json", "--params", "-1", "--samples", 2, "--output", "json"
    )
    assert code == ExitCode.OK
    table = json.loads(out)
    assert table["columns"] == ["t", "side", "x1"]
    assert [row[1] for row in table["rows"]] == ["both", "both"]
    assert table["rows"][1][2] == pytest.approx(-1.0, abs=1e-12)


def test_solve_duplicates_rows_at_impulse_instants(capsys, stimulus_regularized):
    code, out = run_cli(capsys, "solve", stimulus_regularized, "--samples", 3, "--params", "0,0")
    assert code == ExitCode.OK
    table = pd.read_csv(io.StringIO(out))
    assert list(table.columns) == ["t", "side", "x1", "x2"]
    assert list(table.side) == ["both", "left", "right", "both"]
    assert list(table.x1)[0] == pytest.approx(1.0, abs=1e-10)
    # x2' = 0.2 with x2(0) = 0.5 and the jump 0.1 x2(τ-) + 0.05
    assert list(table.x2) == pytest.approx([0.5, 0.6, 0.71, 0.81], abs=1e-10)


def test_solve_unsolvable_problem(capsys, s1_file):
    code = main.main(["solve", str(s1_file)])
    captured = capsys.readouterr()
    assert code == ExitCode.UNSOLVABLE
    assert captured.out == ""
    assert "idereg regularize" in captured.err


def test_solve_rejects_wrong_parameter_count(capsys, problems_dir):
    code, _ = run_cli(capsys, "solve", problems_dir / "s1_regularized.json", "--params", "1,2")
    assert code == ExitCode.INVALID_INPUT


def test_verify_s1_both_unsolvable(capsys, s1_file):
    code, out = run_cli(capsys, "verify", s1_file, "--oracle-nodes", 32)
    report = json.loads(out)
    assert code == ExitCode.OK
    assert report["theory"]["solvable"] is False
    assert report["oracle"]["verdict"] == "unsolvable"
    assert report["oracle"]["nodes_per_subinterval"] == 32
    assert report["agreement"] is True
    assert report["family_distance"] is None


def test_verify_s1_without_forcing(capsys, problems_dir):
    code, out = run_cli(capsys, "verify", problems_dir / "s1_regularized.json")
    report = json.loads(out)
    assert code == ExitCode.OK
    assert report["oracle"]["verdict"] == "solvable"
    assert report["agreement"] is True
    assert report["indeterminate"] is False
    assert report["family_distance"] < 1e-6


def test_verify_stimulus(capsys, stimulus_file, stimulus_regularized):
    code, out = run_cli(capsys, "verify", stimulus_file)
    assert code == ExitCode.OK
    assert json.loads(out)["agreement"] is True
    code, out = run_cli(capsys, "verify", stimulus_regularized)
    report = json.loads(out)
    assert code == ExitCode.OK
    assert report["theory"]["solvable"] is True
    assert report["family_distance"] < 1e-6


def test_absurd_solve_tolerance_forces_disagreement(capsys, s1_file):
    code, out = run_cli(capsys, "verify", s1_file, "--tol-solve", "10.0")
    report = json.loads(out)
    assert code == ExitCode.DISAGREEMENT
    assert report["theory"]["solvable"] is True
    assert report["agreement"] is False


@pytest.mark.parametrize(
    "changes",
    [
        {"dims": {"m": 2, "n": 1}},
        {"alpha": [0.0, 1.0]},
        {"ell": {"points": [{"t": 0.0, "matrix": [[1.0, 0.0]]}]}},
        {"A": {"kind": "poly", "coeffs": [[[0.0]], [[0.0], [1.0]]]}},
        {"colour": "blue"},
        {"f": {"kind": "spline"}},
    ],
)
def test_malformed_documents_exit_2(capsys, tmp_path, s1_file, changes):
    code, out = run_cli(capsys, "analyze", write_variant(tmp_path, s1_file, **changes))
    assert code == ExitCode.INVALID_INPUT
    assert out == ""


def test_unreadable_files_exit_2(capsys, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run_cli(capsys, "analyze", broken)[0] == ExitCode.INVALID_INPUT
    assert run_cli(capsys, "analyze", tmp_path / "missing.json")[0] == ExitCode.INVALID_INPUT


def test_bad_flags_exit_2(capsys, s1_file):
    assert run_cli(capsys, "analyze", s1_file, "--jump-model", "sometimes")[0] == ExitCode.INVALID_INPUT
    assert run_cli(capsys, "analyze", s1_file, "--tol-rank", "2.0")[0] == ExitCode.INVALID_INPUT
    assert run_cli(capsys, "analyze", s1_file, "--samples", "1")[0] == ExitCode.INVALID_INPUT
    assert run_cli(capsys, "simulate", s1_file)[0] == ExitCode.INVALID_INPUT
