import json
import subprocess
import sys


from affscale.cli import main


def run(*args):
    return main([str(a) for a in args])


class TestListProblems:
    def test_lines(self, capsys):
        assert run("list-problems") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "pb,name,dim,box_lo,box_hi,status"
        assert len(lines) == 16
        assert lines[3] == "3,Brown's almost linear system,5,-2,2,fully_specified"


class TestSolve:
    def test_converges(self, capsys, tmp_path):
        trace = tmp_path / "trace.jsonl"
        assert run("solve", "--problem", 3, "--start", 1, "--scaling", "kk", "--trace", trace) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["status"] == "converged"
        records = [json.loads(line) for line in trace.read_text().splitlines()]
        assert len(records) >= summary["it"]
        assert {"k", "residual_norm", "delta", "step_kind", "rho", "accepted"} <= set(records[0])

    def test_non_convergence_exit_code(self, capsys):
        assert run("solve", "--problem", 3, "--scaling", "cl", "--max-iter", 1) == 1

    def test_stub_is_usage_error(self, capsys):
        assert run("solve", "--problem", 1, "--scaling", "kk") == 2
        assert "not transcribed" in capsys.readouterr().err

    def test_bad_scaling(self, capsys):
        assert run("solve", "--problem", 3, "--scaling", "con:1,1,0,0") == 2

    def test_bad_config(self, capsys):
        assert run("solve", "--problem", 3, "--scaling", "kk", "--delta0", -1) == 2

    def test_unwritable_trace(self, capsys, tmp_path):
        assert run("solve", "--problem", 3, "--scaling", "kk", "--trace", tmp_path / "no" / "t.jsonl") == 3


class TestMinimize:
    def test_rosenbrock(self, capsys):
        assert run("minimize", "--problem", "rosenbrock", "--scaling", "kk") == 0
        out = json.loads(capsys.readouterr().out)
        assert out["iterations_to_1e-12"] <= 10

    def test_not_converged(self, capsys):
        assert run("minimize", "--problem", "wood", "--scaling", "cl", "--max-iter", 2) == 1

    def test_unknown_problem(self, capsys):
        assert run("minimize", "--problem", "beale", "--scaling", "kk") == 2


class TestBenchAndProfile:
    def test_pipeline(self, capsys, tmp_path):
        records = tmp_path / "records.csv"
        assert run("bench", "--problems", 3, "--scalings", "cl,kk,con:1/2,0,1/2,0", "--out", records) == 0
        assert len(records.read_text().splitlines()) == 1 + 3 * 3
        curves = tmp_path / "curves.csv"
        svg = tmp_path / "plot.svg"
        assert run("profile", "--in", records, "--metric", "fe", "--nested", "--out", curves, "--svg", svg) == 0
        assert curves.read_text().startswith("scaling,metric,tau,fraction\n")
        assert "subset-mean" in (tmp_path / "curves.csv.meta.json").read_text()
        assert svg.read_text().startswith("<svg")

    def test_aggregate(self, capsys, tmp_path):
        records = tmp_path / "records.csv"
        assert run("bench", "--problems", 3, "--scalings", "kk", "--aggregate", "mean-over-starts", "--out", records) == 0
        lines = records.read_text().splitlines()
        assert len(lines) == 2 and lines[1].startswith("3,mean,kk,")

    def test_bad_problem_list(self, capsys, tmp_path):
        assert run("bench", "--problems", "3,x", "--scalings", "kk", "--out", tmp_path / "r.csv") == 2
        assert run("bench", "--problems", "5", "--scalings", "kk", "--out", tmp_path / "r.csv") == 2

    def test_missing_input(self, capsys, tmp_path):
        assert run("profile", "--in", tmp_path / "none.csv", "--metric", "it", "--out", tmp_path / "c.csv") == 3

    def test_unwritable_output(self, capsys, tmp_path):
        assert run("bench", "--problems", 3, "--scalings", "kk", "--out", tmp_path / "no" / "r.csv") == 3


class TestCheckScaling:
    def test_report(self, capsys):
        assert run("check-scaling", "--scaling", "cl", "--problem", 3, "--samples", 500, "--seed", 4) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["sign_condition_violations"] == 0 and out["samples"] == 500

    def test_bad_samples(self, capsys):
        assert run("check-scaling", "--scaling", "cl", "--problem", 3, "--samples", 0) == 2


def test_usage_error_exit_code(capsys):
    assert run("solve") == 2
    assert run() == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "affscale", "list-problems"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("pb,name")
