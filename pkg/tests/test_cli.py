import json

import numpy as np
import pytest

from regcert import (
    Grid,
    HolderSpec,
    ProblemSpec,
    SourceSpec,
    add_noise,
    certify,
    differentiate,
    error_budget,
    integrate_volterra,
    witness_pair,
)
from regcert.cli import make_truth, parse_deltas, resolve_config, run
from regcert.errors import UsageError
from regcert.function_space import read_function_csv
from regcert.linreg import certificate_csv_rows


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestParsing:
    def test_comma_list(self):
        assert parse_deltas("1e-2,1e-3,1e-4") == [1e-2, 1e-3, 1e-4]

    def test_log_sweep(self):
        got = parse_deltas("1e-5:1e-2:log4")
        np.testing.assert_allclose(got, [1e-5, 1e-4, 1e-3, 1e-2], rtol=1e-12)

    def test_json_list(self):
        assert parse_deltas([0.01, 0.001]) == [0.01, 0.001]

    def test_bad_sweeps(self):
        for bad in ("", "1e-2:1e-3", "0:1:log3", "1e-3:1e-2:lin5"):
            with pytest.raises(UsageError):
                parse_deltas(bad)

    def test_missing_required_key_named(self):
        with pytest.raises(UsageError, match="missing required key: p"):
            resolve_config(["certify-linear", "--problem", "volterra", "--n", "8",
                            "--k", "1", "--deltas", "1e-2", "--trials", "1"])

    def test_unknown_subcommand(self):
        assert run(["frobnicate"]) == 1

    def test_config_file_and_override(self, tmp_path):
        cfg = {"problem": "diagonal", "n": 8, "p": 0.5, "k": 1.0,
               "deltas": [0.01], "trials": 2}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        resolved = resolve_config(["certify-linear", "--config", str(path)])
        assert resolved.params["p"] == 0.5
        resolved2 = resolve_config(["certify-linear", "--config", str(path), "--p", "0.25"])
        assert resolved2.params["p"] == 0.25


class TestExitCodes:
    def test_certify_linear_pass_exit_zero(self, tmp_path):
        out = tmp_path / "c.csv"
        code = run(["certify-linear", "--problem", "diagonal", "--n", "8", "--p", "0.5",
                    "--k", "1", "--deltas", "1e-2,1e-3", "--trials", "2",
                    "--seed", "1", "--out", str(out)])
        assert code == 0
        assert out.read_text().splitlines()[0].startswith("delta,a,p,k,")

    def test_differentiate_low_exponent_exit_one(self, caplog):
        code = run(["differentiate", "--a", "1", "--m", "1", "--delta", "1e-3"])
        assert code == 1
        assert any("witness" in rec.message for rec in caplog.records)

    def test_missing_key_exit_one(self):
        assert run(["certify-linear", "--n", "8"]) == 1

    def test_unknown_model_exit_one(self, tmp_path):
        code = run(["certify-diff", "--n", "257", "--a", "2", "--m", "1",
                    "--deltas", "1e-3", "--models", "gaussian",
                    "--out", str(tmp_path / "x.csv")])
        assert code == 1

    def test_failed_certificate_exit_two(self, tmp_path):
        # Alternating noise at an odd step multiple exceeds the budget's
        # delta/h noise term through the one-sided boundary stencils, so this
        # configuration must produce a failing certificate row.
        out = tmp_path / "d.csv"
        code = run(["certify-diff", "--n", "4097", "--a", "2", "--m", "1",
                    "--deltas", "1e-4", "--models", "alternating",
                    "--truth", "quadratic", "--samples", "4",
                    "--seed", "0", "--out", str(out)])
        assert code == 2
        assert out.read_text().splitlines()[1].endswith(",false")


class TestDeterminism:
    def test_certify_linear_threads_byte_identical(self, tmp_path):
        base = ["certify-linear", "--problem", "volterra", "--n", "32", "--p", "0.5",
                "--k", "1", "--deltas", "1e-2,1e-4", "--trials", "6", "--seed", "42"]
        paths = [tmp_path / name for name in ("t1.csv", "t8.csv", "t1b.csv")]
        assert run(base + ["--threads", "1", "--out", str(paths[0])]) == 0
        assert run(base + ["--threads", "8", "--out", str(paths[1])]) == 0
        assert run(base + ["--threads", "1", "--out", str(paths[2])]) == 0
        assert _read(paths[0]) == _read(paths[1]) == _read(paths[2])

    def test_witness_repeatable(self, tmp_path):
        base = ["witness", "--n", "1025", "--a", "2", "--m", "1",
                "--deltas", "1e-5:1e-3:log3", "--seed", "3"]
        a, b = tmp_path / "w1.csv", tmp_path / "w2.csv"
        assert run(base + ["--out", str(a)]) == 0
        assert run(base + ["--out", str(b)]) == 0
        assert _read(a) == _read(b)

    def test_study_repeatable(self, tmp_path):
        base = ["study", "--n", "3", "--deltas", "1e-2,1e-3", "--budget", "80", "--seed", "5"]
        a, b = tmp_path / "s1.csv", tmp_path / "s2.csv"
        assert run(base + ["--out", str(a)]) == 0
        assert run(base + ["--out", str(b)]) == 0
        assert _read(a) == _read(b)

    def test_varmin_runs(self, tmp_path):
        out = tmp_path / "v.csv"
        assert run(["varmin", "--n", "3", "--delta", "1e-3", "--budget", "80",
                    "--seed", "5", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "delta,F_value,m_hat,feasible,iterations,restarts"
        assert lines[1].split(",")[3] == "true"


class TestThinAdapter:
    def test_certify_linear_rows_equal_module_output(self, tmp_path):
        out = tmp_path / "c.csv"
        code = run(["certify-linear", "--problem", "volterra", "--n", "32", "--p", "0.5",
                    "--k", "1", "--deltas", "1e-2,1e-3", "--trials", "4",
                    "--seed", "9", "--out", str(out)])
        assert code == 0
        certs = certify(ProblemSpec("volterra", 32, q=1.0, seed=9), SourceSpec(0.5, 1.0),
                        [1e-2, 1e-3], 4, seed=9, threads=1)
        want = "\n".join(certificate_csv_rows(certs, SourceSpec(0.5, 1.0))) + "\n"
        assert out.read_text() == want

    def test_witness_rows_equal_module_output(self, tmp_path):
        out = tmp_path / "w.csv"
        assert run(["witness", "--n", "1025", "--a", "2", "--m", "1",
                    "--deltas", "1e-4", "--out", str(out)]) == 0
        row = out.read_text().splitlines()[1].split(",")
        pair = witness_pair(1e-4, HolderSpec(2.0, 1.0), 0.5, Grid(1025))
        assert float(row[4]) == pair.bump_width
        assert float(row[5]) == pair.bump_amplitude
        assert float(row[6]) == pair.separation

    def test_differentiate_output_equals_module(self, tmp_path):
        out = tmp_path / "d.csv"
        assert run(["differentiate", "--n", "257", "--a", "2", "--m", "1",
                    "--delta", "1e-3", "--model", "smooth", "--truth", "quadratic",
                    "--seed", "4", "--out", str(out)]) == 0
        got = read_function_csv(out)
        grid = Grid(257)
        spec = HolderSpec(2.0, 1.0)
        truth = make_truth("quadratic", grid, spec, 4)
        data = add_noise(integrate_volterra(truth), 1e-3, "smooth", 4)
        want = differentiate(data, spec)
        assert np.array_equal(got.values, want.values)

    def test_certify_diff_budget_columns_equal_module(self, tmp_path):
        out = tmp_path / "cd.csv"
        run(["certify-diff", "--n", "513", "--a", "2", "--m", "1",
             "--deltas", "1e-3", "--models", "spike", "--samples", "4",
             "--seed", "2", "--out", str(out)])
        row = out.read_text().splitlines()[1].split(",")
        budget = error_budget(1e-3, HolderSpec(2.0, 1.0), Grid(513))
        assert float(row[3]) == budget.h
        assert float(row[4]) == budget.noise_term
        assert float(row[5]) == budget.bias_term
        assert float(row[6]) == budget.total


def test_stdout_emission(capsys):
    code = run(["witness", "--n", "1025", "--a", "2", "--m", "1", "--deltas", "1e-4"])
    assert code == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("delta,a,M,center,width,amplitude,separation")
