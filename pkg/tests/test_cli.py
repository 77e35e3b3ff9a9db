import csv
import json
import subprocess
import sys

import pytest

from mz_bayes.cli import main
from mz_bayes.experiments import default_workers
from mz_bayes.tables import emit_table


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_likelihood_command(tmp_path):
    out = tmp_path / "lik.csv"
    assert main(["likelihood", "--family", "twin-fock", "--n-total", "2",
                 "--theta", "1.5707963", "-o", str(out)]) == 0
    rows = read_csv(out)
    assert [float(r["mu"]) for r in rows] == [-1.0, 0.0, 1.0]
    probs = [float(r["prob"]) for r in rows]
    assert probs == pytest.approx([0.5, 0.0, 0.5], abs=1e-12)
    manifest = json.loads((tmp_path / "lik.manifest.json").read_text())
    assert manifest["config"]["n_total"] == 2
    assert manifest["library_version"]
    assert manifest["wall_time_s"] >= 0


def test_confidence_command(tmp_path):
    out = tmp_path / "conf.csv"
    assert main(["confidence", "--family", "twin-one", "--n-total", "2000", "--p", "1",
                 "--gamma", "0.6827", "-o", str(out)]) == 0
    (row,) = read_csv(out)
    assert float(row["c_gamma_times_nt"]) == pytest.approx(2.67, rel=0.02)
    assert float(row["phi_hat"]) == 0.0


def test_oracle_check_command(tmp_path, capsys):
    out = tmp_path / "oracle.csv"
    assert main(["oracle-check", "--max-two-j", "20", "-o", str(out)]) == 0
    assert capsys.readouterr().out.startswith("PASS")
    rows = read_csv(out)
    assert max(float(r["max_deviation"]) for r in rows) < 1e-10
    assert len(rows) == sum(tj + 1 for tj in range(21))


def test_sweep_p_schema(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-p", "--family", "twin-fock", "--n-total", "400", "--p-values", "1,2,4",
                 "--gammas", "0.6827,0.9545", "--workers", "1", "-o", str(out)]) == 0
    with open(out, newline="") as fh:
        header = fh.readline().strip()
    assert header == "gamma,p,n_per_run,c_gamma,c_gamma_times_nt"
    assert len(read_csv(out)) == 6


def test_posterior_schema_and_reproducible(tmp_path):
    args = ["posterior", "--family", "twin-fock", "--n-total", "10", "--p", "1", "--theta", "0.4",
            "--trials", "2000", "--seed", "9", "--grid", "1000"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "phi,density"
    assert b"\r" not in a.read_bytes()
    c = tmp_path / "c.csv"
    main(args[:-4] + ["--seed", "10", "--grid", "1000", "-o", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_sweep_nt_schema(tmp_path):
    out = tmp_path / "nt.json"
    assert main(["sweep-nt", "--family", "twin-one", "--n-total", "1", "--n-values", "100,200,1000",
                 "--format", "json", "--workers", "1", "-o", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert [set(r) for r in rows] == [{"n_total", "metric_value", "fit_exponent", "fit_prefactor"}] * 3
    assert rows[0]["fit_exponent"] == rows[2]["fit_exponent"]
    assert rows[0]["fit_exponent"] == pytest.approx(-1.0, abs=0.05)


def test_cramer_rao_and_tail_commands(tmp_path):
    out = tmp_path / "cr.csv"
    assert main(["cramer-rao", "--n-per-run", "100", "--p-values", "4,6", "--workers", "1",
                 "-o", str(out)]) == 0
    assert [r["saturated"] for r in read_csv(out)] == ["false", "true"]
    out = tmp_path / "tail.csv"
    assert main(["tail-check", "--j", "41/2", "--m-values", "1/2,3/2", "-o", str(out)]) == 0
    rows = read_csv(out)
    assert [r["m"] for r in rows] == ["0.5", "1.5"]
    assert rows[0]["j"] == "20.5"


def test_validation_errors(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["confidence", "--family", "twin-fock", "--n-total", "2000", "--p", "3", "-o", str(out)]) != 0
    assert "split" in capsys.readouterr().err
    assert main(["likelihood", "--family", "twin-fock", "--n-total", "4", "--theta", "2.0", "-o", str(out)]) != 0
    assert "theta" in capsys.readouterr().err
    assert not out.exists()
    with pytest.raises(SystemExit) as exc:
        main(["likelihood", "--n-total", "abc"])
    assert exc.value.code != 0


def test_workers_env_fallback(monkeypatch):
    monkeypatch.setenv("MZ_BAYES_WORKERS", "3")
    assert default_workers() == 3


def test_console_script(tmp_path):
    out = tmp_path / "lik.json"
    proc = subprocess.run([sys.executable, "-m", "mz_bayes.cli", "likelihood", "--family", "noon",
                           "--n-total", "3", "--format", "json", "-o", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    rows = json.loads(out.read_text())
    assert [r["mu"] for r in rows] == [-1.5, -0.5, 0.5, 1.5]


def test_emit_table_formats(tmp_path):
    rows = [{"a": 1, "b": 0.1, "c": True}, {"a": 2, "b": 1 / 3, "c": False}]
    emit_table(rows, "csv", tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == \
        "a,b,c\n1,0.10000000000000001,true\n2,0.33333333333333331,false\n"
    emit_table(rows, "json", tmp_path / "t.json")
    assert json.loads((tmp_path / "t.json").read_text())[1]["b"] == 1 / 3
    with pytest.raises(ValueError):
        emit_table([], "csv", tmp_path / "e.csv")
    with pytest.raises(ValueError):
        emit_table([{"a": 1}, {"b": 2}], "csv", tmp_path / "e.csv")
