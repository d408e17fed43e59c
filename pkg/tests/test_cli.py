import subprocess
import sys

import pytest
import yaml

from richards_optctl.cli import main
from richards_optctl.scenario import builtin_scenario, scenario_to_dict


def _write(tmp_path, doc, name="sc.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "haverkamp-ex1" in out and "glendale-ex4" in out


def test_validate_ok_and_invalid(tmp_path, capsys):
    doc = scenario_to_dict(builtin_scenario("berino-ex3"))
    assert main(["validate", _write(tmp_path, doc)]) == 0
    doc["soil"]["n"] = 0.9
    assert main(["validate", _write(tmp_path, doc, "bad.yaml")]) == 1
    assert "n>1" in capsys.readouterr().err


def test_schema_error_exit_code(tmp_path):
    doc = scenario_to_dict(builtin_scenario("berino-ex3"))
    del doc["soil"]["family"]
    assert main(["validate", _write(tmp_path, doc)]) == 1


def test_run_with_overrides(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "haverkamp-ex1", "--out", str(out), "--nz", "21", "--nt", "11",
                 "--maxit", "2"]) == 0
    assert (out / "report.json").exists()
    assert "haverkamp-ex1" in capsys.readouterr().out


def test_run_many_uses_subdirectories(tmp_path, monkeypatch):
    monkeypatch.setenv("RICHARDS_OPTCTL_THREADS", "2")
    assert main(["run", "haverkamp-ex1", "glendale-ex4", "--out", str(tmp_path),
                 "--nz", "11", "--nt", "6"]) == 0
    assert (tmp_path / "haverkamp-ex1" / "theta.csv").exists()
    assert (tmp_path / "glendale-ex4" / "theta.csv").exists()


def test_solver_failure_exit_code(tmp_path):
    doc = scenario_to_dict(builtin_scenario("haverkamp-ex1"))
    doc["grid"].update(Nz=21, Nt=6)
    doc["pgd"].update(picard_maxit=1, picard_tol=1e-15)
    doc["u_init"] = 0.1
    assert main(["run", _write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 2


def test_unknown_target_exit_code(tmp_path):
    assert main(["run", "no-such-scenario", "--out", str(tmp_path)]) == 1


def test_gradient_check(capsys):
    assert main(["gradient-check", "haverkamp-ex1", "--nz", "21", "--nt", "21",
                 "--directions", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("rel_err=") == 2 and "max relative error" in out


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "richards_optctl.cli", "list"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "berino-ex3" in res.stdout
