import csv
import json
from pathlib import Path

import pytest

from relaxblowup.cli import main

ROOT = Path(__file__).resolve().parents[1]
SMOKE = ROOT / "configs" / "smoke.ini"


@pytest.fixture(scope="module")
def smoke_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    assert main(["simulate", "--config", str(SMOKE), "--out", str(out)]) == 0
    return out


def test_plan_ok(capsys):
    assert main(["plan", "--gamma", "2", "--tau", "1"]) == 0
    text = capsys.readouterr().out
    assert "906" in text and "56" in text


def test_plan_writes_json(tmp_path):
    assert main(["plan", "--gamma", "2", "--tau", "1", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "plan.json").read_text())
    assert d["M"] == 906 and d["L"] == 56


def test_plan_cap_is_usage_error(capsys):
    assert main(["plan", "--gamma", "2", "--tau", "1", "--max-M", "100"]) == 2
    assert "largesupport" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["plan", "--gamma", "0.9"],
    ["plan", "--tau", "-1"],
    ["profile", "--M", "7"],
    ["simulate", "--config", "/nonexistent.ini", "--out", "/tmp/x"],
    ["simulate", "--config", str(SMOKE)],
    ["frobnicate"],
    [],
])
def test_usage_errors(argv):
    assert main(argv) == 2


def test_simulate_outputs(smoke_run):
    names = {p.name for p in smoke_run.iterdir()}
    assert {"manifest.json", "plan.json", "series.csv", "functionals.csv",
            "plot_series.gp", "snapshots"} <= names
    man = json.loads((smoke_run / "manifest.json").read_text())
    assert man["outcome"]["status"] == "completed"
    for f in man["files"]:
        assert (smoke_run / f).is_file()
    with open(smoke_run / "snapshots" / "0000.csv") as fh:
        assert next(csv.reader(fh)) == ["x", "rho", "u", "S"]


def test_verify_ok(smoke_run, capsys):
    assert main(["verify", str(smoke_run)]) == 0
    assert "ALL APPLICABLE CHECKS PASS" in capsys.readouterr().out


def _copy(src, dst):
    dst.mkdir()
    for n in ("manifest.json", "plan.json", "series.csv", "functionals.csv"):
        (dst / n).write_bytes((src / n).read_bytes())


def test_verify_detects_forged_mass(smoke_run, tmp_path):
    bad = tmp_path / "bad"
    _copy(smoke_run, bad)
    lines = (bad / "series.csv").read_text().splitlines()
    cols = lines[0].split(",")
    row = lines[-1].split(",")
    row[cols.index("mass_dev")] = "0.001"
    lines[-1] = ",".join(row)
    (bad / "series.csv").write_text("\n".join(lines) + "\n")
    assert main(["verify", str(bad)]) == 1


def test_verify_schema_mismatch(smoke_run, tmp_path):
    bad = tmp_path / "bad"
    _copy(smoke_run, bad)
    text = (bad / "series.csv").read_text().replace("mass_dev", "mass", 1)
    (bad / "series.csv").write_text(text)
    assert main(["verify", str(bad)]) == 2


def test_verify_missing_file(smoke_run, tmp_path):
    bad = tmp_path / "bad"
    _copy(smoke_run, bad)
    (bad / "manifest.json").unlink()
    assert main(["verify", str(bad)]) == 2


def test_verify_is_read_only(smoke_run):
    before = {p: p.stat().st_mtime_ns for p in smoke_run.rglob("*")}
    main(["verify", str(smoke_run)])
    assert {p: p.stat().st_mtime_ns for p in smoke_run.rglob("*")} == before


def test_boundary_breach_exit(tmp_path):
    ini = tmp_path / "tight.ini"
    ini.write_text(SMOKE.read_text().replace("[grid]\n", "[grid]\nhalf_width = 8.2\n"))
    ini.write_text(ini.read_text().replace("t_end = 0.2", "t_end = 1.0"))
    assert main(["simulate", "--config", str(ini), "--out", str(tmp_path / "o")]) == 3


def test_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(SMOKE), "--out", str(out), "--t-end", "0.05",
                 "--order", "1", "--splitting", "godunov"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["outcome"]["t"] == 0.05
    assert man["config"]["run"]["order"] == "1"


def test_profile_stdout(capsys):
    assert main(["profile", "--L", "2", "--M", "8"]) == 0
    cap = capsys.readouterr()
    rows = cap.out.strip().splitlines()
    assert rows[0] == "x,u" and len(rows) == 1602
    assert "norm_sq=55" in cap.err


def test_profile_files(tmp_path):
    assert main(["profile", "--L", "2", "--M", "8", "--step", "0.5", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "profile.csv").read_text().count("\n") == 34
    assert (tmp_path / "profile.gp").is_file()
