import json
import subprocess
import sys

import pytest

from kpzlab.lab.cli import main
from kpzlab.lab.config import SCENARIOS


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert [line.split()[0] for line in out.splitlines()] == list(SCENARIOS)


def test_unknown_scenario_is_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["experiment", "no-such-thing"])
    assert e.value.code == 2


def test_bad_config_exit_code(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("replications = -3\n")
    assert main(["experiment", "geometry", "--config", str(conf), "--out", str(tmp_path)]) == 2
    assert "error [CONFIG_INVALID]" in capsys.readouterr().err
    assert main(["experiment", "geometry", "--config", str(tmp_path / "missing.conf")]) == 2
    assert main(["experiment", "geometry", "--threads", "0", "--out", str(tmp_path / "x")]) == 2


def test_geometry_reports_are_byte_identical(tmp_path, capsys):
    outs = []
    for k, threads in enumerate((1, 1, 3)):
        out = tmp_path / f"run{k}"
        code = main(["experiment", "geometry", "--replications", "12", "--seed", "5",
                     "--threads", str(threads), "--out", str(out)])
        assert code == 0
        outs.append(out)
    first = (outs[0] / "report.json").read_bytes()
    for o in outs[1:]:
        assert (o / "report.json").read_bytes() == first
    capsys.readouterr()
    assert main(["report", str(outs[0])]) == 0
    assert "verdict: PASS" in capsys.readouterr().out
    assert main(["report", str(outs[0]), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "PASS"


def test_report_missing_path(tmp_path):
    assert main(["report", str(tmp_path / "nothing")]) == 2


def test_sample_landscape(capsys, tmp_path):
    argv = ["sample-landscape", "--n", "20", "--seed", "3", "--z-lo", "-0.5", "--z-hi", "0.5",
            "--z-step", "0.25", "--x-lo", "-0.5", "--x-hi", "0.5", "--x-step", "0.25"]
    assert main(argv) == 0
    a = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == a
    assert main(argv + ["--format", "json", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "slice.json").exists()


def test_evolve_from_file(tmp_path, capsys):
    f = tmp_path / "h.csv"
    rows = ["x,value"] + [f"{-1 + 0.25 * i},{'-inf' if i % 3 else 0.0}" for i in range(9)]
    f.write_text("\n".join(rows) + "\n")
    assert main(["evolve", "--n", "20", "--initial", "file", "--initial-file", str(f),
                 "--x-lo", "-0.5", "--x-hi", "0.5", "--x-step", "0.25"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,h_t,Z_t" and len(lines) == 6
    assert main(["evolve", "--initial", "file"]) == 2


def test_evolve_flat(capsys):
    assert main(["evolve", "--n", "20", "--initial", "brownian", "--drift", "0.5",
                 "--z-lo", "-1", "--z-hi", "1", "--z-step", "0.25",
                 "--x-lo", "-0.5", "--x-hi", "0.5", "--x-step", "0.25"]) == 0
    assert capsys.readouterr().out.startswith("x,h_t,Z_t")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "kpzlab", "list-scenarios"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and "geometry" in r.stdout
