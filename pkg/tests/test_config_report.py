import json
import math

import pytest

from kpzlab.errors import ConfigError
from kpzlab.lab.config import (
    DEFAULTS,
    SCENARIOS,
    build_config,
    load_config_file,
    parse_config_text,
)
from kpzlab.lab.parallel import map_replications
from kpzlab.lab.report import ExperimentReport, load_report, rows_to_csv, summary_table


def test_parse_config_text():
    text = """
    # comment
    scenario = stationarity
    seed = 11          # alias of master_seed
    n = 80
    t = 1, 2
    epsilon = 0.1,0.05
    initial = brownian
    grid-step = auto
    plots = yes
    """
    v = parse_config_text(text)
    assert v == {"scenario": "stationarity", "master_seed": 11, "n": 80.0, "t": (1.0, 2.0),
                 "epsilon": (0.1, 0.05), "initial": ("brownian",), "grid_step": None,
                 "plots": True}


@pytest.mark.parametrize("text", ["n 5", "colour = red", "n = five", "plots = maybe",
                                  "replications = 1.5"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError) as e:
        parse_config_text(text)
    assert e.value.code == "CONFIG_INVALID"


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "nope.conf")


def test_build_config_precedence():
    cfg = build_config("long-time", {"n": 30.0, "replications": 40}, {"replications": 10,
                                                                      "n": None})
    assert cfg.n == 30.0 and cfg.replications == 10
    assert cfg.t == DEFAULTS["long-time"]["t"]
    assert cfg.step() == pytest.approx(1 / 150)


def test_every_scenario_has_valid_defaults():
    for name in SCENARIOS:
        assert build_config(name).scenario == name


@pytest.mark.parametrize("scenario,over", [
    ("nope", {}),
    ("geometry", {"n": 0.5}),
    ("geometry", {"replications": 0}),
    ("geometry", {"master_seed": -1}),
    ("long-time", {"t": (4.0, 1.0)}),
    ("long-time", {"t": (4.0,)}),
    ("geometry", {"beta": (0.2, 1.2)}),
    ("geometry", {"initial": ("sawtooth",)}),
    ("geometry", {"mu_rule": "fixed:abc"}),
    ("geometry", {"mu_rule": "sometimes"}),
    ("geometry", {"var_lo": 2.0}),
    ("stationarity", {"epsilon": ()}),
    ("geometry", {"bogus": 1}),
])
def test_build_config_rejects(scenario, over):
    with pytest.raises(ConfigError):
        build_config(scenario, None, over)


def test_config_file_scenario_must_match():
    with pytest.raises(ConfigError):
        build_config("geometry", {"scenario": "airy-sheet"})


def test_mu_rules():
    assert build_config("local-brownian").mu_for(epsilon=0.0625) == pytest.approx(2.0)
    cfg = build_config("long-time")
    t = 8.0
    r = (t ** (2 / 3) / cfg.a) ** 0.25
    assert cfg.mu_for(t=t) == pytest.approx(r / (4 * 2.0))
    assert build_config("geometry", None, {"mu_rule": "fixed:0.3"}).mu_for() == 0.3


def test_report_is_deterministic_and_excludes_timing(tmp_path):
    cfg = build_config("geometry", None, {"replications": 2})

    def make(wall):
        rep = ExperimentReport(cfg, wall_clock=wall)
        rep.check_le("gap", 0.0, 1e-9, kind="exact")
        rep.check_in("ratio", 1.02, 0.85, 1.15)
        rep.add_estimates([{"name": "x", "value": float("-inf"), "stderr": None, "n": 3}])
        rep.add_samples("s", ["a", "b"], [[1.0, float("-inf")], [0.5, 2.0]])
        return rep

    a, b = make(1.0), make(99.0)
    assert a.to_json() == b.to_json()
    out = a.write(tmp_path / "r", threads=4)
    d = load_report(out)
    assert d["verdict"] == "PASS" and d["estimates"][0]["value"] == "-inf"
    assert "wall_clock" not in json.dumps(d)
    assert json.loads((out / "timing.json").read_text())["threads"] == 4
    assert (out / "samples" / "s.csv").read_text() == "a,b\n1.0,-inf\n0.5,2.0\n"
    assert "out_dir" not in d["config"]
    text = summary_table(d)
    assert "verdict: PASS" in text and "ratio" in text
    assert summary_table(d, "csv").splitlines()[0] == "check,verdict,cmp,observed,threshold,kind"


def test_report_fail_verdict():
    rep = ExperimentReport(build_config("geometry"))
    rep.check_lt("ks", 0.2, 0.08)
    rep.check_ge("freq", 0.95, 0.9)
    assert not rep.passed and rep.verdict == "FAIL"
    assert [c.passed for c in rep.checks] == [False, True]


def test_rows_to_csv_round_trip():
    assert rows_to_csv(["x"], [[0.1], [math.pi]]) == f"x\n0.1\n{math.pi!r}\n"


@pytest.mark.parametrize("threads", [1, 2, 8])
def test_map_replications_keeps_order(threads):
    assert map_replications(lambda i: i * i, range(50), threads) == [i * i for i in range(50)]


@pytest.mark.parametrize("name", SCENARIOS)
def test_shipped_config_files_match_defaults(name):
    from pathlib import Path
    path = Path(__file__).resolve().parent.parent / "configs" / f"{name}.conf"
    assert build_config(name, load_config_file(path)) == build_config(name)
