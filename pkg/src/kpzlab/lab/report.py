"""Report assembly and persistence.

``report.json`` is deterministic: keys are sorted, floats use ``repr``,
and nothing that depends on the run (wall-clock, thread count, output
path) is written into it.  Those go to ``timing.json`` next to it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import ExperimentConfig

CALIBRATION_NOTE = (
    "Statistical thresholds are fixed-seed calibrations chosen for desk-scale runs; "
    "exact checks use a 1e-9 float tolerance."
)


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    return x


@dataclass
class Check:
    name: str
    observed: Any
    threshold: Any
    comparison: str
    passed: bool
    kind: str = "calibrated"   # "exact" | "calibrated"
    note: str = ""

    def to_record(self) -> dict:
        return {"name": self.name, "observed": _json_safe(self.observed),
                "threshold": _json_safe(self.threshold), "comparison": self.comparison,
                "verdict": "PASS" if self.passed else "FAIL", "kind": self.kind,
                "note": self.note}


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    checks: list[Check] = field(default_factory=list)
    estimates: list[dict] = field(default_factory=list)
    samples: dict[str, tuple[list[str], list[Sequence]]] = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    # -- building -----------------------------------------------------------
    def check(self, name, observed, threshold, comparison, passed, kind="calibrated", note=""):
        self.checks.append(Check(name, observed, threshold, comparison, bool(passed), kind, note))
        return bool(passed)

    def check_le(self, name, observed, bound, kind="calibrated", note=""):
        return self.check(name, observed, bound, "<=", observed <= bound, kind, note)

    def check_ge(self, name, observed, bound, kind="calibrated", note=""):
        return self.check(name, observed, bound, ">=", observed >= bound, kind, note)

    def check_lt(self, name, observed, bound, kind="calibrated", note=""):
        return self.check(name, observed, bound, "<", observed < bound, kind, note)

    def check_in(self, name, observed, lo, hi, kind="calibrated", note=""):
        return self.check(name, observed, [lo, hi], "in", lo <= observed <= hi, kind, note)

    def add_estimates(self, records: Sequence[dict]) -> None:
        self.estimates.extend(records)

    def add_samples(self, name: str, header: list[str], rows) -> None:
        self.samples[name] = (list(header), [list(r) for r in rows])

    # -- views --------------------------------------------------------------
    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def seed_record(self) -> dict:
        return {
            "master_seed": int(self.config.master_seed),
            "key_scheme": "(master_seed, stream_id=replication, substream_id=purpose, path)",
            "generator": "Philox keyed by SeedSequence(master_seed, spawn_key)",
        }

    def artifact_names(self) -> list[str]:
        ext = self.config.sample_format
        names = ["report.json", "timing.json"]
        names += [f"samples/{k}.{ext}" for k in sorted(self.samples)]
        if self.config.plots:
            names += [f"plots/{k}.svg" for k in sorted(self.plot_series())]
        return names

    def plot_series(self) -> dict:
        return self.info.get("plot_series", {})

    def to_dict(self) -> dict:
        info = {k: v for k, v in self.info.items() if k != "plot_series"}
        return _json_safe({
            "scenario": self.config.scenario,
            "verdict": self.verdict,
            "config": self.config.to_record(),
            "seed_record": self.seed_record(),
            "checks": [c.to_record() for c in self.checks],
            "estimates": self.estimates,
            "info": info,
            "artifacts": self.artifact_names(),
            "timing": {"file": "timing.json"},
            "threshold_note": CALIBRATION_NOTE,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    # -- persistence --------------------------------------------------------
    def write(self, out_dir: str | Path, threads: int = 1) -> Path:
        out = Path(out_dir)
        (out / "samples").mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        (out / "timing.json").write_text(json.dumps(
            {"wall_clock_seconds": self.wall_clock, "threads": threads,
             "finished_unix": time.time()}, indent=2) + "\n", encoding="utf-8")
        for name, (header, rows) in sorted(self.samples.items()):
            path = out / "samples" / f"{name}.{self.config.sample_format}"
            if self.config.sample_format == "csv":
                path.write_text(rows_to_csv(header, rows), encoding="utf-8")
            else:
                path.write_text(json.dumps({"columns": header, "rows": _json_safe(rows)},
                                           sort_keys=True) + "\n", encoding="utf-8")
        if self.config.plots:
            from .plots import write_plots
            write_plots(out / "plots", self.plot_series())
        return out


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == -math.inf:
            return "-inf"
        return repr(x)
    return x


def load_report(path: str | Path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    return json.loads(p.read_text(encoding="utf-8"))


def summary_table(report: dict, fmt: str = "text") -> str:
    """Human-readable (or CSV) summary of the checks in a report dict."""
    rows = [(c["name"], c["verdict"], c["comparison"], _short(c["observed"]), _short(c["threshold"]),
             c.get("kind", "")) for c in report["checks"]]
    header = ("check", "verdict", "cmp", "observed", "threshold", "kind")
    if fmt == "csv":
        return rows_to_csv(list(header), rows)
    if fmt == "json":
        return json.dumps({"scenario": report["scenario"], "verdict": report["verdict"],
                           "checks": report["checks"]}, indent=2, sort_keys=True) + "\n"
    widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(len(header))]
    line = lambda r: "  ".join(str(x).ljust(w) for x, w in zip(r, widths))  # noqa: E731
    out = [f"scenario: {report['scenario']}   verdict: {report['verdict']}", line(header),
           line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"


def _short(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, list):
        return "[" + ", ".join(_short(v) for v in x) + "]"
    return str(x)
