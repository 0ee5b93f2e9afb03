"""Run reports and their CSV / JSON export.

Numbers are written with 17 significant digits, which round-trips binary64.
Wall-clock timings live only in the JSON ``timings`` block, so CSV files are
byte-identical across reruns.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

__all__ = ["SeedResult", "CheckResult", "RunReport", "export", "report_from_json", "fmt17"]


def fmt17(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


@dataclass
class SeedResult:
    seed: int
    values: dict[str, float]
    passed: bool | None = None


@dataclass
class CheckResult:
    name: str
    params: dict
    tolerance: str
    passed: bool
    rows: list[SeedResult]
    stats: dict[str, float]


@dataclass
class RunReport:
    name: str
    equation: str
    provenance: dict
    checks: list[CheckResult] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("timings")
        d["passed"] = self.passed
        return d

    def scalar_view(self) -> dict:
        """Everything except timings; equal across reruns of the same config."""
        return self.to_dict(timings=False)


_TAG = "@@f17@@"
_TAGGED = re.compile(r'"' + _TAG + r'([^"]*)"')


def _prepare(o):
    if isinstance(o, bool) or o is None or isinstance(o, (int, str)):
        return o
    if isinstance(o, float):
        if math.isnan(o):
            return _TAG + "NaN"
        if math.isinf(o):
            return _TAG + ("Infinity" if o > 0 else "-Infinity")
        return _TAG + fmt17(o)
    if isinstance(o, dict):
        return {str(k): _prepare(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_prepare(v) for v in o]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _json_text(d: dict) -> str:
    # floats travel as tagged strings and are unquoted afterwards, so the
    # file carries exactly 17 significant digits
    return _TAGGED.sub(r"\1", json.dumps(_prepare(d), indent=2)) + "\n"


def _write_csv(path: Path, header: list[str], rows: list[list[str]]):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _column_stats(rows: list[SeedResult], cols: list[str]):
    mean, se = [], []
    n = len(rows)
    for k in cols:
        v = [float(r.values[k]) for r in rows]
        m = math.fsum(v) / n
        var = math.fsum((x - m) ** 2 for x in v) / (n - 1) if n > 1 else 0.0
        mean.append(m)
        se.append(math.sqrt(var / n))
    return mean, se


def _verdict(p: bool | None) -> str:
    return "" if p is None else ("pass" if p else "fail")


def export(report: RunReport, out_dir: str | Path, fmt: str = "both") -> list[Path]:
    """Write ``report.csv`` (one column per check), one CSV per check and/or ``report.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        # summary: header of check names, one row per seed, then aggregate rows
        names = [c.name for c in report.checks]
        seeds: list[int] = []
        for c in report.checks:
            for r in c.rows:
                if r.seed not in seeds:
                    seeds.append(r.seed)
        rows = []
        for s in seeds:
            line = [str(s)]
            for c in report.checks:
                match = [r for r in c.rows if r.seed == s]
                line.append(_verdict(match[0].passed) if match else "")
            rows.append(line)
        if report.checks:
            rows.append(["verdict"] + [_verdict(c.passed) for c in report.checks])
        p = out / "report.csv"
        _write_csv(p, ["seed"] + names, rows)
        written.append(p)
        for c in report.checks:
            cols = list(c.rows[0].values) if c.rows else []
            body = []
            for r in c.rows:
                body.append([str(r.seed)] + [fmt17(r.values[k]) for k in cols] + [_verdict(r.passed)])
            if c.rows:
                mean, se = _column_stats(c.rows, cols)
                body.append(["mean"] + [fmt17(x) for x in mean] + [_verdict(c.passed)])
                body.append(["stderr"] + [fmt17(x) for x in se] + [""])
            p = out / f"{c.name}.csv"
            _write_csv(p, ["seed"] + cols + ["pass"], body)
            written.append(p)
            p = out / f"{c.name}_summary.csv"
            _write_csv(
                p,
                ["statistic", "value"],
                [[k, fmt17(v)] for k, v in c.stats.items()] + [["pass", _verdict(c.passed)]],
            )
            written.append(p)
    if fmt in ("json", "both"):
        p = out / "report.json"
        p.write_text(_json_text(report.to_dict()))
        written.append(p)
    return written


def report_from_json(text: str) -> RunReport:
    d = json.loads(text)
    checks = [
        CheckResult(
            c["name"],
            c["params"],
            c["tolerance"],
            c["passed"],
            [SeedResult(r["seed"], r["values"], r["passed"]) for r in c["rows"]],
            c["stats"],
        )
        for c in d["checks"]
    ]
    return RunReport(d["name"], d["equation"], d["provenance"], checks, d.get("timings", {}))
