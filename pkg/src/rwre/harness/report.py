"""Run reports and their on-disk formats.

Reports are JSON; tables are CSV or JSON lines.  Floats are written
losslessly (shortest round-trip form in JSON, 17 significant digits in
CSV); infinities appear as the strings ``"inf"`` / ``"-inf"``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional

from ..stats import EstimateWithCI

_SPECIAL = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def encode(x: Any) -> Any:
    """JSON-safe copy of ``x``: non-finite floats become strings, numpy scalars plain Python."""
    if isinstance(x, EstimateWithCI):
        return encode(x.to_dict())
    if isinstance(x, dict):
        return {str(k): encode(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [encode(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
    return x


def decode(x: Any) -> Any:
    if isinstance(x, dict):
        return {k: decode(v) for k, v in x.items()}
    if isinstance(x, list):
        return [decode(v) for v in x]
    if isinstance(x, str) and x in _SPECIAL:
        return _SPECIAL[x]
    return x


def fmt_number(x: Any) -> str:
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x).lower()
    if hasattr(x, "item"):
        x = x.item()
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


@dataclass
class RunReport:
    """Everything a command produced, echoing the configuration that produced it.

    ``estimates`` maps names to :class:`EstimateWithCI`; ``tables`` maps names
    to lists of flat row dicts; ``checks`` lists ``{name, passed, detail}``.
    """

    command: str
    config: dict
    config_hash: str
    seed: int
    estimates: dict = field(default_factory=dict)
    analytic: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    censoring: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    wall_clock: Optional[float] = None

    def add_check(self, name: str, passed: bool, **detail):
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        d = {
            "command": self.command,
            "config": dict(sorted(self.config.items())),
            "config_hash": self.config_hash,
            "seed": self.seed,
            "estimates": {k: v.to_dict() for k, v in self.estimates.items()},
            "analytic": self.analytic,
            "tables": self.tables,
            "censoring": self.censoring,
            "checks": self.checks,
            "wall_clock": self.wall_clock,
        }
        return encode(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = dict(d)
        config = d.pop("config")  # raw strings, not decoded
        d = decode(d)
        est = {k: EstimateWithCI.from_dict(v) for k, v in d["estimates"].items()}
        return cls(command=d["command"], config=config, config_hash=d["config_hash"], seed=d["seed"],
                   estimates=est, analytic=d["analytic"], tables=d["tables"], censoring=d["censoring"],
                   checks=d["checks"], wall_clock=d["wall_clock"])

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))

    def summary_lines(self) -> list:
        out = [f"command: {self.command}", f"config hash: {self.config_hash}", f"seed: {self.seed}"]
        for k, v in self.analytic.items():
            if not isinstance(v, (list, dict)):
                out.append(f"{k}: {'none' if v is None else fmt_number(v)}")
        for k, e in self.estimates.items():
            lo, hi = e.ci95
            out.append(f"{k}: {fmt_number(e.point)} (stderr {e.stderr:.3g}, 95% CI [{lo:.6g}, {hi:.6g}], "
                       f"{e.replicates} replicates)")
        for c in self.checks:
            out.append(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}")
        return out


def table_to_csv(rows: list) -> str:
    if not rows:
        return ""
    cols = list(rows[0].keys())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([fmt_number(r.get(c)) for c in cols])
    return buf.getvalue()


def table_to_jsonl(rows: list) -> str:
    return "".join(json.dumps(encode(r), sort_keys=True, allow_nan=False) + "\n" for r in rows)


def read_csv_table(text: str) -> list:
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        rows.append({k: _parse_cell(v) for k, v in r.items()})
    return rows


def _parse_cell(v: str):
    if v in _SPECIAL:
        return _SPECIAL[v]
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return {"true": True, "false": False, "": None}.get(v, v)


def write_outputs(report: RunReport, out_dir: str, fmt: str = "csv") -> list:
    """Write ``report.json`` and one file per table; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    p = os.path.join(out_dir, "report.json")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
    paths.append(p)
    for name, rows in sorted(report.tables.items()):
        ext = "csv" if fmt == "csv" else "jsonl"
        p = os.path.join(out_dir, f"{name}.{ext}")
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table_to_csv(rows) if fmt == "csv" else table_to_jsonl(rows))
        paths.append(p)
    return paths
