"""Experiment configuration: flat ``key = value`` text with dotted keys.

Example::

    # symmetric marks on a Galton-Watson tree
    law.a.kind = finite
    law.a.values = 0.5, 2
    law.a.probs = 0.5, 0.5
    law.offspring.probs = 0.5, 0.5
    walk.steps = 100000
    walk.replicates = 50
    seed = 12345

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..errors import ConfigError
from ..law import ALaw, OffspringLaw


def _int(s: str) -> int:
    v = float(s)
    if not v.is_integer():
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _floats(s: str) -> list:
    return [_float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list:
    return [_int(x) for x in s.split(",") if x.strip()]


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _str(s: str) -> str:
    return s.strip()


# key -> (parser, default)
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "seed": (_int, 0),
    "law.a.kind": (_str, "finite"),
    "law.a.values": (_floats, None),
    "law.a.probs": (_floats, None),
    "law.a.value": (_float, None),
    "law.a.lo": (_float, None),
    "law.a.hi": (_float, None),
    "law.a.alpha": (_float, None),
    "law.offspring.probs": (_floats, [0.0, 1.0]),
    "walk.steps": (_int, 100_000),
    "walk.replicates": (_int, 20),
    "walk.horizon": (_int, 1000),
    "walk.schedule": (_ints, None),
    "analysis.regenerations": (_bool, True),
    "analysis.lambdas": (_floats, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
    "analysis.direct_check": (_bool, True),
    "line.n": (_ints, [10, 20, 30, 40, 50, 60]),
    "line.lambdas": (_floats, [0.0, 0.5, 1.0]),
    "line.replicates": (_int, 2000),
    "line.p_n": (_ints, [5, 10]),
    "line.p_a": (_floats, [1000.0, 10000.0]),
    "line.p_replicates": (_int, 2000),
    "line.oracle_envs": (_int, 500),
    "line.oracle_max_n": (_int, 50),
    "lerrw.b": (_int, 2),
    "lerrw.delta": (_float, 1.0),
    "lerrw.steps": (_int, 100_000),
    "lerrw.replicates": (_int, 50),
    "lerrw.prefix": (_int, 6),
    "lerrw.eq_replicates": (_int, 100_000),
    "lerrw.ks_samples": (_int, 100_000),
    "lerrw.negative_control": (_bool, False),
    "output.path": (_str, None),
    "output.format": (_str, "csv"),
}


@dataclass
class ExperimentConfig:
    """Parsed configuration; ``raw`` keeps the text values for the report echo."""

    values: dict
    raw: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        if key in self.values:
            return self.values[key]
        return SCHEMA[key][1]

    def set(self, key: str, value):
        """Override a value (command-line flags); the echo records the override."""
        self.values[key] = value
        self.raw[key] = str(value)

    # -- canonical text and hash -------------------------------------------
    def canonical_text(self) -> str:
        return "".join(f"{k} = {self.raw[k]}\n" for k in sorted(self.raw))

    def content_hash(self) -> str:
        """Git blob hash of the canonical text."""
        data = self.canonical_text().encode()
        return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()

    # -- domain objects ----------------------------------------------------
    def _err(self, msg: str, key: str):
        return ConfigError(msg, field=key, line=self.lines.get(key))

    def a_law(self) -> ALaw:
        kind = self["law.a.kind"]
        alpha = self["law.a.alpha"]
        try:
            if kind == "finite":
                vals, probs = self["law.a.values"], self["law.a.probs"]
                if vals is None:
                    raise self._err("missing value list", "law.a.values")
                if probs is None:
                    raise self._err("missing probability list", "law.a.probs")
                if len(vals) != len(probs):
                    raise self._err(f"{len(probs)} probabilities for {len(vals)} values", "law.a.probs")
                if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
                    raise self._err(f"probabilities must be nonnegative and sum to 1 (got {sum(probs)!r})",
                                    "law.a.probs")
                if any(v <= 0 for v in vals):
                    raise self._err("marks must be positive", "law.a.values")
                return ALaw.finite(vals, probs, alpha=alpha)
            if kind == "constant":
                v = self["law.a.value"]
                if v is None or v <= 0:
                    raise self._err("a positive value is required", "law.a.value")
                return ALaw.constant(v, alpha=alpha)
            if kind in ("uniform", "loguniform"):
                lo, hi = self["law.a.lo"], self["law.a.hi"]
                if lo is None or lo <= 0:
                    raise self._err("a positive lower bound is required", "law.a.lo")
                if hi is None or hi <= lo:
                    raise self._err("upper bound must exceed the lower bound", "law.a.hi")
                ctor = ALaw.uniform if kind == "uniform" else ALaw.loguniform
                return ctor(lo, hi, alpha=alpha)
        except ValueError as exc:
            raise self._err(str(exc), "law.a.values" if kind == "finite" else "law.a.kind") from exc
        raise self._err(f"unknown law kind {kind!r}", "law.a.kind")

    def offspring(self) -> OffspringLaw:
        p = self["law.offspring.probs"]
        if any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-12:
            raise self._err(f"probabilities must be nonnegative and sum to 1 (got {sum(p)!r})",
                            "law.offspring.probs")
        try:
            return OffspringLaw(tuple(p))
        except ValueError as exc:
            raise self._err(str(exc), "law.offspring.probs") from exc

    def require_positive(self, *keys: str):
        for k in keys:
            if self[k] is None or self[k] <= 0:
                raise self._err("must be positive", k)


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; errors carry the line number and key."""
    values, raw, lines = {}, {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, val = (p.strip() for p in s.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", field=key, line=lineno)
        if key in values:
            raise ConfigError("duplicate key", field=key, line=lineno)
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {val!r}: {exc}", field=key, line=lineno) from exc
        raw[key] = val
        lines[key] = lineno
    cfg = ExperimentConfig(values=values, raw=raw, lines=lines)
    fmt = cfg["output.format"]
    if fmt not in ("csv", "jsonl"):
        raise ConfigError("format must be csv or jsonl", field="output.format", line=lines.get("output.format"))
    return cfg


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return parse_config("")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", field=path) from exc
    return parse_config(text)
