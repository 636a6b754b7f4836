"""Report files and JSON configuration loading."""

from __future__ import annotations

import json
import math
import os
import re
import shutil
import tempfile
from pathlib import Path
from typing import Any

from .experiments import ExperimentConfig, ExperimentReport, Table
from .grid import BesovParams

CONFIG_KEYS = (
    "preset",
    "besov",
    "n_values",
    "omega",
    "alpha",
    "epsilon",
    "t_grid",
    "output_dir",
    "schedule_exponent",
    "seed",
)


class ConfigError(ValueError):
    """Malformed configuration file; the message names the offending line."""


class ReportError(OSError):
    """The report directory could not be written."""


def _slopes_table(report: ExperimentReport) -> Table:
    t = Table("slopes", ("name", "table", "slope", "intercept", "residual", "points"))
    for s in report.slopes:
        t.add(s.name, s.table, s.slope, s.intercept, s.residual, s.points)
    return t


def _verdicts_table(report: ExperimentReport) -> Table:
    t = Table("verdicts", ("name", "passed", "measured", "threshold", "table", "row"))
    for v in report.verdicts:
        t.add(v.name, v.passed, v.measured, v.threshold, v.table, v.row)
    return t


def _json_default(x: Any):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _sanitize(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _sanitize(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_sanitize(v) for v in x]
    return x


def summary_json(report: ExperimentReport) -> str:
    return json.dumps(_sanitize(report.summary()), indent=2, sort_keys=True, default=_json_default) + "\n"


def _write_files(report: ExperimentReport, path: Path) -> None:
    tables = dict(report.tables)
    tables["slopes"] = _slopes_table(report)
    tables["verdicts"] = _verdicts_table(report)
    for name, table in tables.items():
        (path / f"{name}.csv").write_text(table.to_csv())
    (path / "summary.json").write_text(summary_json(report))


def write_report(report: ExperimentReport, directory: str | Path) -> Path:
    """Write one CSV per table plus ``summary.json``.

    A new directory is staged next to the target and renamed into place, so a
    failure never leaves a half-written report behind.
    """
    target = Path(directory)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        if target.exists():
            if not target.is_dir():
                raise ReportError(f"{target} exists and is not a directory")
            _write_files(report, target)
            return target
        stage = Path(tempfile.mkdtemp(prefix=f".{target.name}-", dir=target.parent))
        try:
            _write_files(report, stage)
            os.replace(stage, target)
        except BaseException:
            shutil.rmtree(stage, ignore_errors=True)
            raise
    except ReportError:
        raise
    except OSError as exc:
        raise ReportError(f"cannot write report to {target}: {exc.strerror or exc}") from exc
    return target


# -- configuration -------------------------------------------------------------------

def _key_line(text: str, key: str) -> int:
    m = re.search(rf'"{re.escape(key)}"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _real(v: Any) -> float:
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    return float(v)


def _besov(v: Any) -> BesovParams:
    if not isinstance(v, dict):
        raise ValueError("besov must be an object with keys s, p, r")
    unknown = set(v) - {"s", "p", "r"}
    if unknown:
        raise ValueError(f"unknown besov keys {sorted(unknown)}")
    return BesovParams(_real(v.get("s", 3.0)), _real(v.get("p", 2.0)), _real(v.get("r", 2.0)))


def _int_list(v: Any) -> tuple[int, ...]:
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise ValueError("expected a list of integers")
    return tuple(v)


def _string(v: Any) -> str:
    if not isinstance(v, str):
        raise ValueError(f"expected a string, got {v!r}")
    return v


def _real_list(v: Any) -> tuple[float, ...]:
    if not isinstance(v, list):
        raise ValueError("expected a list of numbers")
    return tuple(_real(x) for x in v)


def _integer(v: Any) -> int:
    x = _real(v)
    if not float(x).is_integer():
        raise ValueError(f"expected an integer, got {v!r}")
    return int(x)


_CONVERTERS = {
    "preset": _string,
    "besov": _besov,
    "n_values": _int_list,
    "omega": _real,
    "alpha": _real,
    "epsilon": _real,
    "t_grid": _real_list,
    "output_dir": _string,
    "schedule_exponent": _integer,
    "seed": _integer,
}


def parse_config(text: str, source: str = "<config>", **overrides: Any) -> ExperimentConfig:
    """Parse a JSON config; errors name the file and line."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a JSON object")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        line = _key_line(text, key)
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{line}: unknown key {key!r}; allowed: {', '.join(CONFIG_KEYS)}")
        try:
            kwargs[key] = _CONVERTERS[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}:{line}: invalid value for {key!r}: {exc}") from None
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        bad = next((k for k in CONFIG_KEYS if k in str(exc) and k in data), None)
        line = _key_line(text, bad) if bad else 1
        raise ConfigError(f"{source}:{line}: {exc}") from None


def load_config(path: str | Path | None, **overrides: Any) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from None
    return parse_config(text, str(path), **overrides)
