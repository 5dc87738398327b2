"""Scan results and their CSV / JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

MEASURES = ("chsh_max", "concurrence", "mermin_max", "mermin_lb", "mermin_ub", "s_vn", "mz", "t_xy")
SIG_DIGITS = 17


def format_number(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x + 0.0, f".{SIG_DIGITS}g")
    return str(x)


def _parse(text: str) -> Any:
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _json_value(x: Any) -> Any:
    # round through the 17-digit text so both formats carry the same numbers
    if isinstance(x, float):
        if not math.isfinite(x):
            return format_number(x)
        return float(format_number(x))
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


@dataclass
class ScanResult:
    """Metadata plus one row per grid point, in grid order."""

    metadata: dict[str, Any]
    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        for row in self.rows:
            missing = set(self.columns) - set(row)
            if missing:
                raise ValueError(f"row lacks columns {sorted(missing)}")

    def column(self, name: str) -> list[Any]:
        return [row[name] for row in self.rows]

    # CSV carries the rows only; metadata travels in a sibling JSON file
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_number(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "metadata": _json_value(self.metadata),
            "columns": list(self.columns),
            "rows": [{c: _json_value(row[c]) for c in self.columns} for row in self.rows],
        }
        return json.dumps(doc, indent=1) + "\n"

    def write(self, path: str | Path, fmt: str) -> None:
        path = Path(path)
        if fmt == "json":
            path.write_text(self.to_json())
        elif fmt == "csv":
            path.write_text(self.to_csv(), newline="")
            meta_path(path).write_text(json.dumps(_json_value(self.metadata), indent=1) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")

    @classmethod
    def from_json(cls, text: str) -> "ScanResult":
        doc = json.loads(text)
        rows = [{k: _restore(v) for k, v in row.items()} for row in doc["rows"]]
        return cls(doc["metadata"], list(doc["columns"]), rows)

    @classmethod
    def from_csv(cls, text: str, metadata: dict[str, Any] | None = None) -> "ScanResult":
        reader = csv.reader(io.StringIO(text, newline=""))
        columns = next(reader)
        rows = [dict(zip(columns, map(_parse, rec))) for rec in reader if rec]
        return cls(metadata or {}, columns, rows)

    @classmethod
    def read(cls, path: str | Path) -> "ScanResult":
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".json" or text.lstrip().startswith("{"):
            return cls.from_json(text)
        mp = meta_path(path)
        meta = json.loads(mp.read_text()) if mp.exists() else {}
        return cls.from_csv(text, meta)


def _restore(v: Any) -> Any:
    if isinstance(v, str) and v in ("nan", "inf", "-inf"):
        return float(v)
    return v


def meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")
