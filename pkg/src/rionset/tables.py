"""Tabular output with fixed 17-significant-digit float formatting.

Every file the experiment drivers write goes through this module so that
identical results produce byte-identical files.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

SCHEMA_VERSION = 1


def format_value(value: Any) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


@dataclass(frozen=True)
class Table:
    """A rectangular result table: column names plus rows of scalars."""

    columns: Sequence[str]
    rows: Sequence[Sequence[Any]]

    def write_csv(self, path: str | Path) -> None:
        lines = [",".join(self.columns)]
        lines.extend(",".join(format_value(v) for v in row) for row in self.rows)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def records(self) -> list[dict[str, Any]]:
        cols = list(self.columns)
        return [
            {c: (None if isinstance(v, float) and math.isnan(v) else v) for c, v in zip(cols, row)}
            for row in self.rows
        ]


def write_json(path: str | Path, payload: Any) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def manifest_path(out_path: str | Path) -> Path:
    return Path(str(out_path) + ".manifest.json")


def write_manifest(out_path: str | Path, subcommand: str, config: dict[str, Any]) -> Path:
    """Write the sidecar manifest echoing the fully-resolved run config."""
    path = manifest_path(out_path)
    write_json(path, {"schema_version": SCHEMA_VERSION, "subcommand": subcommand, "config": config})
    return path
