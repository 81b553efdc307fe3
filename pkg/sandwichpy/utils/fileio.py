"""
sandwichpy File Output
Plot-ready CSV and JSON writers with a reproduction header.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .errors import UsageError
from .logger import SandwichLogger


@dataclass(frozen=True)
class OutputMetadata:
    """Provenance written at the top of every output file."""
    tool_version: str
    config_sha256: str
    command_line: str
    extra: Dict[str, Any] = field(default_factory=dict)

    def header_lines(self) -> List[str]:
        lines = [
            f"# tool: sandwichpy {self.tool_version}",
            f"# config_sha256: {self.config_sha256}",
            f"# command: {self.command_line}",
        ]
        for key in sorted(self.extra):
            lines.append(f"# {key}: {self.extra[key]}")
        return lines

    def as_dict(self) -> Dict[str, Any]:
        data = {
            "tool": "sandwichpy",
            "tool_version": self.tool_version,
            "config_sha256": self.config_sha256,
            "command_line": self.command_line,
        }
        data.update(self.extra)
        return data


def _to_builtin(value: Any) -> Any:
    """Convert numpy scalars and arrays into JSON-friendly values."""
    if isinstance(value, np.ndarray):
        return [_to_builtin(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return {"real": value.real, "imag": value.imag}
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    return value


def _format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def format_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], metadata: Optional[OutputMetadata] = None) -> str:
    """
    Render a table as CSV text.

    Args:
        columns: Header row; units belong in the column names
        rows: Table rows
        metadata: Optional provenance written as leading '#' lines

    Returns:
        CSV document
    """
    if not columns:
        raise UsageError("CSV output needs at least one column")
    buffer = io.StringIO()
    if metadata is not None:
        for line in metadata.header_lines():
            buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise UsageError(f"Row has {len(row)} cells, expected {len(columns)}")
        writer.writerow([_format_cell(v) for v in row])
    return buffer.getvalue()


def format_json(payload: Dict[str, Any], metadata: Optional[OutputMetadata] = None) -> str:
    """Render a payload as JSON, with provenance under a 'metadata' key."""
    document = dict(_to_builtin(payload))
    if metadata is not None:
        document = {"metadata": metadata.as_dict(), **document}
    return json.dumps(document, indent=2, allow_nan=True) + "\n"


def write_text(path: Union[str, Path], text: str) -> Path:
    """Write an output document, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    SandwichLogger.info(f"Wrote {path}", "Output")
    return path


def read_csv_rows(path: Union[str, Path]) -> List[Dict[str, str]]:
    """Read a CSV table, skipping leading '#' metadata lines."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"Cannot read {path}: {e.strerror}")
    lines = [line for line in text.splitlines() if line.strip() and not line.startswith("#")]
    if not lines:
        raise UsageError(f"{path} holds no table")
    return list(csv.DictReader(lines))
