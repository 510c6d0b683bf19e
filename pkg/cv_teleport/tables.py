"""Machine-readable command output: curve tables, reports and their CSV/JSON forms."""

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from .errors import UsageError

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'json')


@dataclass(frozen=True)
class Provenance:
    config_hash: str
    tool_version: str
    seed: Optional[int] = None


def format_value(value: Any) -> str:
    """CSV cell text: shortest round-trip floats, lowercase booleans, empty for None."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ''
    return str(value)


def _json_ready(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def _provenance_lines(provenance: Provenance, metadata: dict) -> list[str]:
    lines = [f"# {key}: {format_value(value)}" for key, value in asdict(provenance).items()]
    if metadata:
        lines.append(f"# metadata: {json.dumps(_json_ready(metadata), sort_keys=True)}")
    return lines


@dataclass
class CurveTable:
    """Rectangular table of named columns with a provenance block."""

    command: str
    columns: list[str]
    rows: list[list[Any]]
    provenance: Provenance
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise UsageError(f"Duplicate column names in {self.columns}")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise UsageError(f"Row {i} has {len(row)} values, table has {width} columns")

    def column(self, name: str) -> list[Any]:
        try:
            index = self.columns.index(name)
        except ValueError:
            raise UsageError(f"No column '{name}' in {self.columns}") from None
        return [row[index] for row in self.rows]

    def where(self, name: str, value: Any) -> list[dict]:
        """Rows whose column equals value, as dicts."""
        index = self.columns.index(name)
        return [dict(zip(self.columns, row)) for row in self.rows if row[index] == value]

    def to_dict(self) -> dict:
        return _json_ready({
            'command': self.command,
            'provenance': asdict(self.provenance),
            'columns': list(self.columns),
            'rows': [list(row) for row in self.rows],
            'metadata': self.metadata,
        })

    def to_csv(self) -> str:
        buffer = io.StringIO()
        for line in _provenance_lines(self.provenance, self.metadata):
            buffer.write(line + '\n')
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        return buffer.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + '\n'

    def render(self, fmt: str) -> str:
        return _render(self, fmt)


def flatten(data: dict, prefix: str = '') -> list[tuple[str, Any]]:
    """Nested dict to (dotted key, leaf value) pairs in insertion order."""
    items = []
    for key, value in data.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            items.extend(flatten(value, name))
        elif isinstance(value, (list, tuple)):
            items.extend(flatten({str(i): v for i, v in enumerate(value)}, name))
        else:
            items.append((name, value))
    return items


@dataclass
class Report:
    """Single-run result. JSON keeps the nesting; CSV lists one field per row."""

    command: str
    data: dict
    provenance: Provenance

    def to_dict(self) -> dict:
        return _json_ready({'command': self.command, 'provenance': asdict(self.provenance), **self.data})

    def to_csv(self) -> str:
        buffer = io.StringIO()
        for line in _provenance_lines(self.provenance, {}):
            buffer.write(line + '\n')
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(['field', 'value'])
        for key, value in flatten(self.data):
            writer.writerow([key, format_value(value)])
        return buffer.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + '\n'

    def render(self, fmt: str) -> str:
        return _render(self, fmt)


def _render(result: Union[CurveTable, Report], fmt: str) -> str:
    if fmt == 'csv':
        return result.to_csv()
    if fmt == 'json':
        return result.to_json()
    raise UsageError(f"Unknown output format '{fmt}', expected one of {FORMATS}")


def write_output(result: Union[CurveTable, Report], fmt: str, path: Optional[Path]) -> str:
    """Render and, when a path is given, write the result as UTF-8. Returns the text."""
    text = result.render(fmt)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        logger.info(f"Wrote {result.command} output to {path}")
    return text
