from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, TextIO, Tuple

import numpy as np

from .config import HEADER_PREFIX


def format_value(value: Any) -> str:
	"""CSV cell text; floats keep 17 significant digits."""
	if value is None:
		return ""
	if isinstance(value, (bool, np.bool_)):
		return "true" if value else "false"
	if isinstance(value, (int, np.integer)):
		return str(int(value))
	if isinstance(value, (float, np.floating)):
		return format(float(value), ".17g")
	return str(value)


def _jsonable(value: Any) -> Any:
	if isinstance(value, np.ndarray):
		return [_jsonable(v) for v in value.tolist()]
	if isinstance(value, (list, tuple)):
		return [_jsonable(v) for v in value]
	if isinstance(value, dict):
		return {k: _jsonable(v) for k, v in value.items()}
	if isinstance(value, (np.bool_, bool)):
		return bool(value)
	if isinstance(value, np.integer):
		return int(value)
	if isinstance(value, (float, np.floating)):
		value = float(value)
		return value if math.isfinite(value) else None
	return value


@dataclass
class ResultTable:
	"""Rows of one command run.

	`columns`/`rows` are what the CSV shows; `records` may carry extra
	per-row fields (distributions, weights) that only JSON output keeps.
	"""

	command: str
	columns: List[str]
	rows: List[List[Any]] = field(default_factory=list)
	records: List[Dict[str, Any]] = field(default_factory=list)

	def append(self, row: Sequence[Any], **extra: Any) -> None:
		self.rows.append(list(row))
		record = dict(zip(self.columns, row))
		record.update(extra)
		self.records.append(record)


def header_line(version: str, command: str, config: Dict[str, Any]) -> str:
	payload = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
	return f"{HEADER_PREFIX}{version} {command} {payload}"


def render_csv(table: ResultTable, version: str, config: Dict[str, Any]) -> str:
	buf = io.StringIO()
	buf.write(header_line(version, table.command, config) + "\n")
	writer = csv.writer(buf, lineterminator="\n")
	writer.writerow(table.columns)
	for row in table.rows:
		writer.writerow([format_value(v) for v in row])
	return buf.getvalue()


def render_json(table: ResultTable, version: str, config: Dict[str, Any]) -> str:
	doc = {
		"version": version,
		"command": table.command,
		"config": config,
		"columns": table.columns,
		"records": table.records,
	}
	return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def write_table(table: ResultTable, out: str, fmt: str, version: str, config: Dict[str, Any], stdout: TextIO) -> None:
	text = render_json(table, version, config) if fmt == "json" else render_csv(table, version, config)
	if out == "-":
		stdout.write(text)
		return
	path = Path(out)
	path.parent.mkdir(parents=True, exist_ok=True)
	with path.open("w", newline="") as f:
		f.write(text)


def read_csv_table(path: Path) -> Tuple[str, List[str], List[List[str]]]:
	"""Header line, column names and raw cell text of a CSV result file."""
	with Path(path).open("r", newline="") as f:
		header = f.readline().rstrip("\n")
		reader = csv.reader(f)
		columns = next(reader)
		rows = [row for row in reader if row]
	return header, columns, rows
