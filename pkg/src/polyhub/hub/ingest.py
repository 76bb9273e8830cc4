"""File ingestion: CSV and JSON-lines into relational or key-value targets.

Parsing happens fully up front so that any malformed line fails the whole
ingest before a single row is loaded; the load itself is one atomic
transaction (relational) or one atomic batch (key-value).
"""

from __future__ import annotations

import csv
import io
import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..catalog import Catalog, DatasetEntry, Location, sha256_hex
from ..engines.base import IslandTag
from ..engines.relational import CreateTable, Insert, Schema
from ..errors import IngestError
from ..islands import Registry

INT_RE = re.compile(r"[+-]?\d+\Z")
FLOAT_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")


@dataclass(frozen=True)
class IngestSpec:
    source: Path
    format: str  # "csv" | "jsonl"
    island: IslandTag
    engine_id: str
    table: str
    drop_columns: frozenset[str] = frozenset()
    key_column: Optional[str] = None

    def __post_init__(self):
        if self.format not in ("csv", "jsonl"):
            raise IngestError(f"unknown ingest format {self.format!r}")


@dataclass
class IngestReport:
    rows_parsed: int
    rows_loaded: int
    columns_dropped: list[str] = field(default_factory=list)


def load_ingest_spec(path: Union[str, Path]) -> IngestSpec:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestError(f"cannot read ingest spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IngestError(f"ingest spec {path} is not valid JSON: {exc}") from exc
    return ingest_spec_from_dict(doc, base=path.parent)


def ingest_spec_from_dict(doc: dict, base: Optional[Path] = None) -> IngestSpec:
    try:
        source = Path(doc["source"])
        if base is not None and not source.is_absolute():
            source = base / source
        return IngestSpec(
            source=source,
            format=doc["format"],
            island=IslandTag(doc["island"]),
            engine_id=doc["engine_id"],
            table=doc["table"],
            drop_columns=frozenset(doc.get("drop_columns", [])),
            key_column=doc.get("key_column"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestError(f"malformed ingest spec: {exc}") from exc


# -- parsing -----------------------------------------------------------------


def parse_csv(text: str) -> tuple[list[str], list[list]]:
    """First line is the header; empty fields are nulls. A row whose width
    differs from the header fails the parse, citing its line number."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("file is empty (no CSV header)") from None
    except csv.Error as exc:
        raise IngestError(f"line 1: {exc}") from exc
    if not header or any(not h for h in header):
        raise IngestError("line 1: CSV header has an empty column name")
    rows = []
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            raise IngestError(f"line {reader.line_num}: {exc}") from exc
        if not row:
            continue
        if len(row) != len(header):
            raise IngestError(
                f"line {reader.line_num}: expected {len(header)} fields, got {len(row)}"
            )
        rows.append([None if cell == "" else cell for cell in row])
    return header, rows


def parse_jsonl(text: str) -> tuple[list[str], list[list]]:
    """One JSON object per line; the schema is the union of keys across all
    records (first-seen order) and missing keys become nulls."""
    columns: list[str] = []
    seen: set[str] = set()
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {lineno}: {exc}") from exc
        if not isinstance(record, dict):
            raise IngestError(f"line {lineno}: expected a JSON object")
        for key, value in record.items():
            if isinstance(value, bool):
                record[key] = int(value)
            elif not (value is None or isinstance(value, (str, int, float))):
                raise IngestError(f"line {lineno}: field {key!r} is not a scalar")
        for key in record:
            if key not in seen:
                seen.add(key)
                columns.append(key)
        records.append(record)
    rows = [[record.get(col) for col in columns] for record in records]
    return columns, rows


def _infer_csv_type(values: list[Optional[str]]) -> str:
    present = [v for v in values if v is not None]
    if present and all(INT_RE.match(v) for v in present):
        return "int64"
    if present and all(FLOAT_RE.match(v) for v in present):
        return "float64"
    return "text"


def _infer_jsonl_type(values: list) -> str:
    present = [v for v in values if v is not None]
    if present and all(isinstance(v, int) for v in present):
        return "int64"
    if present and all(isinstance(v, (int, float)) for v in present):
        return "float64"
    return "text"


def _coerce(value, ctype: str):
    if value is None:
        return None
    if ctype == "int64":
        return int(value)
    if ctype == "float64":
        return float(value)
    return value if isinstance(value, str) else str(value)


# -- loading ----------------------------------------------------------------


def ingest(spec: IngestSpec, registry: Registry, catalog: Catalog) -> IngestReport:
    """Parse a source file and load it atomically; on success the dataset is
    auto-registered in the catalog. Any failure leaves the target engine and
    the catalog exactly as they were."""
    island = registry.island(spec.island)
    if not any(b.id == spec.engine_id for b in island.engines):
        raise IngestError(
            f"engine {spec.engine_id!r} is not bound to island {spec.island.value}"
        )
    if spec.island is IslandTag.ARR:
        raise IngestError("the array island is not an ingestion target")
    try:
        data = spec.source.read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read source {spec.source}: {exc}") from exc
    text = data.decode("utf-8", errors="strict" if spec.format == "jsonl" else "replace")
    if spec.format == "csv":
        columns, rows = parse_csv(text)
        infer = _infer_csv_type
    else:
        columns, rows = parse_jsonl(text)
        infer = _infer_jsonl_type
    rows_parsed = len(rows)

    dropped = sorted(set(columns) & spec.drop_columns)
    keep = [i for i, col in enumerate(columns) if col not in spec.drop_columns]
    columns = [columns[i] for i in keep]
    rows = [[row[i] for i in keep] for row in rows]
    if not columns:
        raise IngestError("no columns left to load after drop_columns")
    if spec.key_column is not None and spec.key_column not in columns:
        raise IngestError(f"key column {spec.key_column!r} is not among {columns}")

    types = {col: infer([row[i] for row in rows]) for i, col in enumerate(columns)}
    typed_rows = [
        tuple(_coerce(row[i], types[col]) for i, col in enumerate(columns))
        for row in rows
    ]

    # Catalog id availability is part of ingest atomicity: check before loading.
    if any(e.id == spec.table for e in catalog.entries()):
        raise IngestError(f"catalog already has a dataset {spec.table!r}")

    engine = registry.engine(spec.engine_id)
    if spec.island is IslandTag.REL:
        schema = Schema(
            columns=tuple((col, types[col]) for col in columns),
            key_column=spec.key_column,
        )
        try:
            engine.apply([CreateTable(spec.table, schema), Insert(spec.table, tuple(typed_rows))])
        except Exception as exc:
            raise IngestError(f"load failed: {exc}") from exc
        loaded = len(typed_rows)
    else:
        entries = _kv_entries(spec, columns, typed_rows)
        try:
            engine.put(spec.table, entries)
        except Exception as exc:
            raise IngestError(f"load failed: {exc}") from exc
        loaded = len(typed_rows)

    now = time.time()
    catalog.register(
        DatasetEntry(
            id=spec.table,
            name=spec.table,
            owner="",
            locations=[Location(spec.island, spec.engine_id, spec.table)],
            metatags={spec.format} | set(columns),
            checksum=sha256_hex(data),
            created_at=now,
            updated_at=now,
            notes=f"ingested from {spec.source}",
            source_path=str(spec.source),
        )
    )
    return IngestReport(rows_parsed=rows_parsed, rows_loaded=loaded, columns_dropped=dropped)


def _kv_entries(spec: IngestSpec, columns: list[str], rows: list[tuple]) -> list[tuple]:
    entries = []
    key_index = columns.index(spec.key_column) if spec.key_column is not None else None
    seen_keys: set[str] = set()
    for ordinal, row in enumerate(rows):
        if key_index is not None:
            key = row[key_index]
            if key is None:
                raise IngestError(f"row {ordinal}: null key in column {spec.key_column!r}")
            rowkey = key if isinstance(key, str) else str(key)
            if rowkey in seen_keys:
                raise IngestError(f"row {ordinal}: duplicate key {rowkey!r}")
            seen_keys.add(rowkey)
        else:
            rowkey = f"r{ordinal:06d}"
        for column, value in zip(columns, row):
            if value is None:
                continue
            entries.append((rowkey, column, "", value if isinstance(value, str) else str(value)))
    return entries
