"""Embedded key-value engine with cell-level visibility labels.

Cells are (row, column, visibility, timestamp, value) with text keys ordered
by their UTF-8 bytes. A later put to the same (row, column) supersedes the
earlier cell; old versions are not retained.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import AbstractSet, Iterable, Optional, Sequence

from ..errors import EngineError
from .base import EngineId, EngineKind, check_identifier
from .visibility import parse_visibility, visibility_eval


@dataclass(frozen=True)
class KvEntry:
    row: str
    column: str
    visibility: str
    timestamp: int
    value: str

    def sort_key(self) -> tuple[bytes, bytes]:
        return (self.row.encode("utf-8"), self.column.encode("utf-8"))


class KeyValueEngine:
    """Single-node store of visibility-labeled cells grouped into tables."""

    kind = EngineKind.KEYVALUE

    def __init__(self, engine_id: str):
        self.engine_id = EngineId(engine_id, self.kind)
        self._tables: dict[str, dict[tuple[str, str], KvEntry]] = {}
        self._next_timestamp = 1
        self._write_lock = threading.Lock()

    def put(self, table: str, entries: Sequence[tuple[str, str, str, str]]) -> int:
        """Store (row, column, visibility, value) cells under fresh timestamps.

        The batch is atomic: a malformed visibility or empty key rejects the
        whole batch. The table is created on first put.
        """
        check_identifier(table, "table name")
        for row, column, visibility, value in entries:
            if not row or not column:
                raise EngineError(f"empty row or column key in entry ({row!r}, {column!r})")
            if not isinstance(value, str):
                raise EngineError(f"value for ({row!r}, {column!r}) must be text, got {value!r}")
            parse_visibility(visibility)  # VisibilityError rejects the batch
        with self._write_lock:
            staged = dict(self._tables.get(table, {}))
            for row, column, visibility, value in entries:
                staged[(row, column)] = KvEntry(
                    row=row,
                    column=column,
                    visibility=visibility,
                    timestamp=self._next_timestamp,
                    value=value,
                )
                self._next_timestamp += 1
            tables = dict(self._tables)
            tables[table] = staged
            self._tables = tables
        return len(entries)

    def scan(
        self,
        table: str,
        row_range: Optional[tuple[str, str]] = None,
        columns: Optional[Iterable[str]] = None,
        auths: AbstractSet[str] = frozenset(),
    ) -> list[KvEntry]:
        """Visible entries sorted by (row, column); row range is half-open."""
        tables = self._tables
        if table not in tables:
            raise EngineError(f"unknown table {table!r}")
        if row_range is not None:
            start, end = row_range
            if start.encode("utf-8") > end.encode("utf-8"):
                raise EngineError(f"row range start {start!r} is after end {end!r}")
        column_set = set(columns) if columns is not None else None
        out = []
        for entry in tables[table].values():
            if row_range is not None:
                row_bytes = entry.row.encode("utf-8")
                if not (row_range[0].encode("utf-8") <= row_bytes < row_range[1].encode("utf-8")):
                    continue
            if column_set is not None and entry.column not in column_set:
                continue
            if not visibility_eval(parse_visibility(entry.visibility), auths):
                continue
            out.append(entry)
        out.sort(key=KvEntry.sort_key)
        return out

    def table_names(self) -> list[str]:
        return sorted(self._tables)

    def entry_count(self, table: str) -> int:
        tables = self._tables
        if table not in tables:
            raise EngineError(f"unknown table {table!r}")
        return len(tables[table])

    def dump_state(self) -> dict:
        tables = self._tables
        return {
            "engine_id": self.engine_id.id,
            "next_timestamp": self._next_timestamp,
            "tables": {
                name: [
                    [e.row, e.column, e.visibility, e.timestamp, e.value]
                    for e in sorted(cells.values(), key=KvEntry.sort_key)
                ]
                for name, cells in sorted(tables.items())
            },
        }

    @classmethod
    def from_state(cls, state: dict) -> "KeyValueEngine":
        engine = cls(state["engine_id"])
        engine._next_timestamp = state["next_timestamp"]
        tables: dict[str, dict[tuple[str, str], KvEntry]] = {}
        for name, cells in state["tables"].items():
            table = {}
            for row, column, visibility, timestamp, value in cells:
                table[(row, column)] = KvEntry(row, column, visibility, timestamp, value)
            tables[name] = table
        engine._tables = tables
        return engine
