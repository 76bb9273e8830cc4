"""Embedded transactional relational engine.

Tables live in memory as immutable snapshots: a transaction stages copies of
every table it touches and publishes the whole table map in one reference
swap, so concurrent readers never observe a partially applied transaction.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from ..errors import EngineError, TransactionError
from .base import EngineId, EngineKind, check_identifier

COLUMN_TYPES = ("text", "int64", "float64")

CellValue = Union[str, int, float, None]
Row = tuple


@dataclass(frozen=True)
class Schema:
    """Ordered (name, type) columns plus an optional unique key column."""

    columns: tuple[tuple[str, str], ...]
    key_column: Optional[str] = None

    def __post_init__(self):
        # Column names are any non-empty text (cast and ingest sources are not
        # identifier-shaped); only names the query grammar can spell are
        # reachable from query text.
        names = [name for name, _ in self.columns]
        for name in names:
            if not isinstance(name, str) or not name:
                raise ValueError(f"empty column name in schema: {names}")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in schema: {names}")
        for name, ctype in self.columns:
            if ctype not in COLUMN_TYPES:
                raise ValueError(f"unknown column type {ctype!r} for column {name!r}")
        if self.key_column is not None and self.key_column not in names:
            raise ValueError(f"key column {self.key_column!r} is not a schema column")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    def column_index(self, name: str) -> int:
        for i, (col, _) in enumerate(self.columns):
            if col == name:
                return i
        raise EngineError(f"unknown column {name!r}")

    def column_type(self, name: str) -> str:
        return self.columns[self.column_index(name)][1]


@dataclass
class Relation:
    """A schema plus rows; rows are tuples with one cell per column."""

    schema: Schema
    rows: list[Row] = field(default_factory=list)

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.schema.column_names


@dataclass(frozen=True)
class Comparison:
    """One `column <op> literal` term of a conjunctive predicate."""

    column: str
    op: str
    value: Union[str, int, float]

    OPS = ("=", "!=", "<", "<=", ">", ">=")

    def __post_init__(self):
        if self.op not in self.OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class SelectOp:
    """Native relational read: filter -> project -> limit over one table.

    ``columns`` of None means all columns. ``lenient`` switches the filter to
    best-effort comparison (numeric when both sides parse as numbers, else
    byte order on text); it is set only for cast-produced temporary tables,
    whose values arrive as text.
    """

    source: str
    columns: Optional[tuple[str, ...]] = None
    where: tuple[Comparison, ...] = ()
    limit: Optional[int] = None
    lenient: bool = False


# Transaction statements


@dataclass(frozen=True)
class CreateTable:
    name: str
    schema: Schema


@dataclass(frozen=True)
class Insert:
    table: str
    rows: tuple[Row, ...]


@dataclass(frozen=True)
class Delete:
    table: str
    predicate: tuple[Comparison, ...] = ()


TxnStatement = Union[CreateTable, Insert, Delete]


@dataclass(frozen=True)
class CommitReport:
    statements: int
    rows_affected: int


def _check_cell(value: CellValue, ctype: str, column: str) -> CellValue:
    if value is None:
        return None
    if ctype == "text":
        if isinstance(value, str):
            return value
    elif ctype == "int64":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif ctype == "float64":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    raise EngineError(f"type mismatch: column {column!r} is {ctype}, got {value!r}")


def _compare(cell, op: str, literal) -> bool:
    if op == "=":
        return cell == literal
    if op == "!=":
        return cell != literal
    if op == "<":
        return cell < literal
    if op == "<=":
        return cell <= literal
    if op == ">":
        return cell > literal
    return cell >= literal


def eval_comparison(schema: Schema, row: Row, comp: Comparison, lenient: bool = False) -> bool:
    """Evaluate one comparison against a row. Null cells never match."""
    idx = schema.column_index(comp.column)
    cell = row[idx]
    if cell is None:
        return False
    if lenient:
        cell_num = _as_number(cell)
        lit_num = _as_number(comp.value)
        if cell_num is not None and lit_num is not None:
            return _compare(cell_num, comp.op, lit_num)
        return _compare(str(cell), comp.op, str(comp.value))
    ctype = schema.column_type(comp.column)
    if ctype == "text":
        if not isinstance(comp.value, str):
            raise EngineError(
                f"cannot compare text column {comp.column!r} with numeric literal {comp.value!r}"
            )
        return _compare(cell, comp.op, comp.value)
    if isinstance(comp.value, str):
        raise EngineError(
            f"cannot compare numeric column {comp.column!r} with text literal {comp.value!r}"
        )
    return _compare(cell, comp.op, comp.value)


def eval_predicate(schema: Schema, row: Row, predicate: Iterable[Comparison], lenient: bool = False) -> bool:
    return all(eval_comparison(schema, row, c, lenient) for c in predicate)


def _as_number(value) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


@dataclass(frozen=True)
class _Table:
    schema: Schema
    rows: tuple[Row, ...]


class RelationalEngine:
    """Single-node relational store with atomic, serializable transactions."""

    kind = EngineKind.RELATIONAL

    def __init__(self, engine_id: str):
        self.engine_id = EngineId(engine_id, self.kind)
        self._tables: dict[str, _Table] = {}
        self._write_lock = threading.Lock()

    # -- transactions --------------------------------------------------

    def apply(self, txn: Sequence[TxnStatement]) -> CommitReport:
        """Apply a transaction atomically: all statements take effect or none.

        On failure the engine state is untouched and a TransactionError names
        the first failing statement.
        """
        with self._write_lock:
            staged = dict(self._tables)
            affected = 0
            for index, stmt in enumerate(txn):
                try:
                    affected += self._apply_statement(staged, stmt)
                except TransactionError:
                    raise
                except EngineError as exc:
                    raise TransactionError(str(exc), index) from exc
            self._tables = staged
        return CommitReport(statements=len(txn), rows_affected=affected)

    def _apply_statement(self, staged: dict[str, _Table], stmt: TxnStatement) -> int:
        if isinstance(stmt, CreateTable):
            check_identifier(stmt.name, "table name")
            if stmt.name in staged:
                raise EngineError(f"table {stmt.name!r} already exists")
            staged[stmt.name] = _Table(stmt.schema, ())
            return 0
        if isinstance(stmt, Insert):
            table = self._staged_table(staged, stmt.table)
            schema = table.schema
            width = len(schema.columns)
            new_rows = []
            for row in stmt.rows:
                if len(row) != width:
                    raise EngineError(
                        f"row width {len(row)} does not match {width}-column table {stmt.table!r}"
                    )
                new_rows.append(
                    tuple(
                        _check_cell(value, ctype, name)
                        for value, (name, ctype) in zip(row, schema.columns)
                    )
                )
            if schema.key_column is not None:
                key_idx = schema.column_index(schema.key_column)
                seen = {row[key_idx] for row in table.rows}
                for row in new_rows:
                    key = row[key_idx]
                    if key is None:
                        raise EngineError(f"null key in column {schema.key_column!r}")
                    if key in seen:
                        raise EngineError(f"duplicate key {key!r} in table {stmt.table!r}")
                    seen.add(key)
            staged[stmt.table] = _Table(schema, table.rows + tuple(new_rows))
            return len(new_rows)
        if isinstance(stmt, Delete):
            table = self._staged_table(staged, stmt.table)
            kept = tuple(
                row for row in table.rows
                if not eval_predicate(table.schema, row, stmt.predicate)
            )
            staged[stmt.table] = _Table(table.schema, kept)
            return len(table.rows) - len(kept)
        raise EngineError(f"unknown transaction statement {stmt!r}")

    @staticmethod
    def _staged_table(staged: dict[str, _Table], name: str) -> _Table:
        if name not in staged:
            raise EngineError(f"unknown table {name!r}")
        return staged[name]

    # -- reads ----------------------------------------------------------

    def select(self, op: SelectOp) -> Relation:
        """Run a filter/project/limit read; rows come back in insertion order."""
        tables = self._tables
        if op.source not in tables:
            raise EngineError(f"unknown table {op.source!r}")
        table = tables[op.source]
        schema = table.schema
        for comp in op.where:
            schema.column_index(comp.column)  # unknown-column check up front
        out_columns = schema.column_names if op.columns is None else tuple(op.columns)
        indices = [schema.column_index(c) for c in out_columns]
        out_schema = Schema(
            columns=tuple(schema.columns[i] for i in indices),
            key_column=schema.key_column if schema.key_column in out_columns else None,
        )
        rows = []
        for row in table.rows:
            if op.limit is not None and len(rows) >= op.limit:
                break
            if eval_predicate(schema, row, op.where, op.lenient):
                rows.append(tuple(row[i] for i in indices))
        return Relation(schema=out_schema, rows=rows)

    def table_schema(self, name: str) -> Schema:
        tables = self._tables
        if name not in tables:
            raise EngineError(f"unknown table {name!r}")
        return tables[name].schema

    def table_names(self) -> list[str]:
        return sorted(self._tables)

    def row_count(self, name: str) -> int:
        tables = self._tables
        if name not in tables:
            raise EngineError(f"unknown table {name!r}")
        return len(tables[name].rows)

    # -- administration ---------------------------------------------------

    def drop_table(self, name: str) -> None:
        """Remove a table outright. Administrative; used for temp-table cleanup."""
        with self._write_lock:
            if name not in self._tables:
                raise EngineError(f"unknown table {name!r}")
            staged = dict(self._tables)
            del staged[name]
            self._tables = staged

    # -- state dump / restore (snapshots, oracles) ------------------------

    def dump_state(self) -> dict:
        """Canonical JSON-able view of the complete engine state."""
        tables = self._tables
        return {
            "engine_id": self.engine_id.id,
            "tables": {
                name: {
                    "columns": [list(col) for col in t.schema.columns],
                    "key_column": t.schema.key_column,
                    "rows": [list(row) for row in t.rows],
                }
                for name, t in sorted(tables.items())
            },
        }

    @classmethod
    def from_state(cls, state: dict) -> "RelationalEngine":
        engine = cls(state["engine_id"])
        tables = {}
        for name, t in state["tables"].items():
            schema = Schema(
                columns=tuple((c, ty) for c, ty in t["columns"]),
                key_column=t["key_column"],
            )
            tables[name] = _Table(schema, tuple(tuple(row) for row in t["rows"]))
        engine._tables = tables
        return engine
