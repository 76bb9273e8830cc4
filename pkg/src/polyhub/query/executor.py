"""Bottom-up plan execution with casts, access filtering and monitoring.

Children run first; their outputs are cast through the interchange form and
registered as temporary relational sources on the parent's engine. Base
relational reads pass through view policies, key-value scans carry the
principal's authorization tokens, and the final result is materialized
under the effective result-size limit.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, replace
from typing import Optional, Union

from .. import access  # module import: access itself depends on query.ast
from ..engines.array import DenseArray
from ..engines.base import IslandTag
from ..engines.keyvalue import KvEntry
from ..engines.relational import CreateTable, Insert, Relation, Schema, SelectOp
from ..errors import AccessDenied, EngineError, QueryError
from ..islands import ArrSubCall, KvScanCall, Registry, cast
from .monitor import Monitor, QueryRecord
from .planner import ExecutionStep, Plan

ResultValue = Union[Relation, list[KvEntry], DenseArray]


@dataclass
class ExecResult:
    island: IslandTag
    value: ResultValue
    row_count: int


def result_size(island: IslandTag, value: ResultValue) -> int:
    """Result rows per island: relation rows, scan entries, array cells."""
    if island is IslandTag.REL:
        return len(value.rows)
    if island is IslandTag.KV:
        return len(value)
    return len(value.cells)


def execute(
    plan: Plan,
    principal: "access.Principal",
    store: "access.PolicyStore",
    registry: Registry,
    monitor: Monitor,
    signature: str,
    max_rows: Optional[int] = None,
) -> ExecResult:
    """Run a plan for an already-authorized query and record every step."""
    executor = _Executor(principal, store, registry, monitor, signature)
    value = executor.run(plan.root)
    island = IslandTag(plan.root.island)
    value = _limit_result(island, value, max_rows)
    return ExecResult(island=island, value=value, row_count=result_size(island, value))


def _limit_result(island: IslandTag, value: ResultValue, max_rows: Optional[int]) -> ResultValue:
    if island is IslandTag.REL:
        return Relation(schema=value.schema, rows=access.enforce_result_limit(value.rows, max_rows))
    if island is IslandTag.KV:
        return access.enforce_result_limit(value, max_rows)
    access.enforce_result_limit(value.cells, max_rows)
    return value


class _Executor:
    def __init__(self, principal, store, registry, monitor, signature):
        self.principal = principal
        self.store = store
        self.registry = registry
        self.monitor = monitor
        self.signature = signature

    def run(self, step: ExecutionStep) -> ResultValue:
        island = IslandTag(step.island)
        child_values = [
            (IslandTag(child.island), self.run(child)) for child in step.children
        ]
        started = time.perf_counter()
        if island is IslandTag.REL:
            value = self._run_rel(step, child_values)
        elif island is IslandTag.KV:
            value = self._run_kv(step)
        else:
            value = self._run_arr(step)
        duration_ms = (time.perf_counter() - started) * 1000.0
        self.monitor.record(
            QueryRecord(
                query_signature=self.signature,
                island=island,
                engine_id=step.engine_id,
                duration_ms=duration_ms,
                result_rows=result_size(island, value),
            )
        )
        return value

    def _run_rel(self, step: ExecutionStep, child_values) -> Relation:
        engine = self.registry.engine(step.engine_id)
        op: SelectOp = step.native
        if step.from_cast:
            child_island, child_value = child_values[0]
            relation = cast(child_value, child_island, IslandTag.REL)
            return self._select_over_temp(engine, op, relation)
        return self._select_base(engine, op)

    def _select_over_temp(self, engine, op: SelectOp, relation: Relation) -> Relation:
        temp = f"__cast_{uuid.uuid4().hex}"
        engine.apply([
            CreateTable(temp, relation.schema),
            Insert(temp, tuple(relation.rows)),
        ])
        try:
            # Cast output carries text-typed values; comparisons go lenient.
            return engine.select(replace(op, source=temp, lenient=True))
        finally:
            engine.drop_table(temp)

    def _select_base(self, engine, op: SelectOp) -> Relation:
        table = op.source
        schema = engine.table_schema(table)
        visible = access.visible_columns(self.principal, table, self.store)
        referenced = list(op.columns or ()) + [c.column for c in op.where]
        for column in referenced:
            if column not in schema.column_names:
                raise EngineError(f"unknown column {column!r} in table {table!r}")
            if visible is not None and column not in visible:
                raise AccessDenied(
                    f"column {column!r} of table {table!r} is not visible to "
                    f"principal {self.principal.id!r}"
                )
        fetched = engine.select(SelectOp(source=table, columns=None, where=op.where))
        viewed = access.apply_view(self.principal, table, fetched, self.store)
        return _project_limit(viewed, op.columns, op.limit)

    def _run_kv(self, step: ExecutionStep) -> list[KvEntry]:
        engine = self.registry.engine(step.engine_id)
        call: KvScanCall = step.native
        return engine.scan(
            call.table,
            row_range=call.row_range,
            columns=call.columns,
            auths=access.principal_auths(self.principal),
        )

    def _run_arr(self, step: ExecutionStep) -> DenseArray:
        engine = self.registry.engine(step.engine_id)
        call: ArrSubCall = step.native
        return engine.subarray(call.array, call.ranges)


def _project_limit(relation: Relation, columns, limit) -> Relation:
    names = relation.schema.column_names if columns is None else tuple(columns)
    indices = []
    for name in names:
        if name not in relation.schema.column_names:
            raise QueryError(f"column {name!r} vanished from the governed result")
        indices.append(relation.schema.column_index(name))
    out_schema = Schema(
        columns=tuple(relation.schema.columns[i] for i in indices),
        key_column=relation.schema.key_column if relation.schema.key_column in names else None,
    )
    rows = [tuple(row[i] for i in indices) for row in relation.rows]
    if limit is not None:
        rows = rows[:limit]
    return Relation(schema=out_schema, rows=rows)
