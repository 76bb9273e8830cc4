"""Engine selection and plan construction for scoped queries.

For every scoped subquery the planner picks, among the island's engines
that hold the referenced object (per the catalog), the one with the lowest
moving-average step duration; with no history to discriminate, the earliest
registered engine wins. Cast sources become child steps whose output is
materialized into the parent's engine at execution time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from ..catalog import Catalog
from ..errors import PlanError
from ..islands import NativeCall, Registry, shim_translate, summarize_call
from .ast import CastSource, KvScan, RelSelect, ScopedQuery
from .monitor import Monitor

# Stands in for a cast source in native calls until the executor has
# materialized the child result into an actual temp table.
CAST_SOURCE_PLACEHOLDER = "<cast>"


@dataclass
class ExecutionStep:
    island: str  # IslandTag value
    engine_id: str
    native: NativeCall
    from_cast: bool = False
    children: list["ExecutionStep"] = field(default_factory=list)


@dataclass
class Plan:
    root: ExecutionStep

    def steps(self) -> list[ExecutionStep]:
        out = []

        def visit(step: ExecutionStep):
            out.append(step)
            for child in step.children:
                visit(child)

        visit(self.root)
        return out


def plan(ast: ScopedQuery, registry: Registry, catalog: Catalog, monitor: Monitor) -> Plan:
    """Resolve every scoped subquery to an engine and a native call."""
    return Plan(root=_plan_scoped(ast, registry, catalog, monitor))


def _plan_scoped(scoped: ScopedQuery, registry: Registry, catalog: Catalog, monitor: Monitor) -> ExecutionStep:
    island = registry.island(scoped.island)
    if not island.engines:
        raise PlanError(f"island {scoped.island.value} has no engines")
    body = scoped.body
    if isinstance(body, RelSelect) and isinstance(body.source, CastSource):
        child = _plan_scoped(body.source.query, registry, catalog, monitor)
        engine_id = _choose(
            [b.id for b in island.engines], monitor,
        )
        native = shim_translate(
            registry, scoped.island, replace(body, source=CAST_SOURCE_PLACEHOLDER), engine_id
        )
        return ExecutionStep(
            island=scoped.island.value,
            engine_id=engine_id,
            native=native,
            from_cast=True,
            children=[child],
        )
    if isinstance(body, RelSelect):
        object_name = body.source
    elif isinstance(body, KvScan):
        object_name = body.table
    else:
        object_name = body.array
    bound = [b.id for b in island.engines]
    holders = {loc.engine_id for loc in catalog.locations_for(scoped.island, object_name)}
    candidates = [eid for eid in bound if eid in holders]
    if not candidates:
        raise PlanError(
            f"object {object_name!r} is not cataloged on any {scoped.island.value} engine"
        )
    engine_id = _choose(candidates, monitor)
    native = shim_translate(registry, scoped.island, body, engine_id)
    return ExecutionStep(island=scoped.island.value, engine_id=engine_id, native=native)


def _choose(candidates: list[str], monitor: Monitor) -> str:
    """Lowest moving average wins; unknown history sorts last; ties keep
    registration order (candidates arrive in registration order)."""
    best = candidates[0]
    best_avg: Optional[float] = monitor.average(best)
    for engine_id in candidates[1:]:
        avg = monitor.average(engine_id)
        if avg is not None and (best_avg is None or avg < best_avg):
            best, best_avg = engine_id, avg
    return best


def explain(plan_: Plan) -> str:
    """Indented plan tree: one ``<island>:<engine> <call>`` line per step."""
    lines: list[str] = []

    def visit(step: ExecutionStep, depth: int):
        lines.append("  " * depth + f"{step.island}:{step.engine_id} {summarize_call(step.native)}")
        for child in step.children:
            visit(child, depth + 1)

    visit(plan_.root, 0)
    return "\n".join(lines)
