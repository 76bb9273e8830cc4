"""Scope-tagged query AST and its canonical text form.

Every query is an island tag wrapping one island-level operation; a REL
select may read from a CAST of another scoped query (the only cast position
in this version).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

from ..engines.base import IDENTIFIER_RE, IslandTag
from ..engines.relational import Comparison


@dataclass(frozen=True)
class CastSource:
    query: "ScopedQuery"
    target: IslandTag


@dataclass(frozen=True)
class RelSelect:
    """SELECT cols FROM source [WHERE ...] [LIMIT n]; columns None means ``*``."""

    source: Union[str, CastSource]
    columns: Optional[tuple[str, ...]] = None
    where: tuple[Comparison, ...] = ()
    limit: Optional[int] = None


@dataclass(frozen=True)
class KvScan:
    table: str
    row_range: Optional[tuple[str, str]] = None
    columns: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class ArrSub:
    array: str
    ranges: tuple[tuple[int, int], ...] = ()


QueryBody = Union[RelSelect, KvScan, ArrSub]


@dataclass(frozen=True)
class ScopedQuery:
    island: IslandTag
    body: QueryBody

    def walk(self) -> Iterator["ScopedQuery"]:
        """This query and every cast subquery, outermost first."""
        yield self
        body = self.body
        if isinstance(body, RelSelect) and isinstance(body.source, CastSource):
            yield from body.source.query.walk()

    def referenced_tables(self) -> list[tuple[IslandTag, str]]:
        """(island, object name) for every base object the query touches."""
        out = []
        for scoped in self.walk():
            body = scoped.body
            if isinstance(body, RelSelect):
                if isinstance(body.source, str):
                    out.append((scoped.island, body.source))
            elif isinstance(body, KvScan):
                out.append((scoped.island, body.table))
            else:
                out.append((scoped.island, body.array))
        return out


def render(query: ScopedQuery) -> str:
    """Canonical text form; ``parse(render(q)) == q`` for any valid AST."""
    return f"{query.island.value}({_render_body(query.body)})"


def _render_body(body: QueryBody) -> str:
    if isinstance(body, RelSelect):
        cols = "*" if body.columns is None else ", ".join(body.columns)
        if isinstance(body.source, CastSource):
            source = f"CAST({render(body.source.query)}, {body.source.target.value})"
        else:
            source = body.source
        text = f"SELECT {cols} FROM {source}"
        if body.where:
            text += " WHERE " + " AND ".join(
                f"{c.column} {c.op} {_render_literal(c.value)}" for c in body.where
            )
        if body.limit is not None:
            text += f" LIMIT {body.limit}"
        return text
    if isinstance(body, KvScan):
        text = f"SCAN {body.table}"
        if body.row_range is not None:
            start, end = body.row_range
            text += f" ROWS {_render_key(start)}:{_render_key(end)}"
        if body.columns is not None:
            text += " COLS " + ", ".join(_render_key(c) for c in body.columns)
        return text
    ranges = ", ".join(f"{lo}:{hi}" for lo, hi in body.ranges)
    return f"SUB {body.array}[{ranges}]"


def _render_literal(value) -> str:
    if isinstance(value, str):
        return _quote(value)
    return repr(value)


def _render_key(key: str) -> str:
    from .parser import KEYWORDS  # late import: parser depends on this module

    if IDENTIFIER_RE.match(key) and key.upper() not in KEYWORDS:
        return key
    return _quote(key)


def _quote(value: str) -> str:
    if "'" not in value:
        return f"'{value}'"
    if '"' not in value:
        return f'"{value}"'
    raise ValueError(f"cannot render text containing both quote characters: {value!r}")
