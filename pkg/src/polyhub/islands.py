"""Islands, shims and casts.

An island bundles a data model, an operator set, and the engines bound to
it; a shim translates island-level operators into one engine's native call.
Data moves between islands through a single interchange form (sets of
(rowkey, colkey, value) triples), so each island carries exactly two cast
codecs no matter how many engines are registered: translation machinery
grows linearly with engines, not quadratically.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .engines.array import ArrayEngine, DenseArray
from .engines.base import KIND_FOR_ISLAND, EngineId, EngineKind, IslandTag
from .engines.keyvalue import KeyValueEngine
from .engines.relational import Relation, RelationalEngine, Schema, SelectOp
from .errors import CastError, RegistryError
from .query.ast import ArrSub, KvScan, QueryBody, RelSelect

Engine = Union[RelationalEngine, KeyValueEngine, ArrayEngine]

_DATA_MODELS = {
    IslandTag.REL: "relation",
    IslandTag.KV: "keyvalue-cell",
    IslandTag.ARR: "dense-array",
}
_OPERATORS = {
    IslandTag.REL: ("select",),
    IslandTag.KV: ("scan",),
    IslandTag.ARR: ("sub",),
}

ROW_KEY_COLUMN = "_row"


@dataclass
class Island:
    tag: IslandTag
    data_model: str
    operators: tuple[str, ...]
    engines: list[EngineId] = field(default_factory=list)


@dataclass(frozen=True)
class Shim:
    island: IslandTag
    engine_id: str
    capabilities: tuple[str, ...]


@dataclass(frozen=True)
class CastCodec:
    island: IslandTag
    direction: str  # "to_associative" | "from_associative"


@dataclass(frozen=True)
class RegistryStats:
    engine_count: int
    island_count: int
    shim_count: int
    cast_codec_count: int


@dataclass(frozen=True)
class KvScanCall:
    """Native key-value read; auths are supplied at execution time."""

    table: str
    row_range: Optional[tuple[str, str]] = None
    columns: Optional[tuple[str, ...]] = None

    def summary(self) -> str:
        text = f"SCAN {self.table}"
        if self.row_range is not None:
            text += f" ROWS {self.row_range[0]}:{self.row_range[1]}"
        if self.columns is not None:
            text += " COLS " + ", ".join(self.columns)
        return text


@dataclass(frozen=True)
class ArrSubCall:
    array: str
    ranges: tuple[tuple[int, int], ...]

    def summary(self) -> str:
        ranges = ", ".join(f"{lo}:{hi}" for lo, hi in self.ranges)
        return f"SUB {self.array}[{ranges}]"


NativeCall = Union[SelectOp, KvScanCall, ArrSubCall]


def summarize_call(call: NativeCall) -> str:
    if isinstance(call, SelectOp):
        cols = "*" if call.columns is None else ", ".join(call.columns)
        text = f"SELECT {cols} FROM {call.source}"
        if call.where:
            text += " WHERE " + " AND ".join(f"{c.column} {c.op} {c.value!r}" for c in call.where)
        if call.limit is not None:
            text += f" LIMIT {call.limit}"
        return text
    return call.summary()


class Registry:
    """The hub's islands, engines, shims and cast codecs.

    The three islands are fixed; engines are registered onto the island
    matching their kind, which mints exactly one shim per binding.
    """

    def __init__(self):
        self._islands = {
            tag: Island(tag=tag, data_model=_DATA_MODELS[tag], operators=_OPERATORS[tag])
            for tag in IslandTag
        }
        self._engines: dict[str, Engine] = {}
        self._engine_order: list[str] = []
        self._shims: dict[tuple[IslandTag, str], Shim] = {}
        self._codecs = [
            CastCodec(island=tag, direction=direction)
            for tag in IslandTag
            for direction in ("to_associative", "from_associative")
        ]
        self._lock = threading.Lock()

    def register_engine(self, island: IslandTag, engine: Engine) -> Shim:
        """Bind an engine to an island; creates the binding's single shim."""
        island = IslandTag(island)
        if engine.kind is not KIND_FOR_ISLAND[island]:
            raise RegistryError(
                f"kind mismatch: {engine.kind.value} engine {engine.engine_id.id!r} "
                f"cannot join the {island.value} island"
            )
        with self._lock:
            eid = engine.engine_id.id
            if eid in self._engines:
                raise RegistryError(f"engine id {eid!r} is already registered")
            if any(b.id == eid for b in self._islands[island].engines):
                raise RegistryError(f"engine {eid!r} is already bound to {island.value}")
            self._engines[eid] = engine
            self._engine_order.append(eid)
            self._islands[island].engines.append(engine.engine_id)
            shim = Shim(island=island, engine_id=eid, capabilities=_OPERATORS[island])
            self._shims[(island, eid)] = shim
            return shim

    def island(self, tag: IslandTag) -> Island:
        return self._islands[IslandTag(tag)]

    def engine(self, engine_id: str) -> Engine:
        if engine_id not in self._engines:
            raise RegistryError(f"unknown engine {engine_id!r}")
        return self._engines[engine_id]

    def engines(self) -> list[Engine]:
        return [self._engines[eid] for eid in self._engine_order]

    def shim(self, island: IslandTag, engine_id: str) -> Shim:
        key = (IslandTag(island), engine_id)
        if key not in self._shims:
            raise RegistryError(f"no shim for engine {engine_id!r} on {key[0].value}")
        return self._shims[key]

    def stats(self) -> RegistryStats:
        return RegistryStats(
            engine_count=len(self._engines),
            island_count=len(self._islands),
            shim_count=len(self._shims),
            cast_codec_count=len(self._codecs),
        )

    def dump(self) -> dict:
        """Registry contents as a JSON-ready document."""
        return {
            "islands": [
                {
                    "tag": island.tag.value,
                    "data_model": island.data_model,
                    "operators": list(island.operators),
                    "engines": [b.id for b in island.engines],
                }
                for island in self._islands.values()
            ],
            "engines": [
                {"id": eid, "kind": self._engines[eid].kind.value}
                for eid in self._engine_order
            ],
            "shims": [
                {
                    "island": shim.island.value,
                    "engine_id": shim.engine_id,
                    "capabilities": list(shim.capabilities),
                }
                for shim in self._shims.values()
            ],
            "cast_codecs": [
                {"island": codec.island.value, "direction": codec.direction}
                for codec in self._codecs
            ],
        }


def shim_translate(registry: Registry, island: IslandTag, body: QueryBody, engine_id: str) -> NativeCall:
    """Map an island-level operation onto one engine's native call.

    The shim must exist (the engine is bound to the island) and the operator
    must be in its capability set; otherwise the planner is told to reject.
    """
    island = IslandTag(island)
    registry.shim(island, engine_id)  # raises if the binding is missing
    if island is IslandTag.REL and isinstance(body, RelSelect):
        if not isinstance(body.source, str):
            raise RegistryError("cast sources must be materialized before translation")
        return SelectOp(source=body.source, columns=body.columns, where=body.where, limit=body.limit)
    if island is IslandTag.KV and isinstance(body, KvScan):
        return KvScanCall(table=body.table, row_range=body.row_range, columns=body.columns)
    if island is IslandTag.ARR and isinstance(body, ArrSub):
        return ArrSubCall(array=body.array, ranges=body.ranges)
    raise RegistryError(
        f"operator {type(body).__name__} is not supported on the {island.value} island"
    )


# -- associative interchange -------------------------------------------------


class AssociativeTable:
    """Set of (rowkey, colkey, value) triples; at most one value per key pair."""

    def __init__(self):
        self._cells: dict[tuple[str, str], Union[str, int, float]] = {}

    def add(self, rowkey: str, colkey: str, value: Union[str, int, float]) -> None:
        if not rowkey or not colkey:
            raise CastError(f"empty interchange key ({rowkey!r}, {colkey!r})")
        if (rowkey, colkey) in self._cells:
            raise CastError(f"duplicate interchange cell ({rowkey!r}, {colkey!r})")
        self._cells[(rowkey, colkey)] = value

    def triples(self) -> list[tuple[str, str, Union[str, int, float]]]:
        return [
            (rowkey, colkey, self._cells[(rowkey, colkey)])
            for rowkey, colkey in sorted(self._cells, key=lambda k: (k[0].encode(), k[1].encode()))
        ]

    def __len__(self) -> int:
        return len(self._cells)

    @classmethod
    def from_triples(cls, triples) -> "AssociativeTable":
        table = cls()
        for rowkey, colkey, value in triples:
            table.add(rowkey, colkey, value)
        return table


def _text_of(value) -> str:
    return value if isinstance(value, str) else str(value)


def to_associative(island: IslandTag, value) -> AssociativeTable:
    """Encode a native value as interchange triples.

    Relations take their rowkey from the synthetic ``_row`` column when one
    is present (so rowkeys survive repeated casts), else from the declared
    key column, else from the row ordinal; null cells are omitted. Key-value
    entries are assumed to be post-authorization: visibility labels and
    timestamps do not cross islands. Arrays of rank 1 and 2 use zero-padded
    indices; every cell is emitted, zeros included.
    """
    island = IslandTag(island)
    assoc = AssociativeTable()
    if island is IslandTag.REL:
        relation: Relation = value
        names = relation.schema.column_names
        if ROW_KEY_COLUMN in names:
            key_index = relation.schema.column_index(ROW_KEY_COLUMN)
            skip_index = key_index
        elif relation.schema.key_column is not None:
            key_index = relation.schema.column_index(relation.schema.key_column)
            skip_index = None
        else:
            key_index = None
            skip_index = None
        for ordinal, row in enumerate(relation.rows):
            if key_index is not None:
                if row[key_index] is None:
                    raise CastError(f"null rowkey in row {ordinal}")
                rowkey = _text_of(row[key_index])
            else:
                rowkey = f"r{ordinal:06d}"
            for i, name in enumerate(names):
                if i == skip_index or row[i] is None:
                    continue
                assoc.add(rowkey, name, row[i])
        return assoc
    if island is IslandTag.KV:
        for entry in value:
            assoc.add(entry.row, entry.column, entry.value)
        return assoc
    array: DenseArray = value
    shape = array.shape
    if len(shape) == 1:
        for i in range(shape[0]):
            assoc.add(f"{i:06d}", "v", array.cells[i])
    elif len(shape) == 2:
        for i in range(shape[0]):
            for j in range(shape[1]):
                assoc.add(f"{i:06d}", f"{j:06d}", array.cells[i * shape[1] + j])
    else:
        raise CastError(f"arrays of rank {len(shape)} have no interchange form (max 2)")
    return assoc


def from_associative(assoc: AssociativeTable, island: IslandTag):
    """Decode interchange triples into the target island's native form.

    REL: one row per rowkey (lexicographic), a leading ``_row`` key column,
    absent cells as nulls, column types inferred. KV: one put-ready
    (row, column, visibility, value) tuple per triple with an empty label.
    ARR: integer keys give a rank-2 grid (a lone ``v`` colkey gives rank 1);
    dims span max index + 1 per axis and absent cells read 0.0.
    """
    island = IslandTag(island)
    triples = assoc.triples()
    if island is IslandTag.REL:
        colkeys = sorted({colkey for _, colkey, _ in triples})
        if ROW_KEY_COLUMN in colkeys:
            raise CastError(f"interchange data already uses the reserved column {ROW_KEY_COLUMN!r}")
        rowkeys = sorted({rowkey for rowkey, _, _ in triples}, key=str.encode)
        cells = {(rowkey, colkey): v for rowkey, colkey, v in triples}
        types = {}
        for colkey in colkeys:
            values = [cells[(r, colkey)] for r in rowkeys if (r, colkey) in cells]
            types[colkey] = _infer_type(values)
        columns = [(ROW_KEY_COLUMN, "text")] + [(c, types[c]) for c in colkeys]
        rows = []
        for rowkey in rowkeys:
            row = [rowkey]
            for colkey in colkeys:
                value = cells.get((rowkey, colkey))
                row.append(None if value is None else _coerce(value, types[colkey]))
            rows.append(tuple(row))
        return Relation(schema=Schema(columns=tuple(columns), key_column=ROW_KEY_COLUMN), rows=rows)
    if island is IslandTag.KV:
        return [(rowkey, colkey, "", _text_of(value)) for rowkey, colkey, value in triples]
    # ARR
    if not triples:
        return DenseArray(name="cast", dims=(("i", 0),), cells=())
    colkeys = {colkey for _, colkey, _ in triples}
    if colkeys == {"v"}:
        length = max(_index_of(rowkey, "rowkey") for rowkey, _, _ in triples) + 1
        cells = [0.0] * length
        for rowkey, _, value in triples:
            cells[_index_of(rowkey, "rowkey")] = _number_of(value)
        return DenseArray(name="cast", dims=(("i", length),), cells=tuple(cells))
    n_rows = max(_index_of(rowkey, "rowkey") for rowkey, _, _ in triples) + 1
    n_cols = max(_index_of(colkey, "colkey") for _, colkey, _ in triples) + 1
    cells = [0.0] * (n_rows * n_cols)
    for rowkey, colkey, value in triples:
        cells[_index_of(rowkey, "rowkey") * n_cols + _index_of(colkey, "colkey")] = _number_of(value)
    return DenseArray(name="cast", dims=(("i", n_rows), ("j", n_cols)), cells=tuple(cells))


def cast(value, from_island: IslandTag, to_island: IslandTag):
    """Move a native value between islands through the interchange form."""
    return from_associative(to_associative(from_island, value), to_island)


def _infer_type(values) -> str:
    if values and all(isinstance(v, int) and not isinstance(v, bool) for v in values):
        return "int64"
    if values and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        return "float64"
    return "text"


def _coerce(value, ctype: str):
    if ctype == "int64":
        return int(value)
    if ctype == "float64":
        return float(value)
    return _text_of(value)


def _index_of(key: str, what: str) -> int:
    try:
        index = int(key, 10)
    except ValueError:
        raise CastError(f"{what} {key!r} does not parse as an array index") from None
    if index < 0:
        raise CastError(f"{what} {key!r} is negative")
    return index


def _number_of(value) -> float:
    if isinstance(value, bool):
        raise CastError(f"value {value!r} is not numeric")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise CastError(f"value {value!r} does not parse as a number") from None


# -- architecture taxonomy ----------------------------------------------------


def classify_architecture(stores: Sequence[Union[EngineKind, str]], interface_count: int) -> str:
    """Place a system in the four-way heterogeneity/interface grid:
    homogeneous stores with one interface are federated, with several are
    polyglot; heterogeneous stores with one interface are a multistore,
    with several a polystore."""
    if not stores:
        raise ValueError("store list is empty")
    if interface_count < 1:
        raise ValueError("interface count must be positive")
    kinds = {EngineKind(s) if not isinstance(s, EngineKind) else s for s in stores}
    homogeneous = len(kinds) == 1
    single = interface_count == 1
    if homogeneous:
        return "federated" if single else "polyglot"
    return "multistore" if single else "polystore"
