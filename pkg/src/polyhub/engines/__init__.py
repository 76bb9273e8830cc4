"""Embedded storage engines: relational, key-value, dense array."""

from .array import ArrayEngine, DenseArray
from .base import EngineId, EngineKind, IslandTag, ISLAND_FOR_KIND, KIND_FOR_ISLAND
from .keyvalue import KeyValueEngine, KvEntry
from .relational import (
    CommitReport,
    Comparison,
    CreateTable,
    Delete,
    Insert,
    Relation,
    RelationalEngine,
    Schema,
    SelectOp,
    TxnStatement,
)
from .snapshot import checkpoint, restore
from .visibility import VisibilityExpr, parse_visibility, visibility_eval

__all__ = [
    "ArrayEngine",
    "DenseArray",
    "EngineId",
    "EngineKind",
    "IslandTag",
    "ISLAND_FOR_KIND",
    "KIND_FOR_ISLAND",
    "KeyValueEngine",
    "KvEntry",
    "CommitReport",
    "Comparison",
    "CreateTable",
    "Delete",
    "Insert",
    "Relation",
    "RelationalEngine",
    "Schema",
    "SelectOp",
    "TxnStatement",
    "checkpoint",
    "restore",
    "VisibilityExpr",
    "parse_visibility",
    "visibility_eval",
]
