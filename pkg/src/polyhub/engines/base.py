"""Engine identity and kind/island vocabulary."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class EngineKind(str, Enum):
    RELATIONAL = "relational"
    KEYVALUE = "keyvalue"
    ARRAY = "array"


class IslandTag(str, Enum):
    REL = "REL"
    KV = "KV"
    ARR = "ARR"


# Each island hosts engines of exactly one kind.
KIND_FOR_ISLAND = {
    IslandTag.REL: EngineKind.RELATIONAL,
    IslandTag.KV: EngineKind.KEYVALUE,
    IslandTag.ARR: EngineKind.ARRAY,
}
ISLAND_FOR_KIND = {kind: tag for tag, kind in KIND_FOR_ISLAND.items()}

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def check_identifier(name: str, what: str) -> str:
    if not IDENTIFIER_RE.match(name or ""):
        raise ValueError(f"invalid {what}: {name!r}")
    return name


@dataclass(frozen=True)
class EngineId:
    """Identity of one embedded engine within a hub."""

    id: str
    kind: EngineKind

    def __post_init__(self):
        check_identifier(self.id, "engine id")
