"""Engine snapshot files.

Layout: magic bytes ``PHUB``, format version (u8), engine kind (u8), then a
sequence of length-prefixed sections (u32 big-endian length + payload). The
first section is a JSON header carrying engine-level scalars; each further
section is the JSON record of one table or array.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Union

from ..errors import SnapshotError
from .array import ArrayEngine
from .base import EngineKind
from .keyvalue import KeyValueEngine
from .relational import RelationalEngine

MAGIC = b"PHUB"
FORMAT_VERSION = 1

_KIND_BYTES = {
    EngineKind.RELATIONAL: 1,
    EngineKind.KEYVALUE: 2,
    EngineKind.ARRAY: 3,
}
_KIND_FROM_BYTE = {v: k for k, v in _KIND_BYTES.items()}

Engine = Union[RelationalEngine, KeyValueEngine, ArrayEngine]

_ENGINE_CLASSES = {
    EngineKind.RELATIONAL: RelationalEngine,
    EngineKind.KEYVALUE: KeyValueEngine,
    EngineKind.ARRAY: ArrayEngine,
}


def _sections_for(engine: Engine) -> list[dict]:
    state = engine.dump_state()
    if engine.kind is EngineKind.RELATIONAL:
        header = {"engine_id": state["engine_id"]}
        records = [{"name": n, **t} for n, t in state["tables"].items()]
    elif engine.kind is EngineKind.KEYVALUE:
        header = {"engine_id": state["engine_id"], "next_timestamp": state["next_timestamp"]}
        records = [{"name": n, "entries": e} for n, e in state["tables"].items()]
    else:
        header = {"engine_id": state["engine_id"]}
        records = [{"name": n, **a} for n, a in state["arrays"].items()]
    return [header] + records


def _state_from(kind: EngineKind, sections: list[dict]) -> dict:
    header, records = sections[0], sections[1:]
    if kind is EngineKind.RELATIONAL:
        return {
            "engine_id": header["engine_id"],
            "tables": {
                r["name"]: {"columns": r["columns"], "key_column": r["key_column"], "rows": r["rows"]}
                for r in records
            },
        }
    if kind is EngineKind.KEYVALUE:
        return {
            "engine_id": header["engine_id"],
            "next_timestamp": header["next_timestamp"],
            "tables": {r["name"]: r["entries"] for r in records},
        }
    return {
        "engine_id": header["engine_id"],
        "arrays": {r["name"]: {"dims": r["dims"], "cells": r["cells"]} for r in records},
    }


def checkpoint(engine: Engine, path: Union[str, Path]) -> None:
    """Write the full engine state to ``path``; replaces any existing snapshot."""
    path = Path(path)
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("BB", FORMAT_VERSION, _KIND_BYTES[engine.kind])
    for section in _sections_for(engine):
        payload = json.dumps(section, sort_keys=True).encode("utf-8")
        blob += struct.pack(">I", len(payload))
        blob += payload
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(bytes(blob))
        os.replace(tmp, path)
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}: {exc}") from exc


def restore(path: Union[str, Path]) -> Engine:
    """Rebuild an engine from a snapshot, timestamps and schemas included."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if blob[:4] != MAGIC:
        raise SnapshotError(f"{path} is not an engine snapshot (bad magic)")
    if len(blob) < 6:
        raise SnapshotError(f"snapshot {path} is truncated")
    version, kind_byte = struct.unpack_from("BB", blob, 4)
    if version != FORMAT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if kind_byte not in _KIND_FROM_BYTE:
        raise SnapshotError(f"unknown engine kind byte {kind_byte}")
    kind = _KIND_FROM_BYTE[kind_byte]
    sections = []
    offset = 6
    while offset < len(blob):
        if offset + 4 > len(blob):
            raise SnapshotError(f"snapshot {path} is truncated")
        (length,) = struct.unpack_from(">I", blob, offset)
        offset += 4
        if offset + length > len(blob):
            raise SnapshotError(f"snapshot {path} is truncated")
        try:
            sections.append(json.loads(blob[offset : offset + length]))
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"snapshot {path} is corrupt: {exc}") from exc
        offset += length
    if not sections:
        raise SnapshotError(f"snapshot {path} has no header section")
    try:
        return _ENGINE_CLASSES[kind].from_state(_state_from(kind, sections))
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"snapshot {path} is corrupt: {exc}") from exc
