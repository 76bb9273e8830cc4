"""Common fixtures: a seeded hub with one object per island."""

from __future__ import annotations

import time

import pytest

from polyhub.access import PolicyStore, Principal, QueryPolicy, ViewPolicy
from polyhub.catalog import DatasetEntry, Location
from polyhub.engines.base import IslandTag
from polyhub.engines.relational import CreateTable, Insert, Schema
from polyhub.hub.core import DataHub

ALL_ISLANDS = frozenset({IslandTag.REL, IslandTag.KV, IslandTag.ARR})

PERSON_ROWS = [
    ("alice", 34, "eng"),
    ("bob", 28, "ops"),
    ("carol", 41, "eng"),
]


def make_policy_store() -> PolicyStore:
    return PolicyStore(
        principals=[
            Principal(id="alice", roles=frozenset({"analyst"}), auths=frozenset({"internal"})),
            Principal(id="eve", roles=frozenset(), auths=frozenset()),
        ],
        view_policies=[ViewPolicy(role="analyst", table="person")],
        query_policies=[QueryPolicy(role="analyst", allowed_islands=ALL_ISLANDS)],
    )


def seed_hub(hub: DataHub) -> DataHub:
    """One table per island plus catalog locations, as the tests expect."""
    rel = hub.registry.engine("rel0")
    rel.apply([
        CreateTable(
            "person",
            Schema(columns=(("name", "text"), ("age", "int64"), ("dept", "text")), key_column="name"),
        ),
        Insert("person", tuple(PERSON_ROWS)),
    ])
    kv = hub.registry.engine("kv0")
    kv.put("w", [("apple", "count", "", "12"), ("bee", "count", "", "3")])
    arr = hub.registry.engine("arr0")
    arr.create("grid", [("i", 4), ("j", 4)])
    coords = [(i, j) for i in range(4) for j in range(4)]
    arr.write("grid", coords, [float(4 * i + j) for i, j in coords])
    now = time.time()
    for object_name, island, engine_id in [
        ("person", IslandTag.REL, "rel0"),
        ("w", IslandTag.KV, "kv0"),
        ("grid", IslandTag.ARR, "arr0"),
    ]:
        hub.catalog.register(
            DatasetEntry(
                id=object_name,
                name=object_name,
                locations=[Location(island, engine_id, object_name)],
                created_at=now,
                updated_at=now,
            )
        )
    return hub


@pytest.fixture
def hub() -> DataHub:
    return seed_hub(DataHub.in_memory(policy_store=make_policy_store()))
