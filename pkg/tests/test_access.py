"""Access control: query control, view filtering, result limits, auths."""

from __future__ import annotations

import json
import random

import pytest

from helpers import visibility_oracle
from polyhub.access import (
    Decision,
    PolicyStore,
    Principal,
    QueryPolicy,
    ViewPolicy,
    apply_view,
    check_query,
    effective_query_policy,
    enforce_result_limit,
    principal_auths,
)
from polyhub.engines.base import IslandTag
from polyhub.engines.keyvalue import KeyValueEngine
from polyhub.engines.relational import Relation, Schema
from polyhub.errors import AccessDenied, ConfigError, LimitExceeded
from polyhub.query.parser import parse, parse_predicate

REL, KV, ARR = IslandTag.REL, IslandTag.KV, IslandTag.ARR


def principal(roles=(), auths=()) -> Principal:
    return Principal(id="p", roles=frozenset(roles), auths=frozenset(auths))


def person_relation() -> Relation:
    return Relation(
        schema=Schema(columns=(("name", "text"), ("age", "int64"), ("dept", "text"))),
        rows=[("alice", 34, "eng"), ("bob", 28, "ops"), ("carol", 41, "eng")],
    )


# -- query control ----------------------------------------------------------


def test_default_deny_without_any_policy():
    store = PolicyStore()
    decision = check_query(principal(roles={"analyst"}), parse("REL(SELECT * FROM t)"), store)
    assert not decision.allowed
    assert "no query policy" in decision.reason


def test_island_not_allowed_names_the_island():
    store = PolicyStore(query_policies=[QueryPolicy(role="r", allowed_islands=frozenset({REL}))])
    decision = check_query(principal(roles={"r"}), parse("KV(SCAN t)"), store)
    assert not decision.allowed
    assert "KV" in decision.reason


def test_limit_policy_boundaries():
    store = PolicyStore(query_policies=[
        QueryPolicy(role="r", allowed_islands=frozenset({REL}), max_result_rows=10, require_limit=True),
    ])
    p = principal(roles={"r"})
    assert check_query(p, parse("REL(SELECT * FROM t LIMIT 5)"), store).allowed
    assert check_query(p, parse("REL(SELECT * FROM t LIMIT 10)"), store).allowed
    denied = check_query(p, parse("REL(SELECT * FROM t LIMIT 11)"), store)
    assert not denied.allowed and "11" in denied.reason
    denied = check_query(p, parse("REL(SELECT * FROM t)"), store)
    assert not denied.allowed and "LIMIT" in denied.reason


def test_require_limit_only_applies_to_rel_outermost():
    store = PolicyStore(query_policies=[
        QueryPolicy(role="r", allowed_islands=frozenset({KV}), max_result_rows=10, require_limit=True),
    ])
    assert check_query(principal(roles={"r"}), parse("KV(SCAN t)"), store).allowed


def test_table_allowlist_denies_by_name():
    store = PolicyStore(query_policies=[
        QueryPolicy(role="r", allowed_islands=frozenset({REL, KV}), table_allowlist=frozenset({"a"})),
    ])
    p = principal(roles={"r"})
    assert check_query(p, parse("REL(SELECT * FROM a)"), store).allowed
    denied = check_query(p, parse("REL(SELECT * FROM b)"), store)
    assert not denied.allowed and "'b'" in denied.reason


def test_cast_subqueries_are_checked_too():
    store = PolicyStore(query_policies=[
        QueryPolicy(role="r", allowed_islands=frozenset({REL}), table_allowlist=None),
    ])
    denied = check_query(
        principal(roles={"r"}),
        parse("REL(SELECT * FROM CAST(KV(SCAN w), REL))"),
        store,
    )
    assert not denied.allowed and "KV" in denied.reason


def test_union_semantics_across_roles():
    store = PolicyStore(query_policies=[
        QueryPolicy(role="r1", allowed_islands=frozenset({REL}), table_allowlist=frozenset({"a"}),
                    max_result_rows=10, require_limit=True),
        QueryPolicy(role="r2", allowed_islands=frozenset({KV}), table_allowlist=frozenset({"b"}),
                    max_result_rows=50, require_limit=True),
    ])
    p = principal(roles={"r1", "r2"})
    merged = effective_query_policy(p, store)
    # most-permissive union: both islands, both tables, the larger limit
    assert merged.allowed_islands == frozenset({REL, KV})
    assert merged.table_allowlist == frozenset({"a", "b"})
    assert merged.max_result_rows == 50
    assert merged.require_limit is True
    # the single-table queries each role could not run alone are now allowed
    assert check_query(p, parse("REL(SELECT * FROM b LIMIT 50)"), store).allowed
    assert check_query(p, parse("KV(SCAN a)"), store).allowed
    assert not check_query(p, parse("REL(SELECT * FROM c LIMIT 1)"), store).allowed


def test_any_role_waiving_require_limit_waives_it():
    store = PolicyStore(query_policies=[
        QueryPolicy(role="strict", allowed_islands=frozenset({REL}), require_limit=True),
        QueryPolicy(role="loose", allowed_islands=frozenset({REL}), require_limit=False),
    ])
    p = principal(roles={"strict", "loose"})
    assert check_query(p, parse("REL(SELECT * FROM t)"), store).allowed


def test_unlimited_role_wins_the_row_cap():
    store = PolicyStore(query_policies=[
        QueryPolicy(role="capped", allowed_islands=frozenset({REL}), max_result_rows=5),
        QueryPolicy(role="open", allowed_islands=frozenset({REL})),
    ])
    merged = effective_query_policy(principal(roles={"capped", "open"}), store)
    assert merged.max_result_rows is None


def test_role_monotonicity_randomized():
    rng = random.Random(99)
    islands = [REL, KV, ARR]
    tables = ["a", "b", "c", "d"]
    for _ in range(30):
        policies = []
        role_names = []
        for i in range(rng.randint(1, 4)):
            role = f"role{i}"
            role_names.append(role)
            policies.append(QueryPolicy(
                role=role,
                allowed_islands=frozenset(rng.sample(islands, rng.randint(0, 3))),
                table_allowlist=None if rng.random() < 0.3 else frozenset(rng.sample(tables, rng.randint(0, 4))),
                max_result_rows=None if rng.random() < 0.3 else rng.randint(1, 100),
                require_limit=rng.random() < 0.5,
            ))
        store = PolicyStore(query_policies=policies)
        subset = rng.sample(role_names, rng.randint(1, len(role_names)))
        smaller = principal(roles=set(subset[:-1]) if len(subset) > 1 else set(subset))
        bigger = principal(roles=set(subset))
        queries = [
            "REL(SELECT * FROM a LIMIT 1)", "REL(SELECT * FROM d)",
            "KV(SCAN b)", "ARR(SUB c[0:1])",
        ]
        for text in queries:
            if check_query(smaller, parse(text), store).allowed:
                assert check_query(bigger, parse(text), store).allowed, (text, subset)


# -- result limit -----------------------------------------------------------


def test_limit_abort_consumes_exactly_limit_plus_one():
    consumed = []

    def stream():
        for i in range(12):
            consumed.append(i)
            yield i

    with pytest.raises(LimitExceeded) as exc_info:
        enforce_result_limit(stream(), 10)
    assert exc_info.value.limit == 10
    assert len(consumed) == 11  # aborted at row 11, nothing returned


def test_limit_boundary_is_inclusive():
    assert enforce_result_limit(iter(range(10)), 10) == list(range(10))


def test_no_limit_passes_any_size():
    assert len(enforce_result_limit(iter(range(5000)), None)) == 5000


# -- view policies -----------------------------------------------------------


def test_view_projects_to_allowed_columns():
    store = PolicyStore(view_policies=[
        ViewPolicy(role="analyst", table="person", allowed_columns=frozenset({"name"})),
    ])
    out = apply_view(principal(roles={"analyst"}), "person", person_relation(), store)
    assert out.schema.column_names == ("name",)
    assert out.rows == [("alice",), ("bob",), ("carol",)]


def test_view_default_deny_without_policy():
    store = PolicyStore(view_policies=[ViewPolicy(role="other", table="person")])
    with pytest.raises(AccessDenied, match="no view policy"):
        apply_view(principal(roles={"analyst"}), "person", person_relation(), store)


def test_view_column_union_across_roles():
    store = PolicyStore(view_policies=[
        ViewPolicy(role="r1", table="person", allowed_columns=frozenset({"name"})),
        ViewPolicy(role="r2", table="person", allowed_columns=frozenset({"age"})),
    ])
    out = apply_view(principal(roles={"r1", "r2"}), "person", person_relation(), store)
    assert out.schema.column_names == ("name", "age")


def test_view_row_predicates_or_across_roles():
    store = PolicyStore(view_policies=[
        ViewPolicy(role="r1", table="person", row_predicate=parse_predicate("age > 40")),
        ViewPolicy(role="r2", table="person", row_predicate=parse_predicate("dept = 'ops'")),
    ])
    out = apply_view(principal(roles={"r1", "r2"}), "person", person_relation(), store)
    assert {row[0] for row in out.rows} == {"bob", "carol"}


def test_view_predicate_sees_hidden_columns():
    # The predicate references age even though only name is visible.
    store = PolicyStore(view_policies=[
        ViewPolicy(role="r1", table="person",
                   allowed_columns=frozenset({"name"}),
                   row_predicate=parse_predicate("age > 30")),
    ])
    out = apply_view(principal(roles={"r1"}), "person", person_relation(), store)
    assert out.schema.column_names == ("name",)
    assert {row[0] for row in out.rows} == {"alice", "carol"}


# -- auths -------------------------------------------------------------------


def test_principal_auths_verbatim():
    assert principal_auths(principal(auths={"a", "b"})) == {"a", "b"}
    assert principal_auths(principal()) == frozenset()


def test_auths_compose_with_kv_scan_like_the_oracle():
    engine = KeyValueEngine("kv0")
    labels = ["", "s", "s&t", "s|t", "t&(s|u)"]
    engine.put("m", [(f"r{i}", "c", label, str(i)) for i, label in enumerate(labels)])
    for auths in [set(), {"s"}, {"t"}, {"s", "t"}, {"t", "u"}]:
        p = principal(auths=auths)
        rows = {e.row for e in engine.scan("m", auths=principal_auths(p))}
        expected = {f"r{i}" for i, label in enumerate(labels) if visibility_oracle(label, auths)}
        assert rows == expected


def test_invalid_auth_token_rejected():
    with pytest.raises(ConfigError, match="invalid auth token"):
        principal(auths={"bad token"})


# -- decisions and the policy file ---------------------------------------------


def test_deny_requires_a_reason():
    with pytest.raises(ValueError):
        Decision("deny")


def test_policy_file_round_trip(tmp_path):
    doc = {
        "principals": [
            {"id": "alice", "roles": ["analyst"], "auths": ["internal"]},
        ],
        "view_policies": [
            {"role": "analyst", "table": "person", "allowed_columns": ["name", "age"],
             "row_predicate": "age > 18"},
            {"role": "analyst", "table": "open", "allowed_columns": "ALL"},
        ],
        "query_policies": [
            {"role": "analyst", "allowed_islands": ["REL", "KV"], "table_allowlist": "ALL",
             "max_result_rows": 100, "require_limit": False},
        ],
    }
    path = tmp_path / "policies.json"
    path.write_text(json.dumps(doc))
    store = PolicyStore.from_file(path)
    alice = store.principal("alice")
    assert alice.roles == {"analyst"}
    assert store.view_policy("analyst", "person").allowed_columns == {"name", "age"}
    assert store.view_policy("analyst", "open").allowed_columns is None
    assert store.query_policy("analyst").max_result_rows == 100
    assert check_query(alice, parse("REL(SELECT * FROM anything)"), store).allowed

    # reload picks up edits
    doc["query_policies"][0]["allowed_islands"] = ["KV"]
    path.write_text(json.dumps(doc))
    store.reload(path)
    assert not check_query(alice, parse("REL(SELECT * FROM anything)"), store).allowed


def test_malformed_policy_file_errors(tmp_path):
    path = tmp_path / "policies.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        PolicyStore.from_file(path)
    path.write_text(json.dumps({"query_policies": [{"role": "r", "allowed_islands": ["NOPE"]}]}))
    with pytest.raises(ConfigError, match="malformed"):
        PolicyStore.from_file(path)
    with pytest.raises(ConfigError, match="cannot read"):
        PolicyStore.from_file(tmp_path / "missing.json")


def test_duplicate_policies_rejected():
    with pytest.raises(ConfigError, match="duplicate query policy"):
        PolicyStore(query_policies=[
            QueryPolicy(role="r", allowed_islands=frozenset({REL})),
            QueryPolicy(role="r", allowed_islands=frozenset({KV})),
        ])
    with pytest.raises(ConfigError, match="duplicate view policy"):
        PolicyStore(view_policies=[
            ViewPolicy(role="r", table="t"),
            ViewPolicy(role="r", table="t"),
        ])
