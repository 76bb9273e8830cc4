"""Relational engine: transactions, reads, atomicity, isolation."""

from __future__ import annotations

import random
import threading

import pytest

from polyhub.engines.relational import (
    Comparison,
    CreateTable,
    Delete,
    Insert,
    RelationalEngine,
    Schema,
    SelectOp,
)
from polyhub.errors import EngineError, TransactionError


def make_engine() -> RelationalEngine:
    return RelationalEngine("rel0")


def single_int_schema() -> Schema:
    return Schema(columns=(("a", "int64"),))


def test_create_insert_commit():
    engine = make_engine()
    report = engine.apply([
        CreateTable("t", single_int_schema()),
        Insert("t", ((1,), (2,))),
    ])
    assert report.statements == 2
    assert report.rows_affected == 2
    result = engine.select(SelectOp(source="t"))
    assert result.rows == [(1,), (2,)]


def test_type_mismatch_rolls_back_whole_txn():
    engine = make_engine()
    engine.apply([CreateTable("t", single_int_schema())])
    with pytest.raises(TransactionError) as exc_info:
        engine.apply([Insert("t", ((3,),)), Insert("t", (("x",),))])
    assert exc_info.value.statement_index == 1
    # atomicity: row 3 must be absent too
    assert engine.select(SelectOp(source="t")).rows == []


def test_concurrent_txns_match_a_serial_order():
    rows_a = tuple((i,) for i in range(100))
    rows_b = tuple((i,) for i in range(100, 200))

    def serial(first, second):
        oracle = make_engine()
        oracle.apply([CreateTable("t", single_int_schema())])
        oracle.apply([Insert("t", first)])
        oracle.apply([Insert("t", second)])
        return oracle.select(SelectOp(source="t")).rows

    expected = {tuple(serial(rows_a, rows_b)), tuple(serial(rows_b, rows_a))}

    engine = make_engine()
    engine.apply([CreateTable("t", single_int_schema())])
    barrier = threading.Barrier(2)

    def run(rows):
        barrier.wait()
        engine.apply([Insert("t", rows)])

    threads = [threading.Thread(target=run, args=(r,)) for r in (rows_a, rows_b)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    final = tuple(engine.select(SelectOp(source="t")).rows)
    assert len(final) == 200
    assert final in expected


def test_concurrent_txns_on_disjoint_tables_compose():
    engine = make_engine()
    engine.apply([CreateTable("t1", single_int_schema()), CreateTable("t2", single_int_schema())])
    barrier = threading.Barrier(2)

    def run(table, offset):
        barrier.wait()
        engine.apply([Insert(table, tuple((offset + i,) for i in range(50)))])

    threads = [
        threading.Thread(target=run, args=("t1", 0)),
        threading.Thread(target=run, args=("t2", 1000)),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert engine.select(SelectOp(source="t1")).rows == [(i,) for i in range(50)]
    assert engine.select(SelectOp(source="t2")).rows == [(1000 + i,) for i in range(50)]


def seeded_people() -> RelationalEngine:
    engine = make_engine()
    engine.apply([
        CreateTable("people", Schema(columns=(("name", "text"), ("age", "int64")))),
        Insert("people", (("p1", 25), ("p2", 31), ("p3", 40), ("p4", 18), ("p5", 33))),
    ])
    return engine


def test_select_all_preserves_insertion_order():
    engine = seeded_people()
    result = engine.select(SelectOp(source="people"))
    assert [row[0] for row in result.rows] == ["p1", "p2", "p3", "p4", "p5"]


def test_filter_matches_brute_force_scan():
    engine = seeded_people()
    result = engine.select(SelectOp(source="people", where=(Comparison("age", ">", 30),)))
    # independent oracle: scan the seeded rows directly
    seeded = [("p1", 25), ("p2", 31), ("p3", 40), ("p4", 18), ("p5", 33)]
    expected = [row for row in seeded if row[1] > 30]
    assert result.rows == expected
    assert [age for _, age in result.rows] == [31, 40, 33]


def test_limit_zero_keeps_schema():
    engine = seeded_people()
    result = engine.select(SelectOp(source="people", limit=0))
    assert result.rows == []
    assert result.schema.column_names == ("name", "age")


def test_projection_order_and_limit():
    engine = seeded_people()
    result = engine.select(SelectOp(source="people", columns=("age", "name"), limit=2))
    assert result.schema.column_names == ("age", "name")
    assert result.rows == [(25, "p1"), (31, "p2")]


def test_unknown_table_and_column_errors():
    engine = seeded_people()
    with pytest.raises(EngineError, match="unknown table"):
        engine.select(SelectOp(source="nope"))
    with pytest.raises(EngineError, match="unknown column"):
        engine.select(SelectOp(source="people", where=(Comparison("height", "=", 1),)))
    with pytest.raises(EngineError, match="unknown column"):
        engine.select(SelectOp(source="people", columns=("height",)))


def test_text_column_vs_numeric_literal_is_an_error():
    engine = seeded_people()
    with pytest.raises(EngineError, match="text column"):
        engine.select(SelectOp(source="people", where=(Comparison("name", "<", 5),)))
    with pytest.raises(EngineError, match="numeric column"):
        engine.select(SelectOp(source="people", where=(Comparison("age", "=", "x"),)))


def test_delete_with_predicate():
    engine = seeded_people()
    report = engine.apply([Delete("people", (Comparison("age", "<", 30),))])
    assert report.rows_affected == 2
    assert [row[1] for row in engine.select(SelectOp(source="people")).rows] == [31, 40, 33]
    # empty predicate clears the table
    engine.apply([Delete("people")])
    assert engine.select(SelectOp(source="people")).rows == []


def test_key_column_uniqueness():
    engine = make_engine()
    schema = Schema(columns=(("k", "text"), ("v", "int64")), key_column="k")
    engine.apply([CreateTable("t", schema), Insert("t", (("a", 1),))])
    with pytest.raises(TransactionError, match="duplicate key"):
        engine.apply([Insert("t", (("a", 2),))])
    with pytest.raises(TransactionError, match="null key"):
        engine.apply([Insert("t", ((None, 3),))])
    assert engine.row_count("t") == 1


def test_row_width_and_bool_rejection():
    engine = make_engine()
    engine.apply([CreateTable("t", single_int_schema())])
    with pytest.raises(TransactionError, match="row width"):
        engine.apply([Insert("t", ((1, 2),))])
    with pytest.raises(TransactionError, match="type mismatch"):
        engine.apply([Insert("t", ((True,),))])


def test_float_column_accepts_int():
    engine = make_engine()
    engine.apply([
        CreateTable("t", Schema(columns=(("x", "float64"),))),
        Insert("t", ((1,), (2.5,))),
    ])
    assert engine.select(SelectOp(source="t")).rows == [(1.0,), (2.5,)]


def test_duplicate_create_and_unknown_insert():
    engine = make_engine()
    engine.apply([CreateTable("t", single_int_schema())])
    with pytest.raises(TransactionError, match="already exists"):
        engine.apply([CreateTable("t", single_int_schema())])
    with pytest.raises(TransactionError, match="unknown table"):
        engine.apply([Insert("missing", ((1,),))])


def random_batch(rng: random.Random, valid: bool) -> list:
    """A txn over table t(a:int64 key) that is valid unless told otherwise."""
    statements = []
    for _ in range(rng.randint(1, 5)):
        kind = rng.random()
        if kind < 0.6:
            rows = tuple((rng.randint(1000, 10_000_000),) for _ in range(rng.randint(1, 10)))
            statements.append(Insert("t", rows))
        elif kind < 0.8:
            statements.append(Delete("t", (Comparison("a", ">", rng.randint(0, 10_000_000)),)))
        else:
            statements.append(Insert("t", ((rng.randint(1000, 10_000_000),),)))
    if not valid:
        bad = rng.choice([
            Insert("t", (("oops",),)),            # type mismatch
            Insert("missing", ((1,),)),            # unknown table
            Insert("t", ((1, 2),)),                # width mismatch
            CreateTable("t", single_int_schema()),  # duplicate table
        ])
        statements.insert(rng.randint(0, len(statements)), bad)
    return statements


def test_randomized_atomicity_property():
    rng = random.Random(1234)
    engine = make_engine()
    engine.apply([CreateTable("t", single_int_schema()), Insert("t", ((1,), (2,), (3,)))])
    for _ in range(150):
        before = engine.dump_state()
        with pytest.raises(TransactionError):
            engine.apply(random_batch(rng, valid=False))
        assert engine.dump_state() == before
        # interleave a valid batch so state keeps moving
        engine.apply(random_batch(rng, valid=True))
