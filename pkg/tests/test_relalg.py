"""Encrypted operators: presence semantics, fixed hand-checked results,
capacity contracts, and ladder hygiene."""

from __future__ import annotations

from collections import Counter

import pytest

from hequel.circuits import decrypt_word
from hequel.crypto import SecurityContext, keygen
from hequel.errors import DuplicateColumn, LadderMismatch, PlanTypeError
from hequel.relalg import (Cmp, ColRef, Lit, decrypt_table,
                           decrypt_table_full, encrypt_table, op_avg,
                           op_bag_diff, op_bag_intersect, op_bag_union,
                           op_count, op_cross, op_distinct, op_groupby_sum,
                           op_max, op_min, op_project, op_select, op_sort,
                           op_sum)
from hequel.schema import PlainTable, Schema

PC_SCHEMA = Schema((("model", 12), ("speed", 4), ("ram", 12),
                    ("hd", 10), ("price", 12)))
PC_ROWS = [
    (1001, 3, 1024, 250, 2114),
    (1002, 2, 512, 80, 478),
    (1003, 1, 512, 250, 600),
]


@pytest.fixture()
def session():
    ladder, keys = keygen(SecurityContext(depth_budget=8), seed=b"relalg")
    return ladder, keys, ladder.public_key()


def enc_pc(pk, presence=None):
    return encrypt_table(pk, PlainTable(PC_SCHEMA, list(PC_ROWS)),
                         presence=presence, name="pc")


def bag(keys, table) -> Counter:
    return Counter(decrypt_table(keys, table).rows)


def test_table_round_trip_with_presence(session):
    _, keys, pk = session
    t = enc_pc(pk, presence=[1, 0, 1])
    assert t.capacity == 3
    assert bag(keys, t) == Counter([PC_ROWS[0], PC_ROWS[2]])
    rows, presences = decrypt_table_full(keys, t)
    assert presences == [1, 0, 1]
    assert rows == PC_ROWS


def test_select_marks_presence(session):
    _, keys, pk = session
    t = enc_pc(pk, presence=[1, 1, 0])
    out = op_select(Cmp(">", ColRef("speed"), Lit(1)), t)
    assert out.capacity == 3  # shape is data-independent
    _, presences = decrypt_table_full(keys, out)
    # speeds 3,2,1: predicate keeps rows 1,2; row 3 was already absent
    assert presences == [1, 1, 0]
    assert bag(keys, out) == Counter([PC_ROWS[0], PC_ROWS[1]])


def test_select_on_absent_row_stays_absent(session):
    _, keys, pk = session
    t = enc_pc(pk, presence=[0, 0, 0])
    out = op_select(Cmp(">=", ColRef("model"), Lit(0)), t)
    assert bag(keys, out) == Counter()


def test_select_literal_only_predicate_rejected(session):
    _, _, pk = session
    t = enc_pc(pk)
    with pytest.raises(PlanTypeError):
        op_select(Cmp("=", Lit(1), Lit(1)), t)


def test_project(session):
    _, keys, pk = session
    t = enc_pc(pk, presence=[1, 1, 0])
    out = op_project(("ram", "speed"), t)
    assert out.schema.columns == (("ram", 12), ("speed", 4))
    assert bag(keys, out) == Counter([(1024, 3), (512, 2)])
    with pytest.raises(DuplicateColumn):
        op_project(("ram", "ram"), t)


def test_cross(session):
    _, keys, pk = session
    left = encrypt_table(pk, PlainTable(Schema((("a", 4),)), [(1,), (2,)]),
                         presence=[1, 0], name="l")
    right = encrypt_table(pk, PlainTable(Schema((("b", 4),)), [(7,), (9,)]),
                          name="r")
    out = op_cross(left, right)
    assert out.capacity == 4
    # absent left row kills its pairs
    assert bag(keys, out) == Counter([(1, 7), (1, 9)])
    with pytest.raises(DuplicateColumn):
        op_cross(left, left)


def test_aggregates_fixed_values(session):
    _, keys, pk = session
    t = enc_pc(pk, presence=[1, 1, 0])
    # present prices: 2114, 478
    assert decrypt_word(keys, op_count(t)) == 2
    assert decrypt_word(keys, op_sum("price", t)) == 2592
    assert decrypt_word(keys, op_min("price", t)) == 478
    assert decrypt_word(keys, op_max("price", t)) == 2114
    assert decrypt_word(keys, op_avg("price", t)) == 1296


def test_aggregates_all_absent(session):
    _, keys, pk = session
    t = enc_pc(pk, presence=[0, 0, 0])
    for word in (op_count(t), op_sum("price", t), op_min("price", t),
                 op_max("price", t), op_avg("price", t)):
        assert decrypt_word(keys, word) == 0


def test_sort_moves_absent_rows_with_their_keys(session):
    _, keys, pk = session
    # prices 2114, 478, 600 with the 478 row absent
    t = enc_pc(pk, presence=[1, 0, 1])
    out = op_sort("price", True, t)
    rows, presences = decrypt_table_full(keys, out)
    assert [r[4] for r in rows] == [478, 600, 2114]
    assert presences == [0, 1, 1]
    out = op_sort("price", False, t)
    rows, presences = decrypt_table_full(keys, out)
    assert [r[4] for r in rows] == [2114, 600, 478]
    assert presences == [1, 1, 0]


def test_sort_is_stable(session):
    _, keys, pk = session
    plain = PlainTable(Schema((("k", 4), ("v", 4))),
                       [(2, 0), (1, 1), (2, 2), (1, 3)])
    t = encrypt_table(pk, plain, name="t")
    rows, _ = decrypt_table_full(keys, op_sort("k", True, t))
    assert rows == [(1, 1), (1, 3), (2, 0), (2, 2)]


def test_distinct_counts_absent_rows_as_absent(session):
    _, keys, pk = session
    plain = PlainTable(Schema((("a", 4),)), [(5,), (5,), (5,), (7,)])
    t = encrypt_table(pk, plain, presence=[1, 0, 1, 1], name="t")
    out = op_distinct(t)
    _, presences = decrypt_table_full(keys, out)
    # first present 5 survives; absent dup stays absent; second present 5 drops
    assert presences == [1, 0, 0, 1]
    assert bag(keys, out) == Counter([(5,), (7,)])


def test_groupby_sum(session):
    _, keys, pk = session
    t = enc_pc(pk, presence=[1, 1, 1])
    out = op_groupby_sum(("ram",), "price", t)
    assert out.schema.columns == (("ram", 12), ("sum_price", 12))
    assert bag(keys, out) == Counter([(1024, 2114), (512, 1078)])
    # absent middle row drops its contribution
    t2 = enc_pc(pk, presence=[1, 0, 1])
    assert bag(keys, op_groupby_sum(("ram",), "price", t2)) == Counter(
        [(1024, 2114), (512, 600)])
    # output column sum_<col> may not collide with a grouping key
    clash = encrypt_table(
        pk, PlainTable(Schema((("x", 4), ("sum_x", 4))), [(1, 2)]), name="c")
    with pytest.raises(DuplicateColumn):
        op_groupby_sum(("sum_x",), "x", clash)


def test_groupby_empty_keys_is_global_sum(session):
    _, keys, pk = session
    t = enc_pc(pk, presence=[1, 1, 0])
    out = op_groupby_sum((), "price", t)
    assert bag(keys, out) == Counter([(2592,)])


def test_count_width_wraps(session):
    _, keys, pk = session
    plain = PlainTable(Schema((("a", 1),)), [(0,)] * 5)
    t = encrypt_table(pk, plain, name="t")
    assert decrypt_word(keys, op_count(t, width=2)) == 5 % 4
    assert decrypt_word(keys, op_count(t, width=8)) == 5


def test_bag_ops(session):
    _, keys, pk = session
    s = Schema((("a", 4),))
    x = encrypt_table(pk, PlainTable(s, [(1,), (1,), (2,)]), name="x")
    y = encrypt_table(pk, PlainTable(s, [(1,), (2,), (2,)]), name="y")
    assert bag(keys, op_bag_union(x, y)) == Counter(
        [(1,), (1,), (1,), (2,), (2,), (2,)])
    assert bag(keys, op_bag_intersect(x, y)) == Counter([(1,), (2,)])
    assert bag(keys, op_bag_diff(x, y)) == Counter([(1,)])
    assert op_bag_union(x, y).capacity == 6
    assert op_bag_intersect(x, y).capacity == 3
    assert op_bag_diff(x, y).capacity == 3


def test_bag_ops_respect_presence(session):
    _, keys, pk = session
    s = Schema((("a", 4),))
    # left {5}, right has an absent 5 before a present 5
    x = encrypt_table(pk, PlainTable(s, [(5,)]), name="x")
    y = encrypt_table(pk, PlainTable(s, [(5,), (5,)]), presence=[0, 1],
                      name="y")
    assert bag(keys, op_bag_intersect(x, y)) == Counter([(5,)])
    assert bag(keys, op_bag_diff(x, y)) == Counter()
    # multiplicity: {5,5} with one 5 on the right leaves one 5
    x2 = encrypt_table(pk, PlainTable(s, [(5,), (5,)]), name="x2")
    y2 = encrypt_table(pk, PlainTable(s, [(5,)]), name="y2")
    assert bag(keys, op_bag_intersect(x2, y2)) == Counter([(5,)])
    assert bag(keys, op_bag_diff(x2, y2)) == Counter([(5,)])


def test_cross_ladder_tables_rejected(session):
    _, _, pk = session
    other_ladder, _ = keygen(SecurityContext(), seed=b"other")
    s = Schema((("a", 4),))
    mine = encrypt_table(pk, PlainTable(s, [(1,)]), name="m")
    theirs = encrypt_table(other_ladder.public_key(),
                           PlainTable(Schema((("b", 4),)), [(1,)]), name="t")
    with pytest.raises(LadderMismatch):
        op_cross(mine, theirs)
