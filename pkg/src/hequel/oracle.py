"""Plaintext reference evaluator with bag semantics.

Written directly against ordinary multiset relational algebra, not against
the encrypted operators, so differential tests compare two independent
implementations. Conventions shared with the encrypted engine (these are
contracts, not implementation mirroring): arithmetic wraps modulo 2^width,
aggregates over zero rows return 0, count uses an 8-bit result, avg is
floor division of the width-wrapped sum by the width-wrapped count.
"""

from __future__ import annotations

from collections import Counter

from hequel.circuits import DEFAULT_WIDTH
from hequel.errors import PlanTypeError, SchemaMismatch, UnknownTable
from hequel.plans import (
    Avg,
    Count,
    Cross,
    Diff,
    Distinct,
    GroupBySum,
    Intersect,
    Max,
    Min,
    Project,
    Select,
    Sort,
    Sum,
    TableRef,
    Union,
)
from hequel.relalg import And, Cmp, ColRef, Lit, Not, Or
from hequel.schema import PlainTable, Schema


def _operand(node, schema: Schema, row: tuple) -> int:
    if isinstance(node, ColRef):
        return row[schema.index_of(node.name)]
    if isinstance(node, Lit):
        return node.value
    raise PlanTypeError(f"oracle cannot evaluate operand {node!r}")


def eval_pred_plain(pred, schema: Schema, row: tuple) -> bool:
    if isinstance(pred, Cmp):
        a = _operand(pred.left, schema, row)
        b = _operand(pred.right, schema, row)
        return {
            "=": a == b, "!=": a != b, ">": a > b,
            "<": a < b, ">=": a >= b, "<=": a <= b,
        }[pred.op]
    if isinstance(pred, And):
        return eval_pred_plain(pred.left, schema, row) and \
            eval_pred_plain(pred.right, schema, row)
    if isinstance(pred, Or):
        return eval_pred_plain(pred.left, schema, row) or \
            eval_pred_plain(pred.right, schema, row)
    if isinstance(pred, Not):
        return not eval_pred_plain(pred.child, schema, row)
    raise PlanTypeError(f"bad predicate node {pred!r}")


def _scalar(name: str, width: int, value: int) -> PlainTable:
    return PlainTable(Schema(((name, width),)), [(value,)])


def eval_plan(plan, catalog: dict[str, PlainTable]) -> PlainTable:
    if isinstance(plan, TableRef):
        if plan.name not in catalog:
            raise UnknownTable(f"no table {plan.name!r}")
        return catalog[plan.name]
    if isinstance(plan, Select):
        t = eval_plan(plan.child, catalog)
        rows = [r for r in t.rows if eval_pred_plain(plan.pred, t.schema, r)]
        return PlainTable(t.schema, rows)
    if isinstance(plan, Project):
        t = eval_plan(plan.child, catalog)
        schema = t.schema.project(plan.cols)
        idx = [t.schema.index_of(c) for c in plan.cols]
        return PlainTable(schema, [tuple(r[i] for i in idx) for r in t.rows])
    if isinstance(plan, Cross):
        t1 = eval_plan(plan.left, catalog)
        t2 = eval_plan(plan.right, catalog)
        schema = Schema(t1.schema.columns + t2.schema.columns)
        return PlainTable(schema, [a + b for a in t1.rows for b in t2.rows])
    if isinstance(plan, Distinct):
        t = eval_plan(plan.child, catalog)
        seen, rows = set(), []
        for r in t.rows:
            if r not in seen:
                seen.add(r)
                rows.append(r)
        return PlainTable(t.schema, rows)
    if isinstance(plan, Sort):
        t = eval_plan(plan.child, catalog)
        idx = t.schema.index_of(plan.col)
        rows = sorted(t.rows, key=lambda r: r[idx], reverse=not plan.ascending)
        return PlainTable(t.schema, rows)
    if isinstance(plan, GroupBySum):
        t = eval_plan(plan.child, catalog)
        key_idx = [t.schema.index_of(c) for c in plan.keys]
        sum_idx = t.schema.index_of(plan.sum_col)
        width = t.schema.columns[sum_idx][1]
        schema = Schema(t.schema.project(plan.keys).columns
                        + ((f"sum_{plan.sum_col}", width),))
        groups: dict[tuple, int] = {}
        for r in t.rows:
            key = tuple(r[i] for i in key_idx)
            groups[key] = (groups.get(key, 0) + r[sum_idx]) % (1 << width)
        return PlainTable(schema, [k + (v,) for k, v in groups.items()])
    if isinstance(plan, Union):
        t1 = eval_plan(plan.left, catalog)
        t2 = eval_plan(plan.right, catalog)
        _same_schema(t1, t2)
        return PlainTable(t1.schema, list(t1.rows) + list(t2.rows))
    if isinstance(plan, Intersect):
        t1 = eval_plan(plan.left, catalog)
        t2 = eval_plan(plan.right, catalog)
        _same_schema(t1, t2)
        counts = Counter(t1.rows) & Counter(t2.rows)
        return PlainTable(t1.schema, list(counts.elements()))
    if isinstance(plan, Diff):
        t1 = eval_plan(plan.left, catalog)
        t2 = eval_plan(plan.right, catalog)
        _same_schema(t1, t2)
        counts = Counter(t1.rows) - Counter(t2.rows)
        return PlainTable(t1.schema, list(counts.elements()))
    if isinstance(plan, Count):
        t = eval_plan(plan.child, catalog)
        return _scalar("count", DEFAULT_WIDTH,
                       len(t.rows) % (1 << DEFAULT_WIDTH))
    if isinstance(plan, Sum):
        t = eval_plan(plan.child, catalog)
        idx = t.schema.index_of(plan.col)
        width = t.schema.columns[idx][1]
        total = sum(r[idx] for r in t.rows) % (1 << width)
        return _scalar(f"sum_{plan.col}", width, total)
    if isinstance(plan, Min):
        t = eval_plan(plan.child, catalog)
        idx = t.schema.index_of(plan.col)
        width = t.schema.columns[idx][1]
        value = min((r[idx] for r in t.rows), default=0)
        return _scalar(f"min_{plan.col}", width, value)
    if isinstance(plan, Max):
        t = eval_plan(plan.child, catalog)
        idx = t.schema.index_of(plan.col)
        width = t.schema.columns[idx][1]
        value = max((r[idx] for r in t.rows), default=0)
        return _scalar(f"max_{plan.col}", width, value)
    if isinstance(plan, Avg):
        t = eval_plan(plan.child, catalog)
        idx = t.schema.index_of(plan.col)
        width = t.schema.columns[idx][1]
        total = sum(r[idx] for r in t.rows) % (1 << width)
        count = len(t.rows) % (1 << width)
        return _scalar(f"avg_{plan.col}", width,
                       0 if count == 0 else total // count)
    raise PlanTypeError(f"bad plan node {plan!r}")


def _same_schema(t1: PlainTable, t2: PlainTable) -> None:
    if t1.schema != t2.schema:
        raise SchemaMismatch(
            f"schemas differ: {t1.schema.columns} vs {t2.schema.columns}")
