"""Query plans: a small relational-algebra AST with a typechecker, an
encrypted evaluator, and a wire form.

Plan structure, operator choice, and column names are public; only literal
values inside predicates are sensitive, and those are replaced by
ciphertexts before a plan leaves the client (``encrypt_plan_literals``).
"""

from __future__ import annotations

from dataclasses import dataclass

from hequel import relalg, serial
from hequel.circuits import DEFAULT_WIDTH, encrypt_word
from hequel.errors import PlanTypeError, SchemaMismatch, UnknownTable
from hequel.relalg import And, Cmp, ColRef, EncLit, EncTable, Lit, Not, Or
from hequel.schema import Schema

CMP_OPS = ("=", "!=", ">", "<", ">=", "<=")


@dataclass(frozen=True)
class TableRef:
    name: str


@dataclass(frozen=True)
class Select:
    pred: object
    child: object


@dataclass(frozen=True)
class Project:
    cols: tuple[str, ...]
    child: object


@dataclass(frozen=True)
class Cross:
    left: object
    right: object


@dataclass(frozen=True)
class Distinct:
    child: object


@dataclass(frozen=True)
class Sort:
    col: str
    ascending: bool
    child: object


@dataclass(frozen=True)
class GroupBySum:
    keys: tuple[str, ...]
    sum_col: str
    child: object


@dataclass(frozen=True)
class Union:
    left: object
    right: object


@dataclass(frozen=True)
class Intersect:
    left: object
    right: object


@dataclass(frozen=True)
class Diff:
    left: object
    right: object


@dataclass(frozen=True)
class Count:
    child: object


@dataclass(frozen=True)
class Sum:
    col: str
    child: object


@dataclass(frozen=True)
class Min:
    col: str
    child: object


@dataclass(frozen=True)
class Max:
    col: str
    child: object


@dataclass(frozen=True)
class Avg:
    col: str
    child: object


AGG_NODES = (Count, Sum, Min, Max, Avg)


# --- typechecking -----------------------------------------------------------

def _pred_width(node, schema: Schema) -> int | None:
    if isinstance(node, ColRef):
        return schema.width_of(node.name)
    if isinstance(node, EncLit):
        return node.word.width
    return None


def _check_pred(pred, schema: Schema) -> None:
    if isinstance(pred, Cmp):
        if pred.op not in CMP_OPS:
            raise PlanTypeError(f"unknown comparison operator {pred.op!r}")
        wl = _pred_width(pred.left, schema)
        wr = _pred_width(pred.right, schema)
        if wl is None and wr is None:
            raise PlanTypeError("comparison needs at least one column")
        if wl is not None and wr is not None and wl != wr:
            raise PlanTypeError(
                f"comparison mixes widths {wl} and {wr}")
        return
    if isinstance(pred, (And, Or)):
        _check_pred(pred.left, schema)
        _check_pred(pred.right, schema)
        return
    if isinstance(pred, Not):
        _check_pred(pred.child, schema)
        return
    raise PlanTypeError(f"bad predicate node {pred!r}")


def typecheck(plan, catalog: dict[str, Schema]) -> Schema:
    """Validate a plan against table schemas; returns the result schema."""
    if isinstance(plan, TableRef):
        if plan.name not in catalog:
            raise UnknownTable(f"no table {plan.name!r}")
        return catalog[plan.name]
    if isinstance(plan, Select):
        schema = typecheck(plan.child, catalog)
        _check_pred(plan.pred, schema)
        return schema
    if isinstance(plan, Project):
        return typecheck(plan.child, catalog).project(plan.cols)
    if isinstance(plan, Cross):
        left = typecheck(plan.left, catalog)
        right = typecheck(plan.right, catalog)
        return Schema(left.columns + right.columns)
    if isinstance(plan, Distinct):
        return typecheck(plan.child, catalog)
    if isinstance(plan, Sort):
        schema = typecheck(plan.child, catalog)
        schema.index_of(plan.col)
        return schema
    if isinstance(plan, GroupBySum):
        schema = typecheck(plan.child, catalog)
        keys = schema.project(plan.keys)
        width = schema.width_of(plan.sum_col)
        return Schema(keys.columns + ((f"sum_{plan.sum_col}", width),))
    if isinstance(plan, (Union, Intersect, Diff)):
        left = typecheck(plan.left, catalog)
        right = typecheck(plan.right, catalog)
        if left != right:
            raise SchemaMismatch(
                f"set operation schemas differ: {left.columns} vs {right.columns}")
        return left
    if isinstance(plan, Count):
        typecheck(plan.child, catalog)
        return Schema((("count", DEFAULT_WIDTH),))
    if isinstance(plan, (Sum, Min, Max, Avg)):
        schema = typecheck(plan.child, catalog)
        width = schema.width_of(plan.col)
        tag = type(plan).__name__.lower()
        return Schema(((f"{tag}_{plan.col}", width),))
    raise PlanTypeError(f"bad plan node {plan!r}")


# --- literal encryption (client side) ---------------------------------------

def _encrypt_pred_literals(pred, schema: Schema, pk):
    if isinstance(pred, Cmp):
        width = _pred_width(pred.left, schema)
        if width is None:
            width = _pred_width(pred.right, schema)
        left, right = pred.left, pred.right
        if isinstance(left, Lit):
            left = EncLit(encrypt_word(pk, left.value, width))
        if isinstance(right, Lit):
            right = EncLit(encrypt_word(pk, right.value, width))
        return Cmp(pred.op, left, right)
    if isinstance(pred, And):
        return And(_encrypt_pred_literals(pred.left, schema, pk),
                   _encrypt_pred_literals(pred.right, schema, pk))
    if isinstance(pred, Or):
        return Or(_encrypt_pred_literals(pred.left, schema, pk),
                  _encrypt_pred_literals(pred.right, schema, pk))
    if isinstance(pred, Not):
        return Not(_encrypt_pred_literals(pred.child, schema, pk))
    raise PlanTypeError(f"bad predicate node {pred!r}")


def encrypt_plan_literals(plan, catalog: dict[str, Schema], pk):
    """Rewrite every plaintext literal in the plan to a ciphertext under
    ``pk``; the plan shape stays public."""
    if isinstance(plan, TableRef):
        return plan
    if isinstance(plan, Select):
        schema = typecheck(plan.child, catalog)
        return Select(_encrypt_pred_literals(plan.pred, schema, pk),
                      encrypt_plan_literals(plan.child, catalog, pk))
    if isinstance(plan, Project):
        return Project(plan.cols, encrypt_plan_literals(plan.child, catalog, pk))
    if isinstance(plan, Cross):
        return Cross(encrypt_plan_literals(plan.left, catalog, pk),
                     encrypt_plan_literals(plan.right, catalog, pk))
    if isinstance(plan, Distinct):
        return Distinct(encrypt_plan_literals(plan.child, catalog, pk))
    if isinstance(plan, Sort):
        return Sort(plan.col, plan.ascending,
                    encrypt_plan_literals(plan.child, catalog, pk))
    if isinstance(plan, GroupBySum):
        return GroupBySum(plan.keys, plan.sum_col,
                          encrypt_plan_literals(plan.child, catalog, pk))
    if isinstance(plan, Union):
        return Union(encrypt_plan_literals(plan.left, catalog, pk),
                     encrypt_plan_literals(plan.right, catalog, pk))
    if isinstance(plan, Intersect):
        return Intersect(encrypt_plan_literals(plan.left, catalog, pk),
                         encrypt_plan_literals(plan.right, catalog, pk))
    if isinstance(plan, Diff):
        return Diff(encrypt_plan_literals(plan.left, catalog, pk),
                    encrypt_plan_literals(plan.right, catalog, pk))
    if isinstance(plan, Count):
        return Count(encrypt_plan_literals(plan.child, catalog, pk))
    if isinstance(plan, (Sum, Min, Max, Avg)):
        return type(plan)(plan.col, encrypt_plan_literals(plan.child, catalog, pk))
    raise PlanTypeError(f"bad plan node {plan!r}")


# --- encrypted evaluation (server side) -------------------------------------

def _wrap_scalar(word, name: str, state) -> EncTable:
    """Present a scalar aggregate as a 1-row table so it flows through the
    result-return protocol like any other result."""
    k = state.impl
    epoch = max(b.epoch for b in word.bits)
    presence = k.fresh_bit(state, 1, epoch)
    schema = Schema(((name, word.width),))
    return EncTable("", schema, (relalg.EncRow((word,), presence),), state)


def eval_encrypted(plan, tables: dict[str, EncTable]) -> EncTable:
    """Evaluate a plan over encrypted tables. Aggregates come back as
    one-row tables with an always-present row."""
    if isinstance(plan, TableRef):
        if plan.name not in tables:
            raise UnknownTable(f"no table {plan.name!r}")
        return tables[plan.name]
    if isinstance(plan, Select):
        return relalg.op_select(plan.pred, eval_encrypted(plan.child, tables))
    if isinstance(plan, Project):
        return relalg.op_project(plan.cols, eval_encrypted(plan.child, tables))
    if isinstance(plan, Cross):
        return relalg.op_cross(eval_encrypted(plan.left, tables),
                               eval_encrypted(plan.right, tables))
    if isinstance(plan, Distinct):
        return relalg.op_distinct(eval_encrypted(plan.child, tables))
    if isinstance(plan, Sort):
        return relalg.op_sort(plan.col, plan.ascending,
                              eval_encrypted(plan.child, tables))
    if isinstance(plan, GroupBySum):
        return relalg.op_groupby_sum(plan.keys, plan.sum_col,
                                     eval_encrypted(plan.child, tables))
    if isinstance(plan, Union):
        return relalg.op_bag_union(eval_encrypted(plan.left, tables),
                                   eval_encrypted(plan.right, tables))
    if isinstance(plan, Intersect):
        return relalg.op_bag_intersect(eval_encrypted(plan.left, tables),
                                       eval_encrypted(plan.right, tables))
    if isinstance(plan, Diff):
        return relalg.op_bag_diff(eval_encrypted(plan.left, tables),
                                  eval_encrypted(plan.right, tables))
    if isinstance(plan, Count):
        t = eval_encrypted(plan.child, tables)
        return _wrap_scalar(relalg.op_count(t), "count", t.state)
    if isinstance(plan, Sum):
        t = eval_encrypted(plan.child, tables)
        return _wrap_scalar(relalg.op_sum(plan.col, t), f"sum_{plan.col}", t.state)
    if isinstance(plan, Min):
        t = eval_encrypted(plan.child, tables)
        return _wrap_scalar(relalg.op_min(plan.col, t), f"min_{plan.col}", t.state)
    if isinstance(plan, Max):
        t = eval_encrypted(plan.child, tables)
        return _wrap_scalar(relalg.op_max(plan.col, t), f"max_{plan.col}", t.state)
    if isinstance(plan, Avg):
        t = eval_encrypted(plan.child, tables)
        return _wrap_scalar(relalg.op_avg(plan.col, t), f"avg_{plan.col}", t.state)
    raise PlanTypeError(f"bad plan node {plan!r}")


# --- wire form --------------------------------------------------------------

def _pred_to_obj(pred, ladder):
    if isinstance(pred, Cmp):
        return {"node": "cmp", "op": pred.op,
                "left": _pred_to_obj(pred.left, ladder),
                "right": _pred_to_obj(pred.right, ladder)}
    if isinstance(pred, ColRef):
        return {"node": "col", "name": pred.name}
    if isinstance(pred, Lit):
        return {"node": "lit", "value": pred.value}
    if isinstance(pred, EncLit):
        return {"node": "enclit", "word": serial.word_to_obj(ladder, pred.word)}
    if isinstance(pred, And):
        return {"node": "and", "left": _pred_to_obj(pred.left, ladder),
                "right": _pred_to_obj(pred.right, ladder)}
    if isinstance(pred, Or):
        return {"node": "or", "left": _pred_to_obj(pred.left, ladder),
                "right": _pred_to_obj(pred.right, ladder)}
    if isinstance(pred, Not):
        return {"node": "not", "child": _pred_to_obj(pred.child, ladder)}
    raise PlanTypeError(f"bad predicate node {pred!r}")


def _pred_from_obj(obj, ladder):
    node = obj["node"]
    if node == "cmp":
        return Cmp(obj["op"], _pred_from_obj(obj["left"], ladder),
                   _pred_from_obj(obj["right"], ladder))
    if node == "col":
        return ColRef(obj["name"])
    if node == "lit":
        return Lit(obj["value"])
    if node == "enclit":
        return EncLit(serial.word_from_obj(ladder, obj["word"]))
    if node == "and":
        return And(_pred_from_obj(obj["left"], ladder),
                   _pred_from_obj(obj["right"], ladder))
    if node == "or":
        return Or(_pred_from_obj(obj["left"], ladder),
                  _pred_from_obj(obj["right"], ladder))
    if node == "not":
        return Not(_pred_from_obj(obj["child"], ladder))
    raise PlanTypeError(f"bad predicate tag {node!r}")


def plan_to_obj(plan, ladder=None):
    if isinstance(plan, TableRef):
        return {"node": "table", "name": plan.name}
    if isinstance(plan, Select):
        return {"node": "select", "pred": _pred_to_obj(plan.pred, ladder),
                "child": plan_to_obj(plan.child, ladder)}
    if isinstance(plan, Project):
        return {"node": "project", "cols": list(plan.cols),
                "child": plan_to_obj(plan.child, ladder)}
    if isinstance(plan, Cross):
        return {"node": "cross", "left": plan_to_obj(plan.left, ladder),
                "right": plan_to_obj(plan.right, ladder)}
    if isinstance(plan, Distinct):
        return {"node": "distinct", "child": plan_to_obj(plan.child, ladder)}
    if isinstance(plan, Sort):
        return {"node": "sort", "col": plan.col, "ascending": plan.ascending,
                "child": plan_to_obj(plan.child, ladder)}
    if isinstance(plan, GroupBySum):
        return {"node": "groupby_sum", "keys": list(plan.keys),
                "sum_col": plan.sum_col, "child": plan_to_obj(plan.child, ladder)}
    if isinstance(plan, (Union, Intersect, Diff)):
        return {"node": type(plan).__name__.lower(),
                "left": plan_to_obj(plan.left, ladder),
                "right": plan_to_obj(plan.right, ladder)}
    if isinstance(plan, Count):
        return {"node": "count", "child": plan_to_obj(plan.child, ladder)}
    if isinstance(plan, (Sum, Min, Max, Avg)):
        return {"node": type(plan).__name__.lower(), "col": plan.col,
                "child": plan_to_obj(plan.child, ladder)}
    raise PlanTypeError(f"bad plan node {plan!r}")


def plan_from_obj(obj, ladder):
    node = obj["node"]
    if node == "table":
        return TableRef(obj["name"])
    if node == "select":
        return Select(_pred_from_obj(obj["pred"], ladder),
                      plan_from_obj(obj["child"], ladder))
    if node == "project":
        return Project(tuple(obj["cols"]), plan_from_obj(obj["child"], ladder))
    if node == "cross":
        return Cross(plan_from_obj(obj["left"], ladder),
                     plan_from_obj(obj["right"], ladder))
    if node == "distinct":
        return Distinct(plan_from_obj(obj["child"], ladder))
    if node == "sort":
        return Sort(obj["col"], obj["ascending"],
                    plan_from_obj(obj["child"], ladder))
    if node == "groupby_sum":
        return GroupBySum(tuple(obj["keys"]), obj["sum_col"],
                          plan_from_obj(obj["child"], ladder))
    if node in ("union", "intersect", "diff"):
        cls = {"union": Union, "intersect": Intersect, "diff": Diff}[node]
        return cls(plan_from_obj(obj["left"], ladder),
                   plan_from_obj(obj["right"], ladder))
    if node == "count":
        return Count(plan_from_obj(obj["child"], ladder))
    if node in ("sum", "min", "max", "avg"):
        cls = {"sum": Sum, "min": Min, "max": Max, "avg": Avg}[node]
        return cls(obj["col"], plan_from_obj(obj["child"], ladder))
    raise PlanTypeError(f"bad plan tag {node!r}")
