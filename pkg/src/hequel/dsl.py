"""Text form for query plans.

Prefix operator calls with a small infix predicate language:

    select(speed > 1 and ram <= 1024, table(pc))
    project([model, price], sort(price, desc, table(pc)))
    groupby([speed], price, union(table(a), table(b)))

Comparisons accept = == != <> < > <= >=; grouping columns are a single
name or a bracketed list. Errors carry the character offset they were
raised at.
"""

from __future__ import annotations

import re

from hequel import plans
from hequel.errors import ParseError
from hequel.relalg import And, Cmp, ColRef, Lit, Not, Or
from hequel.schema import Schema

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<op><=|>=|==|!=|<>|[=<>(),\[\]])
""", re.VERBOSE)

_CMP_CANON = {"=": "=", "==": "=", "!=": "!=", "<>": "!=",
              "<": "<", ">": ">", "<=": "<=", ">=": ">="}

_AGG_WORDS = {"sum": plans.Sum, "min": plans.Min, "max": plans.Max,
              "avg": plans.Avg}
_SETOP_WORDS = {"union": plans.Union, "intersect": plans.Intersect,
                "diff": plans.Diff}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, got, pos = self.next()
        if got != value:
            raise ParseError(f"expected {value!r}, found {got or 'end'!r}", pos)

    def expect_name(self, what: str = "name") -> str:
        kind, got, pos = self.next()
        if kind != "name":
            raise ParseError(f"expected {what}, found {got or 'end'!r}", pos)
        return got

    # plans -------------------------------------------------------------

    def plan(self):
        kind, word, pos = self.next()
        if kind != "name":
            raise ParseError(f"expected an operator, found {word or 'end'!r}", pos)
        if word == "table":
            self.expect("(")
            name = self.expect_name("table name")
            self.expect(")")
            return plans.TableRef(name)
        if word == "select":
            self.expect("(")
            pred = self.pred()
            self.expect(",")
            child = self.plan()
            self.expect(")")
            return plans.Select(pred, child)
        if word == "project":
            self.expect("(")
            cols = self.cols()
            self.expect(",")
            child = self.plan()
            self.expect(")")
            return plans.Project(cols, child)
        if word == "cross":
            left, right = self.two_plans()
            return plans.Cross(left, right)
        if word == "count":
            self.expect("(")
            child = self.plan()
            self.expect(")")
            return plans.Count(child)
        if word in _AGG_WORDS:
            self.expect("(")
            col = self.expect_name("column")
            self.expect(",")
            child = self.plan()
            self.expect(")")
            return _AGG_WORDS[word](col, child)
        if word == "distinct":
            self.expect("(")
            child = self.plan()
            self.expect(")")
            return plans.Distinct(child)
        if word == "sort":
            self.expect("(")
            col = self.expect_name("column")
            self.expect(",")
            kind, direction, dpos = self.next()
            if direction not in ("asc", "desc"):
                raise ParseError(
                    f"expected asc or desc, found {direction or 'end'!r}", dpos)
            self.expect(",")
            child = self.plan()
            self.expect(")")
            return plans.Sort(col, direction == "asc", child)
        if word == "groupby":
            self.expect("(")
            keys = self.cols()
            self.expect(",")
            sum_col = self.expect_name("column")
            self.expect(",")
            child = self.plan()
            self.expect(")")
            return plans.GroupBySum(keys, sum_col, child)
        if word in _SETOP_WORDS:
            left, right = self.two_plans()
            return _SETOP_WORDS[word](left, right)
        raise ParseError(f"unknown operator {word!r}", pos)

    def two_plans(self):
        self.expect("(")
        left = self.plan()
        self.expect(",")
        right = self.plan()
        self.expect(")")
        return left, right

    def cols(self) -> tuple[str, ...]:
        kind, value, pos = self.peek()
        if value != "[":
            return (self.expect_name("column"),)
        self.next()
        names = []
        if self.peek()[1] != "]":
            names.append(self.expect_name("column"))
            while self.peek()[1] == ",":
                self.next()
                names.append(self.expect_name("column"))
        self.expect("]")
        return tuple(names)

    # predicates ----------------------------------------------------------

    def pred(self):
        node = self.pred_and()
        while self.peek()[1] == "or":
            self.next()
            node = Or(node, self.pred_and())
        return node

    def pred_and(self):
        node = self.pred_not()
        while self.peek()[1] == "and":
            self.next()
            node = And(node, self.pred_not())
        return node

    def pred_not(self):
        if self.peek()[1] == "not":
            self.next()
            return Not(self.pred_not())
        return self.pred_atom()

    def pred_atom(self):
        if self.peek()[1] == "(":
            self.next()
            node = self.pred()
            self.expect(")")
            return node
        left = self.operand()
        kind, op, pos = self.next()
        if op not in _CMP_CANON:
            raise ParseError(f"expected a comparison, found {op or 'end'!r}", pos)
        right = self.operand()
        return Cmp(_CMP_CANON[op], left, right)

    def operand(self):
        kind, value, pos = self.next()
        if kind == "name":
            return ColRef(value)
        if kind == "int":
            return Lit(int(value))
        raise ParseError(
            f"expected a column or integer, found {value or 'end'!r}", pos)


def parse(text: str):
    """Parse plan text to an (untyped) plan tree."""
    parser = _Parser(text)
    plan = parser.plan()
    kind, value, pos = parser.peek()
    if kind != "end":
        raise ParseError(f"trailing input {value!r}", pos)
    return plan


def parse_plan(text: str, catalog: dict[str, Schema]):
    """Parse and typecheck plan text against a catalog of schemas."""
    plan = parse(text)
    plans.typecheck(plan, catalog)
    return plan


def _pred_level(pred) -> int:
    if isinstance(pred, Or):
        return 1
    if isinstance(pred, And):
        return 2
    if isinstance(pred, Not):
        return 3
    return 4


def _pred_to_text(pred, parent_level: int = 0, right_side: bool = False) -> str:
    level = _pred_level(pred)
    if isinstance(pred, Cmp):
        left = (pred.left.name if isinstance(pred.left, ColRef)
                else str(pred.left.value))
        right = (pred.right.name if isinstance(pred.right, ColRef)
                 else str(pred.right.value))
        text = f"{left} {pred.op} {right}"
    elif isinstance(pred, Not):
        text = f"not {_pred_to_text(pred.child, level)}"
    elif isinstance(pred, And):
        text = (f"{_pred_to_text(pred.left, level)} and "
                f"{_pred_to_text(pred.right, level, right_side=True)}")
    elif isinstance(pred, Or):
        text = (f"{_pred_to_text(pred.left, level)} or "
                f"{_pred_to_text(pred.right, level, right_side=True)}")
    else:
        raise ValueError(f"cannot render predicate {pred!r}")
    # the parser is left-associative, so a same-level right child needs parens
    if level < parent_level or (level == parent_level and right_side):
        return f"({text})"
    return text


def plan_to_text(plan) -> str:
    """Render a plan back to parseable text (inverse of ``parse`` for plans
    without pre-encrypted literals)."""
    if isinstance(plan, plans.TableRef):
        return f"table({plan.name})"
    if isinstance(plan, plans.Select):
        return f"select({_pred_to_text(plan.pred)}, {plan_to_text(plan.child)})"
    if isinstance(plan, plans.Project):
        return f"project([{', '.join(plan.cols)}], {plan_to_text(plan.child)})"
    if isinstance(plan, plans.Cross):
        return f"cross({plan_to_text(plan.left)}, {plan_to_text(plan.right)})"
    if isinstance(plan, plans.Distinct):
        return f"distinct({plan_to_text(plan.child)})"
    if isinstance(plan, plans.Sort):
        direction = "asc" if plan.ascending else "desc"
        return f"sort({plan.col}, {direction}, {plan_to_text(plan.child)})"
    if isinstance(plan, plans.GroupBySum):
        return (f"groupby([{', '.join(plan.keys)}], {plan.sum_col}, "
                f"{plan_to_text(plan.child)})")
    if isinstance(plan, (plans.Union, plans.Intersect, plans.Diff)):
        word = type(plan).__name__.lower()
        return f"{word}({plan_to_text(plan.left)}, {plan_to_text(plan.right)})"
    if isinstance(plan, plans.Count):
        return f"count({plan_to_text(plan.child)})"
    if isinstance(plan, (plans.Sum, plans.Min, plans.Max, plans.Avg)):
        word = type(plan).__name__.lower()
        return f"{word}({plan.col}, {plan_to_text(plan.child)})"
    raise ValueError(f"cannot render plan {plan!r}")
