"""Constraint language: parsing, printing and evaluation.

Two constraint families share one surface syntax. Value constraints apply to
result cells (``California || Nevada``, ``>= 50 && < 100``); metadata
constraints apply to column statistics (``DataType=='decimal' AND
MinValue>='0'``). ``&&``/``AND`` binds tighter than ``||``/``OR``, parentheses
group, a bare literal is shorthand for an equality predicate, and empty input
is the vacuous constraint that accepts everything.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Union

from .values import Cell, canon_number, normalize_text, parse_number, tokenize

ORDERING_OPS = frozenset({">", ">=", "<", "<="})
EQUALITY_OPS = frozenset({"=", "!="})
COMPARISON_OPS = ORDERING_OPS | EQUALITY_OPS

METADATA_SUBJECTS = ("DataType", "ColumnName", "MaxValue", "MinValue", "MaxLength")
DATA_TYPES = ("decimal", "int", "text", "date", "time")

_SUBJECT_LOOKUP = {s.casefold(): s for s in METADATA_SUBJECTS}


class ConstraintSyntaxError(ValueError):
    """Raised for malformed constraint text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Literal:
    """A constant. ``number`` is set when the surface text parses as a number."""

    text: str
    number: Optional[float] = None

    @staticmethod
    def of(raw: str) -> "Literal":
        number = parse_number(raw)
        if number is not None:
            return Literal(canon_number(number), number)
        return Literal(raw, None)


@dataclass(frozen=True)
class ValuePredicate:
    op: str
    constant: Literal


@dataclass(frozen=True)
class MetadataPredicate:
    subject: str
    op: str
    constant: Literal


@dataclass(frozen=True)
class BoolOp:
    """N-ary connective; children never repeat the same connective directly."""

    op: str  # "and" | "or"
    children: tuple


ValueExpr = Union[ValuePredicate, BoolOp]
MetadataExpr = Union[MetadataPredicate, BoolOp]


@dataclass(frozen=True)
class ValueConstraint:
    root: Optional[ValueExpr] = None

    @property
    def is_empty(self) -> bool:
        return self.root is None


@dataclass(frozen=True)
class MetadataConstraint:
    root: Optional[MetadataExpr] = None

    @property
    def is_empty(self) -> bool:
        return self.root is None


EMPTY_VALUE = ValueConstraint()
EMPTY_METADATA = MetadataConstraint()


@dataclass(frozen=True)
class MatchOptions:
    """How value equality treats text cells.

    mode "cell" matches whole cells; "token" additionally matches a constant
    appearing as a (contiguous) word sequence inside a cell. Matching is
    case-insensitive unless case_sensitive is set.
    """

    mode: str = "cell"
    case_sensitive: bool = False


DEFAULT_MATCH = MatchOptions()


# --- tokenizer -------------------------------------------------------------

class _Token(NamedTuple):
    kind: str  # "(" ")" "op" "bool" "string" "word"
    text: str
    pos: int


_WORD_STOP = set(" \t\r\n()<>=!&|'\"")


def _scan(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()":
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        if ch in "'\"":
            quote, j, buf = ch, i + 1, []
            while j < n and text[j] != quote:
                if text[j] == "\\" and j + 1 < n and text[j + 1] in ("\\", quote):
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise ConstraintSyntaxError("unterminated quoted literal", i)
            tokens.append(_Token("string", "".join(buf), i))
            i = j + 1
            continue
        two = text[i:i + 2]
        if two in (">=", "<=", "==", "!="):
            tokens.append(_Token("op", "=" if two == "==" else two, i))
            i += 2
            continue
        if two == "&&":
            tokens.append(_Token("bool", "and", i))
            i += 2
            continue
        if two == "||":
            tokens.append(_Token("bool", "or", i))
            i += 2
            continue
        if ch in "><=":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        if ch in "!&|":
            raise ConstraintSyntaxError(f"unknown operator {ch!r}", i)
        j = i
        while j < n and text[j] not in _WORD_STOP:
            j += 1
        word = text[i:j]
        if word.casefold() in ("and", "or"):
            tokens.append(_Token("bool", word.casefold(), i))
        else:
            tokens.append(_Token("word", word, i))
        i = j
    return tokens


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token], length: int, metadata: bool):
        self.tokens = tokens
        self.length = length
        self.metadata = metadata
        self.pos = 0

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self):
        root = self.or_expr()
        tok = self.peek()
        if tok is not None:
            if tok.kind == ")":
                raise ConstraintSyntaxError("unbalanced parentheses", tok.pos)
            raise ConstraintSyntaxError(f"unexpected {tok.text!r}", tok.pos)
        return root

    def or_expr(self):
        parts = [self.and_expr()]
        while (tok := self.peek()) is not None and tok.kind == "bool" and tok.text == "or":
            self.advance()
            parts.append(self.and_expr())
        return _combine("or", parts)

    def and_expr(self):
        parts = [self.unit()]
        while (tok := self.peek()) is not None and tok.kind == "bool" and tok.text == "and":
            self.advance()
            parts.append(self.unit())
        return _combine("and", parts)

    def unit(self):
        tok = self.peek()
        if tok is None:
            raise ConstraintSyntaxError("expected a predicate", self.length)
        if tok.kind == "(":
            self.advance()
            inner = self.or_expr()
            closing = self.peek()
            if closing is None or closing.kind != ")":
                raise ConstraintSyntaxError("unbalanced parentheses", tok.pos)
            self.advance()
            return inner
        if self.metadata:
            return self.metadata_predicate()
        return self.value_predicate()

    def value_predicate(self) -> ValuePredicate:
        tok = self.peek()
        if tok.kind == "op":
            self.advance()
            lit = self.constant()
            if tok.text in ORDERING_OPS and lit.number is None:
                raise ConstraintSyntaxError(
                    f"ordering operator {tok.text!r} needs a numeric constant", tok.pos)
            return ValuePredicate(tok.text, lit)
        # bare literal is sugar for equality
        return ValuePredicate("=", self.constant())

    def metadata_predicate(self) -> MetadataPredicate:
        tok = self.peek()
        if tok.kind != "word" or tok.text.casefold() not in _SUBJECT_LOOKUP:
            raise ConstraintSyntaxError(f"unknown metadata subject {tok.text!r}", tok.pos)
        subject = _SUBJECT_LOOKUP[tok.text.casefold()]
        self.advance()
        op_tok = self.peek()
        if op_tok is None or op_tok.kind != "op":
            pos = op_tok.pos if op_tok is not None else self.length
            raise ConstraintSyntaxError("expected a comparison operator", pos)
        self.advance()
        lit = self.constant()
        if subject in ("DataType", "ColumnName") and op_tok.text not in EQUALITY_OPS:
            raise ConstraintSyntaxError(
                f"{subject} admits only = and !=", op_tok.pos)
        if subject == "DataType":
            name = lit.text.strip().casefold()
            if name not in DATA_TYPES:
                raise ConstraintSyntaxError(f"unknown data type {lit.text!r}", op_tok.pos)
            lit = Literal(name, None)
        if subject in ("MaxValue", "MinValue", "MaxLength") and \
                op_tok.text in ORDERING_OPS and lit.number is None:
            raise ConstraintSyntaxError(
                f"ordering operator {op_tok.text!r} needs a numeric constant", op_tok.pos)
        return MetadataPredicate(subject, op_tok.text, lit)

    def constant(self) -> Literal:
        tok = self.peek()
        if tok is None:
            raise ConstraintSyntaxError("expected a constant", self.length)
        if tok.kind == "string":
            self.advance()
            return Literal.of(tok.text)
        if tok.kind == "word":
            words = [self.advance().text]
            while (nxt := self.peek()) is not None and nxt.kind == "word":
                words.append(self.advance().text)
            return Literal.of(" ".join(words))
        raise ConstraintSyntaxError(f"expected a constant, found {tok.text!r}", tok.pos)


def _combine(op: str, parts: list):
    if len(parts) == 1:
        return parts[0]
    flat = []
    for part in parts:
        if isinstance(part, BoolOp) and part.op == op:
            flat.extend(part.children)
        else:
            flat.append(part)
    return BoolOp(op, tuple(flat))


def parse_value_constraint(text: str) -> ValueConstraint:
    tokens = _scan(text)
    if not tokens:
        return EMPTY_VALUE
    return ValueConstraint(_Parser(tokens, len(text), metadata=False).parse())


def parse_metadata_constraint(text: str) -> MetadataConstraint:
    tokens = _scan(text)
    if not tokens:
        return EMPTY_METADATA
    return MetadataConstraint(_Parser(tokens, len(text), metadata=True).parse())


# --- printing --------------------------------------------------------------

def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _literal_text(lit: Literal) -> str:
    if lit.number is not None:
        return canon_number(lit.number)
    return _quote(lit.text)


def _expr_text(node, parent_op: Optional[str]) -> str:
    if isinstance(node, ValuePredicate):
        return f"{node.op} {_literal_text(node.constant)}"
    if isinstance(node, MetadataPredicate):
        return f"{node.subject} {node.op} {_literal_text(node.constant)}"
    sep = " && " if node.op == "and" else " || "
    body = sep.join(_expr_text(child, node.op) for child in node.children)
    if parent_op == "and" and node.op == "or":
        return f"({body})"
    return body


def value_to_text(c: ValueConstraint) -> str:
    return "" if c.is_empty else _expr_text(c.root, None)


def metadata_to_text(c: MetadataConstraint) -> str:
    return "" if c.is_empty else _expr_text(c.root, None)


# --- evaluation ------------------------------------------------------------

def _compare(lhs: float, op: str, rhs: float) -> bool:
    if op == ">":
        return lhs > rhs
    if op == ">=":
        return lhs >= rhs
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == "=":
        return lhs == rhs
    return lhs != rhs


def _is_subsequence(needle: tuple[str, ...], hay: tuple[str, ...]) -> bool:
    if not needle or len(needle) > len(hay):
        return False
    return any(hay[i:i + len(needle)] == needle
               for i in range(len(hay) - len(needle) + 1))


def _cell_equals(lit: Literal, cell: Cell, options: MatchOptions) -> bool:
    if lit.number is not None and cell.number is not None:
        return lit.number == cell.number
    if options.case_sensitive:
        if cell.raw.strip() == lit.text.strip():
            return True
    elif cell.key == (canon_number(lit.number) if lit.number is not None
                      else normalize_text(lit.text)):
        return True
    if options.mode == "token":
        fold = not options.case_sensitive
        return _is_subsequence(tokenize(lit.text, fold), tokenize(cell.raw, fold))
    return False


def eval_value_predicate(pred: ValuePredicate, cell: Cell,
                         options: MatchOptions = DEFAULT_MATCH) -> bool:
    if pred.op in ORDERING_OPS:
        if cell.number is None or pred.constant.number is None:
            return False
        return _compare(cell.number, pred.op, pred.constant.number)
    matched = _cell_equals(pred.constant, cell, options)
    return matched if pred.op == "=" else not matched


def eval_value_constraint(c: ValueConstraint, cell: Cell,
                          options: MatchOptions = DEFAULT_MATCH) -> bool:
    if c.is_empty:
        return True

    def walk(node) -> bool:
        if isinstance(node, ValuePredicate):
            return eval_value_predicate(node, cell, options)
        if node.op == "and":
            return all(walk(ch) for ch in node.children)
        return any(walk(ch) for ch in node.children)

    return walk(c.root)


def eval_metadata_predicate(pred: MetadataPredicate, stats) -> bool:
    """Evaluate one predicate against column statistics.

    ``stats`` needs the attributes inferred_type, column, min_value, max_value
    and max_length (see catalog.ColumnStats). Range predicates are false for
    columns whose inferred type is not numeric.
    """
    if pred.subject == "DataType":
        hit = stats.inferred_type == pred.constant.text
        return hit if pred.op == "=" else not hit
    if pred.subject == "ColumnName":
        hit = normalize_text(stats.column) == normalize_text(pred.constant.text)
        return hit if pred.op == "=" else not hit
    if pred.constant.number is None:
        return False
    if pred.subject == "MaxLength":
        return _compare(float(stats.max_length), pred.op, pred.constant.number)
    if stats.inferred_type not in ("int", "decimal"):
        return False
    bound = stats.min_value if pred.subject == "MinValue" else stats.max_value
    if bound is None:
        return False
    return _compare(bound, pred.op, pred.constant.number)


def eval_metadata_constraint(c: MetadataConstraint, stats) -> bool:
    if c.is_empty:
        return True

    def walk(node) -> bool:
        if isinstance(node, MetadataPredicate):
            return eval_metadata_predicate(node, stats)
        if node.op == "and":
            return all(walk(ch) for ch in node.children)
        return any(walk(ch) for ch in node.children)

    return walk(c.root)


def iter_value_predicates(c: ValueConstraint) -> Iterator[ValuePredicate]:
    """All predicate leaves, in surface order."""
    def walk(node):
        if isinstance(node, ValuePredicate):
            yield node
        else:
            for child in node.children:
                yield from walk(child)

    if not c.is_empty:
        yield from walk(c.root)
