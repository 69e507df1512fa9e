"""Propositional logic over binary label vectors.

Formulas talk about the coordinates of a label vector ``y`` of fixed length
``k``.  Variables are written ``y1 .. yk`` (1-based), and the concrete syntax
is ``~`` for negation, ``&`` for conjunction, ``|`` for disjunction, with
``~`` binding tightest and ``|`` loosest.  Conjunction and disjunction are
n-ary and flattened at construction, so there are no binary parse trees.

Label vectors are ordered lexicographically with ``y1`` as the most
significant bit; enumeration helpers and tie-breaking rules all follow that
order.  Exhaustive enumeration is capped at ``ENUMERATION_CAP`` variables;
beyond it callers are pointed at the compiled junction-tree path.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EnumerationCapError, FormulaParseError

ENUMERATION_CAP = 20


@dataclass(frozen=True)
class Signature:
    """Variable space of a formula: a count ``k`` and optional display names."""

    k: int
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"signature needs at least one variable, got k={self.k}")
        if self.names is not None and len(self.names) != self.k:
            raise ValueError(
                f"got {len(self.names)} names for {self.k} variables"
            )


class Node:
    """Base class for formula syntax nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Var(Node):
    index: int  # 1-based


@dataclass(frozen=True)
class Not(Node):
    child: Node


@dataclass(frozen=True)
class And(Node):
    children: tuple[Node, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("And needs at least two children; use conj() to build")


@dataclass(frozen=True)
class Or(Node):
    children: tuple[Node, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("Or needs at least two children; use disj() to build")


def conj(parts) -> Node:
    """N-ary conjunction: flattens nested And, drops true, absorbs false."""
    flat: list[Node] = []
    for p in parts:
        if isinstance(p, Const):
            if not p.value:
                return FALSE
            continue
        if isinstance(p, And):
            flat.extend(p.children)
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts) -> Node:
    """N-ary disjunction: flattens nested Or, drops false, absorbs true."""
    flat: list[Node] = []
    for p in parts:
        if isinstance(p, Const):
            if p.value:
                return TRUE
            continue
        if isinstance(p, Or):
            flat.extend(p.children)
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def _max_var(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Not):
        return _max_var(node.child)
    if isinstance(node, (And, Or)):
        return max(_max_var(c) for c in node.children)
    return 0


def _min_var(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Not):
        return _min_var(node.child)
    if isinstance(node, (And, Or)):
        return min(_min_var(c) for c in node.children)
    return 1


_PRECEDENCE = {Or: 0, And: 1, Not: 2, Var: 3, Const: 3}


def _format(node: Node, min_prec: int) -> str:
    if isinstance(node, Const):
        text = "true" if node.value else "false"
    elif isinstance(node, Var):
        text = f"y{node.index}"
    elif isinstance(node, Not):
        text = "~" + _format(node.child, 2)
    elif isinstance(node, And):
        text = " & ".join(_format(c, 2) for c in node.children)
    elif isinstance(node, Or):
        text = " | ".join(_format(c, 1) for c in node.children)
    else:
        raise TypeError(f"not a formula node: {node!r}")
    if _PRECEDENCE[type(node)] < min_prec:
        return "(" + text + ")"
    return text


def _eval_matrix(node: Node, states: np.ndarray) -> np.ndarray:
    """Evaluate a node on every row of a (n, k) 0/1 matrix at once."""
    if isinstance(node, Const):
        return np.full(states.shape[0], node.value, dtype=bool)
    if isinstance(node, Var):
        return states[:, node.index - 1].astype(bool)
    if isinstance(node, Not):
        return ~_eval_matrix(node.child, states)
    if isinstance(node, And):
        out = _eval_matrix(node.children[0], states)
        for c in node.children[1:]:
            out = out & _eval_matrix(c, states)
        return out
    if isinstance(node, Or):
        out = _eval_matrix(node.children[0], states)
        for c in node.children[1:]:
            out = out | _eval_matrix(c, states)
        return out
    raise TypeError(f"not a formula node: {node!r}")


@lru_cache(maxsize=32)
def _state_matrix(k: int) -> np.ndarray:
    idx = np.arange(2**k, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    states = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
    states.setflags(write=False)
    return states


def all_states(k: int) -> np.ndarray:
    """All 2^k label vectors as a read-only (2^k, k) matrix.

    Rows are in lexicographic order: row ``i`` is ``i`` written big-endian,
    so ``y1`` is the most significant bit.
    """
    if k > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"enumerating 2^{k} label vectors exceeds the cap of "
            f"2^{ENUMERATION_CAP}; compile the knowledge and use the "
            "junction-tree path instead"
        )
    return _state_matrix(k)


def as_label_vector(y, k: int) -> np.ndarray:
    """Coerce to a length-k 0/1 uint8 vector, validating shape and values."""
    arr = np.asarray(y)
    if arr.shape != (k,):
        raise ValueError(f"expected a label vector of length {k}, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("label vectors must contain only 0 and 1")
    return arr.astype(np.uint8)


@dataclass(frozen=True)
class Formula:
    """A propositional formula together with its variable space."""

    root: Node
    signature: Signature

    def __post_init__(self):
        hi = _max_var(self.root)
        lo = _min_var(self.root)
        if hi > self.signature.k or lo < 1:
            raise ValueError(
                f"formula mentions y{hi if hi > self.signature.k else lo} "
                f"outside the range y1..y{self.signature.k}"
            )

    @property
    def k(self) -> int:
        return self.signature.k

    def __str__(self) -> str:
        return _format(self.root, 0)

    def evaluate(self, y) -> bool:
        """Truth value of the formula on one label vector."""
        row = as_label_vector(y, self.k)[None, :]
        return bool(_eval_matrix(self.root, row)[0])

    def evaluate_batch(self, states: np.ndarray) -> np.ndarray:
        """Truth values on every row of a (n, k) 0/1 matrix."""
        states = np.asarray(states)
        if states.ndim != 2 or states.shape[1] != self.k:
            raise ValueError(f"expected shape (n, {self.k}), got {states.shape}")
        return _eval_matrix(self.root, states)

    def model_mask(self) -> np.ndarray:
        """Boolean mask over :func:`all_states` marking satisfying rows."""
        return self.evaluate_batch(all_states(self.k))

    def models(self) -> np.ndarray:
        """All satisfying label vectors, rows in lexicographic order."""
        return all_states(self.k)[self.model_mask()]

    def model_count(self) -> int:
        return int(self.model_mask().sum())

    def is_satisfiable(self) -> bool:
        return bool(self.model_mask().any())

    def equivalent(self, other: "Formula") -> bool:
        """Semantic equivalence by exhaustive comparison (same signature only)."""
        if self.k != other.k:
            raise ValueError(
                f"cannot compare formulas over {self.k} and {other.k} variables"
            )
        return bool((self.model_mask() == other.model_mask()).all())


def entails(y, f: Formula) -> bool:
    """Whether label vector ``y`` satisfies ``f``."""
    return f.evaluate(y)


def tautology(k: int) -> Formula:
    """The always-true formula over k variables (unconstrained knowledge)."""
    return Formula(TRUE, Signature(k))


def exactly_one(k: int) -> Formula:
    """Exactly one of y1..yk is set: at-least-one and pairwise exclusion.

    For k=1 this collapses to the single variable itself, since the
    pairwise part is an empty conjunction.
    """
    at_least = disj([Var(j) for j in range(1, k + 1)])
    pairwise = [
        disj([Not(Var(i)), Not(Var(j))])
        for i in range(1, k + 1)
        for j in range(i + 1, k + 1)
    ]
    return Formula(conj([at_least] + pairwise), Signature(k))


def one_hot(k: int, j: int) -> np.ndarray:
    """Label vector with only coordinate j (1-based) set."""
    if not 1 <= j <= k:
        raise ValueError(f"one-hot index {j} outside 1..{k}")
    y = np.zeros(k, dtype=np.uint8)
    y[j - 1] = 1
    return y


class _Tokenizer:
    _TOKEN_RE = re.compile(
        r"""
        (?P<ws>\s+)
        | (?P<true>true\b)
        | (?P<false>false\b)
        | (?P<var>y(?P<digits>\d+))
        | (?P<op>[~&|()])
        """,
        re.VERBOSE,
    )

    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, object, int]] = []
        pos = 0
        while pos < len(text):
            m = self._TOKEN_RE.match(text, pos)
            if m is None:
                raise FormulaParseError(
                    f"unexpected character {text[pos]!r}", pos
                )
            if m.lastgroup != "ws":
                if m.lastgroup == "var":
                    tok = ("var", int(m.group("digits")), pos)
                elif m.lastgroup == "op":
                    tok = (m.group("op"), None, pos)
                else:
                    tok = (m.lastgroup, None, pos)
                self.tokens.append(tok)
            pos = m.end()
        self.tokens.append(("end", None, len(text)))
        self.i = 0

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def next(self) -> tuple[str, object, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def position(self) -> int:
        return self.tokens[self.i][2]


class _Parser:
    """Recursive descent for: or-expr of and-exprs of unary atoms."""

    def __init__(self, text: str, k: int):
        self.toks = _Tokenizer(text)
        self.k = k

    def parse(self) -> Node:
        node = self._or()
        kind, _, pos = self.toks.next()
        if kind != "end":
            raise FormulaParseError(f"unexpected {kind!r} after formula", pos)
        return node

    def _or(self) -> Node:
        parts = [self._and()]
        while self.toks.peek() == "|":
            self.toks.next()
            parts.append(self._and())
        return disj(parts) if len(parts) > 1 else parts[0]

    def _and(self) -> Node:
        parts = [self._unary()]
        while self.toks.peek() == "&":
            self.toks.next()
            parts.append(self._unary())
        return conj(parts) if len(parts) > 1 else parts[0]

    def _unary(self) -> Node:
        if self.toks.peek() == "~":
            self.toks.next()
            return Not(self._unary())
        return self._atom()

    def _atom(self) -> Node:
        kind, value, pos = self.toks.next()
        if kind == "true":
            return TRUE
        if kind == "false":
            return FALSE
        if kind == "var":
            if not 1 <= value <= self.k:
                raise FormulaParseError(
                    f"variable y{value} outside the range y1..y{self.k}", pos
                )
            return Var(value)
        if kind == "(":
            node = self._or()
            kind, _, pos = self.toks.next()
            if kind != ")":
                raise FormulaParseError("expected ')'", pos)
            return node
        raise FormulaParseError(
            f"expected a variable, constant, '~' or '(', got {kind!r}", pos
        )


def parse_formula(text: str, k: int, names: tuple[str, ...] | None = None) -> Formula:
    """Parse concrete syntax into a Formula over y1..yk."""
    root = _Parser(text, k).parse()
    return Formula(root, Signature(k, names))


def format_formula(f: Formula) -> str:
    """Canonical text form; parsing it back reproduces the same tree."""
    return str(f)
