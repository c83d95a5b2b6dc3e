"""Expression language for map definitions.

A small arithmetic grammar over declared variables with the usual
precedence: ``^`` (right-associative) binds tighter than unary minus,
which binds tighter than ``*``/``/``, which bind tighter than ``+``/``-``.
Function calls cover sin, cos, tan, exp, log, sqrt, cbrt, sinh and cosh;
``pi`` is a built-in constant.  Expressions evaluate either to plain
scalars or to truncated jets at a point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import Jet


class ExprError(ValueError):
    """Base class for expression failures; carries a source offset."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class ExprNameError(ExprError):
    pass


class ExprDomainError(ExprError):
    """Evaluation left the function's domain (log of nonpositive reals, ...)."""


FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "cbrt", "sinh", "cosh")

CONSTANTS = {"pi": math.pi}

_JET_FUNCS = {
    "sin": jets.jet_sin,
    "cos": jets.jet_cos,
    "tan": jets.jet_tan,
    "exp": jets.jet_exp,
    "log": jets.jet_log,
    "sqrt": jets.jet_sqrt,
    "cbrt": jets.jet_cbrt,
    "sinh": jets.jet_sinh,
    "cosh": jets.jet_cosh,
}


def _scalar_cbrt(x):
    if np.iscomplexobj(x):
        return np.power(x, 1.0 / 3.0)
    return np.cbrt(x)


_SCALAR_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "cbrt": _scalar_cbrt,
    "sinh": np.sinh,
    "cosh": np.cosh,
}


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Num | Var | Neg | Bin | Call


# -- tokenizer ---------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # number | identifier | operator | paren | comma
    lexeme: str
    offset: int


_OPERATOR_CHARS = "+-*/^"


def tokenize(src: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                if src[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            tokens.append(Token("number", src[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(Token("identifier", src[i:j], i))
            i = j
            continue
        if c in _OPERATOR_CHARS:
            tokens.append(Token("operator", c, i))
            i += 1
            continue
        if c in "()":
            tokens.append(Token("paren", c, i))
            i += 1
            continue
        if c == ",":
            tokens.append(Token("comma", c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    return tokens


# -- parser ------------------------------------------------------------------

_BIN_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_PREC = 25  # between * and ^


class _Parser:
    def __init__(self, tokens: list[Token], variables: tuple[str, ...], src_len: int):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables
        self.src_len = src_len

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError("unexpected end of input", self.src_len)
        self.pos += 1
        return tok

    def expect(self, lexeme: str):
        tok = self.advance()
        if tok.lexeme != lexeme:
            raise ExprSyntaxError(f"expected {lexeme!r}, found {tok.lexeme!r}", tok.offset)

    def parse_expression(self, min_prec: int = 0) -> Node:
        left = self.parse_atom()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "operator":
                break
            prec = _BIN_PREC[tok.lexeme]
            if prec < min_prec:
                break
            self.advance()
            next_min = prec if tok.lexeme == "^" else prec + 1
            right = self.parse_expression(next_min)
            left = self._make_bin(tok, left, right)
        return left

    def _make_bin(self, tok: Token, left: Node, right: Node) -> Bin:
        if tok.lexeme == "^":
            if constant_fold(right) is None:
                raise ExprSyntaxError(
                    "exponent must be an integer literal or a scalar constant", tok.offset
                )
        return Bin(tok.lexeme, left, right)

    def parse_atom(self) -> Node:
        tok = self.advance()
        if tok.kind == "number":
            return Num(float(tok.lexeme))
        if tok.kind == "operator" and tok.lexeme == "-":
            return Neg(self.parse_expression(_UNARY_PREC + 1))
        if tok.kind == "paren" and tok.lexeme == "(":
            inner = self.parse_expression(0)
            self.expect(")")
            return inner
        if tok.kind == "identifier":
            name = tok.lexeme
            nxt = self.peek()
            if nxt is not None and nxt.lexeme == "(":
                if name not in FUNCTIONS:
                    raise ExprNameError(f"unknown function {name!r}", tok.offset)
                self.advance()
                arg = self.parse_expression(0)
                nxt = self.peek()
                if nxt is not None and nxt.kind == "comma":
                    raise ExprSyntaxError(
                        f"function {name!r} takes exactly one argument", nxt.offset
                    )
                self.expect(")")
                return Call(name, arg)
            if name in self.variables:
                return Var(name, self.variables.index(name))
            if name in CONSTANTS:
                return Num(CONSTANTS[name])
            raise ExprNameError(f"undeclared variable {name!r}", tok.offset)
        raise ExprSyntaxError(f"unexpected token {tok.lexeme!r}", tok.offset)


def parse(src: str, variables: tuple[str, ...] | list[str]) -> Node:
    """Parse ``src`` into an AST; identifiers must be declared variables,
    built-in functions or constants."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    parser = _Parser(tokenize(src), tuple(variables), len(src))
    ast = parser.parse_expression(0)
    tok = parser.peek()
    if tok is not None:
        raise ExprSyntaxError(f"unexpected trailing token {tok.lexeme!r}", tok.offset)
    return ast


def constant_fold(node: Node):
    """Value of a constant subtree, or None if it involves a variable."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        v = constant_fold(node.operand)
        return None if v is None else -v
    if isinstance(node, Bin):
        a, b = constant_fold(node.left), constant_fold(node.right)
        if a is None or b is None:
            return None
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return a**b
    if isinstance(node, Call):
        v = constant_fold(node.arg)
        return None if v is None else float(_SCALAR_FUNCS[node.func](v))
    return None


# -- pretty printer ----------------------------------------------------------


def _format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _prec_of(node: Node) -> int:
    if isinstance(node, Bin):
        return _BIN_PREC[node.op]
    if isinstance(node, Neg):
        return _UNARY_PREC
    return 100


def pretty(node: Node) -> str:
    """Canonical text form; ``parse(pretty(ast))`` returns an equal AST."""
    if isinstance(node, Num):
        return _format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    if isinstance(node, Neg):
        inner = pretty(node.operand)
        if _prec_of(node.operand) <= _UNARY_PREC:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Bin):
        lp, rp = _prec_of(node.left), _prec_of(node.right)
        prec = _BIN_PREC[node.op]
        left = pretty(node.left)
        right = pretty(node.right)
        if node.op == "^":
            if lp <= prec:
                left = f"({left})"
            if rp < prec:
                right = f"({right})"
        else:
            if lp < prec:
                left = f"({left})"
            if rp <= prec:
                right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an AST node: {node!r}")


# -- evaluation --------------------------------------------------------------


def eval_jet(node: Node, point, order: int, field: str = "real") -> Jet:
    """Jet of the expression at ``point`` (one scalar or array per variable)."""
    nvars = len(point)
    if field == "complex":
        point = [np.asarray(p, dtype=complex) if isinstance(p, np.ndarray) else complex(p) for p in point]

    def ev(n: Node) -> Jet:
        if isinstance(n, Num):
            c = complex(n.value) if field == "complex" else n.value
            return Jet.constant(c, nvars, order)
        if isinstance(n, Var):
            return Jet.variable(n.index, point[n.index], nvars, order)
        if isinstance(n, Neg):
            return -ev(n.operand)
        if isinstance(n, Call):
            try:
                return _JET_FUNCS[n.func](ev(n.arg))
            except jets.JetDomainError as e:
                raise ExprDomainError(f"{n.func}: {e}") from e
        if isinstance(n, Bin):
            if n.op == "^":
                expo = constant_fold(n.right)
                base = ev(n.left)
                if expo is None:
                    raise ExprDomainError("exponent must be constant")
                if float(expo).is_integer():
                    return base ** int(expo)
                try:
                    return jets.jet_pow_scalar(base, expo)
                except jets.JetDomainError as e:
                    raise ExprDomainError(f"non-integer power: {e}") from e
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            try:
                return a / b
            except jets.JetDomainError as e:
                raise ExprDomainError(f"division: {e}") from e
        raise TypeError(f"not an AST node: {n!r}")

    return ev(node)


def eval_scalar(node: Node, point, field: str = "real"):
    """Plain evaluation without derivatives; supports array-valued points."""
    if field == "complex":
        point = [np.asarray(p, dtype=complex) if isinstance(p, np.ndarray) else complex(p) for p in point]

    def ev(n: Node):
        if isinstance(n, Num):
            return complex(n.value) if field == "complex" else n.value
        if isinstance(n, Var):
            return point[n.index]
        if isinstance(n, Neg):
            return -ev(n.operand)
        if isinstance(n, Call):
            v = ev(n.arg)
            if n.func == "log" and field == "real" and np.any(np.asarray(v) <= 0):
                raise ExprDomainError("log of a nonpositive real")
            if n.func == "sqrt" and field == "real" and np.any(np.asarray(v) < 0):
                raise ExprDomainError("sqrt of a negative real")
            return _SCALAR_FUNCS[n.func](v)
        if isinstance(n, Bin):
            a, b = ev(n.left), ev(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            if n.op == "/":
                if np.any(np.asarray(b) == 0):
                    raise ExprDomainError("division by zero")
                return a / b
            if float(b).is_integer():
                return a ** int(b)
            return a**b
        raise TypeError(f"not an AST node: {n!r}")

    return ev(node)


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, Call):
        return free_variables(node.arg)
    if isinstance(node, Bin):
        return free_variables(node.left) | free_variables(node.right)
    return set()
