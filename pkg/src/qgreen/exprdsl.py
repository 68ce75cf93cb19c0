"""A small arithmetic expression language for h(t), f(t, x), y(ell) and densities.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

Unary minus binds looser than '^', so ``-2^2`` is ``-(2^2) = -4``.
Evaluation is numpy-vectorized and refuses domain faults instead of
returning NaN.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import QGreenError


class ExprError(QGreenError):
    pass


class ParseError(ExprError, ValueError):
    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(sorted(set(expected)))
        hint = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at position {position}{hint}")


class UnknownIdentifier(ExprError, ValueError):
    def __init__(self, name, position=None, context=None):
        self.name = name
        self.position = position
        where = f" at position {position}" if position is not None else ""
        ctx = f" in context '{context}'" if context else ""
        super().__init__(f"unknown identifier '{name}'{where}{ctx}")


class UnboundVariable(ExprError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"variable '{name}' is not bound")

    def __str__(self):
        return self.args[0]


class EvalDomainError(ExprError, ArithmeticError):
    pass


# ---- AST -----------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Num | Var | Const | Neg | BinOp | Call

CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {"ln": 1, "exp": 1, "sqrt": 1, "abs": 1, "pow": 2, "min": 2, "max": 2}
VARIABLES = ("t", "x", "ell")
CONTEXTS = {
    "h": ("t",),
    "f": ("t", "x"),
    "y": ("ell",),
    "density": ("t",),
}

# ---- lexer ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _lex(src):
    toks = []
    i = 0
    n = len(src)
    while i < n:
        if src[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(src, i)
        if not m or m.end() == i:
            raise ParseError(f"unexpected character {src[i]!r}", i)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        i = m.end()
    toks.append(_Tok("end", "", n))
    return toks


# ---- parser --------------------------------------------------------------

_ATOM_START = ("number", "identifier", "'('", "'-'", "'+'")


class _Parser:
    def __init__(self, src, variables):
        self.toks = _lex(src)
        self.i = 0
        self.variables = variables

    @property
    def cur(self):
        return self.toks[self.i]

    def _take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def _expect(self, text):
        if self.cur.text != text or self.cur.kind != "op":
            raise ParseError(f"unexpected {self._describe()}", self.cur.pos, [f"'{text}'"])
        return self._take()

    def _describe(self):
        return "end of input" if self.cur.kind == "end" else f"'{self.cur.text}'"

    def parse(self):
        if self.cur.kind == "end":
            raise ParseError("empty expression", 0, _ATOM_START)
        node = self.expr()
        if self.cur.kind != "end":
            raise ParseError(
                f"unexpected {self._describe()}", self.cur.pos, ["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"]
            )
        return node

    def expr(self):
        node = self.term()
        while self.cur.kind == "op" and self.cur.text in "+-":
            op = self._take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.cur.kind == "op" and self.cur.text in "*/":
            op = self._take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.cur.kind == "op" and self.cur.text == "-":
            self._take()
            return Neg(self.unary())
        if self.cur.kind == "op" and self.cur.text == "+":
            self._take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.cur.kind == "op" and self.cur.text == "^":
            self._take()
            # exponent may carry its own sign: 2^-1
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.cur
        if tok.kind == "num":
            self._take()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError("numeric literal out of range", tok.pos)
            return Num(value)
        if tok.kind == "name":
            self._take()
            if self.cur.kind == "op" and self.cur.text == "(":
                return self.call(tok)
            if tok.text in CONSTANTS:
                return Const(tok.text)
            if tok.text in FUNCTIONS:
                raise ParseError(f"function '{tok.text}' needs arguments", self.cur.pos, ["'('"])
            if self.variables is not None and tok.text not in self.variables:
                raise UnknownIdentifier(tok.text, tok.pos)
            if self.variables is None and tok.text not in VARIABLES:
                raise UnknownIdentifier(tok.text, tok.pos)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self._take()
            node = self.expr()
            self._expect(")")
            return node
        raise ParseError(f"unexpected {self._describe()}", tok.pos, _ATOM_START)

    def call(self, name_tok):
        name = name_tok.text
        if name not in FUNCTIONS:
            raise UnknownIdentifier(name, name_tok.pos)
        self._expect("(")
        args = [self.expr()]
        while self.cur.kind == "op" and self.cur.text == ",":
            self._take()
            args.append(self.expr())
        self._expect(")")
        if len(args) != FUNCTIONS[name]:
            raise ParseError(
                f"'{name}' takes {FUNCTIONS[name]} argument(s), got {len(args)}", name_tok.pos
            )
        return Call(name, tuple(args))


def parse(src: str, context: str | None = None):
    """Parse ``src``; with ``context`` ('h', 'f', 'y', 'density') restrict variables."""
    if not isinstance(src, str):
        raise ParseError("expression must be a string", 0)
    variables = None
    if context is not None:
        if context not in CONTEXTS:
            raise ValueError(f"unknown binding context {context!r}")
        variables = CONTEXTS[context]
    return _Parser(src, variables).parse()


# ---- unparser ------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def unparse(e) -> str:
    """Render ``e`` with the minimal parentheses needed to reparse to the same tree."""
    return _unparse(e)


def _unparse(e):
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({', '.join(_unparse(a) for a in e.args)})"
    if isinstance(e, Neg):
        inner = _unparse(e.operand)
        # operand of '-' is a unary: sums/products need parentheses
        if _prec(e.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left, right = _unparse(e.left), _unparse(e.right)
        if e.op == "^":
            # left of '^' must be an atom; right is a unary
            if _prec(e.left) <= p:
                left = f"({left})"
            if _prec(e.right) < _PREC["neg"]:
                right = f"({right})"
        else:
            if _prec(e.left) < p:
                left = f"({left})"
            # left-associative: equal precedence on the right needs parentheses
            if _prec(e.right) <= p:
                right = f"({right})"
        return f"{left} {e.op} {right}" if e.op != "^" else f"{left}^{right}"
    raise TypeError(f"not an expression node: {e!r}")


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Num) and e.value < 0:
        return _PREC["neg"]
    return 10


# ---- evaluation ----------------------------------------------------------


def free_variables(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, Call):
        out = set()
        for a in e.args:
            out |= free_variables(a)
        return out
    return set()


def _check(cond, msg):
    if np.any(cond):
        raise EvalDomainError(msg)


def _pow(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    a, b = np.broadcast_arrays(a, b)
    non_int = b != np.round(b)
    _check((a < 0) & non_int, "fractional power of a negative number")
    _check((a == 0) & (b < 0), "zero raised to a negative power")
    with np.errstate(over="ignore"):
        neg = a < 0
        out = np.where(neg, np.sign(a) ** np.abs(np.round(b)) * np.abs(a) ** b, np.abs(a) ** b)
    return out


def _eval(e, env):
    if isinstance(e, Num):
        return np.float64(e.value)
    if isinstance(e, Const):
        return np.float64(CONSTANTS[e.name])
    if isinstance(e, Var):
        if e.name not in env:
            raise UnboundVariable(e.name)
        return env[e.name]
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            _check(np.asarray(b) == 0, "division by zero")
            return a / b
        return _pow(a, b)
    if isinstance(e, Call):
        vals = [_eval(a, env) for a in e.args]
        fn = e.func
        if fn == "ln":
            _check(np.asarray(vals[0]) <= 0, "ln of a nonpositive number")
            return np.log(vals[0])
        if fn == "exp":
            return np.exp(vals[0])
        if fn == "sqrt":
            _check(np.asarray(vals[0]) < 0, "sqrt of a negative number")
            return np.sqrt(vals[0])
        if fn == "abs":
            return np.abs(vals[0])
        if fn == "pow":
            return _pow(vals[0], vals[1])
        if fn == "min":
            return np.minimum(vals[0], vals[1])
        if fn == "max":
            return np.maximum(vals[0], vals[1])
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e, bindings=None, **kw):
    """Evaluate ``e`` with variables from ``bindings``/keywords (scalars or arrays)."""
    env = dict(bindings or {})
    env.update(kw)
    env = {k: np.asarray(v, dtype=float) for k, v in env.items()}
    with np.errstate(all="ignore"):
        out = _eval(e, env)
    out = np.asarray(out, dtype=float)
    if not np.all(np.isfinite(out)):
        raise EvalDomainError("non-finite result (overflow or invalid operation)")
    return float(out) if out.ndim == 0 else out


eval_expr = evaluate


def compile_expr(src: str, context: str):
    """Parse under ``context`` and return a numpy-vectorized callable.

    Positional arguments follow the context's variable order, e.g.
    f(t, x); results broadcast against the inputs.
    """
    tree = parse(src, context)
    names = CONTEXTS[context]

    def fn(*args):
        if len(args) != len(names):
            raise TypeError(f"expected {len(names)} argument(s) {names}")
        arrays = np.broadcast_arrays(*(np.asarray(a, float) for a in args))
        out = evaluate(tree, dict(zip(names, arrays)))
        return np.broadcast_to(out, arrays[0].shape).copy() if arrays[0].ndim else out

    fn.expr = tree
    fn.source = src
    return fn
