"""Expression DSL for enhancement factors F_x(s).

Grammar (standard precedence, ^ binds tightest and right-associative):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := NUMBER | 's' | FUNC '(' expr (',' expr)? ')' | '(' expr ')'

Functions: exp, log, sqrt (unary), min, max (binary).  Every accepted
expression must satisfy F_x(0) = 1 to 1e-12 and evaluate to finite
values on s in [0, 1e6].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    def __init__(self, message: str, position: int, expected=()):
        super().__init__(f"{message} at position {position}"
                         + (f" (expected {', '.join(expected)})" if expected else ""))
        self.position = position
        self.expected = tuple(expected)


class ValidationError(ValueError):
    pass


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float

    def eval(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.value)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    def eval(self, s):
        return np.asarray(s, dtype=float)

    def __str__(self):
        return "s"


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object

    def eval(self, s):
        v = self.arg.eval(s)
        if self.op == "-":
            return -v
        if self.op == "exp":
            return np.exp(v)
        if self.op == "log":
            return np.log(v)
        return np.sqrt(v)

    def __str__(self):
        if self.op == "-":
            return f"(-{self.arg})"
        return f"{self.op}({self.arg})"


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object

    def eval(self, s):
        a = self.left.eval(s)
        b = self.right.eval(s)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        if self.op == "^":
            return a ** b
        if self.op == "min":
            return np.minimum(a, b)
        return np.maximum(a, b)

    def __str__(self):
        if self.op in ("min", "max"):
            return f"{self.op}({self.left}, {self.right})"
        return f"({self.left} {self.op} {self.right})"


@dataclass
class EnhancementFactor:
    """Validated enhancement factor: F_x(0) = 1, finite on [0, 1e6]."""
    tree: object
    provenance: str = ""

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        scalar = s_arr.ndim == 0
        out = self.tree.eval(np.atleast_1d(s_arr))
        return float(out[0]) if scalar else out

    def __str__(self):
        return str(self.tree)


# -- tokenizer / parser -------------------------------------------------------

_FUNCS1 = ("exp", "log", "sqrt")
_FUNCS2 = ("min", "max")


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^(),":
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            while j < len(text) and (text[j].isdigit() or text[j] in ".eE"
                                     or (text[j] in "+-" and j > i and text[j - 1] in "eE")):
                j += 1
            try:
                val = float(text[i:j])
            except ValueError:
                raise ParseError("malformed number", i) from None
            tokens.append(("num", val, i))
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < len(text) and text[j].isalnum():
                j += 1
            name = text[i:j]
            if name == "s":
                tokens.append(("var", name, i))
            elif name in _FUNCS1 + _FUNCS2:
                tokens.append(("func", name, i))
            else:
                raise ParseError(f"unknown identifier {name!r}", i,
                                 expected=("s",) + _FUNCS1 + _FUNCS2)
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2], expected=(kind,))
        self.pos += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            node = Binary(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[0] == "-":
            self.take()
            return Unary("-", self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            return Binary("^", base, self.factor())
        return base

    def atom(self):
        kind, value, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(value)
        if kind == "var":
            self.take()
            return Var()
        if kind == "func":
            self.take()
            self.take("(")
            first = self.expr()
            if value in _FUNCS2:
                self.take(",")
                second = self.expr()
                self.take(")")
                return Binary(value, first, second)
            self.take(")")
            return Unary(value, first)
        if kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        raise ParseError(f"unexpected token {value!r}", pos,
                         expected=("number", "s", "function", "("))


def parse_enhancement(text: str, provenance: str = "",
                      validate: bool = True) -> EnhancementFactor:
    """Parse and validate an enhancement-factor expression."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    tokens = _tokenize(text)
    parser = _Parser(tokens)
    tree = parser.expr()
    tok = parser.peek()
    if tok[0] != "end":
        raise ParseError(f"trailing input {tok[1]!r}", tok[2])
    factor = EnhancementFactor(tree, provenance or text)
    if validate:
        at0 = factor(0.0)
        if not math.isfinite(at0) or abs(at0 - 1.0) > 1e-12:
            raise ValidationError(f"F_x(0) = {at0!r}, must equal 1")
        grid = np.concatenate([[0.0], np.logspace(-6, 6, 200)])
        vals = factor(grid)
        if not np.all(np.isfinite(vals)):
            bad = grid[~np.isfinite(vals)][0]
            raise ValidationError(f"expression not finite at s = {bad:g}")
    return factor


# literature-conventional parameter defaults; configuration, not ground truth
BUILTIN_FACTORS = {
    "lda": ("1", "uniform-gas limit, F_x = 1"),
    "pbe": ("1 + 0.804 - 0.804/(1 + 0.21951*s^2/0.804)",
            "PBE-form factor, conventional kappa=0.804, mu=0.21951"),
    "b88-like": ("1 + 0.2743*s^2/(1 + 0.0252*s*log(s + sqrt(s^2+1)))",
                 "B88-form factor with conventional parameters"),
}


def builtin_enhancement(name: str) -> EnhancementFactor:
    key = name.strip().lower()
    if key not in BUILTIN_FACTORS:
        raise KeyError(f"unknown builtin factor {name!r}; "
                       f"available: {sorted(BUILTIN_FACTORS)}")
    text, prov = BUILTIN_FACTORS[key]
    return parse_enhancement(text, provenance=prov)
