"""A small expression language for charts and weight functions.

Grammar (usual precedence, highest last):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-'* power
    power   := atom ('^' ['-'] INT)?
    atom    := NUMBER | NUMBER 'i' | 'i' | IDENT | FUNC '(' expr ')' | '(' expr ')'
    IDENT   := z | zbar | w | wbar | r2
    FUNC    := sqrt | exp | log | conj | abs2

Numbers use the usual float syntax; a trailing 'i' (or a bare 'i') denotes
an imaginary literal.  Exponents are integer literals only; fractional
powers go through sqrt, whose principal branch (nonnegative real part, cut
on the negative reals) is the single place branch choices live.  abs2(.) is
the smooth |.|^2, used instead of |.| which is not differentiable at 0.

The reserved identifier r2 expands at evaluation time to lambda(z) * w * wbar
through the supplied chart, so one radial expression serves every chart and
automatically receives correct z- and w-derivatives.

Operations whose operands are all literals are folded at parse time, so
re-serialising an AST and parsing it again yields an identical AST.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Union

from .errors import DomainError, ExprSyntaxError, PoleError, UnknownIdentifier
from .jets import Jet2, Point4, seed_complex

IDENTIFIERS = ("z", "zbar", "w", "wbar", "r2")
FUNCTIONS = ("sqrt", "exp", "log", "conj", "abs2")


@dataclass(frozen=True)
class Literal:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Literal, Var, Neg, BinOp, Pow, Call]


@dataclass(frozen=True)
class Expression:
    source: str
    ast: Node
    identifiers: frozenset
    dependence_class: str

    def to_source(self) -> str:
        return _to_source(self.ast)

    def evaluate(self, p: Point4, chart=None) -> Jet2:
        return eval_jet(self, p, chart)

    def evaluate_value(self, p: Point4, chart=None) -> complex:
        return eval_value(self, p, chart)


# ---- lexer -----------------------------------------------------------------

_SINGLE = set("+-*/^()")


def _tokenize(source: str):
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c in _SINGLE:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            try:
                value = float(source[i:j])
            except ValueError:
                raise ExprSyntaxError(f"bad number '{source[i:j]}'", i)
            if j < n and source[j] == "i" and not (j + 1 < n and source[j + 1].isalnum()):
                tokens.append(("num", complex(0.0, value), i))
                j += 1
            else:
                tokens.append(("num", complex(value), i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            if word == "i":
                tokens.append(("num", 1j, i))
            elif word in FUNCTIONS:
                tokens.append(("func", word, i))
            elif word in IDENTIFIERS:
                tokens.append(("ident", word, i))
            else:
                raise UnknownIdentifier(word, i)
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character '{c}'", i)
    tokens.append(("end", None, n))
    return tokens


# ---- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, source):
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.advance()
        if tok[0] != kind:
            raise ExprSyntaxError(f"expected '{kind}', got '{tok[1]}'", tok[2])
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected trailing '{tok[1]}'", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in "+-":
            op = self.advance()[0]
            node = _fold(BinOp(op, node, self.term()))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in "*/":
            op = self.advance()[0]
            node = _fold(BinOp(op, node, self.unary()))
        return node

    def unary(self):
        if self.peek()[0] == "-":
            self.advance()
            return _fold(Neg(self.unary()))
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            sign = 1
            if self.peek()[0] == "-":
                self.advance()
                sign = -1
            tok = self.expect("num")
            if tok[1].imag != 0 or tok[1].real != int(tok[1].real):
                raise ExprSyntaxError("exponents must be integers", tok[2])
            node = _fold(Pow(node, sign * int(tok[1].real)))
        return node

    def atom(self):
        kind, value, pos = self.advance()
        if kind == "num":
            return Literal(value)
        if kind == "ident":
            return Var(value)
        if kind == "func":
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return _fold(Call(value, inner))
        if kind == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ExprSyntaxError(f"unexpected '{value}'", pos)


def _fold(node):
    # Literal-only subtrees collapse at parse time; failures stay unfolded
    # and surface at evaluation instead.
    children = {
        BinOp: lambda n: (n.left, n.right),
        Neg: lambda n: (n.arg,),
        Pow: lambda n: (n.base,),
        Call: lambda n: (n.arg,),
    }[type(node)](node)
    if not all(isinstance(c, Literal) for c in children):
        return node
    try:
        return Literal(_eval_node(node, None, _VALUE_OPS))
    except (PoleError, DomainError, ZeroDivisionError, ValueError):
        return node


def parse(source: str) -> Expression:
    ast = _Parser(source).parse()
    idents = frozenset(_collect_identifiers(ast))
    return Expression(source, ast, idents, classify_identifiers(idents))


def _collect_identifiers(node):
    if isinstance(node, Var):
        yield node.name
    elif isinstance(node, BinOp):
        yield from _collect_identifiers(node.left)
        yield from _collect_identifiers(node.right)
    elif isinstance(node, (Neg,)):
        yield from _collect_identifiers(node.arg)
    elif isinstance(node, Pow):
        yield from _collect_identifiers(node.base)
    elif isinstance(node, Call):
        yield from _collect_identifiers(node.arg)


def classify_identifiers(idents) -> str:
    if not idents:
        return "constant"
    if idents <= {"z", "zbar"}:
        return "base-only"
    if idents <= {"r2"}:
        return "radial"
    return "mixed"


def classify(e: Expression) -> str:
    return e.dependence_class


# ---- serialisation ---------------------------------------------------------


def _to_source(node) -> str:
    if isinstance(node, Literal):
        return _literal_source(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({_to_source(node.left)} {node.op} {_to_source(node.right)})"
    if isinstance(node, Pow):
        return f"({_to_source(node.base)}^{node.exponent})"
    if isinstance(node, Call):
        return f"{node.fn}({_to_source(node.arg)})"
    raise TypeError(f"not an AST node: {node!r}")


def _literal_source(v: complex) -> str:
    if v.imag == 0:
        return repr(v.real)
    if v.real == 0:
        return f"{repr(v.imag)}i"
    return f"({repr(v.real)} + {repr(v.imag)}i)"


# ---- evaluation ------------------------------------------------------------

_JET_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "sqrt": lambda a: a.sqrt(),
    "exp": lambda a: a.exp(),
    "log": lambda a: a.log(),
    "conj": lambda a: a.conj(),
    "abs2": lambda a: a.abs2(),
    "pow": lambda a, n: a**n,
    "neg": lambda a: -a,
}


def _value_pow(a, n):
    if n < 0 and a == 0:
        raise PoleError("division by zero")
    return a**n


def _value_div(a, b):
    if b == 0:
        raise PoleError("division by zero")
    return a / b


def _value_log(a):
    if a == 0:
        raise DomainError("log of zero")
    return cmath.log(a)


def _value_sqrt(a):
    if a == 0:
        raise DomainError("sqrt at zero has a singular derivative")
    return cmath.sqrt(a)


_VALUE_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _value_div,
    "sqrt": _value_sqrt,
    "exp": cmath.exp,
    "log": _value_log,
    "conj": lambda a: a.conjugate(),
    "abs2": lambda a: a * a.conjugate(),
    "pow": _value_pow,
    "neg": lambda a: -a,
}


def _eval_node(node, env, ops):
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return ops["neg"](_eval_node(node.arg, env, ops))
    if isinstance(node, BinOp):
        return ops[node.op](_eval_node(node.left, env, ops), _eval_node(node.right, env, ops))
    if isinstance(node, Pow):
        return ops["pow"](_eval_node(node.base, env, ops), node.exponent)
    if isinstance(node, Call):
        return ops[node.fn](_eval_node(node.arg, env, ops))
    raise TypeError(f"not an AST node: {node!r}")


def _jet_env(e: Expression, p: Point4, chart):
    env = seed_complex(p)
    if "r2" in e.identifiers:
        if chart is None:
            raise ValueError("expression uses r2 but no chart was supplied")
        lam = chart.lambda_jet(p)
        env["r2"] = lam * env["w"] * env["wbar"]
    return env


def eval_jet(e: Expression, p: Point4, chart=None) -> Jet2:
    env = _jet_env(e, p, chart)
    result = _eval_node(e.ast, env, _JET_OPS)
    return result if isinstance(result, Jet2) else Jet2(result)


def eval_value(e: Expression, p: Point4, chart=None) -> complex:
    """Plain complex evaluation; independent of the jet propagation path."""
    env = {"z": p.z, "zbar": p.z.conjugate(), "w": p.w, "wbar": p.w.conjugate()}
    if "r2" in e.identifiers:
        if chart is None:
            raise ValueError("expression uses r2 but no chart was supplied")
        env["r2"] = chart.lambda_value(p.z) * p.w * p.w.conjugate()
    return _eval_node(e.ast, env, _VALUE_OPS)
