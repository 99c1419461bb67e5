"""A small arithmetic language for potentials, solutions and nonlinearities.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?            # right associative
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Names are ``x1 .. xN`` (coordinates), ``r`` (Euclidean norm of the point)
and ``N`` (the dimension, a constant).  One-variable functions such as the
nonlinearity use their own variable names instead (``s`` or ``t``).
Functions: ``exp``, ``sqrt``, ``abs``, ``log`` and ``pow(a, b)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import DomainError, NonFiniteResult, ParseError


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # one of UNARY_OPS
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # one of '+', '-', '*', '/', '^'
    left: "Node"
    right: "Node"


Node = Union[Const, Var, Unary, Binary]

UNARY_OPS = ("neg", "exp", "sqrt", "abs", "log")
FUNCTIONS = {"exp": 1, "sqrt": 1, "abs": 1, "log": 1, "pow": 2}
POTENTIAL_VARIABLES = ("r", "N")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None:
            bad = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ParseError(bad, f"unexpected character {source[bad]!r}")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, names: Sequence[str], dimension: int | None):
        self.tokens = _tokenize(source)
        self.i = 0
        self.names = set(names)
        self.dimension = dimension
        self.source = source

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, value, pos = self.take()
        if value != text or kind == "end":
            found = "end of input" if kind == "end" else repr(value)
            raise ParseError(pos, f"expected {text!r}, found {found}")

    def parse(self) -> Node:
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(pos, f"unexpected {value!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] in ("-", "+"):
            op = self.take()[1]
            arg = self.unary()
            return Unary("neg", arg) if op == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(value, pos)
            return self.variable(value, pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(pos, f"unexpected {found}")

    def call(self, name, pos):
        if name not in FUNCTIONS:
            raise ParseError(pos, f"unknown function {name!r}")
        self.take()  # '('
        args = [self.expr()]
        while self.peek()[1] == "," and self.peek()[0] == "op":
            self.take()
            args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCTIONS[name]:
            raise ParseError(pos, f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}")
        if name == "pow":
            return Binary("^", args[0], args[1])
        return Unary(name, args[0])

    def variable(self, name, pos):
        if name in self.names:
            return Var(name)
        m = re.fullmatch(r"x(\d+)", name)
        if m and self.dimension is not None:
            index = int(m.group(1))
            if 1 <= index <= self.dimension:
                return Var(name)
            raise ParseError(pos, f"variable {name} out of range for dimension {self.dimension}")
        raise ParseError(pos, f"unknown variable {name!r}")


def parse_expression(source: str, dimension: int) -> Node:
    """Parse an expression in ``x1..xN``, ``r`` and ``N``."""
    if not source or not source.strip():
        raise ParseError(0, "empty expression")
    if int(dimension) != dimension or dimension < 1:
        raise ParseError(0, f"invalid dimension {dimension!r}")
    return _Parser(source, POTENTIAL_VARIABLES, int(dimension)).parse()


def parse_function(source: str, variables: Sequence[str]) -> Node:
    """Parse an expression in the given scalar variables only."""
    if not source or not source.strip():
        raise ParseError(0, "empty expression")
    return _Parser(source, variables, None).parse()


def variables_of(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return variables_of(node.arg)
    if isinstance(node, Binary):
        return variables_of(node.left) | variables_of(node.right)
    return set()


# -- printing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return 3
    return 5


def _fmt_const(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_source(node: Node) -> str:
    """Print with the minimal parentheses that preserve the tree."""

    def wrap(child, min_prec):
        text = to_source(child)
        return f"({text})" if _prec(child) < min_prec else text

    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return "-" + wrap(node.arg, 3)
        return f"{node.op}({to_source(node.arg)})"
    p = _PREC[node.op]
    if node.op == "^":
        return f"{wrap(node.left, 5)}^{wrap(node.right, 3)}"
    return f"{wrap(node.left, p)} {node.op} {wrap(node.right, p + 1)}"


# -- evaluation ---------------------------------------------------------------


def evaluate(node: Node, env: Mapping[str, object]):
    """Evaluate elementwise; ``env`` maps variable names to scalars or arrays."""
    with np.errstate(all="ignore"):
        value = _eval(node, env)
    if not np.all(np.isfinite(value)):
        raise NonFiniteResult(f"non-finite value while evaluating {to_source(node)}")
    return value


def _eval(node, env):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise DomainError(f"no value bound for variable {node.name!r}") from None
    if isinstance(node, Unary):
        a = _eval(node.arg, env)
        if node.op == "neg":
            return -a
        if node.op == "exp":
            return np.exp(a)
        if node.op == "abs":
            return np.abs(a)
        if node.op == "sqrt":
            if np.any(np.asarray(a) < 0):
                raise DomainError(f"sqrt of a negative value in {to_source(node)}")
            return np.sqrt(a)
        if node.op == "log":
            if np.any(np.asarray(a) <= 0):
                raise DomainError(f"log of a nonpositive value in {to_source(node)}")
            return np.log(a)
        raise ValueError(node.op)
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    out = np.power(a, b)
    if np.any(np.isnan(out) & ~np.isnan(np.asarray(a) + np.asarray(b))):
        raise DomainError(f"power outside its real domain in {to_source(node)}")
    return out


def log_evaluate(node: Node, env: Mapping[str, object]):
    """Logarithm of a nonnegative expression, computed without forming it.

    Products, quotients, powers, ``exp`` and ``sqrt`` are mapped to their
    log-domain counterparts, so factors like ``exp(-r^3)`` keep full relative
    precision long after the plain value would underflow.  A zero value gives
    ``-inf``.  Sub-expressions without a log-domain rule are evaluated plainly.
    """
    with np.errstate(all="ignore"):
        out = _log_eval(node, env)
    out = np.asarray(out, dtype=float)
    if np.any(np.isnan(out)) or np.any(out == np.inf):
        raise NonFiniteResult(f"log-evaluation of {to_source(node)} failed")
    return out


def _plain_log(node, env):
    value = np.asarray(_eval(node, env), dtype=float)
    if np.any(value < 0) or np.any(np.isnan(value)):
        raise DomainError(f"log-evaluation of a negative value in {to_source(node)}")
    return np.log(value)


def _log_eval(node, env):
    if isinstance(node, Const):
        if node.value < 0:
            raise DomainError("negative constant in log-evaluation")
        return np.log(node.value)
    if isinstance(node, Var):
        return _plain_log(node, env)
    if isinstance(node, Unary):
        if node.op == "exp":
            return np.asarray(_eval(node.arg, env), dtype=float)
        if node.op == "sqrt":
            return 0.5 * _log_eval(node.arg, env)
        if node.op == "abs":
            if isinstance(node.arg, Unary) and node.arg.op == "neg":
                return _log_eval(Unary("abs", node.arg.arg), env)
            if isinstance(node.arg, (Var, Const)):
                return np.log(np.abs(np.asarray(_eval(node.arg, env), dtype=float)))
            try:
                return _log_eval(node.arg, env)
            except DomainError:
                return np.log(np.abs(np.asarray(_eval(node.arg, env), dtype=float)))
        return _plain_log(node, env)
    if node.op == "*":
        return _log_eval(node.left, env) + _log_eval(node.right, env)
    if node.op == "/":
        return _log_eval(node.left, env) - _log_eval(node.right, env)
    if node.op == "+":
        return np.logaddexp(_log_eval(node.left, env), _log_eval(node.right, env))
    if node.op == "^":
        exponent = np.asarray(_eval(node.right, env), dtype=float)
        try:
            return exponent * _log_eval(node.left, env)
        except DomainError:
            return _plain_log(node, env)
    # subtraction: only safe in log form when left >= right
    la = _log_eval(node.left, env)
    lb = _log_eval(node.right, env)
    if np.any(lb > la):
        return _plain_log(node, env)
    return la + np.log1p(-np.exp(lb - la))


# -- convenience wrappers over points -------------------------------------------


def point_env(points, dimension: int, radius=None) -> dict:
    """Variable bindings for an ``(m, dimension)`` array of points.

    ``radius`` overrides ``r`` (sphere samples carry their exact radius).
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != dimension:
        raise DomainError(f"point has {pts.shape[-1]} coordinates, expected {dimension}")
    env = {f"x{i + 1}": pts[..., i] for i in range(dimension)}
    env["r"] = np.linalg.norm(pts, axis=-1) if radius is None else radius
    env["N"] = float(dimension)
    return env


def eval_expression(node: Node, point, dimension: int | None = None) -> float:
    point = np.asarray(point, dtype=float)
    dimension = point.size if dimension is None else dimension
    return float(evaluate(node, point_env(point, dimension)))


def numeric_derivatives(node: Node, point, step_scale: float = 1e-3):
    """Gradient and Laplacian by central differences with one Richardson step.

    The step along coordinate i is ``step_scale * max(1, |x_i|)``; both the
    first and second differences are extrapolated from steps h and h/2.
    """
    x = np.asarray(point, dtype=float)
    n = x.size
    h = step_scale * np.maximum(1.0, np.abs(x))
    eye = np.eye(n)
    stencil = [x]
    for scale in (1.0, 0.5):
        stencil.extend(x + scale * h[:, None] * eye)
        stencil.extend(x - scale * h[:, None] * eye)
    values = evaluate(node, point_env(np.vstack([x[None, :]] + stencil[1:]), n))
    values = np.broadcast_to(values, (1 + 4 * n,))
    u0 = values[0]
    plus1, minus1 = values[1 : 1 + n], values[1 + n : 1 + 2 * n]
    plus2, minus2 = values[1 + 2 * n : 1 + 3 * n], values[1 + 3 * n :]
    d1_h = (plus1 - minus1) / (2 * h)
    d1_h2 = (plus2 - minus2) / h
    d2_h = (plus1 - 2 * u0 + minus1) / h**2
    d2_h2 = (plus2 - 2 * u0 + minus2) / (h / 2) ** 2
    gradient = (4 * d1_h2 - d1_h) / 3
    laplacian = float(np.sum((4 * d2_h2 - d2_h) / 3))
    return gradient, laplacian
