"""Symbolic expressions in one variable.

Expressions are immutable trees built from :class:`Constant`, :class:`Variable`
and :class:`Apply` nodes.  Besides ``x`` the tokens ``y``, ``y1`` and ``y2``
may appear; they stand for a candidate solution and its first two derivatives
when an expression is used as a residual.

Operations that are only defined on part of the real line are guarded so that
evaluation is total:

* ``sqrt`` and ``log`` act on ``|v| + ABS_EPS``;
* every denominator ``d`` is replaced by ``sign(d) * max(|d|, DIV_EPS)``
  (with ``sign(0) = +1``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Union

import numpy as np

ABS_EPS = 1e-9
DIV_EPS = 1e-6
MAX_POW = 16

VARIABLES = ("x", "y", "y1", "y2")
UNARY_OPS = ("identity", "neg", "sin", "cos", "sqrt_abs", "exp", "log_abs", "abs", "sign", "pow_int")
BINARY_OPS = ("add", "sub", "mul", "div")

ArrayLike = Union[float, np.ndarray]


class Expr:
    """Base class of expression nodes; supports ``+ - * /`` and unary minus."""

    __slots__ = ()

    def __add__(self, other):
        return Apply("add", (self, as_expr(other)))

    def __radd__(self, other):
        return Apply("add", (as_expr(other), self))

    def __sub__(self, other):
        return Apply("sub", (self, as_expr(other)))

    def __rsub__(self, other):
        return Apply("sub", (as_expr(other), self))

    def __mul__(self, other):
        return Apply("mul", (self, as_expr(other)))

    def __rmul__(self, other):
        return Apply("mul", (as_expr(other), self))

    def __truediv__(self, other):
        return Apply("div", (self, as_expr(other)))

    def __rtruediv__(self, other):
        return Apply("div", (as_expr(other), self))

    def __neg__(self):
        return Apply("neg", (self,))

    def __pow__(self, k: int):
        return Apply("pow_int", (self,), k)

    def __str__(self) -> str:
        return to_string(self, 6)


@dataclass(frozen=True, eq=True, repr=True)
class Constant(Expr):
    value: float

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value):
            raise ValueError(f"constant must be finite, got {self.value!r}")
        object.__setattr__(self, "value", value)


@dataclass(frozen=True, eq=True, repr=True)
class Variable(Expr):
    name: str = "x"

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")


@dataclass(frozen=True, eq=True, repr=True)
class Apply(Expr):
    op: str
    children: tuple
    k: int | None = None

    def __post_init__(self):
        children = tuple(self.children)
        object.__setattr__(self, "children", children)
        if self.op in UNARY_OPS:
            arity = 1
        elif self.op in BINARY_OPS:
            arity = 2
        else:
            raise ValueError(f"unknown operator {self.op!r}")
        if len(children) != arity:
            raise ValueError(f"{self.op} takes {arity} argument(s), got {len(children)}")
        for child in children:
            if not isinstance(child, Expr):
                raise TypeError(f"child of {self.op} is not an Expr: {child!r}")
        if self.op == "pow_int":
            if self.k is None or int(self.k) != self.k or abs(self.k) > MAX_POW:
                raise ValueError(f"pow_int exponent must be an integer with |k| <= {MAX_POW}, got {self.k!r}")
            object.__setattr__(self, "k", int(self.k))
        elif self.k is not None:
            raise ValueError(f"{self.op} takes no exponent")


X = Variable("x")


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Constant(float(value))


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Apply):
            stack.extend(reversed(node.children))


def free_variables(e: Expr) -> set[str]:
    return {node.name for node in walk(e) if isinstance(node, Variable)}


def size(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def depth(e: Expr) -> int:
    if isinstance(e, Apply):
        return 1 + max(depth(c) for c in e.children)
    return 0


# ---------------------------------------------------------------------------
# Guarded numerics, shared with the autodiff engine
# ---------------------------------------------------------------------------

def guard_denominator(d):
    d = np.asarray(d, dtype=float)
    floor = np.where(d < 0, -DIV_EPS, DIV_EPS)
    return np.where(np.abs(d) < DIV_EPS, floor, d)


def _pow_int(v, k: int):
    if k < 0:
        return guard_denominator(v) ** k
    return np.asarray(v, dtype=float) ** k


_UNARY_FUNCS: dict[str, Callable] = {
    "identity": lambda v: v,
    "neg": np.negative,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt_abs": lambda v: np.sqrt(np.abs(v) + ABS_EPS),
    "exp": np.exp,
    "log_abs": lambda v: np.log(np.abs(v) + ABS_EPS),
    "abs": np.abs,
    "sign": np.sign,
}

_BINARY_FUNCS: dict[str, Callable] = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": lambda a, b: a / guard_denominator(b),
}


def apply_op(op: str, args: tuple, k: int | None = None):
    if op == "pow_int":
        return _pow_int(args[0], k)
    if op in _UNARY_FUNCS:
        return _UNARY_FUNCS[op](args[0])
    return _BINARY_FUNCS[op](args[0], args[1])


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate(e: Expr, x: ArrayLike = 0.0, **env: ArrayLike):
    """Evaluate ``e`` at ``x`` (scalar or array); ``env`` binds y, y1, y2.

    Returns a float for scalar input, otherwise an array broadcast over all
    inputs.  Guards make the result finite for finite inputs except where a
    function overflows (e.g. ``exp`` of a large argument).
    """
    bindings = {"x": x, **env}
    scalar = all(np.ndim(v) == 0 for v in bindings.values())
    with np.errstate(all="ignore"):
        out = _eval(e, bindings, {})
    if scalar:
        return float(out)
    shape = np.broadcast_shapes(*(np.shape(v) for v in bindings.values()))
    return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()


def evaluate_checked(e: Expr, x: ArrayLike = 0.0, **env: ArrayLike):
    """Like :func:`evaluate` but also returns a flag that is True when all values are finite."""
    value = evaluate(e, x, **env)
    return value, bool(np.all(np.isfinite(value)))


def _eval(e: Expr, bindings: Mapping, memo: dict):
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Constant):
        out = e.value
    elif isinstance(e, Variable):
        if e.name not in bindings:
            raise ValueError(f"no value bound for variable {e.name!r}")
        out = np.asarray(bindings[e.name], dtype=float)
    else:
        args = tuple(_eval(c, bindings, memo) for c in e.children)
        out = apply_op(e.op, args, e.k)
    memo[key] = out
    return out


def compile_expr(e: Expr) -> Callable:
    """Return ``f(x, **env)`` evaluating ``e``; convenient for quadrature callbacks."""

    def f(x, **env):
        return evaluate(e, x, **env)

    return f


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

class ParseError(ValueError):
    """Syntax error in an expression string; ``offset`` is the character index."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


_FUNCTIONS = {
    "sin": "sin",
    "cos": "cos",
    "sqrt": "sqrt_abs",
    "exp": "exp",
    "log": "log_abs",
    "abs": "abs",
    "sign": "sign",
}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, offset = self.next()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", offset)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", offset)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = "add" if self.next()[1] == "+" else "sub"
            left = Apply(op, (left, self.term()))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = "mul" if self.next()[1] == "*" else "div"
            left = Apply(op, (left, self.unary()))
        return left

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.next()
            operand = self.unary()
            if isinstance(operand, Constant):
                return Constant(-operand.value)
            return Apply("neg", (operand,))
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.next()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.next()
                sign = -1
            kind, text, offset = self.next()
            if kind != "num" or not text.isdigit():
                raise ParseError("exponent must be an integer literal", offset)
            k = sign * int(text)
            if abs(k) > MAX_POW:
                raise ParseError(f"exponent {k} exceeds |k| <= {MAX_POW}", offset)
            return Apply("pow_int", (base,), k)
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.next()
        if kind == "num":
            return Constant(float(text))
        if kind == "name":
            if text in VARIABLES:
                return Variable(text)
            if text == "pi":
                return Constant(math.pi)
            if text in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Apply(_FUNCTIONS[text], (arg,))
            raise ParseError(f"unknown identifier {text!r}", offset)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", offset)


def parse(text: str) -> Expr:
    """Parse an infix expression string.

    >>> to_string(parse("x^3 + x + 1"))
    'x^3 + x + 1'
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printing and serialization
# ---------------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow_int": 4}
_SYMBOL = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}
_FUNC_NAME = {v: k for k, v in _FUNCTIONS.items()}
_ATOM = 5


def format_number(c: float, precision: int = 3) -> str:
    if c == 0:
        return "0"
    if 0.1 <= abs(c) < 1e15:
        return f"{c:.{precision}f}"
    return f"{c:.{precision}g}"


def to_string(e: Expr, precision: int = 3) -> str:
    """Canonical infix text, re-parseable by :func:`parse`.

    Binary operators associate to the left; constants are rounded to
    ``precision`` digits at print time only.
    """
    if not 1 <= precision <= 17:
        raise ValueError("precision must be in [1, 17]")
    return _fmt(e, precision)[0]


def _wrap(part: tuple[str, int], required: int) -> str:
    text, prec = part
    return text if prec >= required else f"({text})"


def _fmt(e: Expr, p: int) -> tuple[str, int]:
    if isinstance(e, Constant):
        text = format_number(e.value, p)
        return text, (3 if text.startswith("-") else _ATOM)
    if isinstance(e, Variable):
        return e.name, _ATOM
    op = e.op
    if op == "identity":
        return _fmt(e.children[0], p)
    if op in _SYMBOL:
        level = _PREC[op]
        left = _wrap(_fmt(e.children[0], p), level)
        right = _wrap(_fmt(e.children[1], p), level + 1)
        return left + _SYMBOL[op] + right, level
    if op == "neg":
        return "-" + _wrap(_fmt(e.children[0], p), 3), 3
    if op == "pow_int":
        return f"{_wrap(_fmt(e.children[0], p), _ATOM)}^{e.k}", 4
    return f"{_FUNC_NAME[op]}({_fmt(e.children[0], p)[0]})", _ATOM


def to_dict(e: Expr) -> dict:
    """Nested document form: ``{"kind": ..., "op"/"value"/"name": ..., "children": [...]}``."""
    if isinstance(e, Constant):
        return {"kind": "const", "value": e.value}
    if isinstance(e, Variable):
        return {"kind": "var", "name": e.name}
    doc = {"kind": "apply", "op": e.op, "children": [to_dict(c) for c in e.children]}
    if e.k is not None:
        doc["k"] = e.k
    return doc


def from_dict(doc: Mapping) -> Expr:
    kind = doc.get("kind")
    if kind == "const":
        return Constant(doc["value"])
    if kind == "var":
        return Variable(doc.get("name", "x"))
    if kind == "apply":
        return Apply(doc["op"], tuple(from_dict(c) for c in doc["children"]), doc.get("k"))
    raise ValueError(f"unknown expression node kind {kind!r}")


# ---------------------------------------------------------------------------
# Rewriting helpers
# ---------------------------------------------------------------------------

def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions."""
    if isinstance(e, Variable):
        return mapping.get(e.name, e)
    if isinstance(e, Apply):
        return Apply(e.op, tuple(substitute(c, mapping) for c in e.children), e.k)
    return e


def _is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Constant) and (value is None or e.value == value)


def _fold(op: str, children: tuple, k: int | None = None) -> Expr:
    if all(isinstance(c, Constant) for c in children):
        with np.errstate(all="ignore"):
            value = float(apply_op(op, tuple(c.value for c in children), k))
        if math.isfinite(value):
            return Constant(value)
    return Apply(op, children, k)


def s_add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return _fold("add", (a, b))


def s_sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return s_neg(b)
    return _fold("sub", (a, b))


def s_neg(a: Expr) -> Expr:
    if isinstance(a, Constant):
        return Constant(-a.value)
    if isinstance(a, Apply) and a.op == "neg":
        return a.children[0]
    return Apply("neg", (a,))


def s_mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Constant(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return s_neg(b)
    if _is_const(b, -1.0):
        return s_neg(a)
    return _fold("mul", (a, b))


def s_div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return Constant(0.0)
    if _is_const(b, 1.0):
        return a
    return _fold("div", (a, b))


def s_unary(op: str, a: Expr, k: int | None = None) -> Expr:
    if op == "identity":
        return a
    if op == "neg":
        return s_neg(a)
    if op == "pow_int":
        if k == 0:
            return Constant(1.0)
        if k == 1:
            return a
    return _fold(op, (a,), k)


# ---------------------------------------------------------------------------
# Symbolic differentiation
# ---------------------------------------------------------------------------

def differentiate(e: Expr, wrt: str = "x") -> Expr:
    """Exact symbolic derivative of ``e`` with respect to the variable ``wrt``.

    Derivatives respect the guards: ``d/dv sqrt(|v|+eps) = sign(v)/(2 sqrt(|v|+eps))``
    and ``d/dv log(|v|+eps) = sign(v)/(|v|+eps)``.  Inside the clamped band of
    a denominator the guarded function is locally constant, which the
    returned expression does not reproduce; derivatives are exact elsewhere.
    """
    return _diff(e, wrt, {})


def _diff(e: Expr, wrt: str, memo: dict) -> Expr:
    key = id(e)
    if key in memo:
        return memo[key][1]
    out = _diff_node(e, wrt, memo)
    memo[key] = (e, out)  # keep e alive so id() stays unique
    return out


def _diff_node(e: Expr, wrt: str, memo: dict) -> Expr:
    if isinstance(e, Constant):
        return Constant(0.0)
    if isinstance(e, Variable):
        return Constant(1.0 if e.name == wrt else 0.0)
    op = e.op
    a = e.children[0]
    da = _diff(a, wrt, memo)
    if op in BINARY_OPS:
        b = e.children[1]
        db = _diff(b, wrt, memo)
        if op == "add":
            return s_add(da, db)
        if op == "sub":
            return s_sub(da, db)
        if op == "mul":
            return s_add(s_mul(da, b), s_mul(a, db))
        # (a/b)' = a'/b - (a/b) * b'/b keeps b as the only denominator, so the
        # derivative is exact wherever the guard is inactive
        return s_sub(s_div(da, b), s_div(s_mul(e, db), b))
    if _is_const(da, 0.0):
        return Constant(0.0)
    if op == "identity":
        return da
    if op == "neg":
        return s_neg(da)
    if op == "sign":
        return Constant(0.0)
    if op == "sin":
        outer = s_unary("cos", a)
    elif op == "cos":
        outer = s_neg(s_unary("sin", a))
    elif op == "exp":
        outer = e
    elif op == "abs":
        outer = s_unary("sign", a)
    elif op == "sqrt_abs":
        outer = s_div(s_unary("sign", a), s_mul(Constant(2.0), e))
    elif op == "log_abs":
        outer = s_div(s_unary("sign", a), s_add(s_unary("abs", a), Constant(ABS_EPS)))
    elif op == "pow_int":
        if e.k == 0:
            return Constant(0.0)
        outer = s_mul(Constant(float(e.k)), s_unary("pow_int", a, e.k - 1))
    else:  # pragma: no cover - guarded by Apply validation
        raise ValueError(op)
    return s_mul(outer, da)


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def simplify(e: Expr, tol: float = 0.0, probe: np.ndarray | None = None) -> Expr:
    """Fold constants, drop identities and normalize sums and products.

    Additive terms whose coefficient is below ``tol`` in magnitude are dropped,
    but only if the result still agrees with the exactly folded expression to
    ``tol * (1 + |value|)`` on the probe points (default: 65 points on
    ``[-1, 1]``, the unit scale on which ``tol`` is meant); otherwise the
    exactly folded form is returned.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    exact = _Normalizer(0.0)(e)
    if tol == 0.0:
        return exact
    approx = _Normalizer(tol)(e)
    if approx == exact:
        return exact
    if probe is None:
        probe = np.linspace(-1.0, 1.0, 65) + 1e-3
    env = {name: probe[::-1] * 0.5 for name in free_variables(exact) | free_variables(approx) if name != "x"}
    v_exact = evaluate(exact, probe, **env)
    v_approx = evaluate(approx, probe, **env)
    ok = np.isfinite(v_exact)
    if np.all(np.abs(v_approx[ok] - v_exact[ok]) <= tol * (1.0 + np.abs(v_exact[ok]))):
        return approx
    return exact


class _Normalizer:
    """Rewrites sums as ``const + sum(coef * prod(factors))``, memoized per node."""

    def __init__(self, tol: float):
        self.tol = tol
        self.memo: dict[int, tuple[Expr, Expr]] = {}

    def __call__(self, e: Expr) -> Expr:
        key = id(e)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[1]
        out = self._normalize(e)
        self.memo[key] = (e, out)
        return out

    def _normalize(self, e: Expr) -> Expr:
        if not isinstance(e, Apply):
            return e
        if e.op in ("add", "sub", "neg", "mul") or (e.op == "div" and isinstance(self(e.children[1]), Constant)):
            const, terms = self.collect_sum(e)
            return self.build_sum(const, terms)
        children = tuple(self(c) for c in e.children)
        if e.op == "identity":
            return children[0]
        if e.op == "pow_int":
            return s_unary("pow_int", children[0], e.k)
        return _fold(e.op, children, e.k)

    def collect_sum(self, e: Expr) -> tuple[float, list]:
        const = 0.0
        terms: list[list] = []
        index: dict[tuple, int] = {}
        stack = [(e, 1.0)]
        while stack:
            node, sign = stack.pop()
            if isinstance(node, Apply) and node.op in ("add", "sub"):
                stack.append((node.children[1], sign if node.op == "add" else -sign))
                stack.append((node.children[0], sign))
                continue
            if isinstance(node, Apply) and node.op in ("neg", "identity"):
                stack.append((node.children[0], -sign if node.op == "neg" else sign))
                continue
            coef, factors = self.collect_product(node)
            coef *= sign
            if not factors:
                const += coef
                continue
            key = tuple(factors)
            if key in index:
                terms[index[key]][0] += coef
            else:
                index[key] = len(terms)
                terms.append([coef, factors])
        return const, terms

    def collect_product(self, e: Expr) -> tuple[float, list]:
        coef = 1.0
        factors: list[Expr] = []
        stack = [e]
        while stack:
            node = stack.pop()
            if isinstance(node, Apply) and node.op == "mul":
                stack.append(node.children[1])
                stack.append(node.children[0])
                continue
            if isinstance(node, Apply) and node.op in ("identity", "neg"):
                if node.op == "neg":
                    coef = -coef
                stack.append(node.children[0])
                continue
            if isinstance(node, Apply) and node.op == "div":
                den = self(node.children[1])
                if isinstance(den, Constant) and abs(den.value) >= DIV_EPS:
                    coef /= den.value
                    stack.append(node.children[0])
                else:
                    factors.append(_fold("div", (self(node.children[0]), den)))
                continue
            leaf = self(node)
            if isinstance(leaf, Constant):
                coef *= leaf.value
            elif isinstance(leaf, Apply) and leaf.op in ("mul", "neg") and leaf is not node:
                stack.append(leaf)
            else:
                factors.append(leaf)
        return coef, factors

    def build_sum(self, const: float, terms: list) -> Expr:
        tol = self.tol
        kept = [(c, f) for c, f in terms if c != 0.0 and math.isfinite(c) and not (tol > 0 and abs(c) < tol)]
        if (tol > 0 and abs(const) < tol) or not math.isfinite(const):
            const = 0.0
        out: Expr | None = Constant(const) if const != 0.0 else None
        for coef, factors in kept:
            if out is None:
                out = s_neg(_build_product(1.0, factors)) if coef == -1.0 else _build_product(coef, factors)
            elif coef < 0:
                out = Apply("sub", (out, _build_product(-coef, factors)))
            else:
                out = Apply("add", (out, _build_product(coef, factors)))
        return out if out is not None else Constant(0.0)


def _build_product(coef: float, factors: list) -> Expr:
    if coef == 0.0:
        return Constant(0.0)
    out: Expr | None = None if coef == 1.0 else Constant(coef)
    for f in factors:
        out = f if out is None else Apply("mul", (out, f))
    return out if out is not None else Constant(coef)
