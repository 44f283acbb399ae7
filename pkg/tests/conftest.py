import sys
import numpy as np

from sflearn.autodiff import Jet, jet_apply
from sflearn.expr import Apply, Constant, Expr, Variable, evaluate

SMOOTH_UNARY = ("identity", "neg", "sin", "cos", "exp")
KINKED_UNARY = ("sqrt_abs", "log_abs", "abs")
BINARY = ("add", "sub", "mul", "div")


def random_expr(rng, max_depth, unary=SMOOTH_UNARY + KINKED_UNARY + ("pow_int",), binary=BINARY, const_scale=2.0):
    """Random tree in ``x`` with moderate constants."""
    if max_depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return Variable("x")
        return Constant(float(np.round(rng.uniform(-const_scale, const_scale), 6)))
    if rng.random() < 0.5:
        op = unary[rng.integers(len(unary))]
        k = int(rng.integers(-3, 4)) if op == "pow_int" else None
        return Apply(op, (random_expr(rng, max_depth - 1, unary, binary, const_scale),), k)
    op = binary[rng.integers(len(binary))]
    return Apply(op, (random_expr(rng, max_depth - 1, unary, binary, const_scale),
                      random_expr(rng, max_depth - 1, unary, binary, const_scale)))


def kink_distance(e: Expr, x: float) -> float:
    """Smallest |argument| over guarded or non-smooth operations of ``e`` at ``x``."""
    best = np.inf
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Apply):
            stack.extend(node.children)
            if node.op in KINKED_UNARY + ("sign",) or (node.op == "pow_int" and node.k < 0):
                best = min(best, abs(float(evaluate(node.children[0], x))))
            elif node.op == "div":
                best = min(best, abs(float(evaluate(node.children[1], x))))
    return best


def max_magnitude(e: Expr, x: float) -> float:
    best = 0.0
    stack = [e]
    while stack:
        node = stack.pop()
        best = max(best, abs(float(evaluate(node, x))))
        if isinstance(node, Apply):
            stack.extend(node.children)
    return best


def good_point(e: Expr, x: float, kink: float = 0.05, limit: float = 50.0) -> bool:
    with np.errstate(all="ignore"):
        v = max_magnitude(e, x)
        return np.isfinite(v) and v < limit and kink_distance(e, x) > kink


def jet_eval(e: Expr, x: float) -> Jet:
    """Jet of ``e`` at ``x`` by recursive jet_apply."""
    if isinstance(e, Constant):
        return Jet.constant(e.value)
    if isinstance(e, Variable):
        return Jet.variable(x)
    args = [jet_eval(c, x) for c in e.children]
    return jet_apply(e.op, *args, k=e.k)


def constants_of(e: Expr) -> list:
    out = []

    def visit(node):
        if isinstance(node, Constant):
            out.append(node.value)
        elif isinstance(node, Apply):
            for c in node.children:
                visit(c)

    visit(e)
    return out


def program_from_expr(e: Expr):
    """Tape program in which the i-th constant of ``e`` (depth-first) is parameter ``p{i}``."""

    def program(tape):
        counter = iter(range(10**6))

        def build(node):
            if isinstance(node, Constant):
                return tape.param(f"p{next(counter)}")
            if isinstance(node, Variable):
                return tape.var()
            args = [build(c) for c in node.children]
            if len(args) == 1:
                return tape.unary(node.op, args[0], node.k)
            return tape.binary(node.op, *args)

        return build(e)

    return program


def central_fd(f, x: float, h: float = 1e-5) -> float:
    return (f(x + h) - f(x - h)) / (2 * h)


def fd_reliable(f, x: float, h: float = 1e-5, rtol: float = 1e-7) -> bool:
    """Central differences at ``h`` and ``h/2`` agree, so truncation error is small at ``x``."""
    a, b = central_fd(f, x, h), central_fd(f, x, h / 2)
    return np.isfinite(a) and np.isfinite(b) and abs(a - b) <= rtol * max(1.0, abs(a))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
