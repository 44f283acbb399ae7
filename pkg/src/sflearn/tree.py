"""The symbolic function learner: a balanced binary tree of gated operator nodes.

Leaves compute ``w * x + b``.  Each interior node applies every allowed
operator to its two children, gates the results with a (discretized)
softmax of its weight vector ``omega`` and applies its own affine map
``w * (.) + b``.  Unary operators see ``left + delta * right``.

Layer ``n`` (``1 <= n <= depth``) has ``2**(depth - n)`` nodes; the single
node of the last layer is the root.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .autodiff import Jet, Tape, discrete_softmax, jet_apply, softmax, tape_forward
from .expr import BINARY_OPS, UNARY_OPS, Apply, Constant, Expr, Variable, simplify

OP_ALIASES = {
    "id": "identity",
    "sqrt": "sqrt_abs",
    "log": "log_abs",
    "+": "add",
    "-": "sub",
    "*": "mul",
    "x": "mul",
    "/": "div",
}


def canonical_op(name: str) -> str:
    return OP_ALIASES.get(name, name)


@dataclass(frozen=True)
class SflConfig:
    """Structure of the tree.

    ``delta=None`` picks 1 for depth <= 2 and 0 otherwise.
    """

    depth: int = 2
    unary: tuple = ("identity", "sin", "sqrt_abs")
    binary: tuple = ("mul",)
    delta: int | None = None
    sigma: float = 0.05

    def __post_init__(self):
        unary = tuple(canonical_op(u) for u in self.unary)
        binary = tuple(canonical_op(v) for v in self.binary)
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "binary", binary)
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if "identity" not in unary:
            raise ValueError("unary operators must include identity")
        for u in unary:
            if u not in UNARY_OPS or u == "pow_int":
                raise ValueError(f"unsupported unary operator {u!r}")
        for v in binary:
            if v not in BINARY_OPS:
                raise ValueError(f"unsupported binary operator {v!r}")
        if self.delta is None:
            object.__setattr__(self, "delta", 1 if self.depth <= 2 else 0)
        if self.delta not in (0, 1):
            raise ValueError("delta must be 0 or 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def ops(self) -> tuple:
        return self.unary + self.binary

    @property
    def k(self) -> int:
        return len(self.unary) + len(self.binary)

    def layer_size(self, n: int) -> int:
        return 2 ** (self.depth - n)

    def param_shapes(self) -> dict:
        shapes = {"leaf_w": (2**self.depth,), "leaf_b": (2**self.depth,)}
        for n in range(1, self.depth + 1):
            size = self.layer_size(n)
            shapes[f"omega{n}"] = (size, self.k)
            shapes[f"w{n}"] = (size,)
            shapes[f"b{n}"] = (size,)
        return shapes

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.param_shapes().values())


@dataclass
class SflParams:
    """All learnable weights, stored as named arrays (see :meth:`SflConfig.param_shapes`)."""

    arrays: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def copy(self) -> "SflParams":
        return SflParams({k: v.copy() for k, v in self.arrays.items()})

    def flat(self) -> np.ndarray:
        return np.concatenate([self.arrays[k].ravel() for k in sorted(self.arrays)])

    @classmethod
    def from_flat(cls, vector: np.ndarray, cfg: SflConfig) -> "SflParams":
        shapes = cfg.param_shapes()
        arrays, pos = {}, 0
        for name in sorted(shapes):
            n = int(np.prod(shapes[name]))
            arrays[name] = np.asarray(vector[pos:pos + n], dtype=float).reshape(shapes[name])
            pos += n
        if pos != len(vector):
            raise ValueError("parameter vector has the wrong length")
        return cls(arrays)

    def count(self) -> int:
        return sum(v.size for v in self.arrays.values())

    def records(self) -> Iterator[tuple]:
        """Yield ``(layer, node, field, value)``; leaves are layer 0."""
        for name in sorted(self.arrays):
            value = self.arrays[name]
            if name.startswith("leaf_"):
                layer, fname = 0, name[5:]
            else:
                fname = name.rstrip("0123456789")
                layer = int(name[len(fname):])
            for node, row in enumerate(value):
                yield layer, node, fname, row.tolist() if np.ndim(row) else float(row)

    def to_dict(self) -> dict:
        return {k: v.tolist() for k, v in sorted(self.arrays.items())}

    @classmethod
    def from_dict(cls, doc: dict) -> "SflParams":
        return cls({k: np.asarray(v, dtype=float) for k, v in doc.items()})

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays.values())


def init(cfg: SflConfig, rng: np.random.Generator | int | None = None) -> SflParams:
    """Random parameters: ``omega ~ N(0, 1)``, ``w ~ N(1, 0.5)``, ``b ~ N(0, 0.1)``."""
    rng = np.random.default_rng(rng)
    arrays = {}
    for name, shape in cfg.param_shapes().items():
        if name.startswith("omega"):
            arrays[name] = rng.normal(0.0, 1.0, shape)
        elif name.endswith("_w") or name.startswith("w"):
            arrays[name] = rng.normal(1.0, 0.5, shape)
        else:
            arrays[name] = rng.normal(0.0, 0.1, shape)
    return SflParams(arrays)


def operate(a: Jet, b: Jet, cfg: SflConfig) -> list:
    """All candidate operator outputs at a node: unary ops on ``a + delta*b``, then binary ops on ``(a, b)``."""
    u_in = jet_apply("add", a, b) if cfg.delta else a
    return [jet_apply(u, u_in) for u in cfg.unary] + [jet_apply(v, a, b) for v in cfg.binary]


def gate_weights(omega, cfg: SflConfig, mode: str) -> np.ndarray:
    if mode == "soft":
        return softmax(omega)
    if mode == "discrete":
        return discrete_softmax(omega, cfg.sigma)
    raise ValueError(f"unknown gate mode {mode!r}")


def build_program(cfg: SflConfig, mode: str = "discrete"):
    """Return ``program(tape) -> node`` computing the root jet for all samples at once."""

    def program(tape: Tape) -> int:
        h = tape.add(tape.mul(tape.param("leaf_w"), tape.var()), tape.param("leaf_b"))
        for n in range(1, cfg.depth + 1):
            left = tape.take(h, 0)
            right = tape.take(h, 1)
            u_in = tape.add(left, right) if cfg.delta else left
            options = [tape.unary(u, u_in) for u in cfg.unary]
            options += [tape.binary(v, left, right) for v in cfg.binary]
            g = tape.gate(tape.param(f"omega{n}"), tape.stack(options), mode, cfg.sigma)
            h = tape.add(tape.mul(tape.param(f"w{n}"), g), tape.param(f"b{n}"))
        return h

    return program


def forward(params: SflParams, cfg: SflConfig, x, mode: str = "discrete", return_tape: bool = False):
    """Root value of the tree as a :class:`Jet` (``(f, f', f'')`` at each ``x``)."""
    jet, tape = tape_forward(build_program(cfg, mode), params.arrays, x)
    if return_tape:
        return jet, tape
    return jet


def forward_reference(params: SflParams, cfg: SflConfig, x: float, mode: str = "discrete") -> Jet:
    """Node-by-node forward pass with :func:`operate`; slow, used to cross-check :func:`forward`."""
    x_jet = Jet.variable(float(x))
    layer = [
        jet_apply("add", jet_apply("mul", Jet.constant(w), x_jet), Jet.constant(b))
        for w, b in zip(params["leaf_w"], params["leaf_b"])
    ]
    for n in range(1, cfg.depth + 1):
        nxt = []
        for i in range(cfg.layer_size(n)):
            opts = operate(layer[2 * i], layer[2 * i + 1], cfg)
            s = gate_weights(params[f"omega{n}"][i], cfg, mode)
            mixed = Jet(*(sum(float(si) * np.asarray(o.component(c)) for si, o in zip(s, opts)) for c in range(3)))
            w, b = params[f"w{n}"][i], params[f"b{n}"][i]
            nxt.append(Jet(w * mixed.v + b, w * mixed.d1, w * mixed.d2))
        layer = nxt
    return Jet(*(float(c) for c in layer[0].components()))


def selected_ops(params: SflParams, cfg: SflConfig) -> list:
    """Operator chosen at every interior node, layer by layer (lowest index wins ties)."""
    return [[cfg.ops[int(j)] for j in np.argmax(params[f"omega{n}"], axis=1)] for n in range(1, cfg.depth + 1)]


def extract(params: SflParams, cfg: SflConfig, tol: float = 1e-6) -> Expr:
    """Discrete expression represented by the tree, simplified with ``tol``."""
    return simplify(extract_raw(params, cfg), tol)


def extract_raw(params: SflParams, cfg: SflConfig) -> Expr:
    x = Variable("x")
    layer: list[Expr] = [
        Apply("add", (Apply("mul", (Constant(w), x)), Constant(b)))
        for w, b in zip(params["leaf_w"], params["leaf_b"])
    ]
    r = len(cfg.unary)
    for n, ops in enumerate(selected_ops(params, cfg), start=1):
        nxt = []
        for i, op in enumerate(ops):
            left, right = layer[2 * i], layer[2 * i + 1]
            if cfg.ops.index(op) < r:
                arg = Apply("add", (left, right)) if cfg.delta else left
                core = Apply(op, (arg,))
            else:
                core = Apply(op, (left, right))
            w, b = params[f"w{n}"][i], params[f"b{n}"][i]
            nxt.append(Apply("add", (Apply("mul", (Constant(w), core)), Constant(b))))
        layer = nxt
    return layer[0]


def gate_margins(params: SflParams, cfg: SflConfig) -> np.ndarray:
    """Gap between the largest and second largest entry of every ``omega``."""
    gaps = []
    for n in range(1, cfg.depth + 1):
        om = np.sort(params[f"omega{n}"], axis=1)
        gaps.append(om[:, -1] - om[:, -2] if cfg.k > 1 else np.full(om.shape[0], np.inf))
    return np.concatenate(gaps)
