"""Second-order jets and a reverse-mode tape over jet arithmetic.

A :class:`Jet` carries ``(f, f', f'')`` with respect to ``x``.  A :class:`Tape`
records a computation on jets whose inputs include named parameters; the
backward pass propagates adjoint triples ``(dL/dv, dL/dd1, dL/dd2)`` and
returns ``dL/dtheta`` for every parameter, which is what a loss built from
``f``, ``f'`` and ``f''`` needs.

All jet components are numpy arrays whose last axis indexes samples (values
of ``x``).  Parameters broadcast against that axis, and per-sample gradient
contributions are kept until the end of the backward pass so that samples
producing non-finite numbers can be dropped individually.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import ABS_EPS, BINARY_OPS, DIV_EPS, guard_denominator


@dataclass(frozen=True)
class Jet:
    """Value, first and second derivative with respect to ``x``."""

    v: np.ndarray | float
    d1: np.ndarray | float
    d2: np.ndarray | float

    @classmethod
    def constant(cls, c) -> "Jet":
        c = np.asarray(c, dtype=float)
        return cls(c, np.zeros_like(c), np.zeros_like(c))

    @classmethod
    def variable(cls, x) -> "Jet":
        x = np.asarray(x, dtype=float)
        return cls(x, np.ones_like(x), np.zeros_like(x))

    def components(self) -> tuple:
        return self.v, self.d1, self.d2

    def component(self, order: int):
        return (self.v, self.d1, self.d2)[order]


def unary_derivatives(op: str, v, k: int | None = None) -> tuple:
    """Return ``(u(v), u'(v), u''(v), u'''(v))`` for a guarded unary operator.

    ``recip`` is the guarded reciprocal used to build division.
    """
    v = np.asarray(v, dtype=float)
    zero = np.zeros_like(v)
    if op == "identity":
        return v, np.ones_like(v), zero, zero
    if op == "neg":
        return -v, -np.ones_like(v), zero, zero
    if op == "sin":
        s, c = np.sin(v), np.cos(v)
        return s, c, -s, -c
    if op == "cos":
        s, c = np.sin(v), np.cos(v)
        return c, -s, -c, s
    if op == "exp":
        e = np.exp(v)
        return e, e, e, e
    if op == "sqrt_abs":
        sg = np.sign(v)
        q = np.abs(v) + ABS_EPS
        r = np.sqrt(q)
        return r, sg / (2 * r), -1.0 / (4 * q * r), sg * 3.0 / (8 * q * q * r)
    if op == "log_abs":
        sg = np.sign(v)
        q = np.abs(v) + ABS_EPS
        return np.log(q), sg / q, -1.0 / (q * q), 2.0 * sg / (q * q * q)
    if op == "abs":
        return np.abs(v), np.sign(v), zero, zero
    if op == "sign":
        return np.sign(v), zero, zero, zero
    if op == "recip":
        d = guard_denominator(v)
        live = np.abs(v) >= DIV_EPS
        r = 1.0 / d
        return r, np.where(live, -r * r, 0.0), np.where(live, 2 * r**3, 0.0), np.where(live, -6 * r**4, 0.0)
    if op == "pow_int":
        if k < 0:
            base = guard_denominator(v)
            live = np.abs(v) >= DIV_EPS
        else:
            base = v
            live = True
        out = [base**k]
        coef = 1.0
        for j in range(3):
            coef *= k - j
            out.append(np.where(live, coef * base ** (k - j - 1), 0.0) if coef != 0 else zero)
        return tuple(out)
    raise ValueError(f"unknown unary operator {op!r}")


def _unary_jet(op: str, a: Jet, k: int | None = None) -> tuple[Jet, tuple]:
    u, u1, u2, u3 = unary_derivatives(op, a.v, k)
    d1 = u1 * a.d1
    d2 = u2 * a.d1 * a.d1 + u1 * a.d2
    return Jet(u, d1, d2), (u1, u2, u3)


def _mul_jet(a: Jet, b: Jet) -> Jet:
    return Jet(
        a.v * b.v,
        a.v * b.d1 + a.d1 * b.v,
        a.v * b.d2 + 2 * a.d1 * b.d1 + a.d2 * b.v,
    )


def jet_apply(op: str, a: Jet, b: Jet | None = None, k: int | None = None) -> Jet:
    """Apply ``op`` to jets, propagating derivatives to second order."""
    with np.errstate(all="ignore"):
        if op in BINARY_OPS:
            if b is None:
                raise ValueError(f"{op} needs two arguments")
            if op == "add":
                return Jet(a.v + b.v, a.d1 + b.d1, a.d2 + b.d2)
            if op == "sub":
                return Jet(a.v - b.v, a.d1 - b.d1, a.d2 - b.d2)
            if op == "mul":
                return _mul_jet(a, b)
            return _mul_jet(a, _unary_jet("recip", b)[0])
        if b is not None:
            raise ValueError(f"{op} takes one argument")
        return _unary_jet(op, a, k)[0]


def softmax(omega, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax (max-subtracted)."""
    omega = np.asarray(omega, dtype=float)
    z = np.exp(omega - omega.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def hump(t, sigma: float):
    """``exp(-(1 - t)^2 / sigma^2)``: equals 1 at ``t = 1``, negligible for ``t <= 0.8`` at sigma 0.05."""
    return np.exp(-((1.0 - t) ** 2) / sigma**2)


def discrete_softmax(omega, sigma: float = 0.05, axis: int = -1) -> np.ndarray:
    """Softmax divided by its maximum entry, passed through :func:`hump`.

    ``s / max(s)`` equals ``exp(omega - max(omega))``, which is how it is
    computed.  The largest entry maps to exactly 1.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    omega = np.asarray(omega, dtype=float)
    t = np.exp(omega - omega.max(axis=axis, keepdims=True))
    return hump(t, sigma)


# ---------------------------------------------------------------------------
# Tape
# ---------------------------------------------------------------------------

def _reduce_to(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` on every axis except the last (sample) axis."""
    g = np.asarray(g)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis in range(len(shape) - 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


@dataclass
class Gradients:
    """Result of a backward pass.

    ``grads`` maps parameter names to arrays of the parameter's shape;
    ``bad`` marks samples whose contribution was non-finite and therefore
    zeroed.
    """

    grads: dict
    bad: np.ndarray

    @property
    def flagged(self) -> bool:
        return bool(np.any(self.bad))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.grads[name]


class Tape:
    """Records jet operations for one forward pass; used once for backward.

    Node ids are plain integers handed out in topological order.  Parameters
    are looked up by name in ``params`` the first time :meth:`param` sees
    them.
    """

    def __init__(self, params: Mapping[str, np.ndarray], x):
        x = np.asarray(x, dtype=float)
        self.x_shape = x.shape
        self.x = np.atleast_1d(x).reshape(-1)
        self.batch = self.x.shape[0]
        self.params = {name: np.asarray(value, dtype=float) for name, value in params.items()}
        self._kind: list[str] = []
        self._parents: list[tuple] = []
        self._jets: list[Jet] = []
        self._cache: list = []
        self._param_nodes: dict[str, int] = {}
        self.output: int | None = None

    def __len__(self) -> int:
        return len(self._kind)

    def _push(self, kind: str, parents: tuple, jet: Jet, cache=None) -> int:
        self._kind.append(kind)
        self._parents.append(parents)
        self._jets.append(jet)
        self._cache.append(cache)
        return len(self._kind) - 1

    def jet(self, node: int) -> Jet:
        return self._jets[node]

    def shape(self, node: int) -> tuple:
        return np.shape(self._jets[node].v)

    # leaves --------------------------------------------------------------

    def var(self) -> int:
        return self._push("var", (), Jet.variable(self.x))

    def const(self, c) -> int:
        c = np.asarray(c, dtype=float)
        return self._push("const", (), Jet.constant(c.reshape(c.shape + (1,))))

    def param(self, name: str) -> int:
        if name in self._param_nodes:
            return self._param_nodes[name]
        value = self.params[name]
        node = self._push("param", (), Jet.constant(value.reshape(value.shape + (1,))), name)
        self._param_nodes[name] = node
        return node

    # operations ----------------------------------------------------------

    def unary(self, op: str, a: int, k: int | None = None) -> int:
        with np.errstate(all="ignore"):
            jet, cache = _unary_jet(op, self._jets[a], k)
        return self._push("unary", (a,), jet, cache)

    def add(self, a: int, b: int) -> int:
        ja, jb = self._jets[a], self._jets[b]
        return self._push("add", (a, b), Jet(ja.v + jb.v, ja.d1 + jb.d1, ja.d2 + jb.d2))

    def sub(self, a: int, b: int) -> int:
        ja, jb = self._jets[a], self._jets[b]
        return self._push("sub", (a, b), Jet(ja.v - jb.v, ja.d1 - jb.d1, ja.d2 - jb.d2))

    def mul(self, a: int, b: int) -> int:
        with np.errstate(all="ignore"):
            jet = _mul_jet(self._jets[a], self._jets[b])
        return self._push("mul", (a, b), jet)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.unary("recip", b))

    def binary(self, op: str, a: int, b: int) -> int:
        return {"add": self.add, "sub": self.sub, "mul": self.mul, "div": self.div}[op](a, b)

    def take(self, a: int, start: int, step: int = 2) -> int:
        """Every ``step``-th row (axis -2) starting at ``start``."""
        ja = self._jets[a]
        sl = (Ellipsis, slice(start, None, step), slice(None))
        return self._push("take", (a,), Jet(ja.v[sl], ja.d1[sl], ja.d2[sl]), (start, step))

    def stack(self, nodes: Sequence[int]) -> int:
        """Stack equally shaped jets along a new axis -2."""
        jets = [self._jets[n] for n in nodes]
        shape = np.broadcast_shapes(*(np.shape(c) for j in jets for c in j.components()))
        parts = [np.stack([np.broadcast_to(j.component(c), shape) for j in jets], axis=-2) for c in range(3)]
        return self._push("stack", tuple(nodes), Jet(*parts))

    def gate(self, omega: int, options: int, mode: str = "soft", sigma: float = 0.05) -> int:
        """Gated sum over axis -2 of ``options`` with weights from ``omega``.

        ``mode="soft"`` uses the softmax; ``mode="discrete"`` the hump of the
        max-normalized softmax.
        """
        w = self._jets[omega].v
        if mode == "soft":
            s = softmax(w, axis=-2)
            cache = ("soft", s, None, None)
        elif mode == "discrete":
            t = np.exp(w - w.max(axis=-2, keepdims=True))
            s = hump(t, sigma)
            top = np.argmax(w, axis=-2)
            cache = ("discrete", s, t, (top, sigma))
        else:
            raise ValueError(f"unknown gate mode {mode!r}")
        p = self._jets[options]
        with np.errstate(all="ignore"):
            jet = Jet((s * p.v).sum(-2), (s * p.d1).sum(-2), (s * p.d2).sum(-2))
        return self._push("gate", (omega, options), jet, cache)

    # backward ------------------------------------------------------------

    def backward(self, output: int, seed) -> Gradients:
        """Propagate an adjoint triple from ``output`` back to the parameters."""
        n = len(self._kind)
        adj: list = [None] * n
        out_shape = self.shape(output)
        adj[output] = tuple(np.broadcast_to(np.asarray(s, dtype=float), out_shape) for s in seed)
        with np.errstate(all="ignore"):
            for i in range(output, -1, -1):
                g = adj[i]
                if g is None or self._kind[i] in ("param", "var", "const"):
                    continue
                for parent, contrib in self._propagate(i, g):
                    contrib = tuple(_reduce_to(c, self.shape(parent)) for c in contrib)
                    if adj[parent] is None:
                        adj[parent] = contrib
                    else:
                        adj[parent] = tuple(x + y for x, y in zip(adj[parent], contrib))
        return self._collect(adj)

    def _collect(self, adj: list) -> Gradients:
        per_sample = {}
        bad = np.zeros(self.batch, dtype=bool)
        for name, node in self._param_nodes.items():
            if adj[node] is None:
                continue
            c = np.asarray(adj[node][0])
            c = np.broadcast_to(c, self.params[name].shape + (c.shape[-1],))
            per_sample[name] = c
            nonfinite = ~np.isfinite(c).reshape(-1, c.shape[-1]).all(axis=0)
            bad |= nonfinite if nonfinite.shape[0] == self.batch else bool(nonfinite.any())
        grads = {}
        for name, value in self.params.items():
            c = per_sample.get(name)
            if c is None:
                grads[name] = np.zeros_like(value)
                continue
            keep = ~bad if c.shape[-1] == self.batch else ~np.array([bad.all()])
            grads[name] = np.where(keep, c, 0.0).sum(axis=-1)
        return Gradients(grads, bad)

    def _propagate(self, i: int, g: tuple):
        kind = self._kind[i]
        parents = self._parents[i]
        gv, g1, g2 = g
        if kind == "add":
            return [(parents[0], g), (parents[1], g)]
        if kind == "sub":
            return [(parents[0], g), (parents[1], (-gv, -g1, -g2))]
        if kind == "mul":
            a, b = (self._jets[p] for p in parents)
            ga = (gv * b.v + g1 * b.d1 + g2 * b.d2, g1 * b.v + 2 * g2 * b.d1, g2 * b.v)
            gb = (gv * a.v + g1 * a.d1 + g2 * a.d2, g1 * a.v + 2 * g2 * a.d1, g2 * a.v)
            return [(parents[0], ga), (parents[1], gb)]
        if kind == "unary":
            a = self._jets[parents[0]]
            u1, u2, u3 = self._cache[i]
            ga = (
                gv * u1 + g1 * u2 * a.d1 + g2 * (u3 * a.d1 * a.d1 + u2 * a.d2),
                g1 * u1 + 2 * g2 * u2 * a.d1,
                g2 * u1,
            )
            return [(parents[0], ga)]
        if kind == "take":
            start, step = self._cache[i]
            pshape = self.shape(parents[0])
            out = []
            for c in g:
                full = np.zeros(pshape[:-1] + (c.shape[-1],))
                full[..., start::step, :] = c
                out.append(full)
            return [(parents[0], tuple(out))]
        if kind == "stack":
            return [(p, tuple(c[..., j, :] for c in g)) for j, p in enumerate(parents)]
        if kind == "gate":
            return self._gate_backward(i, g)
        raise AssertionError(kind)

    def _gate_backward(self, i: int, g: tuple):
        omega, options = self._parents[i]
        mode, s, t, extra = self._cache[i]
        p = self._jets[options]
        g_opts = tuple(s * c[..., None, :] for c in g)
        gs = sum(c[..., None, :] * comp for c, comp in zip(g, p.components()))
        if mode == "soft":
            g_omega = s * (gs - (s * gs).sum(axis=-2, keepdims=True))
        else:
            top, sigma = extra
            # d s'_j / d omega: s'_j = H(t_j) with t_j = exp(omega_j - omega_top)
            a = gs * s * (2.0 * (1.0 - t) / sigma**2) * t
            onehot = np.zeros(s.shape)
            np.put_along_axis(onehot, np.expand_dims(top, -2), 1.0, axis=-2)
            g_omega = a - onehot * a.sum(axis=-2, keepdims=True)
        zeros = np.zeros_like(g_omega)
        return [(omega, (g_omega, zeros, zeros)), (options, g_opts)]


def tape_forward(program: Callable[[Tape], int], params: Mapping[str, np.ndarray], x) -> tuple[Jet, Tape]:
    """Run ``program`` on a fresh tape and return the output jet and the tape.

    ``program(tape)`` builds the computation through the tape's methods and
    returns the output node id.  The output jet is reshaped to the shape of
    ``x`` (floats for scalar ``x``).
    """
    tape = Tape(params, x)
    out = program(tape)
    tape.output = out
    jet = tape.jet(out)
    return _shape_like(jet, tape.x_shape), tape


def tape_backward(tape: Tape, seed, output: int | None = None) -> Gradients:
    """Gradient of a scalar ``L`` given ``seed = (dL/dv, dL/dd1, dL/dd2)`` at the output.

    Seeds may be scalars or per-sample arrays.  Samples whose contributions
    are non-finite are flagged in ``Gradients.bad`` and contribute zero.
    """
    node = tape.output if output is None else output
    out_shape = tape.shape(node)
    seed = tuple(np.reshape(np.asarray(s, dtype=float), (-1,)) if np.ndim(s) else float(s) for s in seed)
    seed = tuple(np.broadcast_to(s, out_shape) for s in seed)
    return tape.backward(node, seed)


def _shape_like(jet: Jet, shape: tuple) -> Jet:
    def fix(c):
        c = np.asarray(c)
        if c.size == int(np.prod(shape)):
            c = c.reshape(shape)
            return float(c) if shape == () else c
        return c

    return Jet(fix(jet.v), fix(jet.d1), fix(jet.d2))
