"""Problem encodings and the training loss.

Every problem is a residual ``g(x, y, y1, y2)`` that should vanish for the
unknown function ``y = f(x)``, plus point constraints on ``f``, ``f'`` or
``f''``.  The loss is

    Err = mean_batch g(x, f, f', f'')**2 + lam * sum_i (f^(n_i)(x_i) - y_i)**2
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, tape_backward, tape_forward
from .expr import Constant, Expr, Variable, differentiate, evaluate, free_variables, parse, simplify, substitute
from .tree import SflConfig, SflParams, build_program

KINDS = ("ode", "integrate", "functional", "inverse", "root", "regression")
RESIDUAL_CLIP = 1e6

_ALLOWED_TOKENS = {
    "ode": {"x", "y", "y1", "y2"},
    "functional": {"x", "y"},
    "integrate": {"x"},
    "inverse": {"x"},
    "root": {"x"},
    "regression": {"x"},
}


@dataclass(frozen=True)
class Constraint:
    """``f^(order)(x) = value``."""

    x: float
    order: int
    value: float

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise ValueError(f"constraint order must be 0, 1 or 2, got {self.order}")


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    residual: Expr
    domain: tuple
    exclusions: tuple = ()
    constraints: tuple = ()
    lam: float = 1.0
    aux: Expr | None = None
    partials: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        a, b = (float(v) for v in self.domain)
        if not a < b:
            raise ValueError(f"domain must satisfy a < b, got [{a}, {b}]")
        object.__setattr__(self, "domain", (a, b))
        excl = tuple((float(lo), float(hi)) for lo, hi in self.exclusions)
        for lo, hi in excl:
            if not (a <= lo < hi <= b):
                raise ValueError(f"exclusion ({lo}, {hi}) must be a nonempty subinterval of the domain")
        object.__setattr__(self, "exclusions", excl)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        unknown = free_variables(self.residual) - {"x", "y", "y1", "y2"}
        if unknown:
            raise ValueError(f"residual uses unsupported tokens {sorted(unknown)}")
        if self.kind == "regression" and not self.constraints:
            raise ValueError("regression tasks need at least one data point (constraint)")
        partials = tuple(simplify(differentiate(self.residual, v)) for v in ("y", "y1", "y2"))
        object.__setattr__(self, "partials", partials)

    @property
    def order(self) -> int:
        """Highest derivative of the unknown appearing in the residual."""
        names = free_variables(self.residual)
        return 2 if "y2" in names else 1 if "y1" in names else 0


def make_task(
    kind: str,
    text: str | None = None,
    domain=(0.0, 1.0),
    constraints=(),
    lam: float = 1.0,
    exclusions=(),
) -> TaskSpec:
    """Build a task from a formula.

    ``text`` is ``g`` for ``ode``/``functional`` and ``p`` for the other kinds:
    integrate ``y1 - p(x)``, inverse ``x - p(y)``, root ``p(y)``, regression
    ``0`` (``p`` optional, kept as reference).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown task kind {kind!r}")
    constraints = tuple(c if isinstance(c, Constraint) else Constraint(*c) for c in constraints)
    expr = None
    if text is not None:
        expr = parse(text) if isinstance(text, str) else text
        bad = free_variables(expr) - _ALLOWED_TOKENS[kind]
        if bad:
            raise ValueError(f"tokens {sorted(bad)} are not allowed in a {kind} task")
    elif kind != "regression":
        raise ValueError(f"a {kind} task needs an expression")
    y = Variable("y")
    if kind in ("ode", "functional"):
        residual, aux = expr, None
    elif kind == "integrate":
        residual, aux = Variable("y1") - expr, expr
    elif kind == "inverse":
        residual, aux = Variable("x") - substitute(expr, {"x": y}), expr
    elif kind == "root":
        residual, aux = substitute(expr, {"x": y}), expr
    else:
        residual, aux = Constant(0.0), expr
    return TaskSpec(kind, residual, domain, tuple(exclusions), constraints, lam, aux)


def lane_emden_task(m: int, domain=(0.1, 4.0), lam: float = 1.0) -> TaskSpec:
    """``y'' + (2/x) y' + y^m = 0`` with ``y(0) = 1``, ``y'(0) = 0``."""
    return make_task("ode", f"y2 + (2/x)*y1 + y^{m}", domain, [(0.0, 0, 1.0), (0.0, 1, 0.0)], lam)


def regression_task(xs, ys, domain=None, lam: float = 1.0, reference: str | Expr | None = None) -> TaskSpec:
    """Fit data points, passed to the loss as order-0 constraints."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if domain is None:
        lo, hi = float(xs.min()), float(xs.max())
        domain = (lo, hi) if lo < hi else (lo - 1.0, hi + 1.0)
    cons = [Constraint(float(a), 0, float(b)) for a, b in zip(xs, ys)]
    return make_task("regression", reference, domain, cons, lam)


def residual_at(task: TaskSpec, x, fjet) -> tuple:
    """Residual value and its partials with respect to ``(y, y1, y2)``.

    Returns ``(r, (dr/dy, dr/dy1, dr/dy2))`` as arrays over ``x``; the
    partials are what the backward pass needs to reach the model weights.
    """
    env = {"y": fjet.v, "y1": fjet.d1, "y2": fjet.d2}
    r = evaluate(task.residual, x, **env)
    partials = tuple(evaluate(p, x, **env) for p in task.partials)
    return r, partials


def sample_domain(task: TaskSpec, n: int, rng) -> np.ndarray:
    """``n`` i.i.d. uniform points on the domain minus the exclusion intervals."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a, b = task.domain
    _check_coverage(task)
    rng = np.random.default_rng(rng)
    out = np.empty(0)
    while out.size < n:
        draw = rng.uniform(a, b, size=max(2 * (n - out.size), 16))
        keep = np.ones(draw.shape, dtype=bool)
        for lo, hi in task.exclusions:
            keep &= ~((draw > lo) & (draw < hi))
        out = np.concatenate([out, draw[keep]])
    return out[:n]


def _check_coverage(task: TaskSpec) -> None:
    a, b = task.domain
    reach = a
    for lo, hi in sorted(task.exclusions):
        if lo > reach:
            return
        reach = max(reach, hi)
    if reach < b:
        return
    raise ValueError("exclusion intervals cover the whole domain")


@dataclass
class LossResult:
    err: float
    l1: float
    l2: float
    grads: dict
    n_bad: int

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.err))


def loss(
    task: TaskSpec,
    params: SflParams,
    cfg: SflConfig,
    mode: str,
    batch,
    with_constraints: bool = True,
    lam: float | None = None,
) -> LossResult:
    """``Err = L1 + lam * L2`` and its gradient with respect to every weight.

    Batch and constraint points share one tape; each column gets its own
    adjoint seed.  Residuals are clipped to ``RESIDUAL_CLIP`` in magnitude.
    Samples with non-finite values are left out of both the loss and the
    gradient; if every sample is non-finite the loss is NaN.
    """
    lam = task.lam if lam is None else lam
    batch = np.asarray(batch, dtype=float).reshape(-1)
    cons = task.constraints if with_constraints else ()
    if batch.size == 0 and not cons:
        raise ValueError("need batch points or constraints")
    cx = np.array([c.x for c in cons], dtype=float)
    xs = np.concatenate([batch, cx])
    jet, tape = tape_forward(build_program(cfg, mode), params.arrays, xs)
    nb = batch.size

    seeds = [np.zeros(xs.size) for _ in range(3)]
    ok = np.ones(xs.size, dtype=bool)
    l1 = 0.0
    if nb:
        with np.errstate(all="ignore"):
            r, dr = residual_at(task, batch, _slice(jet, slice(0, nb)))
        good = np.isfinite(r) & np.all([np.isfinite(d) for d in dr], axis=0)
        ok[:nb] = good
        rc = np.clip(np.where(good, r, 0.0), -RESIDUAL_CLIP, RESIDUAL_CLIP)
        n_good = max(int(good.sum()), 1)
        l1 = float(np.sum(rc**2) / n_good)
        for c in range(3):
            seeds[c][:nb] = np.where(good, 2.0 * rc * np.nan_to_num(dr[c]) / n_good, 0.0)
    l2 = 0.0
    for j, con in enumerate(cons):
        col = nb + j
        value = jet.component(con.order)[col]
        diff = value - con.value
        if not np.isfinite(diff):
            ok[col] = False
            continue
        diff = float(np.clip(diff, -RESIDUAL_CLIP, RESIDUAL_CLIP))
        l2 += diff**2
        seeds[con.order][col] = 2.0 * lam * diff

    grads = tape_backward(tape, seeds)
    bad = grads.bad | ~ok
    err = l1 + lam * l2 if ok.any() else float("nan")
    return LossResult(float(err), l1, l2, grads.grads, int(bad.sum()))


def _slice(jet, sl):
    from .autodiff import Jet

    return Jet(jet.v[sl], jet.d1[sl], jet.d2[sl])


def expression_loss(task: TaskSpec, expr: Expr, xs, lam: float | None = None) -> tuple:
    """``(Err, L1, L2)`` of a fixed expression using exact symbolic derivatives."""
    lam = task.lam if lam is None else lam
    d1 = differentiate(expr)
    d2 = differentiate(d1)
    derivs = (expr, d1, d2)
    xs = np.asarray(xs, dtype=float)
    l1 = 0.0
    if xs.size:
        env = {"y": evaluate(expr, xs), "y1": evaluate(d1, xs), "y2": evaluate(d2, xs)}
        r = evaluate(task.residual, xs, **env)
        l1 = float(np.mean(r**2))
    l2 = 0.0
    for con in task.constraints:
        l2 += (evaluate(derivs[con.order], con.x) - con.value) ** 2
    err = l1 + lam * l2
    return float(err), float(l1), float(l2)
