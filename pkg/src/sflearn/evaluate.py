"""Error metrics on fixed expressions and numeric reference solutions.

All integrals use composite Simpson on ``panels`` equal panels.  Metrics
work on extracted formulas with exact symbolic derivatives, never on the
gated network.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expr import Expr, differentiate, evaluate, parse
from .tasks import TaskSpec, make_task

DEFAULT_PANELS = 2000
NUDGE = 1e-9
_SQRT2 = math.sqrt(2.0)


class NonFiniteWarning(RuntimeWarning):
    """A metric integrand was non-finite at a grid point and the point was nudged."""


def _as_fn(f) -> Callable:
    if isinstance(f, str):
        f = parse(f)
    if isinstance(f, Expr):
        e = f
        return lambda x: evaluate(e, x)
    return f


def _check_panels(panels: int) -> None:
    if panels < 2 or panels % 2:
        raise ValueError(f"panel count must be even and >= 2, got {panels}")


def simpson_weights(panels: int) -> np.ndarray:
    _check_panels(panels)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def simpson(fn, a: float, b: float, panels: int = DEFAULT_PANELS) -> float:
    """Composite Simpson estimate of ``int_a^b fn``."""
    if not a < b:
        raise ValueError("need a < b")
    xs = np.linspace(a, b, panels + 1)
    h = (b - a) / panels
    ys = np.asarray(_as_fn(fn)(xs), dtype=float) * np.ones_like(xs)
    return float(h * np.dot(simpson_weights(panels), ys))


def cumulative_simpson(ys, h: float) -> np.ndarray:
    """Running integral from the first grid point, at every point of a uniform grid.

    Even nodes get plain composite Simpson; odd nodes add the three-point
    rule for a single interval, ``h/12 * (5 f0 + 8 f1 - f2)``.
    """
    ys = np.asarray(ys, dtype=float)
    n = ys.size
    if n < 3:
        raise ValueError("need at least three grid points")
    out = np.zeros(n)
    pair = h / 3.0 * (ys[0:-2:2] + 4.0 * ys[1:-1:2] + ys[2::2])
    out[2::2] = np.cumsum(pair)
    odd = np.arange(1, n, 2)
    inner = odd[odd + 1 < n]
    out[inner] = out[inner - 1] + h / 12.0 * (5.0 * ys[inner - 1] + 8.0 * ys[inner] - ys[inner + 1])
    if n % 2 == 0:
        # last node has no right neighbour: same rule mirrored
        j = n - 1
        out[j] = out[j - 1] + h / 12.0 * (-ys[j - 2] + 8.0 * ys[j - 1] + 5.0 * ys[j])
    return out


def normal_cdf(x):
    """Standard normal CDF via the complementary error function."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * np.vectorize(math.erfc)(-x / _SQRT2)
    return float(out) if out.ndim == 0 else out


def _guarded(values_at: Callable, xs: np.ndarray, what: str) -> np.ndarray:
    with np.errstate(all="ignore"):
        ys = np.asarray(values_at(xs), dtype=float) * np.ones_like(xs)
        bad = ~np.isfinite(ys)
        if bad.any():
            warnings.warn(f"{what}: non-finite integrand at {int(bad.sum())} grid point(s); nudged by {NUDGE}",
                          NonFiniteWarning, stacklevel=3)
            ys[bad] = np.asarray(values_at(xs[bad] + NUDGE), dtype=float)
    return ys


def residual_values(expr: Expr, task: TaskSpec, xs) -> np.ndarray:
    """``g(x, f, f', f'')`` with ``f`` given by ``expr`` and exact symbolic derivatives."""
    d1 = differentiate(expr)
    d2 = differentiate(d1)
    xs = np.asarray(xs, dtype=float)
    env = {"y": evaluate(expr, xs), "y1": evaluate(d1, xs), "y2": evaluate(d2, xs)}
    return np.asarray(evaluate(task.residual, xs, **env), dtype=float) * np.ones_like(xs)


def residual_error(expr: Expr | str, task: TaskSpec, a: float, b: float, panels: int = DEFAULT_PANELS) -> float:
    """``int_a^b |g(x, f(x), f'(x), f''(x))|^2 dx``."""
    expr = parse(expr) if isinstance(expr, str) else expr
    xs = np.linspace(a, b, panels + 1)
    ys = _guarded(lambda t: residual_values(expr, task, t) ** 2, xs, "residual_error")
    return float((b - a) / panels * np.dot(simpson_weights(panels), ys))


OFFSETS = ("anchor", "mean", "none")


def _align(diff: np.ndarray, fhat_at_0: float, ref_at_0: float, offset: str) -> np.ndarray:
    if offset == "anchor":
        return diff - (fhat_at_0 - ref_at_0)
    if offset == "mean":
        return diff - diff.mean()
    if offset == "none":
        return diff
    raise ValueError(f"offset must be one of {OFFSETS}")


def antiderivative_reference(integrand, xs: np.ndarray) -> np.ndarray:
    """``int_0^x integrand`` on a uniform grid ``xs`` by running Simpson from ``xs[0]``."""
    fn = _as_fn(integrand)
    h = xs[1] - xs[0]
    ys = _guarded(fn, xs, "antiderivative")
    run = cumulative_simpson(ys, h)
    a = xs[0]
    if a == 0.0:
        return run
    lo, hi = (a, 0.0) if a < 0 else (0.0, a)
    # even panel count keeps the anchor integral on the same accuracy footing
    n = max(2, 2 * math.ceil(abs(a) / h / 2))
    anchor = simpson(lambda t: _guarded(fn, t, "antiderivative"), lo, hi, n)
    return run + (anchor if a > 0 else -anchor)


def antideriv_error(fhat: Expr | str, integrand, a: float, b: float, panels: int = DEFAULT_PANELS,
                    offset: str = "anchor") -> float:
    """``1/(b-a) int_a^b (int_0^x f(t) dt - Fhat(x))^2 dx`` up to the constant of integration.

    ``offset="anchor"`` shifts ``Fhat`` so ``Fhat(0)`` is 0 (the reference's
    value there), ``"mean"`` removes the mean difference over the grid and
    ``"none"`` compares as is.
    """
    fhat = parse(fhat) if isinstance(fhat, str) else fhat
    xs = np.linspace(a, b, panels + 1)
    ref = antiderivative_reference(integrand, xs)
    fx = _guarded(lambda t: evaluate(fhat, t), xs, "antideriv_error")
    diff = _align(fx - ref, float(evaluate(fhat, 0.0)), 0.0, offset)
    return float(np.dot(simpson_weights(panels), diff**2) / panels)


def erf_check(expr, a: float = -1.0, b: float = 3.0, panels: int = DEFAULT_PANELS, offset: str = "anchor") -> float:
    """``int_a^b (expr(x) - Phi(x))^2 dx`` against the standard normal CDF ``Phi``.

    ``expr`` may be an expression, text or a plain callable.  The offset
    modes are those of :func:`antideriv_error`; ``Phi(0) = 1/2`` is the anchor.
    """
    fn = _as_fn(expr)
    xs = np.linspace(a, b, panels + 1)
    ref = normal_cdf(xs)
    fx = _guarded(fn, xs, "erf_check")
    f0 = float(np.asarray(fn(np.array([0.0])), dtype=float).reshape(-1)[0])
    diff = _align(fx - ref, f0, 0.5, offset)
    return float((b - a) / panels * np.dot(simpson_weights(panels), diff**2))


# ---------------------------------------------------------------------------
# ODE reference
# ---------------------------------------------------------------------------

@dataclass
class ReferenceSolution:
    x: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    ypp: np.ndarray
    h: float
    note: str = ""

    def __call__(self, xq):
        """Cubic Hermite interpolation of ``y``; NaN outside the grid."""
        xq = np.asarray(xq, dtype=float)
        i = np.clip(np.searchsorted(self.x, xq, side="right") - 1, 0, self.x.size - 2)
        x0, x1 = self.x[i], self.x[i + 1]
        dx = x1 - x0
        t = (xq - x0) / dx
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        out = h00 * self.y[i] + h10 * dx * self.yp[i] + h01 * self.y[i + 1] + h11 * dx * self.yp[i + 1]
        out = np.where((xq < self.x[0]) | (xq > self.x[-1]), np.nan, out)
        return float(out) if out.ndim == 0 else out


def second_derivative_fn(task: TaskSpec) -> Callable:
    """``G(x, y, y1)`` with ``g(x, y, y1, G) = 0``, solved for ``y2`` by Newton's method."""
    if task.order < 2:
        raise ValueError("the residual does not involve y2")
    resid, dr2 = task.residual, task.partials[2]

    def G(x, y, y1):
        y2 = 0.0
        for _ in range(20):
            r = float(evaluate(resid, x, y=y, y1=y1, y2=y2))
            d = float(evaluate(dr2, x, y=y, y1=y1, y2=y2))
            if d == 0.0:
                raise ValueError("residual cannot be solved for y2 here")
            step = r / d
            y2 -= step
            if abs(step) <= 1e-14 * (1.0 + abs(y2)):
                break
        return y2

    return G


def rk4(G: Callable, x0: float, y0: float, yp0: float, h: float, x_end: float, min_frac: float = 0.0,
        note: str = "") -> ReferenceSolution:
    """Classical RK4 for ``y'' = G(x, y, y')`` from ``x0`` to ``x_end``.

    With ``min_frac > 0`` the step is ``min(h, min_frac * x)`` so the grid
    stays fine near a singular point at the origin.
    """
    if not x_end > x0:
        raise ValueError("need x_end > x0")
    xs, ys, yps = [x0], [y0], [yp0]
    x, y, yp = x0, y0, yp0
    while x < x_end - 1e-12 * max(1.0, abs(x_end)):
        step = h if min_frac <= 0 else min(h, max(min_frac * abs(x), 1e-12))
        step = min(step, x_end - x)
        k1y, k1p = yp, G(x, y, yp)
        k2y, k2p = yp + step / 2 * k1p, G(x + step / 2, y + step / 2 * k1y, yp + step / 2 * k1p)
        k3y, k3p = yp + step / 2 * k2p, G(x + step / 2, y + step / 2 * k2y, yp + step / 2 * k2p)
        k4y, k4p = yp + step * k3p, G(x + step, y + step * k3y, yp + step * k3p)
        y += step / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        yp += step / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        x += step
        xs.append(x)
        ys.append(y)
        yps.append(yp)
    xs, ys, yps = np.array(xs), np.array(ys), np.array(yps)
    ypp = np.array([G(a, b, c) for a, b, c in zip(xs, ys, yps)])
    return ReferenceSolution(xs, ys, yps, ypp, h, note)


def ode_reference(task: TaskSpec, x0: float, y0: float, yp0: float, h: float, x_end: float) -> ReferenceSolution:
    """RK4 reference curve for an ``ode`` task whose residual can be solved for ``y2``."""
    return rk4(second_derivative_fn(task), x0, y0, yp0, h, x_end)


LANE_EMDEN_START = 1e-4


def lane_emden_reference(m: int, x_end: float = 10.0, h: float = 1e-3) -> ReferenceSolution:
    """Solution of ``y'' + (2/x) y' + y^m = 0``, ``y(0)=1``, ``y'(0)=0``.

    Integration starts at ``x0 = 1e-4`` from the series
    ``y = 1 - x^2/6 + m x^4/120``, ``y' = -x/3 + m x^3/30``; near the origin
    steps are capped at ``x/10`` because of the ``2/x`` term.
    """
    x0 = LANE_EMDEN_START

    def G(x, y, yp):
        return -2.0 / x * yp - y**m

    y0 = 1 - x0**2 / 6 + m * x0**4 / 120
    yp0 = -x0 / 3 + m * x0**3 / 30
    return rk4(G, x0, y0, yp0, h, x_end, min_frac=0.1, note=f"series start at x0={x0}")


def lane_emden_m(task: TaskSpec) -> int | None:
    """``m`` if ``task`` is a Lane-Emden problem with the standard initial conditions, else None."""
    if task.kind != "ode":
        return None
    cons = sorted((c.order, c.x, c.value) for c in task.constraints)
    if cons != [(0, 0.0, 1.0), (1, 0.0, 0.0)]:
        return None
    xs = np.array([0.7, 1.3, 2.9])
    probe = {"y": np.array([0.4, -0.8, 1.7]), "y1": np.array([0.3, 1.1, -0.6]), "y2": np.array([-1.2, 0.5, 2.2])}
    r = np.asarray(evaluate(task.residual, xs, **probe))
    base = probe["y2"] + 2 / xs * probe["y1"]
    for m in range(0, 17):
        if np.allclose(r, base + probe["y"] ** m, rtol=1e-12, atol=1e-12):
            return m
    return None


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

def inverse_reference(p: Expr, xs, lo: float = -1e3, hi: float = 1e3, iters: int = 200) -> np.ndarray:
    """``y`` with ``p(y) = x`` for increasing ``p``, by vectorized bisection."""
    xs = np.asarray(xs, dtype=float)
    a = np.full(xs.shape, lo)
    b = np.full(xs.shape, hi)
    sign = 1.0 if float(evaluate(p, hi)) > float(evaluate(p, lo)) else -1.0
    for _ in range(iters):
        mid = 0.5 * (a + b)
        above = sign * (np.asarray(evaluate(p, mid)) - xs) > 0
        b = np.where(above, mid, b)
        a = np.where(above, a, mid)
    return 0.5 * (a + b)


def reference_curve(expr: Expr, task: TaskSpec, xs) -> np.ndarray | None:
    """True curve for the task when one can be computed, else None."""
    xs = np.asarray(xs, dtype=float)
    if task.kind == "ode":
        m = lane_emden_m(task)
        if m is not None:
            return lane_emden_reference(m, x_end=max(float(xs.max()), 2 * LANE_EMDEN_START))(xs)
        init = {(c.order, c.x): c.value for c in task.constraints}
        x0s = {c.x for c in task.constraints}
        if len(x0s) == 1 and task.order == 2:
            x0 = x0s.pop()
            if (0, x0) in init and (1, x0) in init and x0 <= xs.min():
                h = min(1e-3, (xs.max() - x0) / 10) if xs.max() > x0 else 1e-3
                sol = ode_reference(task, x0, init[(0, x0)], init[(1, x0)], h, max(float(xs.max()), x0 + h))
                return sol(xs)
        return None
    if task.kind == "integrate":
        grid_n = 2 * max(1000, xs.size)
        lo, hi = min(float(xs.min()), 0.0), max(float(xs.max()), 0.0)
        if lo == hi:
            return None
        grid = np.linspace(lo, hi, grid_n + 1)
        ref = antiderivative_reference(task.aux, grid)
        # constant of integration: line up with fhat at 0
        return np.interp(xs, grid, ref) + float(evaluate(expr, 0.0))
    if task.kind == "inverse":
        return inverse_reference(task.aux, xs)
    if task.kind == "regression" and task.aux is not None:
        return np.asarray(evaluate(task.aux, xs), dtype=float) * np.ones_like(xs)
    return None


def curve_rows(expr: Expr, task: TaskSpec, points: int = 1000, domain=None) -> list:
    """``(x, f_hat, reference, residual)`` rows on a uniform grid; reference None when unknown."""
    a, b = task.domain if domain is None else domain
    xs = np.linspace(a, b, points)
    with np.errstate(all="ignore"):
        fx = np.asarray(evaluate(expr, xs), dtype=float) * np.ones_like(xs)
        ref = reference_curve(expr, task, xs)
        res = residual_values(expr, task, xs)
    return [(x, f, None if ref is None else r, q) for x, f, r, q in
            zip(xs, fx, ref if ref is not None else [None] * xs.size, res)]


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{float(v):.12g}"


def write_curve_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f_hat", "reference", "residual"])
        for row in rows:
            w.writerow([_fmt(v) for v in row])

