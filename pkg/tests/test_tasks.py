import math

import numpy as np
import pytest

from sflearn.autodiff import Jet
from sflearn.expr import parse, to_string
from sflearn.tasks import (
    Constraint,
    expression_loss,
    lane_emden_task,
    loss,
    make_task,
    regression_task,
    residual_at,
    sample_domain,
)
from sflearn.tree import SflConfig, SflParams

TRUE = {0: "1 - x^2/6", 1: "sin(x)/x", 5: "1/sqrt(1 + x^2/3)"}


def jet_of(text, x):
    from sflearn.expr import differentiate, evaluate

    e = parse(text)
    d1 = differentiate(e)
    return Jet(evaluate(e, x), evaluate(d1, x), evaluate(differentiate(d1), x))


def test_make_task_encodings():
    t = make_task("integrate", "exp(-(x^2))", (-2, 2))
    assert to_string(t.residual) == "y1 - exp(-x^2)"
    t = make_task("inverse", "x^3 + x + 1", (-2, 2))
    assert to_string(t.residual) == "x - (y^3 + y + 1.000)"
    t = make_task("ode", "y2 + (2/x)*y1 + y^2", (0.1, 4))
    assert to_string(t.residual) == "y2 + 2.000/x*y1 + y^2"
    assert to_string(make_task("root", "x^2 - 2", (0, 2)).residual) == "y^2 - 2.000"
    assert to_string(make_task("functional", "y - x*x", (0, 1)).residual) == "y - x*x"
    assert to_string(regression_task([0.0], [1.0]).residual) == "0"


def test_make_task_rejects_bad_input():
    with pytest.raises(ValueError):
        make_task("integrate", "y1 + x", (0, 1))
    with pytest.raises(ValueError):
        make_task("ode", "y2 + y", (1, 0))
    with pytest.raises(ValueError):
        make_task("regression", None, (0, 1))
    with pytest.raises(ValueError):
        make_task("bogus", "x", (0, 1))
    with pytest.raises(ValueError):
        make_task("ode", "y2", (0, 1), exclusions=[(0.5, 2.0)])
    with pytest.raises(ValueError):
        Constraint(0.0, 3, 1.0)
    with pytest.raises(ValueError):
        make_task("ode", "y2 + ", (0, 1))


@pytest.mark.parametrize("m", [0, 1, 5])
def test_true_solutions_have_zero_residual(m):
    task = lane_emden_task(m)
    xs = np.linspace(0.3, 9.0, 200)
    r, _ = residual_at(task, xs, jet_of(TRUE[m], xs))
    assert np.mean(r**2) < 1e-10
    assert expression_loss(task, parse(TRUE[m]), xs)[1] < 1e-10


def test_m5_at_one():
    # closed-form jet of (1 + x^2/3)^(-1/2); the parsed sqrt carries a 1e-9 guard
    x = 1.0
    u = 1 + x * x / 3
    jet = Jet(u**-0.5, -(x / 3) * u**-1.5, -(1 / 3) * u**-1.5 + (x * x / 3) * u**-2.5)
    r, _ = residual_at(lane_emden_task(5), x, jet)
    assert abs(r) < 1e-10


def test_integrate_residual():
    t = make_task("integrate", "cos(x)", (0, 3))
    x = 0.7
    r, _ = residual_at(t, x, Jet(math.sin(x), math.cos(x), -math.sin(x)))
    assert r == pytest.approx(0.0, abs=1e-15)


def test_residual_partials():
    t = lane_emden_task(2)
    x, j = 2.0, Jet(0.5, -0.3, 0.1)
    _, (dy, dy1, dy2) = residual_at(t, x, j)
    assert dy == pytest.approx(2 * 0.5)
    assert dy1 == pytest.approx(2 / x)
    assert dy2 == pytest.approx(1.0)


def constant_model(c):
    """depth-1 tree whose root is the constant ``c`` (w=0, b=c)."""
    cfg = SflConfig(depth=1, unary=("identity",), binary=("mul",))
    arrays = {k: np.zeros(s) for k, s in cfg.param_shapes().items()}
    arrays["b1"][:] = c
    return SflParams(arrays), cfg


def quadratic_model(a, c):
    """``c + a*x*x``."""
    cfg = SflConfig(depth=1, unary=("identity",), binary=("mul",))
    arrays = {k: np.zeros(s) for k, s in cfg.param_shapes().items()}
    arrays["leaf_w"][:] = 1.0
    arrays["omega1"][0] = [0.0, 40.0]
    arrays["w1"][:] = a
    arrays["b1"][:] = c
    return SflParams(arrays), cfg


def test_loss_examples():
    t = regression_task([0.0], [1.0])
    p, cfg = constant_model(1.0)
    assert loss(t, p, cfg, "discrete", []).err == 0.0
    t = lane_emden_task(0)
    p, cfg = quadratic_model(-1 / 6, 1.0)
    res = loss(t, p, cfg, "discrete", sample_domain(t, 64, 0))
    assert res.err == pytest.approx(0.0, abs=1e-24)
    p, cfg = quadratic_model(-0.166, 1.0)
    t_free = make_task("ode", "y2 + (2/x)*y1 + y^0", (1, 5))
    res = loss(t_free, p, cfg, "discrete", np.linspace(1, 5, 101), with_constraints=False)
    assert res.err == pytest.approx(0.004**2, rel=1e-9)
    assert res.l1 == pytest.approx(1.6e-5, rel=1e-9)


def test_lambda_scaling():
    t = lane_emden_task(1)
    p, cfg = quadratic_model(-0.2, 1.1)
    xs = np.linspace(0.2, 3.9, 30)
    e1 = loss(t, p, cfg, "discrete", xs, lam=1.0)
    e2 = loss(t, p, cfg, "discrete", xs, lam=2.0)
    assert e2.err - e1.err == pytest.approx(e1.l2, rel=1e-12)


def test_constraints_outside_domain_count():
    t = lane_emden_task(0)
    assert min(c.x for c in t.constraints) < t.domain[0]
    p, cfg = quadratic_model(-1 / 6, 1.5)
    res = loss(t, p, cfg, "discrete", np.linspace(0.2, 3.9, 10))
    assert res.l2 == pytest.approx(0.25)


def test_all_nonfinite_batch_gives_nan():
    t = make_task("ode", "y2 + exp(1000*y)", (0, 1))
    p, cfg = constant_model(5.0)
    res = loss(t, p, cfg, "discrete", np.linspace(0, 1, 8))
    assert not res.finite


def test_sample_domain():
    t = make_task("ode", "y2 + y", (0, 1))
    xs = sample_domain(t, 5000, 1)
    assert xs.min() >= 0 and xs.max() <= 1 and abs(xs.mean() - 0.5) < 0.02
    assert np.array_equal(xs, sample_domain(t, 5000, 1))
    assert sample_domain(lane_emden_task(0), 5000, 2).min() >= 0.1


def test_sample_domain_exclusions():
    t = make_task("ode", "y2 + y", (0, 1), exclusions=[(0.2, 0.5), (0.45, 0.6)])
    xs = sample_domain(t, 2000, 3)
    assert not np.any((xs > 0.2) & (xs < 0.6))
    full = make_task("ode", "y2 + y", (0, 1), exclusions=[(0.0, 0.6), (0.5, 1.0)])
    with pytest.raises(ValueError):
        sample_domain(full, 10, 0)
