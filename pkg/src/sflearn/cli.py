"""Command-line interface: ``solve``, ``eval`` and ``plot``.

Exit codes: 0 success, 1 bad input, 2 every restart diverged.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .evaluate import antideriv_error, curve_rows, erf_check, residual_error, write_curve_csv
from .expr import ParseError, evaluate, free_variables, from_dict, parse, to_dict, to_string
from .tasks import Constraint, TaskSpec, make_task
from .trainer import RunResult, TrainConfig, solve
from .tree import SflConfig

THREADS_ENV = "SFLEARN_THREADS"
CURVE_POINTS = 1000

TASK_KEYS = {"kind", "g", "p", "domain", "exclusions", "constraints", "lambda"}
MODEL_KEYS = {"depth", "unary_ops", "binary_ops", "delta", "sigma"}
TRAIN_KEYS = {
    "restarts", "iterations", "soft_fraction", "pool_size", "batch_size", "validation_size",
    "step_size", "base_seed", "full_batch", "early_stop",
}
METRIC_KEYS = {"residual_error", "antideriv_error"}
TOP_KEYS = {"task", "model", "train", "metrics"}


class SpecError(ValueError):
    """Invalid run-spec document; the message starts with the offending key."""


def _check_keys(doc, allowed: set, where: str) -> None:
    if not isinstance(doc, dict):
        raise SpecError(f"{where}: expected an object")
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise SpecError(f"{where}.{unknown[0]}: unknown key" if where else f"{unknown[0]}: unknown key")


def _interval(value, where: str) -> tuple:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise SpecError(f"{where}: expected [a, b]")
    try:
        a, b = float(value[0]), float(value[1])
    except (TypeError, ValueError):
        raise SpecError(f"{where}: expected two numbers") from None
    if not a < b:
        raise SpecError(f"{where}: must satisfy a < b, got [{a:g}, {b:g}]")
    return a, b


def task_from_doc(doc: dict) -> TaskSpec:
    _check_keys(doc, TASK_KEYS, "task")
    kind = doc.get("kind")
    if kind is None:
        raise SpecError("task.kind: missing")
    text_key = "g" if kind in ("ode", "functional") else "p"
    other = "p" if text_key == "g" else "g"
    if other in doc:
        raise SpecError(f"task.{other}: not used by kind {kind!r} (use {text_key!r})")
    domain = _interval(doc.get("domain", [0.0, 1.0]), "task.domain")
    exclusions = [_interval(e, f"task.exclusions[{i}]") for i, e in enumerate(doc.get("exclusions", []))]
    constraints = []
    for i, c in enumerate(doc.get("constraints", [])):
        where = f"task.constraints[{i}]"
        _check_keys(c, {"x", "order", "value"}, where)
        try:
            constraints.append(Constraint(float(c["x"]), int(c.get("order", 0)), float(c["value"])))
        except KeyError as err:
            raise SpecError(f"{where}.{err.args[0]}: missing") from None
        except (TypeError, ValueError) as err:
            raise SpecError(f"{where}: {err}") from None
    lam = doc.get("lambda", 1.0)
    try:
        lam = float(lam)
    except (TypeError, ValueError):
        raise SpecError("task.lambda: expected a number") from None
    if lam < 0:
        raise SpecError("task.lambda: must be >= 0")
    try:
        return make_task(kind, doc.get(text_key), domain, constraints, lam, exclusions)
    except ParseError as err:
        raise SpecError(f"task.{text_key}: {err}") from None
    except ValueError as err:
        msg = str(err)
        key = "kind" if "kind" in msg else "exclusions" if "exclusion" in msg else text_key
        raise SpecError(f"task.{key}: {msg}") from None


def model_from_doc(doc: dict) -> SflConfig:
    _check_keys(doc, MODEL_KEYS, "model")
    kwargs = {}
    for key, field in (("depth", "depth"), ("delta", "delta"), ("sigma", "sigma")):
        if key in doc and doc[key] is not None:
            kwargs[field] = doc[key]
    if "unary_ops" in doc:
        kwargs["unary"] = tuple(doc["unary_ops"])
    if "binary_ops" in doc:
        kwargs["binary"] = tuple(doc["binary_ops"])
    try:
        return SflConfig(**kwargs)
    except (TypeError, ValueError) as err:
        msg = str(err)
        key = next((k for k in ("depth", "delta", "sigma") if k in msg), None)
        if key is None:
            key = "unary_ops" if "unary" in msg or "identity" in msg else "binary_ops"
        raise SpecError(f"model.{key}: {msg}") from None


def train_from_doc(doc: dict, lam: float) -> TrainConfig:
    _check_keys(doc, TRAIN_KEYS, "train")
    kwargs = dict(doc)
    try:
        return TrainConfig(lam=lam, **kwargs)
    except (TypeError, ValueError) as err:
        msg = str(err)
        key = next((k for k in sorted(TRAIN_KEYS, key=len, reverse=True) if k in msg), "")
        raise SpecError(f"train.{key}: {msg}" if key else f"train: {msg}") from None


def load_spec(doc: dict) -> tuple:
    """``(task, model, train, metrics)`` from a run-spec document."""
    _check_keys(doc, TOP_KEYS, "")
    if "task" not in doc:
        raise SpecError("task: missing")
    task = task_from_doc(doc["task"])
    model = model_from_doc(doc.get("model", {}))
    train = train_from_doc(doc.get("train", {}), task.lam)
    metrics = doc.get("metrics", {})
    _check_keys(metrics, METRIC_KEYS, "metrics")
    metrics = {k: [_interval(v, f"metrics.{k}[{i}]") for i, v in enumerate(vals)] for k, vals in metrics.items()}
    if "antideriv_error" in metrics and task.kind != "integrate":
        raise SpecError("metrics.antideriv_error: only for integrate tasks")
    return task, model, train, metrics


def echo_spec(doc: dict, model: SflConfig, train: TrainConfig) -> dict:
    """The input document with every model/train default filled in."""
    out = json.loads(json.dumps(doc))
    out["model"] = {
        "depth": model.depth, "unary_ops": list(model.unary), "binary_ops": list(model.binary),
        "delta": model.delta, "sigma": model.sigma,
    }
    out["train"] = {k: getattr(train, k) for k in sorted(TRAIN_KEYS)}
    return out


def _num(v):
    return v if v is None or math.isfinite(v) else None


def compute_metrics(expr, task: TaskSpec, metrics: dict) -> dict:
    out = {}
    for name, intervals in metrics.items():
        rows = []
        for a, b in intervals:
            if name == "residual_error":
                value = residual_error(expr, task, a, b)
            else:
                value = antideriv_error(expr, task.aux, a, b)
            rows.append({"interval": [a, b], "value": _num(value)})
        out[name] = rows
    return out


def result_doc(spec: dict, result: RunResult, metrics: dict, wall_time: float | None) -> dict:
    restarts = []
    for r in result.restarts:
        restarts.append({
            "seed": r.seed,
            "expression": to_string(r.expression, 12),
            "display": r.text,
            "validation_err": _num(r.validation_err),
            "diverged": r.diverged,
            "iterations_run": r.iterations_run,
            "loss_curve": [{**p, "err": _num(p["err"])} for p in r.loss_curve],
            "params": [
                {"layer": layer, "node": node, "field": field, "value": value}
                for layer, node, field, value in r.params.records()
            ],
        })
    doc = {"tool": "sflearn", "version": __version__, "spec": spec}
    if result.failed:
        doc["status"] = "diverged"
        doc["best"] = None
    else:
        best = result.best
        doc["status"] = "ok"
        doc["best"] = {
            "index": result.best_index,
            "expression": to_string(best.expression, 12),
            "display": best.text,
            "tree": to_dict(best.expression),
            "validation_err": _num(best.validation_err),
        }
    doc["metrics"] = metrics
    doc["restarts"] = restarts
    if wall_time is not None:
        doc["wall_time"] = wall_time
    return doc


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv_atomic(path, rows) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write_curve_csv(tmp, rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise SpecError(f"cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise SpecError(f"{path}: not valid JSON ({err.msg} at line {err.lineno})") from None


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def cmd_solve(args) -> int:
    doc = _read_json(args.spec)
    task, model, train, metrics = load_spec(doc)
    if args.progress:
        train = TrainConfig(**{**train.__dict__, "progress": True})
    threads = args.threads if args.threads is not None else _default_threads()
    start = time.perf_counter()
    result = solve(task, model, train, threads=threads)
    wall = time.perf_counter() - start if args.timing else None
    if not metrics:
        metrics = {"residual_error": [task.domain]} if task.kind != "regression" else {}
    metric_values = {} if result.failed else compute_metrics(result.best_expression, task, metrics)
    out = result_doc(echo_spec(doc, model, train), result, metric_values, wall)
    write_atomic(args.out, json.dumps(out, indent=1, sort_keys=False) + "\n")
    if result.failed:
        print("all restarts diverged", file=sys.stderr)
        return 2
    if args.csv:
        write_csv_atomic(args.csv, curve_rows(result.best_expression, task, CURVE_POINTS))
    print(f"best: {result.best_text}  validation_err={result.best_validation_err:.6g}")
    for name, rows in metric_values.items():
        for row in rows:
            a, b = row["interval"]
            v = row["value"]
            print(f"{name} [{a:g}, {b:g}]: {'nan' if v is None else format(v, '.6g')}")
    return 0


def _parse_args_kv(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise SpecError(f"--args: expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _float_arg(kv: dict, key: str, default=None) -> float:
    if key not in kv:
        if default is None:
            raise SpecError(f"--args: {key}= is required")
        return default
    try:
        return _eval_number(kv[key])
    except (ValueError, ParseError):
        raise SpecError(f"--args: {key} must be a number") from None


def _eval_number(text: str) -> float:
    """Constant expression such as ``pi`` or ``-2*pi``."""
    e = parse(text)
    if free_variables(e):
        raise ValueError(text)
    return float(evaluate(e, 0.0))


def cmd_eval(args) -> int:
    expr = parse(args.expr)
    kv = _parse_args_kv(args.args)
    panels = int(kv.pop("panels", 2000))
    if args.task:
        doc = _read_json(args.task)
        task_doc = doc.get("task", doc) if isinstance(doc, dict) else doc
        task = task_from_doc(task_doc)
        a = _float_arg(kv, "a", task.domain[0])
        b = _float_arg(kv, "b", task.domain[1])
        if task.kind == "integrate":
            value = antideriv_error(expr, task.aux, a, b, panels, kv.get("offset", "anchor"))
        else:
            value = residual_error(expr, task, a, b, panels)
    elif args.metric == "residual":
        if "m" in kv:
            g = f"y2 + (2/x)*y1 + y^{int(kv['m'])}"
        elif "g" in kv:
            g = kv["g"]
        else:
            raise SpecError("--args: residual needs g=... or m=...")
        task = make_task("ode", g, (_float_arg(kv, "a"), _float_arg(kv, "b")))
        value = residual_error(expr, task, _float_arg(kv, "a"), _float_arg(kv, "b"), panels)
    elif args.metric == "antideriv":
        if "integrand" not in kv:
            raise SpecError("--args: antideriv needs integrand=...")
        value = antideriv_error(expr, parse(kv["integrand"]), _float_arg(kv, "a"), _float_arg(kv, "b"),
                                panels, kv.get("offset", "anchor"))
    elif args.metric == "erf":
        value = erf_check(expr, _float_arg(kv, "a", -1.0), _float_arg(kv, "b", 3.0), panels,
                          kv.get("offset", "anchor"))
    else:
        raise SpecError("eval: give --task or --metric")
    print(f"{value:.6g}")
    return 0


def cmd_plot(args) -> int:
    if args.input:
        doc = _read_json(args.input)
        if not isinstance(doc, dict) or "spec" not in doc:
            raise SpecError(f"{args.input}: not a result document")
        if doc.get("best") is None:
            raise SpecError(f"{args.input}: result has no best expression")
        expr = from_dict(doc["best"]["tree"])
        task = task_from_doc(doc["spec"]["task"])
    else:
        if not args.expr or not args.task:
            raise SpecError("plot: give --in, or --expr with --task")
        expr = parse(args.expr)
        tdoc = _read_json(args.task)
        task = task_from_doc(tdoc.get("task", tdoc))
    domain = None
    if args.domain:
        domain = _interval(args.domain, "--domain")
    write_csv_atomic(args.csv, curve_rows(expr, task, args.points, domain))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sflearn", description="Learn symbolic solutions of equations.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="train on a run-spec and write a result document")
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--csv")
    s.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")
    s.add_argument("--progress", action="store_true", help="print one line per 100 iterations")
    s.add_argument("--timing", action="store_true", help="record wall time (output no longer byte-stable)")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("eval", help="error metric of a fixed expression")
    e.add_argument("--expr", required=True)
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--task", help="task or run-spec document")
    g.add_argument("--metric", choices=("residual", "antideriv", "erf"))
    e.add_argument("--args", nargs="*", metavar="KEY=VALUE",
                   help="a=, b=, panels=, g= or m= (residual), integrand= (antideriv), offset=")
    e.set_defaults(func=cmd_eval)

    q = sub.add_parser("plot", help="write curve CSV for a result or an expression")
    q.add_argument("--in", dest="input")
    q.add_argument("--expr")
    q.add_argument("--task")
    q.add_argument("--csv", required=True)
    q.add_argument("--points", type=int, default=CURVE_POINTS)
    q.add_argument("--domain", nargs=2, type=float, metavar=("A", "B"))
    q.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, ParseError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
