"""Multi-restart training with the soft-to-discrete gate schedule."""

from __future__ import annotations

import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .expr import Expr, to_string
from .tasks import TaskSpec, expression_loss, loss, sample_domain
from .tree import SflConfig, SflParams, extract, init

CURVE_EVERY = 100
DIVERGENCE_STREAK = 50


@dataclass(frozen=True)
class TrainConfig:
    restarts: int = 20
    iterations: int = 6000
    soft_fraction: float = 0.25
    pool_size: int = 5000
    batch_size: int = 512
    validation_size: int = 1024
    step_size: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    base_seed: int = 0
    lam: float | None = None
    full_batch: bool = False
    early_stop: float | None = None
    extract_tol: float = 1e-6
    progress: bool = False

    def __post_init__(self):
        for name in ("restarts", "pool_size", "batch_size", "validation_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 <= self.soft_fraction <= 1.0:
            raise ValueError("soft_fraction must lie in [0, 1]")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.lam is not None and self.lam < 0:
            raise ValueError("lambda must be >= 0")

    @property
    def switch_iteration(self) -> int:
        """First iteration that uses the discrete gate."""
        return math.ceil(self.soft_fraction * self.iterations)


class Adam:
    def __init__(self, params: SflParams, step: float, beta1: float, beta2: float, eps: float):
        self.step, self.beta1, self.beta2, self.eps = step, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.t = 0

    def update(self, params: SflParams, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params.arrays[k] = params.arrays[k] - self.step * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


@dataclass
class RestartRecord:
    index: int
    seed: int
    params: SflParams
    expression: Expr
    validation_err: float
    diverged: bool
    loss_curve: list = field(default_factory=list)
    iterations_run: int = 0

    @property
    def text(self) -> str:
        return to_string(self.expression)


@dataclass
class RunResult:
    restarts: list
    best_index: int | None

    @property
    def failed(self) -> bool:
        return self.best_index is None

    @property
    def best(self) -> RestartRecord | None:
        return None if self.best_index is None else self.restarts[self.best_index]

    @property
    def best_expression(self) -> Expr | None:
        return None if self.best is None else self.best.expression

    @property
    def best_text(self) -> str | None:
        return None if self.best is None else self.best.text

    @property
    def best_validation_err(self) -> float:
        return math.inf if self.best is None else self.best.validation_err


def _streams(seed: int):
    init_ss, train_ss, val_ss = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(s) for s in (init_ss, train_ss, val_ss))


def validation_points(task: TaskSpec, train_cfg: TrainConfig, seed: int) -> np.ndarray:
    """The validation sample of restart ``seed``; independent of the training stream."""
    return sample_domain(task, train_cfg.validation_size, list(_streams(seed))[2])


def train_once(task: TaskSpec, sfl_cfg: SflConfig, train_cfg: TrainConfig, seed: int, index: int = 0) -> RestartRecord:
    """One restart: Adam on ``Err``, soft gates first, then discrete; deterministic in ``seed``."""
    init_rng, train_rng, val_rng = _streams(seed)
    params = init(sfl_cfg, init_rng)
    pool = sample_domain(task, train_cfg.pool_size, train_rng)
    opt = Adam(params, train_cfg.step_size, train_cfg.beta1, train_cfg.beta2, train_cfg.eps)
    switch = train_cfg.switch_iteration
    marks = {switch - 1, switch, train_cfg.iterations - 1}
    curve = []
    streak = 0
    diverged = False
    done = 0
    for it in range(train_cfg.iterations):
        mode = "soft" if it < switch else "discrete"
        if train_cfg.full_batch or train_cfg.batch_size >= pool.size:
            batch = pool
        else:
            batch = pool[train_rng.integers(0, pool.size, train_cfg.batch_size)]
        with np.errstate(all="ignore"):
            res = loss(task, params, sfl_cfg, mode, batch, lam=train_cfg.lam)
        done = it + 1
        if it % CURVE_EVERY == 0 or it in marks:
            curve.append({"iteration": it, "mode": mode, "err": res.err})
            if train_cfg.progress and it % CURVE_EVERY == 0:
                print(f"restart {index} iter {it} mode {mode} err {res.err:.6g}", file=sys.stdout, flush=True)
        finite_grads = all(np.all(np.isfinite(g)) for g in res.grads.values())
        if not (res.finite and finite_grads):
            streak += 1
            if streak >= DIVERGENCE_STREAK:
                diverged = True
                break
            continue
        streak = 0
        if train_cfg.early_stop is not None and mode == "discrete" and res.err < train_cfg.early_stop:
            break
        opt.update(params, res.grads)
        if not params.is_finite():
            diverged = True
            break

    expr = extract(params, sfl_cfg, train_cfg.extract_tol)
    xs = sample_domain(task, train_cfg.validation_size, val_rng)
    with np.errstate(all="ignore"):
        val = expression_loss(task, expr, xs, lam=train_cfg.lam)[0]
    if not np.isfinite(val):
        val = math.inf
    return RestartRecord(index, seed, params, expr, float(val), diverged, curve, done)


def select_best(records) -> int | None:
    """Lowest validation error among non-diverged restarts; lowest index on ties."""
    best = None
    for i, r in enumerate(records):
        if r.diverged:
            continue
        if best is None or r.validation_err < records[best].validation_err:
            best = i
    return best


def _run_restart(args):
    task, sfl_cfg, train_cfg, i = args
    return train_once(task, sfl_cfg, train_cfg, train_cfg.base_seed + i, i)


def solve(task: TaskSpec, sfl_cfg: SflConfig, train_cfg: TrainConfig, threads: int = 1) -> RunResult:
    """Run every restart (optionally in worker processes) and keep the best by validation error."""
    jobs = [(task, sfl_cfg, train_cfg, i) for i in range(train_cfg.restarts)]
    if threads > 1 and len(jobs) > 1:
        quiet = replace(train_cfg, progress=False)
        jobs = [(task, sfl_cfg, quiet, i) for i in range(train_cfg.restarts)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_restart, jobs))
    else:
        records = [_run_restart(j) for j in jobs]
    return RunResult(records, select_best(records))
