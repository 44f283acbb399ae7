"""Learn symbolic expressions that solve equations by training a gated parse tree."""

__version__ = "0.1.0"

from .expr import Constant, Expr, Variable, differentiate, parse, simplify, to_string
from .tasks import Constraint, TaskSpec, lane_emden_task, loss, make_task, regression_task, sample_domain
from .tree import SflConfig, SflParams, extract, forward, init
from .trainer import RunResult, TrainConfig, solve, train_once
from .evaluate import antideriv_error, erf_check, lane_emden_reference, ode_reference, residual_error, simpson

__all__ = [
    "Constant", "Expr", "Variable", "differentiate", "parse", "simplify", "to_string",
    "Constraint", "TaskSpec", "lane_emden_task", "loss", "make_task", "regression_task", "sample_domain",
    "SflConfig", "SflParams", "extract", "forward", "init",
    "RunResult", "TrainConfig", "solve", "train_once",
    "antideriv_error", "erf_check", "lane_emden_reference", "ode_reference", "residual_error", "simpson",
]
