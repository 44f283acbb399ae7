# %% [markdown]
# # Lane-Emden with m = 0
#
# y'' + (2/x) y' + 1 = 0 with y(0) = 1, y'(0) = 0. The initial conditions sit
# at x = 0 while residual points are drawn from [0.1, 4], which keeps the 2/x
# term away from its pole. The exact answer is 1 - x²/6.
#
# Four short restarts here. The full protocol (20 × 6000) lives in the
# acceptance suite.

# %%
import numpy as np

from sflearn import SflConfig, TrainConfig, lane_emden_task, residual_error, solve
from sflearn.evaluate import curve_rows

task = lane_emden_task(0)
model = SflConfig(depth=2, unary=("identity", "sin", "sqrt_abs"), binary=("mul",))
result = solve(task, model, TrainConfig(restarts=4, iterations=2500))

# %%
for r in result.restarts:
    flag = "diverged" if r.diverged else ""
    print(f"{r.index}  {r.validation_err:9.3g}  {r.text} {flag}")

best = result.best_expression
print("best:", result.best_text)
print("residual error on [1,5]:", f"{residual_error(best, task, 1, 5):.3g}")

# %% [markdown]
# The curve rows hold (x, f̂, reference, residual). For m = 0 the reference is
# the exact parabola.

# %%
rows = curve_rows(best, task, 9)
for x, f, ref, res in rows:
    print(f"{x:5.2f}  {f: .5f}  {ref: .5f}  {res: .2e}")

# %% [markdown]
# Loss curve of the winning restart, sampled every 100 iterations. The jump at
# the soft-to-discrete switch is expected: gates stop blending operators.

# %%
curve = result.best.loss_curve
for p in curve[:: max(1, len(curve) // 12)]:
    print(f"{p['iteration']:5d} {p['mode']:8s} {p['err']:.3g}")
