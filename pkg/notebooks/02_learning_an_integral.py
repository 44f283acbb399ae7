# %% [markdown]
# # Learning an antiderivative of cos(x)
#
# The task residual is y' - cos(x). A depth-2 tree with the default operators
# should settle on something shaped like a·sin(b·x) + c. The budget here is
# small so the script finishes in a couple of minutes; the acceptance suite
# uses the full one.

# %%
import math

import numpy as np

from sflearn import SflConfig, TrainConfig, make_task, solve
from sflearn.evaluate import antideriv_error
from sflearn.expr import evaluate

task = make_task("integrate", "cos(x)", (-math.pi, math.pi))
model = SflConfig(depth=2)
train = TrainConfig(restarts=4, iterations=2000, pool_size=1000)

# %%
result = solve(task, model, train)
for r in result.restarts:
    print(f"{r.index}  err {r.validation_err:9.3g}  {r.text}")
print("best:", result.best_text)

# %% [markdown]
# Only the shape matters for an antiderivative, so compare up to a constant.

# %%
e = result.best_expression
print("antideriv error:", f"{antideriv_error(e, 'cos(x)', -math.pi, math.pi):.3g}")
xs = np.linspace(-math.pi, math.pi, 9)
shift = evaluate(e, 0.0)
for x, v in zip(xs, evaluate(e, xs) - shift):
    print(f"{x: .3f}  {v: .4f}  sin {math.sin(x): .4f}")
