# %% [markdown]
# # Scoring published expressions
#
# No training here. We take expressions printed with three decimals and
# score them with the library's error metrics, which is a quick way to check
# that the residual and antiderivative measures behave as expected.

# %%
import math

import numpy as np

from sflearn import lane_emden_task, parse, residual_error
from sflearn.evaluate import antideriv_error, erf_check, lane_emden_reference

# %% [markdown]
# ## Lane-Emden, m = 0
#
# The exact solution is 1 - x²/6. A learned expression with -0.166 in place of
# -1/6 leaves a small residual, squared and averaged over the interval.

# %%
task = lane_emden_task(0)
for text in ("1 - x^2/6", "1.000 - 0.166*x*x"):
    near = residual_error(text, task, 1, 5)
    wide = residual_error(text, task, 0.1, 10)
    print(f"{text:22s} [1,5] {near:.3g}   [0.1,10] {wide:.3g}")

# %% [markdown]
# For m outside {0, 1, 5} there is no closed form, so curves are compared with
# an RK4 reference started from a short series expansion near the origin.

# %%
ref = lane_emden_reference(2, 5.0)
cand = parse("0.507 + 0.485*sin((2.0*x+0.5)/(0.3*x+1.8) + (0.176*x+0.007)/(0.142*x+0.006) + 0.094)")
from sflearn.expr import evaluate

xs = np.linspace(0.5, 5, 10)
for x, a, b in zip(xs, evaluate(cand, xs), ref(xs)):
    print(f"x={x:4.2f}  candidate {a: .4f}  reference {b: .4f}")
print("residual on [1,5]:", f"{residual_error(cand, lane_emden_task(2), 1, 5):.3g}")

# %% [markdown]
# ## Antiderivatives
#
# The constant of integration is free, so both curves are pinned to agree at 0
# before the squared gap is averaged.

# %%
cases = {
    "exp(-x^2)": (
        "1.039*sin(0.969*sqrt(abs(0.982*sin(0.045*x-0.105)-1.083*sin(0.120*x+0.102)-0.107))"
        "+1.300*sin(1.224*sqrt(abs(0.046*x+0.042))+1.097*sin(0.451*x-0.039)-0.206)-0.577)+0.016",
        -2, 2,
    ),
    "sqrt(1-x^4)": ("1.50*sin(0.15*x^2+0.58*x+1.28*sqrt(abs(0.053*x+0.05))+0.05)", -1, 1),
    "sin(sin(x))": ("sin(0.532*x)*(0.241*x + sin(0.541*x))", -math.pi, math.pi),
    "sqrt(sin(x))": ("0.938*x*sin(sqrt(0.494*x))", 0, math.pi),
}
for integrand, (fhat, a, b) in cases.items():
    print(f"{integrand:13s} {antideriv_error(fhat, integrand, a, b):.3g}")

# %% [markdown]
# The normal CDF check compares against 0.5(1 + erf(x/√2)) on [-1, 3]. A constant
# 0.5 is a useful sanity floor.

# %%
erf_hat = "0.545*sin(sqrt(sin(0.1368*x+0.0883)+0.2120)+1.300*sin(sin(0.5162*x+0.1931)-0.5716))"
print("erf_hat:", f"{erf_check(erf_hat):.4g}")
print("constant 0.5:", f"{erf_check('0.5'):.5f}")
