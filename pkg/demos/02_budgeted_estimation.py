# %% [markdown]
# # Estimating under a query budget
#
# With m queries the estimator explores at most m classes. Once m reaches the
# class count r the answer is exact; below it, a batch of simulated coalitions
# feeds a regression.

# %%
import numpy as np

from doshap import CausalGraph, LinearScm, all_classes, do_estimator, exact_values

# %%
g = CausalGraph.from_edges(
    ["1", "2", "3", "4", "5"], "Y",
    [("1", "2"), ("1", "3"), ("2", "4"), ("3", "4"), ("4", "Y"), ("2", "Y"), ("3", "5"), ("5", "Y")],
)
scm = LinearScm.random(g, np.random.default_rng(3))
inv = all_classes(g)
truth = exact_values(inv, scm).values
r = inv.r
print("r =", r)

# %% [markdown]
# ## Relative error against budget

# %%
def rel_mse(est):
    return np.sum((est - truth) ** 2) / np.sum(truth ** 2)


for ratio in [0.25, 0.5, 0.75, 1.0, 1.5]:
    m = max(1, int(np.floor(ratio * r + 0.5)))
    errs = []
    for seed in range(30):
        scm.reset()
        est = do_estimator(m, scm, g, seed=seed)
        errs.append(rel_mse(est.values))
    print(f"m/r={ratio:4}  m={m:3}  queries={scm.queries:3}  median rel. MSE={np.median(errs):.2e}")

# %% [markdown]
# ## Max-sample-reuse base estimator
# Works for any semivalue, not only Shapley.

# %%
from doshap import WeightScheme

bz = WeightScheme.banzhaf(g.d)
est = do_estimator(r // 2, scm, g, base="mc-msr", scheme=bz, seed=1)
print("banzhaf estimate", np.round(est.values, 3))
print("banzhaf exact   ", np.round(exact_values(inv, scm, bz).values, 3))
