# %% [markdown]
# # Interactions over classes
#
# The class decomposition also gives Shapley interaction indices and n-Shapley
# values, still from r queries.

# %%
import numpy as np

from doshap import CausalGraph, FunctionGame, all_classes, n_shapley_values, shapley_interactions

# %%
g = CausalGraph.from_edges(["a", "b", "c", "d"], "Y",
                           [("a", "b"), ("b", "Y"), ("c", "Y"), ("d", "Y")])

def nu(S):
    # b and c are complements, d is additive
    b, c, d = (S >> g.index(n) & 1 for n in "bcd")
    return 2.0 * (b and c) + 0.5 * d

game = FunctionGame(g, nu)
inv = all_classes(g)

# %%
sii = shapley_interactions(inv, game, 2)
for U, v in sorted(sii.items()):
    if abs(v) > 1e-12:
        print(",".join(g.names_of(U)), round(v, 4))

# %%
for n in (1, 2, g.d):
    ns = n_shapley_values(inv, game, n)
    print(f"n={n}: sum = {ns.total():.4f}  (nu(full) = {game(g.full)})")
print("queries:", game.queries, "r:", inv.r)
