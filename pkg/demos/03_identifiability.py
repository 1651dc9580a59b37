# %% [markdown]
# # Can the values be computed from observational data?
#
# With hidden confounders some interventions are not identifiable. Checking each
# single-feature intervention is enough to decide whether every coalition value is.

# %%
from doshap import Admg, do_shapley_identifiable, latent_projection

# %% [markdown]
# ## Bow-arc: X -> Y with a hidden common cause

# %%
bow = latent_projection(["X", "Y"], "Y", [("X", "Y"), ("U", "X"), ("U", "Y")], latent=["U"])
print("bidirected:", [sorted(bow.node_name(v) for v in p) for p in bow.bidirected])
ok, failing = do_shapley_identifiable(bow)
print("identifiable:", ok, "failing:", [bow.graph.names[j] for j in failing])

# %% [markdown]
# ## Front door: the mediator rescues the query

# %%
front = Admg.from_edges(["X", "M"], "Y", [("X", "M"), ("M", "Y")], bidirected=[("X", "Y")])
print("front door identifiable:", do_shapley_identifiable(front)[0])

# %% [markdown]
# ## Confounded mediator: fails at X only

# %%
g = Admg.from_edges(["X", "M"], "Y", [("X", "M"), ("M", "Y")], bidirected=[("X", "M")])
ok, failing = do_shapley_identifiable(g)
print(ok, [g.graph.names[j] for j in failing])
