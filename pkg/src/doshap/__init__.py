"""Exact and budgeted do-Shapley attributions over causal graphs."""

from .estimators import (
    SampleBatch,
    UnderdeterminedBatchError,
    base_mc_msr,
    base_regression,
    boundary_sampler,
    class_sampler,
    do_estimator,
    simulated_sampler,
)
from .exact import (
    Attribution,
    InteractionAttribution,
    brute_force_interaction,
    brute_force_values,
    exact_values,
    interaction_index,
    moebius_transform,
    n_shapley,
    n_shapley_values,
    shapley_interactions,
)
from .games import (
    FunctionGame,
    LinearScm,
    MissingValueError,
    MonteCarloScm,
    OracleError,
    TableGame,
    ValueOracle,
    linear_scm_mean,
    load_game,
)
from .graph import (
    Admg,
    CausalGraph,
    CoalitionClass,
    GraphError,
    ancestors_of_target,
    find_class,
    latent_projection,
)
from .identify import c_components, do_shapley_identifiable, id_identifiable
from .lattice import ClassInventory, all_classes, lattice_neighbors
from .weights import WeightScheme, class_weight, class_weights, mean_abs_weight

__version__ = "0.1.0"
