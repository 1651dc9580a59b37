"""Value oracles ``nu(S) = E[Y | do(S = x_S)]`` with basis-keyed caching."""

from __future__ import annotations

import threading
from typing import Callable, Mapping

import numpy as np

from .graph import CausalGraph, Coalition, CoalitionClass, _topological_order, find_class, members


class OracleError(RuntimeError):
    """Raised when a value oracle cannot produce a value."""


class MissingValueError(OracleError, KeyError):
    def __str__(self) -> str:
        # KeyError would quote the message
        return str(self.args[0]) if self.args else ""


class ValueOracle:
    """Deterministic coalition -> value map routed through the coalition's basis.

    Subclasses implement :meth:`value_of_basis`. Every query is reduced to its
    basis first, so coalitions of the same class share one cache entry, and
    ``queries`` counts cache misses only.
    """

    def __init__(self, graph: CausalGraph, cache: bool = True):
        self.graph = graph
        self.use_cache = cache
        self.queries = 0
        self._cache: dict[Coalition, float] = {}
        self._pending: dict[Coalition, threading.Event] = {}
        self._lock = threading.Lock()

    @property
    def d(self) -> int:
        return self.graph.d

    def value_of_basis(self, basis: Coalition) -> float:
        raise NotImplementedError

    def evaluate(self, coalition: Coalition) -> float:
        basis = find_class(coalition, self.graph).basis
        if not self.use_cache:
            with self._lock:
                self.queries += 1
            return float(self.value_of_basis(basis))
        while True:
            with self._lock:
                if basis in self._cache:
                    return self._cache[basis]
                event = self._pending.get(basis)
                if event is None:
                    event = self._pending[basis] = threading.Event()
                    owner = True
                else:
                    owner = False
            if not owner:
                event.wait()
                continue
            try:
                value = float(self.value_of_basis(basis))
                with self._lock:
                    self._cache[basis] = value
                    self.queries += 1
                return value
            finally:
                with self._lock:
                    del self._pending[basis]
                event.set()

    def evaluate_class(self, cls: CoalitionClass) -> float:
        return self.evaluate(cls.basis)

    def __call__(self, coalition: Coalition) -> float:
        return self.evaluate(coalition)

    def reset(self) -> None:
        with self._lock:
            self._cache.clear()
            self.queries = 0


class TableGame(ValueOracle):
    """Explicit values keyed by coalition bit-set; only irreducible sets need entries."""

    def __init__(self, graph: CausalGraph, values: Mapping[Coalition, float], cache: bool = True):
        super().__init__(graph, cache)
        self.values = {int(k): float(v) for k, v in values.items()}

    def value_of_basis(self, basis: Coalition) -> float:
        try:
            return self.values[basis]
        except KeyError:
            names = ",".join(sorted(self.graph.names_of(basis)))
            raise MissingValueError(f"no table entry for irreducible set {{{names}}}") from None

    def missing_bases(self, classes) -> list[Coalition]:
        return [c.basis for c in classes if c.basis not in self.values]


class FunctionGame(ValueOracle):
    """Wraps a plain ``coalition -> value`` function."""

    def __init__(self, graph: CausalGraph, fn: Callable[[Coalition], float], cache: bool = True):
        super().__init__(graph, cache)
        self.fn = fn

    def value_of_basis(self, basis: Coalition) -> float:
        return self.fn(basis)


class LinearScm(ValueOracle):
    """Linear structural equations with zero-mean exogenous noise.

    ``weights[v]`` maps each parent index of node ``v`` to its coefficient, for
    nodes ``0..d`` (index ``d`` is the target). Interventional means are exact:
    intervened players are pinned to ``x`` and everything else propagates
    ``intercept + sum(coef * parent_mean)`` in topological order.
    """

    def __init__(
        self,
        graph: CausalGraph,
        weights: Mapping[int, Mapping[int, float]],
        intercepts=None,
        x=None,
        noise_var=None,
        cache: bool = True,
    ):
        super().__init__(graph, cache)
        n = graph.d + 1
        self.coef = np.zeros((n, n))
        for child, row in weights.items():
            for parent, w in row.items():
                if not graph.parents[child] >> parent & 1:
                    raise ValueError(f"coefficient on non-edge {parent}->{child}")
                self.coef[child, parent] = w
        self.intercepts = np.zeros(n) if intercepts is None else np.asarray(intercepts, dtype=float)
        self.x = np.zeros(graph.d) if x is None else np.asarray(x, dtype=float)
        self.noise_var = np.ones(n) if noise_var is None else np.asarray(noise_var, dtype=float)
        if self.intercepts.shape != (n,) or self.x.shape != (graph.d,) or self.noise_var.shape != (n,):
            raise ValueError("intercepts/noise need d+1 entries and x needs d entries")
        self.order = _topological_order(n, graph.parents)

    @classmethod
    def random(cls, graph: CausalGraph, rng: np.random.Generator, **kwargs) -> "LinearScm":
        weights = {v: {p: float(rng.normal()) for p in members(graph.parents[v])}
                   for v in range(graph.d + 1)}
        return cls(graph, weights, intercepts=rng.normal(size=graph.d + 1),
                   x=rng.normal(size=graph.d), **kwargs)

    def mean(self, coalition: Coalition) -> float:
        mu = np.zeros(self.graph.d + 1)
        for v in self.order:
            if v < self.graph.d and coalition >> v & 1:
                mu[v] = self.x[v]
            else:
                mu[v] = self.intercepts[v] + self.coef[v] @ mu
        return float(mu[self.graph.y])

    def value_of_basis(self, basis: Coalition) -> float:
        return self.mean(basis)

    def monte_carlo(self, samples: int = 10_000, seed: int = 0) -> "MonteCarloScm":
        """The same model evaluated by simulation with Gaussian noise."""
        coef, intercepts, std = self.coef, self.intercepts, np.sqrt(self.noise_var)

        def equation(v):
            def f(parent_values, noise):
                out = intercepts[v] + std[v] * noise
                for p, val in parent_values.items():
                    out = out + coef[v, p] * val
                return out
            return f

        eqs = {v: equation(v) for v in range(self.graph.d + 1)}
        return MonteCarloScm(self.graph, eqs, self.x, samples=samples, seed=seed)


def linear_scm_mean(scm: LinearScm, coalition: Coalition) -> float:
    return scm.mean(coalition)


class MonteCarloScm(ValueOracle):
    """Arbitrary structural equations, evaluated by simulation.

    ``equations[v](parent_values, noise)`` returns the node's samples given a
    dict ``{parent index: samples}`` and standard normal noise. The same seed is
    reused for every query (common random numbers), so values are deterministic.
    """

    def __init__(self, graph: CausalGraph, equations, x, samples: int = 10_000,
                 seed: int | None = None, cache: bool = True):
        if seed is None:
            raise ValueError("a seed is required for Monte Carlo oracles")
        super().__init__(graph, cache)
        self.equations = equations
        self.x = np.asarray(x, dtype=float)
        self.samples = int(samples)
        self.seed = int(seed)
        self.order = _topological_order(graph.d + 1, graph.parents)

    def value_of_basis(self, basis: Coalition) -> float:
        rng = np.random.Generator(np.random.Philox(self.seed))
        noise = rng.standard_normal((self.graph.d + 1, self.samples))
        vals: dict[int, np.ndarray] = {}
        for v in self.order:
            if v < self.graph.d and basis >> v & 1:
                vals[v] = np.full(self.samples, self.x[v])
            else:
                parents = {p: vals[p] for p in members(self.graph.parents[v])}
                vals[v] = np.asarray(self.equations[v](parents, noise[v]), dtype=float)
        return float(vals[self.graph.y].mean())


def _parse_key(graph: CausalGraph, key: str) -> Coalition:
    names = [k.strip() for k in key.split(",") if k.strip()]
    return graph.mask_of(names)


def load_game(spec: Mapping, graph: CausalGraph) -> ValueOracle:
    """Build an oracle from its JSON description (see README for the schema)."""
    kind = spec.get("type")
    if kind == "table":
        values = {}
        for key, val in spec["values"].items():
            values[_parse_key(graph, key)] = float(val)
        return TableGame(graph, values)
    if kind == "linear_scm":
        index = {name: i for i, name in enumerate(graph.names)}
        index[graph.target] = graph.y
        pruned = set(graph.pruned)

        def idx(name):
            if name not in index:
                raise ValueError(f"unknown node {name!r} in game")
            return index[name]

        weights: dict[int, dict[int, float]] = {}
        for child, row in spec.get("coefficients", {}).items():
            if child in pruned:
                continue
            weights[idx(child)] = {idx(p): float(w) for p, w in row.items() if p not in pruned}
        n = graph.d + 1

        def vector(key, length, default):
            out = np.full(length, default, dtype=float)
            for name, val in spec.get(key, {}).items():
                if name in pruned:
                    continue
                i = idx(name)
                if i >= length:
                    raise ValueError(f"{key} cannot set the target")
                out[i] = float(val)
            return out

        scm = LinearScm(graph, weights, vector("intercepts", n, 0.0), vector("x", graph.d, 0.0),
                        vector("noise", n, 1.0))
        if "samples" in spec:
            if "seed" not in spec:
                raise ValueError("Monte Carlo games need a seed")
            return scm.monte_carlo(int(spec["samples"]), int(spec["seed"]))
        return scm
    raise ValueError(f"unknown game type {kind!r}")
