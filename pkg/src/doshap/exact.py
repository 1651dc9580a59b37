"""Exact attributions from the class inventory, plus brute-force references."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable, Mapping

import numpy as np

from .graph import Coalition, members, size, subsets, to_mask
from .lattice import ClassInventory
from .weights import WeightScheme, class_weights

MAX_BRUTE_FORCE_PLAYERS = 20


@dataclass
class Attribution:
    values: np.ndarray
    scheme: str = "shapley"
    exact: bool = False
    queries: int | None = None
    meta: dict = field(default_factory=dict)

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)


@dataclass
class InteractionAttribution:
    """Interaction values keyed by coalition bit-set (``0`` is the empty set)."""

    order: int
    values: dict[Coalition, float]

    def total(self) -> float:
        return math.fsum(self.values.values())


def class_values(inventory: ClassInventory, oracle, workers: int | None = None) -> list[float]:
    """``nu`` of every class, in inventory order."""
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(oracle.evaluate_class, inventory.classes))
    return [oracle.evaluate_class(c) for c in inventory.classes]


def exact_values(
    inventory: ClassInventory,
    oracle,
    scheme: WeightScheme | None = None,
    workers: int | None = None,
) -> Attribution:
    """Semivalues as ``sum_j nu(c_j) * w(c_j)`` over all classes; one query per class."""
    d = inventory.d
    scheme = scheme or WeightScheme.shapley(d)
    before = oracle.queries
    values = class_values(inventory, oracle, workers)
    phi = np.zeros(d)
    for cls, v in zip(inventory.classes, values):
        phi += v * class_weights(scheme, cls, d)
    return Attribution(phi, scheme.name, exact=True, queries=oracle.queries - before)


def _all_values(game: Callable[[Coalition], float], d: int) -> np.ndarray:
    if d > MAX_BRUTE_FORCE_PLAYERS:
        raise ValueError(f"brute force is limited to d <= {MAX_BRUTE_FORCE_PLAYERS}")
    return np.array([game(s) for s in range(1 << d)], dtype=float)


def _popcounts(d: int) -> np.ndarray:
    masks = np.arange(1 << d)
    counts = np.zeros(1 << d, dtype=np.int64)
    for i in range(d):
        counts += (masks >> i) & 1
    return counts


def brute_force_values(game: Callable[[Coalition], float], d: int,
                       scheme: WeightScheme | None = None) -> Attribution:
    """Direct marginal-contribution sum over all ``2^d`` coalitions."""
    scheme = scheme or WeightScheme.shapley(d)
    vals = _all_values(game, d)
    masks = np.arange(1 << d)
    counts = _popcounts(d)
    p = np.asarray(scheme.p)
    phi = np.zeros(d)
    for i in range(d):
        without = masks[(masks >> i) & 1 == 0]
        phi[i] = math.fsum(p[counts[without]] * (vals[without | (1 << i)] - vals[without]))
    return Attribution(phi, scheme.name, exact=True)


@lru_cache(maxsize=None)
def omega(a: int, b: int) -> float:
    """``1 / ((a+b+1) * C(a+b, a))``, the interaction weight of an interval game."""
    return 1.0 / ((a + b + 1) * math.comb(a + b, a))


def interaction_index(inventory: ClassInventory, oracle, U: Coalition, d: int | None = None,
                      values: list[float] | None = None) -> float:
    """Shapley interaction index of ``U`` from the class decomposition."""
    d = inventory.d if d is None else d
    full = (1 << d) - 1
    if values is None:
        values = class_values(inventory, oracle)
    terms = []
    for cls, v in zip(inventory.classes, values):
        outside = full & ~cls.closure
        if U & ~(cls.basis | outside):
            continue
        sign = -1.0 if size(U & outside) % 2 else 1.0
        a = size(cls.basis) - size(cls.closure & U)
        b = d - size(cls.closure | U)
        terms.append(v * sign * omega(a, b))
    return math.fsum(terms)


def shapley_interactions(inventory: ClassInventory, oracle, max_order: int) -> dict[Coalition, float]:
    """Interaction indices for every ``U`` with ``1 <= |U| <= max_order``."""
    d = inventory.d
    values = class_values(inventory, oracle)
    out = {}
    for k in range(1, max_order + 1):
        for combo in combinations(range(d), k):
            U = to_mask(combo)
            out[U] = interaction_index(inventory, oracle, U, d, values)
    return out


def brute_force_interaction(game: Callable[[Coalition], float], d: int, U: Coalition) -> float:
    """Interaction index of ``U`` from discrete derivatives over all ``S`` disjoint from ``U``."""
    vals = _all_values(game, d)
    u = size(U)
    rest = ((1 << d) - 1) & ~U
    terms = []
    for S in subsets(rest):
        delta = math.fsum((-1) ** (u - size(L)) * vals[S | L] for L in subsets(U))
        terms.append(delta / ((d - u + 1) * math.comb(d - u, size(S))))
    return math.fsum(terms)


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int = 64) -> tuple[Fraction, ...]:
    """``B_0..B_n`` with ``B_1 = -1/2``."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(math.comb(m + 1, k) * B[k] for k in range(m)) / (m + 1))
    return tuple(B)


def n_shapley(interactions: Mapping[Coalition, float], n: int, d: int,
              empty_value: float | None = None) -> InteractionAttribution:
    """Order-``n`` Shapley values from interaction indices up to order ``n``.

    Lower-order entries are corrected by Bernoulli-weighted sums of the
    higher-order interactions containing them. If ``empty_value`` (``nu`` of the
    empty set) is given it is stored under key ``0`` so the values sum to ``nu([d])``.
    """
    if not 1 <= n <= d:
        raise ValueError(f"order must satisfy 1 <= n <= d, got n={n}, d={d}")
    B = [float(b) for b in bernoulli_numbers(max(n, 1))]
    full = (1 << d) - 1
    out: dict[Coalition, float] = {}
    if empty_value is not None:
        out[0] = float(empty_value)
    for k in range(1, n + 1):
        for combo in combinations(range(d), k):
            U = to_mask(combo)
            total = interactions[U]
            rest = members(full & ~U)
            for extra in range(1, n - k + 1):
                if B[extra] == 0.0:
                    continue
                s = math.fsum(interactions[U | to_mask(K)] for K in combinations(rest, extra))
                total += B[extra] * s
            out[U] = total
    return InteractionAttribution(n, out)


def n_shapley_values(inventory: ClassInventory, oracle, n: int) -> InteractionAttribution:
    interactions = shapley_interactions(inventory, oracle, n)
    return n_shapley(interactions, n, inventory.d, empty_value=oracle.evaluate(0))


def moebius_transform(game: Callable[[Coalition], float], d: int) -> dict[Coalition, float]:
    """Brute-force Moebius coefficients ``m(T) = sum_{L <= T} (-1)^{|T|-|L|} nu(L)``."""
    vals = _all_values(game, d)
    return {T: math.fsum((-1) ** (size(T) - size(L)) * vals[L] for L in subsets(T))
            for T in range(1 << d)}
