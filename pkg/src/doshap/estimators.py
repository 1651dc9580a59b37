"""Budgeted estimation of semivalues from a subset of the lattice classes.

The main entry point is :func:`do_estimator`: explore the lattice with
:func:`boundary_sampler` (each query hits a new class), then either sum the
classes exactly (when exploration exhausted the lattice) or expand the
queried classes into a large simulated batch of coalitions and hand it to a
base estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exact import Attribution
from .graph import CausalGraph, Coalition, CoalitionClass, find_class, members, size
from .lattice import lattice_neighbors
from .weights import WeightScheme, class_weights, mean_abs_weight

EPSILON = 1e-12


class UnderdeterminedBatchError(ValueError):
    """The sampled batch does not pin down a unique regression solution."""


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator, so streams split by seed sequence stay reproducible."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _comb(n: int, k: int) -> int:
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)


class _SumTree:
    """Weighted bag supporting O(log n) insert, sample-and-remove."""

    def __init__(self, capacity: int = 64):
        self.cap = 1
        while self.cap < capacity:
            self.cap *= 2
        self.tree = np.zeros(2 * self.cap)
        self.keys: list = [None] * self.cap
        self.free: list[int] = list(range(self.cap - 1, -1, -1))
        self.slot: dict = {}

    def __len__(self) -> int:
        return len(self.slot)

    def __contains__(self, key) -> bool:
        return key in self.slot

    def _set(self, i: int, w: float) -> None:
        i += self.cap
        self.tree[i] = w
        i //= 2
        while i:
            self.tree[i] = self.tree[2 * i] + self.tree[2 * i + 1]
            i //= 2

    def _grow(self) -> None:
        old = [(k, self.tree[self.cap + s]) for k, s in self.slot.items()]
        self.__init__(self.cap * 2)
        for k, w in old:
            self.add(k, w)

    def add(self, key, weight: float) -> None:
        if not self.free:
            self._grow()
        s = self.free.pop()
        self.slot[key] = s
        self.keys[s] = key
        self._set(s, weight)

    def remove(self, key) -> None:
        s = self.slot.pop(key)
        self.keys[s] = None
        self._set(s, 0.0)
        self.free.append(s)

    def pop_random(self, rng: np.random.Generator):
        while True:
            u = rng.random() * self.tree[1]
            i = 1
            while i < self.cap:
                left = self.tree[2 * i]
                if u < left:
                    i = 2 * i
                else:
                    u -= left
                    i = 2 * i + 1
            key = self.keys[i - self.cap]
            if key is not None and self.tree[i] > 0:
                self.remove(key)
                return key


def boundary_sampler(
    m: int,
    graph: CausalGraph,
    scheme: WeightScheme | None = None,
    seed=0,
    anchors: Sequence[Coalition] = (),
) -> tuple[list[CoalitionClass], bool]:
    """Collect ``min(m, r)`` distinct classes by weighted lattice traversal.

    A random coalition of every size seeds the candidate queue. Each step draws
    a queued class with probability proportional to its mean absolute weight,
    keeps it, and queues the unseen classes of its lattice neighbours.
    ``anchors`` are coalitions whose classes are taken first, before any random
    draw. The flag is true when the queue ran dry, i.e. every class was found.
    """
    if m < 1:
        raise ValueError("budget must be at least 1")
    d = graph.d
    scheme = scheme or WeightScheme.shapley(d)
    rng = make_rng(seed)
    queue = _SumTree()
    pending: dict[Coalition, CoalitionClass] = {}
    seen: set[Coalition] = set()
    sampled: list[CoalitionClass] = []

    def enqueue(coalition: Coalition) -> None:
        cls = find_class(coalition, graph)
        if cls.closure in seen:
            return
        seen.add(cls.closure)
        pending[cls.closure] = cls
        queue.add(cls.closure, mean_abs_weight(scheme, cls, d) + EPSILON)

    def take(cls: CoalitionClass) -> None:
        sampled.append(cls)
        lower, upper = lattice_neighbors(cls, graph)
        for s in lower + upper:
            enqueue(s)

    for ell in range(1, d + 1):
        picks = rng.choice(d, size=ell, replace=False)
        enqueue(sum(1 << int(j) for j in picks))
    if d == 0:
        enqueue(0)

    for a in anchors:
        if len(sampled) >= m:
            break
        cls = find_class(a, graph)
        if cls.closure in pending:
            queue.remove(cls.closure)
            del pending[cls.closure]
        elif cls.closure in seen:
            continue
        seen.add(cls.closure)
        take(cls)

    while len(sampled) < m and len(queue):
        key = queue.pop_random(rng)
        take(pending.pop(key))
    return sampled, len(queue) == 0


@dataclass
class SampleBatch:
    """Simulated coalitions with their class values and inclusion probabilities."""

    d: int
    coalitions: list[Coalition]
    values: np.ndarray
    probs: np.ndarray
    class_index: np.ndarray
    gamma: float = 1.0

    def __len__(self) -> int:
        return len(self.coalitions)

    def value_of(self, coalition: Coalition) -> float | None:
        for s, v in zip(self.coalitions, self.values):
            if s == coalition:
                return float(v)
        return None


def shapley_size_weights(d: int) -> np.ndarray:
    """Kernel mass per coalition size; the empty and full sizes are always kept."""
    w = np.full(d + 1, np.inf)
    for s in range(1, d):
        w[s] = (d - 1) / (s * (d - s))
    return w


def _inclusion_probs(w: np.ndarray, gamma: float, d: int) -> np.ndarray:
    p = np.ones(d + 1)
    for s in range(d + 1):
        if np.isfinite(w[s]):
            p[s] = min(gamma * w[s] / math.comb(d, s), 1.0)
    return p


def _unrank_combination(rank: int, k: int) -> list[int]:
    """The ``rank``-th ``k``-combination of ``0, 1, 2, ...`` in colexicographic order."""
    out = []
    for i in range(k, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        out.append(c)
        rank -= math.comb(c, i)
    return out


def simulated_sampler(
    classes: Sequence[CoalitionClass],
    values: Sequence[float],
    budget: int,
    d: int,
    size_weights: np.ndarray | None = None,
    seed=0,
) -> SampleBatch:
    """Expand already-queried classes into about ``budget`` distinct coalitions, free of queries.

    Coalitions of size ``s`` are kept with probability ``min(gamma * w[s] / C(d, s), 1)``;
    ``gamma`` is tuned by bisection so the expected batch size matches ``budget``,
    and per-(class, size) counts are rounded stochastically.
    """
    if not classes:
        raise ValueError("need at least one class")
    if budget < 1:
        raise ValueError("simulation budget must be at least 1")
    rng = make_rng(seed)
    w = shapley_size_weights(d) if size_weights is None else np.asarray(size_weights, dtype=float)

    avail = np.zeros(d + 1)
    for cls in classes:
        b, f = size(cls.basis), size(cls.free)
        for j in range(f + 1):
            avail[b + j] += math.comb(f, j)

    def expected(gamma: float) -> float:
        return float(avail @ _inclusion_probs(w, gamma, d))

    total = float(avail.sum())
    if total <= budget:
        gamma = math.inf
    elif expected(0.0) >= budget:
        gamma = 0.0
    else:
        lo, hi = 0.0, 1.0
        while expected(hi) < budget:
            hi *= 2.0
        gamma = hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            e = expected(mid)
            if abs(e - budget) <= 1e-6 * budget:
                gamma = mid
                break
            if e < budget:
                lo = mid
            else:
                hi = mid
            gamma = hi
    probs_by_size = _inclusion_probs(w, gamma, d) if math.isfinite(gamma) else np.ones(d + 1)

    coalitions: list[Coalition] = []
    vals: list[float] = []
    probs: list[float] = []
    origin: list[int] = []
    for ci, (cls, value) in enumerate(zip(classes, values)):
        free = members(cls.free)
        b = size(cls.basis)
        for j in range(len(free) + 1):
            p = float(probs_by_size[b + j])
            if p <= 0.0:
                continue
            count = math.comb(len(free), j)
            mu = count * p
            n_draw = int(math.floor(mu))
            if rng.random() < mu - n_draw:
                n_draw += 1
            n_draw = min(n_draw, count)
            if n_draw == 0:
                continue
            if n_draw == count:
                ranks = range(count)
            else:
                ranks = rng.choice(count, size=n_draw, replace=False)
            for rank in ranks:
                picked = _unrank_combination(int(rank), j)
                s = cls.basis
                for idx in picked:
                    s |= 1 << free[idx]
                coalitions.append(s)
                vals.append(float(value))
                probs.append(p)
                origin.append(ci)
    return SampleBatch(d, coalitions, np.array(vals), np.array(probs), np.array(origin, dtype=int),
                       gamma)


def _endpoint(batch: SampleBatch, coalition: Coalition, given: float | None, label: str) -> float:
    if given is not None:
        return float(given)
    v = batch.value_of(coalition)
    if v is None:
        raise UnderdeterminedBatchError(f"batch does not contain the {label} coalition")
    return v


def _membership(coalitions: Sequence[Coalition], d: int) -> np.ndarray:
    X = np.zeros((len(coalitions), d))
    for r, s in enumerate(coalitions):
        for i in members(s):
            X[r, i] = 1.0
    return X


def base_regression(batch: SampleBatch, d: int | None = None, empty_value: float | None = None,
                    full_value: float | None = None) -> Attribution:
    """Constrained kernel regression on an inverse-probability-weighted batch.

    Fits ``nu(S) ~ nu(empty) + sum_{i in S} phi_i`` under the Shapley kernel,
    subject to ``sum(phi) = nu(full) - nu(empty)``.
    """
    d = batch.d if d is None else d
    full = (1 << d) - 1
    v0 = _endpoint(batch, 0, empty_value, "empty")
    v1 = _endpoint(batch, full, full_value, "full")
    delta = v1 - v0
    if d == 1:
        return Attribution(np.array([delta]), "shapley")
    sizes = np.array([size(s) for s in batch.coalitions], dtype=int)
    inner = (sizes > 0) & (sizes < d)
    if not inner.any():
        raise UnderdeterminedBatchError("batch has no coalitions of intermediate size")
    X = _membership([s for s, keep in zip(batch.coalitions, inner) if keep], d)
    y = batch.values[inner] - v0
    s = sizes[inner]
    kernel = (d - 1) / (np.array([math.comb(d, k) for k in s], dtype=float) * s * (d - s))
    sw = np.sqrt(kernel / batch.probs[inner])

    # phi = delta/d * 1 + N z with N spanning the sum-zero subspace
    N = np.linalg.svd(np.ones((1, d)))[2][1:].T
    base = np.full(d, delta / d)
    A = sw[:, None] * (X @ N)
    rhs = sw * (y - X @ base)
    z, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < d - 1:
        raise UnderdeterminedBatchError(f"regression system has rank {rank} < {d - 1}")
    return Attribution(base + N @ z, "shapley")


def base_mc_msr(batch: SampleBatch, scheme: WeightScheme | None = None,
                empty_value: float | None = None) -> Attribution:
    """Maximum-sample-reuse estimate: every row updates every player.

    Values are centred on ``nu(empty)`` (or the batch mean if the empty
    coalition is unknown), so constant games give exactly zero.
    """
    d = batch.d
    scheme = scheme or WeightScheme.shapley(d)
    if empty_value is None:
        empty_value = batch.value_of(0)
    centre = float(np.mean(batch.values)) if empty_value is None else float(empty_value)
    p = np.asarray(scheme.p)
    X = _membership(batch.coalitions, d)
    sizes = X.sum(axis=1).astype(int)
    coef_in = np.where(sizes >= 1, p[np.clip(sizes - 1, 0, d - 1)], 0.0)
    coef_out = np.where(sizes <= d - 1, p[np.clip(sizes, 0, d - 1)], 0.0)
    scaled = (batch.values - centre) / batch.probs
    phi = (scaled * coef_in) @ X - (scaled * coef_out) @ (1.0 - X)
    return Attribution(phi, scheme.name)


def _class_sum(classes, values, scheme: WeightScheme, d: int, centre: float = 0.0) -> np.ndarray:
    phi = np.zeros(d)
    for cls, v in zip(classes, values):
        phi += (v - centre) * class_weights(scheme, cls, d)
    return phi


BASE_ESTIMATORS = ("regression", "mc-msr")


def do_estimator(
    m: int,
    oracle,
    graph: CausalGraph | None = None,
    base: str = "regression",
    k: int = 8,
    scheme: WeightScheme | None = None,
    seed=0,
) -> Attribution:
    """Estimate semivalues with at most ``m`` oracle queries (exactly ``min(m, r)``).

    The empty and full coalitions' classes are queried first. If the lattice is
    exhausted within budget the result is exact; otherwise a batch of about
    ``k * m`` simulated coalitions feeds the chosen base estimator. When the
    regression batch is rank deficient (tiny budgets), the centred partial
    class sum is returned instead and ``meta["fallback"]`` is set.
    """
    if m < 1 or k < 1:
        raise ValueError("budget and multiplier must be at least 1")
    if base not in BASE_ESTIMATORS:
        raise ValueError(f"unknown base estimator {base!r}; choose from {BASE_ESTIMATORS}")
    graph = graph or oracle.graph
    d = graph.d
    scheme = scheme or WeightScheme.shapley(d)
    if base == "regression" and scheme.name != "shapley":
        raise ValueError("the regression base estimator only targets Shapley values")
    sample_seed, sim_seed = np.random.SeedSequence(seed).spawn(2)
    before = oracle.queries
    classes, all_sampled = boundary_sampler(m, graph, scheme, sample_seed, anchors=(0, graph.full))
    values = [oracle.evaluate_class(c) for c in classes]
    queries = oracle.queries - before
    meta = {"all_sampled": all_sampled, "budget": m, "classes": len(classes)}
    if all_sampled:
        phi = _class_sum(classes, values, scheme, d)
        return Attribution(phi, scheme.name, exact=True, queries=queries, meta=meta)

    lookup = {c.closure: v for c, v in zip(classes, values)}
    empty_value = lookup.get(find_class(0, graph).closure)
    full_value = lookup.get(graph.full)
    batch = simulated_sampler(classes, values, k * m, d, seed=sim_seed)
    meta["batch"] = len(batch)
    if base == "mc-msr":
        est = base_mc_msr(batch, scheme, empty_value)
        phi = est.values
    else:
        try:
            phi = base_regression(batch, d, empty_value, full_value).values
        except UnderdeterminedBatchError:
            centre = empty_value if empty_value is not None else float(np.mean(values))
            phi = _class_sum(classes, values, scheme, d, centre)
            meta["fallback"] = "class-sum"
    return Attribution(phi, scheme.name, exact=False, queries=queries, meta=meta)


# Stratified reference sampler (quadratic in the budget; kept for comparison).

def count_seen(ell: int, current: Coalition, remaining: Coalition,
               classes: Sequence[CoalitionClass]) -> tuple[int, list[CoalitionClass]]:
    """Number of size-``ell`` completions ``current | X`` (``X`` drawn from ``remaining``) in ``classes``."""
    total = 0
    applicable = []
    have = size(current)
    for cls in classes:
        if cls.basis & ~(current | remaining) or current & ~cls.closure:
            continue
        applicable.append(cls)
        options = size(remaining & cls.free)
        spaces = ell - have - size(remaining & cls.basis)
        total += _comb(options, spaces)
    return total, applicable


def sample_unseen_by_size(ell: int, start: Coalition, remaining: Coalition,
                          classes: Sequence[CoalitionClass], rng) -> Coalition:
    """Uniform size-``ell`` superset of ``start`` (extras from ``remaining``) outside all ``classes``."""
    rng = make_rng(rng)
    S = start
    R = remaining
    relevant = [c for c in classes if size(c.basis) <= ell <= size(c.closure)]
    while size(S) < ell:
        cand = members(R)
        j = cand[int(rng.integers(len(cand)))]
        bit = 1 << j
        n_in, c_in = count_seen(ell, S | bit, R & ~bit, relevant)
        n_out, c_out = count_seen(ell, S, R & ~bit, relevant)
        u_in = _comb(size(R) - 1, ell - size(S) - 1) - n_in
        u_out = _comb(size(R) - 1, ell - size(S)) - n_out
        if u_in + u_out <= 0:
            raise RuntimeError("no unseen completion exists")
        if rng.random() * (u_in + u_out) < u_in:
            relevant = c_in
            S |= bit
        else:
            relevant = c_out
        R &= ~bit
    return S


def class_sampler(m: int, graph: CausalGraph, scheme: WeightScheme | None = None,
                  seed=0) -> list[CoalitionClass]:
    """Draw ``min(m, r)`` distinct classes, sampling coalitions without replacement.

    Per player and size it tracks how many unseen coalitions include or exclude
    the player; a player, an inclusion flag and a size are drawn from the
    remaining semivalue mass, then a uniform unseen coalition of that shape.
    """
    if m < 1:
        raise ValueError("budget must be at least 1")
    d = graph.d
    scheme = scheme or WeightScheme.shapley(d)
    rng = make_rng(seed)
    p = np.asarray(scheme.p)
    # unseen[z][ell][i]: unseen coalitions of size ell with (z=1) / without (z=0) player i
    unseen_in = [[_comb(d - 1, ell - 1) for _ in range(d)] for ell in range(d + 1)]
    unseen_out = [[_comb(d - 1, ell) for _ in range(d)] for ell in range(d + 1)]
    remaining_total = 1 << d
    seen: list[CoalitionClass] = []
    everyone = graph.full

    while len(seen) < m and remaining_total > 0:
        i = int(rng.integers(d))
        mass_in = np.array([p[ell - 1] * unseen_in[ell][i] if ell >= 1 else 0.0
                            for ell in range(d + 1)])
        mass_out = np.array([p[ell] * unseen_out[ell][i] if ell <= d - 1 else 0.0
                             for ell in range(d + 1)])
        tin, tout = mass_in.sum(), mass_out.sum()
        if tin + tout <= 0:
            continue
        include = rng.random() * (tin + tout) < tin
        mass = mass_in if include else mass_out
        ell = int(rng.choice(d + 1, p=mass / mass.sum()))
        start = 1 << i if include else 0
        S = sample_unseen_by_size(ell, start, everyone & ~(1 << i), seen, rng)
        cls = find_class(S, graph)
        b, f = size(cls.basis), size(cls.free)
        for j in range(f + 1):
            ell_t = b + j
            for pl in range(d):
                bit = 1 << pl
                if cls.basis & bit:
                    unseen_in[ell_t][pl] -= _comb(f, j)
                elif cls.closure & bit:
                    unseen_in[ell_t][pl] -= _comb(f - 1, j - 1)
                    unseen_out[ell_t][pl] -= _comb(f - 1, j)
                else:
                    unseen_out[ell_t][pl] -= _comb(f, j)
        remaining_total -= 1 << f
        seen.append(cls)
    return seen
