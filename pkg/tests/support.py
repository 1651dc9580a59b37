"""Fixtures and independent brute-force oracles shared by the test modules."""

from __future__ import annotations

import math

import numpy as np

from doshap.graph import Admg, CausalGraph, find_class
from doshap.games import TableGame


def chain(d: int) -> CausalGraph:
    names = [str(i + 1) for i in range(d)]
    edges = [(names[i], names[i + 1]) for i in range(d - 1)] + [(names[-1], "Y")]
    return CausalGraph.from_edges(names, "Y", edges)


def star(d: int) -> CausalGraph:
    names = [str(i + 1) for i in range(d)]
    return CausalGraph.from_edges(names, "Y", [(n, "Y") for n in names])


def diamond() -> CausalGraph:
    # 1 -> {2, 3} -> 4 -> Y, with shortcuts 2 -> Y and 3 -> 5 -> Y
    names = ["1", "2", "3", "4", "5"]
    edges = [("1", "2"), ("1", "3"), ("2", "4"), ("3", "4"), ("4", "Y"), ("2", "Y"),
             ("3", "5"), ("5", "Y")]
    return CausalGraph.from_edges(names, "Y", edges)


CHAIN3 = chain(3)
STAR3 = star(3)


def random_dag(rng: np.random.Generator, d: int, density: float = 0.4) -> CausalGraph:
    """Random DAG on players ``0..d-1`` (topological by index) where every player reaches Y."""
    parents = [0] * (d + 1)
    for v in range(1, d + 1):
        for p in range(v):
            if rng.random() < density:
                parents[v] |= 1 << p
    for p in range(d):
        has_child = any(parents[v] >> p & 1 for v in range(p + 1, d + 1))
        if not has_child:
            parents[int(rng.integers(p + 1, d + 1))] |= 1 << p
    g = CausalGraph.from_parent_masks(parents)
    assert g.d == d
    return g


def random_admg(rng: np.random.Generator, d: int, density: float = 0.4,
                confounding: float = 0.25) -> Admg:
    g = random_dag(rng, d, density)
    n = d + 1
    pairs = frozenset(frozenset((a, b)) for a in range(n) for b in range(a + 1, n)
                      if rng.random() < confounding)
    return Admg(g, pairs)


# path-enumeration oracles, deliberately independent of the library's reachability code

def directed_paths_to_target(graph: CausalGraph, start: int) -> list[list[int]]:
    children = [[] for _ in range(graph.d + 1)]
    for v in range(graph.d + 1):
        for p in range(graph.d + 1):
            if graph.parents[v] >> p & 1:
                children[p].append(v)
    out = []

    def walk(path):
        v = path[-1]
        if v == graph.y:
            out.append(list(path))
            return
        for c in children[v]:
            walk(path + [c])

    walk([start])
    return out


def brute_basis_closure(graph: CausalGraph, S: int) -> tuple[int, int]:
    basis, closure = 0, S
    for j in range(graph.d):
        paths = directed_paths_to_target(graph, j)
        if S >> j & 1:
            # j matters if some path to Y avoids the rest of S
            if any(not any(S >> v & 1 for v in p[1:-1]) for p in paths):
                basis |= 1 << j
        elif all(any(S >> v & 1 for v in p[1:-1]) for p in paths):
            closure |= 1 << j
    return basis, closure


def brute_closures(graph: CausalGraph) -> dict[int, int]:
    """closure -> basis for every class, from all ``2^d`` coalitions."""
    out = {}
    for S in range(1 << graph.d):
        b, c = brute_basis_closure(graph, S)
        out.setdefault(c, b)
    return out


def random_table_game(rng: np.random.Generator, graph: CausalGraph) -> TableGame:
    """Random values on irreducible sets, extended to all coalitions through the basis."""
    values = {}
    for S in range(1 << graph.d):
        b = find_class(S, graph).basis
        if b not in values:
            values[b] = float(rng.normal())
    return TableGame(graph, values)


def shapley_p(d: int) -> list[float]:
    return [1.0 / (d * math.comb(d - 1, k)) for k in range(d)]


def rel_mse(est, truth) -> float:
    est, truth = np.asarray(est), np.asarray(truth)
    return float(np.sum((est - truth) ** 2) / np.sum(truth ** 2))
