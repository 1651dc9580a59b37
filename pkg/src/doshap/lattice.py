"""Enumeration of the closed sets of the intervention lattice."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import CausalGraph, Coalition, CoalitionClass, find_class, members, size


@dataclass(frozen=True)
class ClassInventory:
    """All equivalence classes of a graph, in canonical order.

    Canonical order is closure size descending, then closure bit-set ascending.
    """

    d: int
    classes: tuple[CoalitionClass, ...]
    find_class_calls: int = 0

    @property
    def r(self) -> int:
        return len(self.classes)

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def __getitem__(self, i):
        return self.classes[i]

    def class_of(self, coalition: Coalition) -> CoalitionClass:
        """Linear scan lookup; prefer :func:`find_class` when a graph is at hand."""
        for c in self.classes:
            if coalition in c:
                return c
        raise KeyError(coalition)


def all_classes(graph: CausalGraph) -> ClassInventory:
    """Every closed set of ``graph``, each found exactly once.

    Starts from the full player set and walks down one level at a time: removing
    any basis member from a closed set leaves a closed set, and every closed set
    is reached this way. Once a closed set is simple (its own basis) all of its
    subsets are simple too, so their bases are known without a graph search.
    """
    d = graph.d
    levels: list[list[Coalition]] = [[] for _ in range(d + 1)]
    levels[d].append(graph.full)
    seen = {graph.full}
    known_simple: set[Coalition] = set()
    found = []
    calls = 0
    for ell in range(d, -1, -1):
        for closed in levels[ell]:
            if closed in known_simple:
                basis = closed
            else:
                cls = find_class(closed, graph)
                calls += 1
                assert cls.closure == closed, "enumerated a set that is not closed"
                basis = cls.basis
            simple = basis == closed
            found.append(CoalitionClass(basis, closed))
            for j in members(basis):
                child = closed & ~(1 << j)
                if simple:
                    known_simple.add(child)
                if child not in seen:
                    seen.add(child)
                    levels[ell - 1].append(child)
        levels[ell] = []
    found.sort(key=lambda c: (-size(c.closure), c.closure))
    return ClassInventory(d=d, classes=tuple(found), find_class_calls=calls)


def lattice_neighbors(cls: CoalitionClass, graph: CausalGraph) -> tuple[list[Coalition], list[Coalition]]:
    """Closed-set neighbours of a class: drop one basis member, or add one outside player."""
    lower = [cls.closure & ~(1 << j) for j in members(cls.basis)]
    upper = [cls.closure | (1 << j) for j in members(graph.full & ~cls.closure)]
    return lower, upper
