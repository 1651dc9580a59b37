"""Non-parametric identifiability of interventional queries on ADMGs."""

from __future__ import annotations

from .graph import Admg, members


class _View:
    """An ADMG restricted to a node subset, as bit-masks."""

    __slots__ = ("nodes", "parents", "siblings")

    def __init__(self, nodes: int, parents, siblings):
        self.nodes = nodes
        self.parents = parents
        self.siblings = siblings

    def ancestors(self, targets: int, cut: int = 0) -> int:
        """Ancestors of ``targets`` (inclusive) with edges into ``cut`` removed."""
        seen = targets & self.nodes
        stack = members(seen)
        while stack:
            v = stack.pop()
            if cut >> v & 1:
                continue
            new = self.parents[v] & self.nodes & ~seen
            if new:
                seen |= new
                stack.extend(members(new))
        return seen

    def components(self, within: int) -> list[int]:
        """Maximal bidirected-connected subsets of ``within``, ordered by smallest member."""
        out = []
        left = within & self.nodes
        while left:
            start = left & -left
            comp = start
            stack = [start.bit_length() - 1]
            while stack:
                v = stack.pop()
                new = self.siblings[v] & left & ~comp
                if new:
                    comp |= new
                    stack.extend(members(new))
            out.append(comp)
            left &= ~comp
        return out


def _view(admg: Admg) -> _View:
    n = admg.num_nodes
    return _View((1 << n) - 1, admg.graph.parents, admg.siblings())


def c_components(admg: Admg) -> list[frozenset[int]]:
    view = _view(admg)
    return [frozenset(members(c)) for c in view.components(view.nodes)]


class _DepthGuard(RuntimeError):
    pass


def _id(T: int, S: int, G: _View, depth: int, limit: int, trace: list | None) -> bool:
    if depth > limit:
        raise _DepthGuard(f"recursion exceeded {limit} levels")
    if trace is not None:
        trace.append(depth)
    V = G.nodes
    if not S:
        return True
    anc = G.ancestors(T)
    if anc != V:
        sub = _View(anc, G.parents, G.siblings)
        return _id(T, S & anc, sub, depth + 1, limit, trace)
    W = (V & ~S) & ~G.ancestors(T, cut=S)
    if W:
        return _id(T, S | W, G, depth + 1, limit, trace)
    rest = V & ~S
    parts = G.components(rest)
    if len(parts) > 1:
        return all(_id(C, V & ~C, G, depth + 1, limit, trace) for C in parts)
    whole = G.components(V)
    if len(whole) == 1:
        return False
    if rest in whole:
        return True
    C = next(c for c in whole if c & rest == rest)
    return _id(T, S & C, _View(C, G.parents, G.siblings), depth + 1, limit, trace)


def id_identifiable(T, S, admg: Admg, trace: list | None = None) -> bool:
    """Whether ``P_S(T)`` is identifiable from the observational distribution.

    ``T`` and ``S`` are disjoint node sets given as iterables of node indices
    (the target has index ``admg.graph.d``) or as bit-masks.
    """
    T = T if isinstance(T, int) else sum(1 << v for v in T)
    S = S if isinstance(S, int) else sum(1 << v for v in S)
    if T & S:
        raise ValueError("outcome and intervention sets must be disjoint")
    if not T:
        raise ValueError("outcome set must be non-empty")
    n = admg.num_nodes
    return _id(T, S, _view(admg), 0, 3 * n + 3, trace)


def do_shapley_identifiable(admg: Admg) -> tuple[bool, list[int]]:
    """Check every singleton intervention on the target; O(d) calls to the ID recursion.

    All coalition values are identifiable exactly when every singleton is.
    Returns the verdict and the failing player indices.
    """
    y = 1 << admg.graph.y
    failing = [j for j in range(admg.graph.d) if not id_identifiable(y, 1 << j, admg)]
    return not failing, failing


def coalition_identifiable(admg: Admg, coalition: int) -> bool:
    return id_identifiable(1 << admg.graph.y, coalition, admg)


__all__ = ["c_components", "id_identifiable", "do_shapley_identifiable", "coalition_identifiable"]
