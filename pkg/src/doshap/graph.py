"""Causal graphs over players plus a single target node.

Coalitions are plain Python ints used as bit-sets: bit ``i`` set means player
``i`` is in the coalition. The target ``Y`` always has index ``d`` and is never
a coalition member.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

MAX_PLAYERS = 64

Coalition = int


class GraphError(ValueError):
    """Raised for malformed or unsupported graphs."""


def to_mask(indices: Iterable[int]) -> Coalition:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def members(mask: Coalition) -> list[int]:
    """Indices of the set bits of ``mask``, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def size(mask: Coalition) -> int:
    return bin(mask).count("1")


def subsets(mask: Coalition):
    """Yield every subset of ``mask`` (including 0 and ``mask`` itself)."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass(frozen=True)
class CoalitionClass:
    """One equivalence class ``{T : basis <= T <= closure}`` of the lattice."""

    basis: Coalition
    closure: Coalition

    @property
    def simple(self) -> bool:
        return self.basis == self.closure

    @property
    def free(self) -> Coalition:
        """Players in the closure that are not in the basis."""
        return self.closure & ~self.basis

    def __contains__(self, coalition: Coalition) -> bool:
        return coalition & self.basis == self.basis and coalition & ~self.closure == 0

    def num_members(self) -> int:
        return 1 << size(self.free)


def _topological_order(n: int, parents: Sequence[int]) -> list[int]:
    indegree = [size(p) for p in parents]
    children: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for p in members(parents[v]):
            children[p].append(v)
    queue = deque(v for v in range(n) if indegree[v] == 0)
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for c in children[v]:
            indegree[c] -= 1
            if indegree[c] == 0:
                queue.append(c)
    if len(order) != n:
        raise GraphError("graph contains a directed cycle")
    return order


def _ancestors_mask(n: int, parents: Sequence[int], targets: int) -> int:
    """Bit-mask of all ancestors of ``targets`` (targets included)."""
    seen = targets
    stack = members(targets)
    while stack:
        v = stack.pop()
        new = parents[v] & ~seen
        if new:
            seen |= new
            stack.extend(members(new))
    return seen


@dataclass(frozen=True)
class CausalGraph:
    """A DAG over ``d`` players and the target, with every player an ancestor of it.

    Build instances with :meth:`from_edges`, which prunes players that cannot
    reach the target and records their names in ``pruned``.
    """

    names: tuple[str, ...]
    target: str
    parents: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    pruned: tuple[str, ...] = ()
    _index: Mapping[str, int] = field(default_factory=dict, compare=False, repr=False)

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def y(self) -> int:
        return len(self.names)

    @property
    def full(self) -> Coalition:
        return (1 << self.d) - 1

    @property
    def num_edges(self) -> int:
        return sum(size(p) for p in self.parents)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, v) for v in range(self.d + 1) for p in members(self.parents[v])]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise GraphError(f"unknown player {name!r}") from None

    def mask_of(self, names: Iterable[str]) -> Coalition:
        return to_mask(self.index(n) for n in names)

    def names_of(self, mask: Coalition) -> list[str]:
        return [self.names[i] for i in members(mask)]

    @classmethod
    def from_edges(
        cls,
        nodes: Sequence[str],
        target: str,
        edges: Iterable[tuple[str, str]],
    ) -> "CausalGraph":
        """Validate and prune a DAG given by node names and ``(parent, child)`` edges.

        ``nodes`` may or may not list the target. Players with no directed path
        to the target are dropped.
        """
        all_nodes = [n for n in dict.fromkeys(nodes) if n != target] + [target]
        pos = {n: i for i, n in enumerate(all_nodes)}
        n = len(all_nodes)
        parents = [0] * n
        for a, b in edges:
            if a not in pos or b not in pos:
                raise GraphError(f"edge ({a!r}, {b!r}) references an unknown node")
            if a == b:
                raise GraphError(f"self-loop on {a!r}")
            parents[pos[b]] |= 1 << pos[a]
        _topological_order(n, parents)

        keep_mask = _ancestors_mask(n, parents, 1 << pos[target])
        keep = [v for v in range(n) if keep_mask >> v & 1]
        if len(keep) - 1 > MAX_PLAYERS:
            raise GraphError(f"at most {MAX_PLAYERS} players are supported, got {len(keep) - 1}")
        remap = {old: new for new, old in enumerate(keep)}
        new_parents = []
        for old in keep:
            new_parents.append(to_mask(remap[p] for p in members(parents[old]) if p in remap))
        names = tuple(all_nodes[v] for v in keep[:-1])
        pruned = tuple(all_nodes[v] for v in range(n - 1) if v not in remap)
        return cls._build(names, target, new_parents, pruned)

    @classmethod
    def _build(cls, names, target, parents, pruned=()) -> "CausalGraph":
        n = len(names) + 1
        children: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            for p in members(parents[v]):
                children[p].append(v)
        if children[n - 1]:
            raise GraphError("the target must not have outgoing edges")
        index = {name: i for i, name in enumerate(names)}
        if len(index) != len(names) or target in index:
            raise GraphError("node names must be unique")
        return cls(
            names=tuple(names),
            target=target,
            parents=tuple(parents),
            children=tuple(tuple(c) for c in children),
            pruned=tuple(pruned),
            _index=index,
        )

    @classmethod
    def from_parent_masks(cls, parents: Sequence[int], names: Sequence[str] | None = None,
                          target: str = "Y") -> "CausalGraph":
        """Build directly from per-node parent bit-masks (index ``d`` is the target).

        Non-ancestors of the target are pruned.
        """
        parents = [int(p) for p in parents]
        d = len(parents) - 1
        if names is None:
            names = [str(i + 1) for i in range(d)]
        edges = [(names[p], names[v] if v < d else target)
                 for v in range(d + 1) for p in members(parents[v])]
        return cls.from_edges(list(names), target, edges)


def ancestors_of_target(graph: CausalGraph, removed_incoming: Coalition = 0) -> Coalition:
    """Players with a directed path to the target once edges into ``removed_incoming`` are cut."""
    parents = graph.parents
    seen = 0
    stack = [graph.y]
    while stack:
        v = stack.pop()
        if removed_incoming >> v & 1:
            continue
        new = parents[v] & ~seen
        if new:
            seen |= new
            stack.extend(members(new))
    return seen


def find_class(coalition: Coalition, graph: CausalGraph) -> CoalitionClass:
    """Basis and closure of ``coalition`` in O(d + e)."""
    anc = ancestors_of_target(graph, coalition)
    return CoalitionClass(basis=coalition & anc, closure=coalition | (graph.full & ~anc))


@dataclass(frozen=True)
class Admg:
    """Acyclic directed mixed graph: a causal graph plus bidirected pairs.

    Bidirected pairs are stored as 2-element frozensets of node indices, where
    the target has index ``graph.d``.
    """

    graph: CausalGraph
    bidirected: frozenset = frozenset()

    def __post_init__(self):
        n = self.graph.d + 1
        for pair in self.bidirected:
            if len(pair) != 2 or not all(0 <= v < n for v in pair):
                raise GraphError(f"invalid bidirected pair {sorted(pair)}")

    @property
    def num_nodes(self) -> int:
        return self.graph.d + 1

    def node_name(self, v: int) -> str:
        return self.graph.target if v == self.graph.y else self.graph.names[v]

    def siblings(self) -> list[int]:
        """Per node, the bit-mask of its bidirected neighbours."""
        sib = [0] * self.num_nodes
        for pair in self.bidirected:
            a, b = tuple(pair)
            sib[a] |= 1 << b
            sib[b] |= 1 << a
        return sib

    @classmethod
    def from_edges(
        cls,
        nodes: Sequence[str],
        target: str,
        edges: Iterable[tuple[str, str]],
        bidirected: Iterable[tuple[str, str]] = (),
    ) -> "Admg":
        graph = CausalGraph.from_edges(nodes, target, edges)
        index = dict(graph._index)
        index[target] = graph.y
        pairs = set()
        all_names = set(nodes) | {target}
        for a, b in bidirected:
            if a not in all_names or b not in all_names:
                raise GraphError(f"bidirected edge ({a!r}, {b!r}) references an unknown node")
            if a == b:
                raise GraphError(f"bidirected self-loop on {a!r}")
            if a in index and b in index:
                pairs.add(frozenset((index[a], index[b])))
        return cls(graph, frozenset(pairs))


def latent_projection(
    nodes: Sequence[str],
    target: str,
    edges: Iterable[tuple[str, str]],
    latent: Iterable[str],
) -> Admg:
    """Project a DAG with unobserved nodes onto its measured nodes.

    Measured pairs joined by a directed path whose interior is latent get a
    directed edge; measured pairs that share a latent source (with all-latent
    directed paths to both) get a bidirected edge.
    """
    latent = set(latent)
    if target in latent:
        raise GraphError("the target must be measured")
    all_nodes = list(dict.fromkeys(list(nodes) + [target]))
    for a, b in edges:
        if a not in latent and a not in all_nodes:
            all_nodes.append(a)
        if b not in latent and b not in all_nodes:
            all_nodes.append(b)
    all_nodes = list(dict.fromkeys(all_nodes + sorted(latent - set(all_nodes))))
    pos = {n: i for i, n in enumerate(all_nodes)}
    n = len(all_nodes)
    parents = [0] * n
    kids: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        parents[pos[b]] |= 1 << pos[a]
        kids[pos[a]].append(pos[b])
    _topological_order(n, parents)
    is_latent = [name in latent for name in all_nodes]

    def measured_reach(start: int) -> list[int]:
        # measured nodes reachable from ``start`` along paths with latent interiors
        found, seen, stack = [], {start}, list(kids[start])
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            if is_latent[v]:
                stack.extend(kids[v])
            else:
                found.append(v)
        return found

    directed = []
    bidirected = set()
    for v in range(n):
        reach = measured_reach(v)
        if is_latent[v]:
            for i, a in enumerate(reach):
                for b in reach[i + 1:]:
                    bidirected.add(tuple(sorted((all_nodes[a], all_nodes[b]))))
        else:
            directed.extend((all_nodes[v], all_nodes[w]) for w in reach)
    measured = [name for name in all_nodes if name not in latent]
    return Admg.from_edges(measured, target, sorted(set(directed)), sorted(bidirected))
