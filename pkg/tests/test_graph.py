import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doshap.graph import (
    Admg,
    CausalGraph,
    GraphError,
    MAX_PLAYERS,
    ancestors_of_target,
    find_class,
    latent_projection,
    subsets,
)
from support import CHAIN3, STAR3, brute_basis_closure, random_dag


def m(g, *names):
    return g.mask_of(names)


def test_ancestors_examples():
    assert ancestors_of_target(CHAIN3, 0) == m(CHAIN3, "1", "2", "3")
    assert ancestors_of_target(CHAIN3, m(CHAIN3, "3")) == m(CHAIN3, "3")
    assert ancestors_of_target(STAR3, STAR3.full) == STAR3.full


def test_find_class_examples():
    c = find_class(m(CHAIN3, "1", "2"), CHAIN3)
    assert (c.basis, c.closure) == (m(CHAIN3, "2"), m(CHAIN3, "1", "2"))
    c = find_class(CHAIN3.full, CHAIN3)
    assert (c.basis, c.closure) == (m(CHAIN3, "3"), CHAIN3.full)
    c = find_class(0, CHAIN3)
    assert (c.basis, c.closure) == (0, 0)
    c = find_class(m(STAR3, "1", "3"), STAR3)
    assert (c.basis, c.closure) == (m(STAR3, "1", "3"), m(STAR3, "1", "3"))


def test_find_class_matches_path_enumeration(rng):
    for _ in range(30):
        g = random_dag(rng, int(rng.integers(1, 7)))
        for S in range(1 << g.d):
            c = find_class(S, g)
            assert (c.basis, c.closure) == brute_basis_closure(g, S)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 8))
def test_idempotence_and_sandwich(seed, d):
    g = random_dag(np.random.default_rng(seed), d)
    for S in range(1 << d):
        c = find_class(S, g)
        assert c.basis & ~S == 0 and S & ~c.closure == 0
        assert find_class(c.basis, g) == c
        assert find_class(c.closure, g) == c


def test_nesting_equal_basis_means_equal_closure(rng):
    for _ in range(10):
        g = random_dag(rng, int(rng.integers(2, 8)))
        classes = [find_class(S, g) for S in range(1 << g.d)]
        for S in range(1 << g.d):
            for T in subsets(g.full & ~S):
                a, b = classes[S], classes[S | T]
                if a.basis == b.basis:
                    assert a.closure == b.closure


def test_all_players_are_ancestors_after_pruning():
    g = CausalGraph.from_edges(["a", "b", "c", "z"], "Y", [("a", "b"), ("b", "Y"), ("c", "z")])
    assert g.names == ("a", "b")
    assert set(g.pruned) == {"c", "z"}
    assert ancestors_of_target(g, 0) == g.full


def test_graph_validation():
    with pytest.raises(GraphError):
        CausalGraph.from_edges(["a", "b"], "Y", [("a", "b"), ("b", "a"), ("a", "Y")])
    with pytest.raises(GraphError):
        CausalGraph.from_edges(["a"], "Y", [("a", "q")])
    with pytest.raises(GraphError):
        CausalGraph.from_edges(["a"], "Y", [("a", "a")])
    names = [f"x{i}" for i in range(MAX_PLAYERS + 1)]
    with pytest.raises(GraphError):
        CausalGraph.from_edges(names, "Y", [(n, "Y") for n in names])


def test_edges_out_of_target_are_pruned_or_rejected():
    # a child of Y cannot reach Y in an acyclic graph, so it is pruned
    g = CausalGraph.from_edges(["a", "b"], "Y", [("a", "Y"), ("Y", "b")])
    assert g.names == ("a",)
    assert g.pruned == ("b",)


def test_sixty_four_players():
    names = [f"x{i}" for i in range(MAX_PLAYERS)]
    g = CausalGraph.from_edges(names, "Y", [(n, "Y") for n in names])
    assert g.d == 64
    c = find_class(g.full, g)
    assert c.basis == c.closure == g.full


def test_latent_projection_bow_arc():
    admg = latent_projection(["X", "Y"], "Y", [("X", "Y"), ("U", "X"), ("U", "Y")], ["U"])
    g = admg.graph
    assert g.names == ("X",)
    assert g.edges() == [(0, 1)]
    assert admg.bidirected == frozenset({frozenset({0, 1})})


def test_latent_projection_identity_without_latents():
    edges = [("1", "2"), ("2", "3"), ("3", "Y")]
    admg = latent_projection(["1", "2", "3"], "Y", edges, [])
    assert admg.graph.edges() == CHAIN3.edges()
    assert admg.bidirected == frozenset()


def test_latent_projection_mediated_edge():
    admg = latent_projection(["A", "B"], "Y", [("A", "U"), ("U", "B"), ("B", "Y")], ["U"])
    g = admg.graph
    assert (g.index("A"), g.index("B")) in g.edges()
    assert admg.bidirected == frozenset()


def test_latent_projection_rejects_cycles():
    with pytest.raises(GraphError):
        latent_projection(["A"], "Y", [("A", "U"), ("U", "A"), ("A", "Y")], ["U"])


def test_admg_validation():
    with pytest.raises(GraphError):
        Admg.from_edges(["X"], "Y", [("X", "Y")], [("X", "X")])
    with pytest.raises(GraphError):
        Admg.from_edges(["X"], "Y", [("X", "Y")], [("X", "Q")])
