import threading

import numpy as np
import pytest

from doshap.exact import exact_values
from doshap.games import (
    FunctionGame,
    LinearScm,
    MissingValueError,
    OracleError,
    TableGame,
    linear_scm_mean,
    load_game,
)
from doshap.graph import find_class
from doshap.lattice import all_classes
from support import CHAIN3, chain, random_dag, random_table_game


def chain3_table():
    g = CHAIN3
    return TableGame(g, {0: 0.0, g.mask_of("1"): 1.0, g.mask_of("2"): 2.0, g.mask_of("3"): 3.0})


def unit_chain_scm(x=(1.0, 1.0, 1.0)):
    weights = {1: {0: 1.0}, 2: {1: 1.0}, 3: {2: 1.0}}
    return LinearScm(CHAIN3, weights, x=x)


def test_table_routes_through_basis():
    game = chain3_table()
    assert game.evaluate(CHAIN3.mask_of(["1", "2"])) == 2.0


def test_caching_counts_misses():
    game = chain3_table()
    game.evaluate(0)
    game.evaluate(0)
    assert game.queries == 1
    game.evaluate(CHAIN3.mask_of(["1", "2"]))
    game.evaluate(CHAIN3.mask_of(["2"]))
    assert game.queries == 2


def test_missing_entry():
    game = TableGame(CHAIN3, {0: 0.0})
    with pytest.raises(MissingValueError):
        game.evaluate(CHAIN3.mask_of("3"))
    assert issubclass(MissingValueError, OracleError)
    assert game.missing_bases(all_classes(CHAIN3)) == [4, 2, 1]


def test_linear_scm_examples():
    scm = unit_chain_scm()
    assert scm.evaluate(CHAIN3.mask_of("3")) == 1.0
    assert linear_scm_mean(scm, 0) == 0.0
    assert linear_scm_mean(scm, CHAIN3.mask_of("1")) == 1.0
    scm = unit_chain_scm((1.0, 1.0, 5.0))
    assert linear_scm_mean(scm, CHAIN3.mask_of(["1", "3"])) == 5.0


def test_linear_scm_rejects_non_edges():
    with pytest.raises(ValueError):
        LinearScm(CHAIN3, {3: {0: 1.0}})


def test_scm_class_consistency(rng):
    for _ in range(10):
        g = random_dag(rng, int(rng.integers(1, 9)))
        scm = LinearScm.random(g, rng)
        for S in range(1 << g.d):
            c = find_class(S, g)
            assert scm.mean(S) == pytest.approx(scm.mean(c.closure), abs=1e-12)
            assert scm.mean(S) == pytest.approx(scm.mean(c.basis), abs=1e-12)


def test_cache_soundness(rng):
    for _ in range(10):
        g = random_dag(rng, int(rng.integers(1, 8)))
        cached = random_table_game(rng, g)
        plain = TableGame(g, cached.values, cache=False)
        for S in rng.integers(0, 1 << g.d, size=100):
            assert cached.evaluate(int(S)) == plain.evaluate(int(S))


def test_query_count_equals_r(rng):
    for _ in range(10):
        g = random_dag(rng, int(rng.integers(1, 9)))
        game = random_table_game(rng, g)
        inv = all_classes(g)
        exact_values(inv, game)
        assert game.queries == inv.r


def test_concurrent_evaluation_is_serialized(rng):
    g = random_dag(rng, 6)
    calls = []
    lock = threading.Lock()

    def slow(S):
        with lock:
            calls.append(S)
        return float(S)

    game = FunctionGame(g, slow)
    inv = all_classes(g)
    ref = exact_values(inv, FunctionGame(g, lambda S: float(S))).values
    got = exact_values(inv, game, workers=8).values
    np.testing.assert_array_equal(got, ref)
    assert game.queries == inv.r == len(calls)
    assert len(set(calls)) == len(calls)


def test_monte_carlo_determinism_and_accuracy():
    g = chain(4)
    scm = LinearScm.random(g, np.random.default_rng(1))
    mc = scm.monte_carlo(samples=20_000, seed=7)
    again = scm.monte_carlo(samples=20_000, seed=7)
    for S in range(1 << g.d):
        assert mc.evaluate(S) == again.evaluate(S)
        assert mc.evaluate(S) == pytest.approx(scm.mean(S), abs=0.1)


def test_load_table_game():
    game = load_game({"type": "table", "values": {"": "0", "1": 1, "2": 2.0, "3": "3.5"}}, CHAIN3)
    assert game.evaluate(CHAIN3.full) == 3.5


def test_load_linear_scm():
    spec = {"type": "linear_scm", "coefficients": {"2": {"1": 1}, "3": {"2": 1}, "Y": {"3": 1}},
            "x": {"1": 1, "2": 1, "3": 1}}
    game = load_game(spec, CHAIN3)
    assert isinstance(game, LinearScm)
    assert game.evaluate(CHAIN3.mask_of("1")) == 1.0
    quiet = dict(spec, samples=100, seed=3, noise={"1": 0, "2": 0, "3": 0, "Y": 0})
    assert load_game(quiet, CHAIN3).evaluate(CHAIN3.mask_of("1")) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        load_game(dict(spec, samples=100), CHAIN3)
    with pytest.raises(ValueError):
        load_game({"type": "weird"}, CHAIN3)
