import math

import numpy as np
import pytest

from doshap.exact import brute_force_values, exact_values
from doshap.graph import CoalitionClass, size, subsets
from doshap.lattice import all_classes
from doshap.weights import WeightScheme, class_weight, class_weights, mean_abs_weight
from support import CHAIN3, STAR3, random_dag, random_table_game

SH3 = WeightScheme.shapley(3)


def k(g, basis, closure):
    return CoalitionClass(g.mask_of(basis), g.mask_of(closure))


def brute_weight(scheme, c, i, d):
    terms = []
    for extra in subsets(c.free):
        T = c.basis | extra
        if T >> i & 1:
            terms.append(scheme.p[size(T) - 1])
        else:
            terms.append(-scheme.p[size(T)])
    return math.fsum(terms)


def test_shapley_p_d3():
    assert SH3.p == pytest.approx((1 / 3, 1 / 6, 1 / 3), abs=1e-15)


def test_class_weight_examples():
    c = k(CHAIN3, ["2"], ["1", "2"])
    assert class_weight(SH3, c, 1, 3) == pytest.approx(0.5, abs=1e-15)
    assert class_weight(SH3, c, 2, 3) == pytest.approx(-0.5, abs=1e-15)
    assert class_weight(SH3, c, 0, 3) == 0.0
    assert class_weight(SH3, k(CHAIN3, ["1"], ["1"]), 0, 3) == pytest.approx(1 / 3, abs=1e-15)


def test_class_weight_rejects_bad_player():
    with pytest.raises(ValueError):
        class_weight(SH3, CoalitionClass(0, 0), 3, 3)


def test_mean_abs_weight_examples():
    assert mean_abs_weight(SH3, k(CHAIN3, ["2"], ["1", "2"]), 3) == pytest.approx(1 / 3)
    assert mean_abs_weight(SH3, CoalitionClass(0, 0), 3) == pytest.approx(1 / 3)
    assert mean_abs_weight(SH3, CoalitionClass(STAR3.full, STAR3.full), 3) == pytest.approx(1 / 3)


@pytest.mark.parametrize("make", [
    WeightScheme.shapley,
    WeightScheme.banzhaf,
    lambda d: WeightScheme.beta_shapley(d, 2.0, 0.5),
    lambda d: WeightScheme.weighted_banzhaf(d, 0.3),
])
def test_class_weight_matches_enumeration(rng, make):
    for _ in range(15):
        g = random_dag(rng, int(rng.integers(1, 11)))
        scheme = make(g.d)
        for c in all_classes(g):
            w = class_weights(scheme, c, g.d)
            for i in range(g.d):
                assert w[i] == pytest.approx(brute_weight(scheme, c, i, g.d), abs=1e-12)
                assert w[i] == class_weight(scheme, c, i, g.d)


def test_efficiency_at_weight_level(rng):
    for _ in range(20):
        g = random_dag(rng, int(rng.integers(1, 9)))
        game = random_table_game(rng, g)
        inv = all_classes(g)
        scheme = WeightScheme.shapley(g.d)
        total = math.fsum(game.evaluate_class(c) * w for c in inv
                          for w in class_weights(scheme, c, g.d))
        assert total == pytest.approx(game(g.full) - game(0), abs=1e-12)


def test_banzhaf_swap_matches_brute_force(rng):
    for _ in range(20):
        g = random_dag(rng, int(rng.integers(1, 9)))
        game = random_table_game(rng, g)
        scheme = WeightScheme.banzhaf(g.d)
        got = exact_values(all_classes(g), game, scheme).values
        want = brute_force_values(game, g.d, scheme).values
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@pytest.mark.parametrize("d", [1, 2, 5, 12, 40])
def test_normalization(d):
    for scheme in (WeightScheme.shapley(d), WeightScheme.beta_shapley(d, 1.0, 1.0),
                   WeightScheme.beta_shapley(d, 4.0, 1.5), WeightScheme.weighted_banzhaf(d, 0.7)):
        assert math.fsum(math.comb(d - 1, l) * q for l, q in enumerate(scheme.p)) == pytest.approx(1.0)
        assert min(scheme.p) >= 0


def test_beta_one_one_is_shapley():
    np.testing.assert_allclose(WeightScheme.beta_shapley(7, 1, 1).p, WeightScheme.shapley(7).p,
                               rtol=1e-12)


def test_parse():
    assert WeightScheme.parse("shapley", 4).name == "shapley"
    assert WeightScheme.parse("banzhaf", 4).p == (1 / 8,) * 4
    assert WeightScheme.parse("beta:16,1", 4).name.startswith("beta")
    assert WeightScheme.parse("weighted-banzhaf:0.5", 4).p == pytest.approx((1 / 8,) * 4)
    for bad in ("nope", "beta:1", "beta:0,1", "weighted-banzhaf:2"):
        with pytest.raises(ValueError):
            WeightScheme.parse(bad, 4)


def test_large_d_precision():
    # weights at d = 64 stay accurate against exact rational arithmetic
    from fractions import Fraction
    d = 64
    scheme = WeightScheme.shapley(d)
    c = CoalitionClass(0b1, (1 << 40) - 1)
    exact = sum(Fraction(1, d * math.comb(d - 1, l - 1)) * math.comb(39, l - 1) for l in range(1, 41))
    assert class_weight(scheme, c, 0, d) == pytest.approx(float(exact), rel=1e-10)
