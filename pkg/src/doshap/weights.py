"""Cardinality-based semivalue weights and their per-class aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betaln

from .graph import CoalitionClass, size


@dataclass(frozen=True)
class WeightScheme:
    """Per-size weights ``p[l]`` paid to a marginal contribution to a coalition of size ``l``."""

    name: str
    p: tuple[float, ...]

    @property
    def d(self) -> int:
        return len(self.p)

    def __str__(self) -> str:
        return self.name

    @classmethod
    def shapley(cls, d: int) -> "WeightScheme":
        return cls("shapley", tuple(1.0 / (d * math.comb(d - 1, ell)) for ell in range(d)))

    @classmethod
    def banzhaf(cls, d: int) -> "WeightScheme":
        return cls("banzhaf", (2.0 ** -(d - 1),) * d)

    @classmethod
    def weighted_banzhaf(cls, d: int, w: float) -> "WeightScheme":
        if not 0.0 < w < 1.0:
            raise ValueError("weighted Banzhaf parameter must lie in (0, 1)")
        return cls(f"weighted-banzhaf:{w!r}", tuple(w**ell * (1 - w) ** (d - 1 - ell) for ell in range(d)))

    @classmethod
    def beta_shapley(cls, d: int, alpha: float, beta: float) -> "WeightScheme":
        """Beta(alpha, beta) semivalue; ``alpha = beta = 1`` recovers Shapley.

        Large ``alpha`` favours small coalitions.
        """
        if alpha <= 0 or beta <= 0:
            raise ValueError("beta-Shapley parameters must be positive")
        norm = betaln(alpha, beta)
        p = tuple(float(np.exp(betaln(ell + beta, d - 1 - ell + alpha) - norm)) for ell in range(d))
        total = math.fsum(math.comb(d - 1, ell) * q for ell, q in enumerate(p))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"beta-Shapley weights do not normalize (sum={total})")
        return cls(f"beta:{alpha!r},{beta!r}", p)

    @classmethod
    def parse(cls, spec: str, d: int) -> "WeightScheme":
        """Parse ``shapley``, ``banzhaf``, ``beta:a,b`` or ``weighted-banzhaf:w``."""
        name, _, args = spec.partition(":")
        if name == "shapley" and not args:
            return cls.shapley(d)
        if name == "banzhaf" and not args:
            return cls.banzhaf(d)
        if name == "beta":
            try:
                alpha, beta = (float(x) for x in args.split(","))
            except ValueError:
                raise ValueError(f"expected beta:ALPHA,BETA, got {spec!r}") from None
            return cls.beta_shapley(d, alpha, beta)
        if name == "weighted-banzhaf":
            return cls.weighted_banzhaf(d, float(args))
        raise ValueError(f"unknown weighting scheme {spec!r}")


@lru_cache(maxsize=None)
def _comb_row(n: int) -> tuple[float, ...]:
    return tuple(float(math.comb(n, k)) for k in range(n + 1))


def _branch_sums(scheme: WeightScheme, cls: CoalitionClass) -> tuple[float, float]:
    """(weight for basis members, weight for players outside the closure)."""
    b = size(cls.basis)
    c = size(cls.closure)
    row = _comb_row(c - b)
    p = scheme.p
    pos = math.fsum(p[ell - 1] * row[ell - b] for ell in range(max(b, 1), c + 1))
    neg = -math.fsum(p[ell] * row[ell - b] for ell in range(b, min(c, scheme.d - 1) + 1))
    return pos, neg


def class_weight(scheme: WeightScheme, cls: CoalitionClass, player: int, d: int) -> float:
    """Total semivalue weight that ``player`` puts on the value of class ``cls``."""
    if not 0 <= player < d:
        raise ValueError(f"player index {player} out of range for d={d}")
    bit = 1 << player
    if cls.basis & bit:
        return _branch_sums(scheme, cls)[0]
    if cls.closure & bit:
        return 0.0
    return _branch_sums(scheme, cls)[1]


def class_weights(scheme: WeightScheme, cls: CoalitionClass, d: int) -> np.ndarray:
    """Vector of :func:`class_weight` over all players."""
    pos, neg = _branch_sums(scheme, cls)
    out = np.empty(d)
    for i in range(d):
        bit = 1 << i
        out[i] = pos if cls.basis & bit else (0.0 if cls.closure & bit else neg)
    return out


def mean_abs_weight(scheme: WeightScheme, cls: CoalitionClass, d: int) -> float:
    pos, neg = _branch_sums(scheme, cls)
    n_basis = size(cls.basis)
    n_out = d - size(cls.closure)
    return (n_basis * abs(pos) + n_out * abs(neg)) / d
