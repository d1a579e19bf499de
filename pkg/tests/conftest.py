"""Shared generators for randomized tests.

Random instances are drawn from seeded random.Random objects so every run
sees the same cases; hypothesis handles the shrinking-style properties and
these helpers handle the structured ones (contracts, policies) that are
awkward to express as composite strategies.
"""

import random
from fractions import Fraction

from hypothesis import settings

from swinghedge.contract import build_contract
from swinghedge.market import MarketParams, build_tree

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


def random_params(rng: random.Random, max_n=3, n=None) -> MarketParams:
    den = rng.randint(2, 5)
    a = Fraction(-rng.randint(1, den - 1), den)
    b = Fraction(rng.randint(1, 6), rng.randint(1, 3))
    pden = rng.randint(2, 6)
    p = Fraction(rng.randint(1, pden - 1), pden)
    s0 = Fraction(rng.randint(1, 6), rng.randint(1, 2))
    return MarketParams(S0=s0, a=a, b=b, p=p,
                        N=n if n is not None else rng.randint(1, max_n))


def random_claim(rng: random.Random, params: MarketParams) -> dict:
    kind = rng.choice(["call", "call", "put"])
    strike = params.S0 * Fraction(rng.randint(1, 8), 4)
    pen = rng.choice(["constant", "constant", "proportional", "infinite-proxy"])
    if pen == "constant":
        penalty = {"kind": "constant", "value": Fraction(rng.randint(0, 6), 4)}
    elif pen == "proportional":
        penalty = {"kind": "proportional", "factor": Fraction(rng.randint(0, 8), 8)}
    else:
        penalty = {"kind": "infinite-proxy"}
    return {"exercise": {"kind": kind, "strike": strike}, "penalty": penalty}


def random_contract(rng: random.Random, max_n=3, max_l=2, n=None, l=None):
    params = random_params(rng, max_n=max_n, n=n)
    L = l if l is not None else rng.randint(1, max_l)
    return build_contract(
        {"claims": [random_claim(rng, params) for _ in range(L)]},
        tree=build_tree(params),
    )


def random_point(rng: random.Random, lo, hi) -> Fraction:
    """A rational drawn from [lo, hi] on a fairly fine grid."""
    den = rng.randint(1, 24)
    return lo + (hi - lo) * Fraction(rng.randint(0, den), den)


class MixPortfolio:
    """Admissible but otherwise arbitrary trading rule.

    At wealth y the solvency-preserving share counts form the interval
    [-y/(S b), -y/(S a)]; a per-state deterministic mix picks a point inside
    and scales linearly with wealth, so solvency is kept automatically.
    """

    def __init__(self, tree, seed: int):
        self.tree = tree
        self.seed = seed

    def _mix(self, level, node, claim) -> Fraction:
        h = (self.seed * 2654435761 + level * 97 + node * 31 + claim * 7) % 11
        return Fraction(h, 10)

    def units(self, level, node, claim, wealth):
        if level >= self.tree.N:
            return Fraction(0)
        w = Fraction(wealth)
        if w <= 0:
            return Fraction(0)
        s = self.tree.price[level][node]
        a, b = self.tree.params.a, self.tree.params.b
        lo, hi = -w / (s * b), -w / (s * a)
        return lo + self._mix(level, node, claim) * (hi - lo)


class PaddedInfusion:
    """Admissible injection rule: the forced floor plus a per-state pad."""

    def __init__(self, tree, seed: int):
        self.tree = tree
        self.seed = seed

    def amount(self, level, node, claim, y):
        floor = max(-Fraction(y), Fraction(0))
        if level >= self.tree.N:
            return floor
        h = (self.seed * 40503 + level * 13 + node * 29 + claim * 5) % 5
        return floor + Fraction(h, 8)


def random_policy(rng: random.Random, tree):
    seed = rng.randrange(2 ** 30)
    return MixPortfolio(tree, seed), PaddedInfusion(tree, seed ^ 0x5A5A)
