"""Binomial market model with exact rational arithmetic.

The market has one stock and one bond over N periods. Each period the stock
return is b (up) or a (down) with -1 < a < 0 < b; the bond rate is zero, so
money is its own discounting. The market measure gives probability p to the
up move. The unique martingale probability is ptilde = a / (a - b), the one
value that makes the expected one-step return vanish.

States are the nodes of the full (non-recombining) binary tree: a node is a
pair (level k, index m) with 0 <= m < 2^k, where the bits of m spell the path,
most significant bit first, 1 meaning up. Payoffs may depend on the whole
path, which is why the tree is not collapsed to a recombining lattice.

Everything is a fractions.Fraction. The recursions downstream contain exact
equality tests (optimal stopping ties, piecewise-linear breakpoints), so
floating point is never used.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractError

MARKET = "market"
MARTINGALE = "martingale"


def to_rational(value) -> Fraction:
    """Parse a scalar into an exact Fraction.

    Accepts Fractions, ints, and strings like "-1/2" or "3". Floats are
    rejected: they carry binary rounding that would poison exact ties.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ContractError(f"not a rational: {value!r}") from exc
    raise ContractError(f"not a rational: {value!r} (floats are not accepted)")


def format_rational(q: Fraction) -> str:
    """Render a Fraction as "num/den", or just "num" for integers."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def martingale_prob(a, b) -> Fraction:
    """The unique martingale up-probability ptilde = a / (a - b).

    Requires -1 < a < 0 < b; then ptilde * b + (1 - ptilde) * a = 0 and
    0 < ptilde < 1.
    """
    a, b = to_rational(a), to_rational(b)
    if not (Fraction(-1) < a < 0 < b):
        raise ContractError(f"need -1 < a < 0 < b, got a={a}, b={b}")
    return a / (a - b)


@dataclass(frozen=True)
class MarketParams:
    """Market primitives: initial price, returns, market probability, horizon."""

    S0: Fraction
    a: Fraction
    b: Fraction
    p: Fraction
    N: int

    def __post_init__(self):
        object.__setattr__(self, "S0", to_rational(self.S0))
        object.__setattr__(self, "a", to_rational(self.a))
        object.__setattr__(self, "b", to_rational(self.b))
        object.__setattr__(self, "p", to_rational(self.p))
        if self.S0 <= 0:
            raise ContractError(f"S0 must be positive, got {self.S0}")
        if not (Fraction(-1) < self.a < 0 < self.b):
            raise ContractError(f"need -1 < a < 0 < b, got a={self.a}, b={self.b}")
        if not (0 < self.p < 1):
            raise ContractError(f"need 0 < p < 1, got p={self.p}")
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ContractError(f"horizon N must be an integer >= 1, got {self.N!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "MarketParams":
        try:
            raw_n = d["N"]
        except (KeyError, TypeError) as exc:
            raise ContractError("model needs keys S0, a, b, p, N") from exc
        if isinstance(raw_n, str):
            if not raw_n.lstrip("-").isdigit():
                raise ContractError(f"N must be an integer, got {raw_n!r}")
            raw_n = int(raw_n)
        if not isinstance(raw_n, int) or isinstance(raw_n, bool):
            raise ContractError(f"N must be an integer, got {raw_n!r}")
        missing = [k for k in ("S0", "a", "b", "p") if k not in d]
        if missing:
            raise ContractError(f"model is missing keys: {', '.join(missing)}")
        return cls(S0=d["S0"], a=d["a"], b=d["b"], p=d["p"], N=raw_n)

    def to_dict(self) -> dict:
        return {
            "S0": format_rational(self.S0),
            "a": format_rational(self.a),
            "b": format_rational(self.b),
            "p": format_rational(self.p),
            "N": self.N,
        }


class ScenarioTree:
    """The full binary tree of market states for N periods.

    price[k][m] is the stock price at node (k, m). Immutable after build;
    share freely.
    """

    def __init__(self, params: MarketParams):
        self.params = params
        self.N = params.N
        self.ptilde = martingale_prob(params.a, params.b)
        up, down = 1 + params.b, 1 + params.a
        self.price = []
        level = [params.S0]
        self.price.append(level)
        for _ in range(self.N):
            nxt = []
            for s in level:
                # index 2m is the down child, 2m+1 the up child
                nxt.append(s * down)
                nxt.append(s * up)
            level = nxt
            self.price.append(level)

    @property
    def node_count(self) -> int:
        return 2 ** (self.N + 1) - 1

    def nodes(self):
        """Yield every (level, index) pair, root first."""
        for k in range(self.N + 1):
            for m in range(2 ** k):
                yield (k, m)

    def children(self, k: int, m: int):
        """(up child, down child) of node (k, m) at level k+1."""
        return (2 * m + 1, 2 * m)

    def node_on_path(self, path: int, k: int) -> int:
        """Index at level k of the node the N-bit path passes through."""
        return path >> (self.N - k)

    def paths(self):
        return range(2 ** self.N)

    def path_prob(self, path: int, q: Fraction) -> Fraction:
        """Probability of an N-step path when each up move has probability q."""
        ups = bin(path).count("1")
        return q ** ups * (1 - q) ** (self.N - ups)

    def path_bits(self, path: int) -> str:
        """The path as a string of u/d moves, first move first."""
        return format(path, f"0{self.N}b").replace("1", "u").replace("0", "d")


def build_tree(params: MarketParams) -> ScenarioTree:
    return ScenarioTree(params)


class AdaptedProcess:
    """One rational per tree node; values[k][m] aligns with tree.price."""

    def __init__(self, tree: ScenarioTree, values):
        self.tree = tree
        self.values = values
        if len(values) != tree.N + 1:
            raise ContractError("process does not cover every level")
        for k, level in enumerate(values):
            if len(level) != 2 ** k:
                raise ContractError(f"level {k} has {len(level)} values, wants {2 ** k}")

    @classmethod
    def from_function(cls, tree: ScenarioTree, fn) -> "AdaptedProcess":
        """Build from fn(level, index, price) -> rational."""
        values = [
            [to_rational(fn(k, m, tree.price[k][m])) for m in range(2 ** k)]
            for k in range(tree.N + 1)
        ]
        return cls(tree, values)

    @classmethod
    def constant(cls, tree: ScenarioTree, c) -> "AdaptedProcess":
        c = to_rational(c)
        return cls(tree, [[c] * (2 ** k) for k in range(tree.N + 1)])

    def at(self, k: int, m: int) -> Fraction:
        return self.values[k][m]

    def level(self, k: int):
        return self.values[k]


def one_step_expectation(proc: AdaptedProcess, level: int, measure: str) -> list:
    """Conditional expectation of the level+1 values, seen from each level node.

    Returns the list of expectations indexed like the tree's `level` row.
    measure is "market" (probability p) or "martingale" (ptilde).
    """
    tree = proc.tree
    if not (0 <= level < tree.N):
        raise ContractError(f"level {level} out of range for horizon {tree.N}")
    if measure == MARKET:
        q = tree.params.p
    elif measure == MARTINGALE:
        q = tree.ptilde
    else:
        raise ContractError(f"unknown measure {measure!r}")
    child = proc.values[level + 1]
    return [q * child[2 * m + 1] + (1 - q) * child[2 * m] for m in range(2 ** level)]
