"""Multi-exercise pricing by stacked Dynkin games.

The L-claim game reduces to L single-stopping games: let V0 = 0 and, for
k = 1..L (k counts REMAINING claims, so stack level k plays claim L-k+1),

    Xk(n) = X_{L-k+1}(n) + E~[V_{k-1}(min(n+1, N)) | node],
    Yk(n) = Y_{L-k+1}(n) + E~[V_{k-1}(min(n+1, N)) | node],

and Vk = the Dynkin value of (Xk, Yk) under the martingale measure. The
price is V_L at the root. The added term is the value of everything still to
come, delayed one period (no delay at maturity, where all remaining claims
settle together).

Strategies here are per-claim stopping rules fed with the realized payoff
history ((a_1, d_1), ..), a_j the j-th payoff level and d_j = 1 when the
seller cancelled strictly first. resolve() plays two strategies against each
other pathwise; game_value() takes the expectation of the resulting payoff
stream under the martingale measure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .contract import SwingContract
from .dynkin import DynkinSolution, StoppingTime, solve_dynkin
from .errors import ContractError
from .market import MARTINGALE, AdaptedProcess, ScenarioTree, one_step_expectation


class StoppingStrategy:
    """Base class: a per-claim stopping rule over realized payoff histories.

    history is a tuple of (level, d) pairs for the claims already settled,
    d = 1 when the seller cancelled strictly first, else 0. Subclasses
    override stops(); level-N stops are forced by the resolver regardless.
    """

    def __init__(self, tree: ScenarioTree, L: int):
        self.tree = tree
        self.L = L

    def stops(self, i: int, k: int, m: int, history: tuple) -> bool:
        raise NotImplementedError


def window_start(history: tuple, N: int) -> int:
    """First level where the next claim may be stopped."""
    if not history:
        return 0
    return min(history[-1][0] + 1, N)


class TableStrategy(StoppingStrategy):
    """History-independent rule: one stop/continue table per claim."""

    def __init__(self, tree, L, tables):
        super().__init__(tree, L)
        if len(tables) != L:
            raise ContractError(f"need {L} claim tables, got {len(tables)}")
        self.tables = [dict(t) for t in tables]

    def stops(self, i, k, m, history):
        return self.tables[i - 1].get((k, m), False)

    @classmethod
    def all_at_start(cls, tree, L):
        """Stop every claim as early as its window allows."""
        full = {(k, m): True for k in range(tree.N) for m in range(2 ** k)}
        return cls(tree, L, [dict(full) for _ in range(L)])

    @classmethod
    def all_wait(cls, tree, L):
        """Never stop early; everything settles at maturity."""
        return cls(tree, L, [{} for _ in range(L)])


class RuleStrategy(StoppingStrategy):
    """Wraps rule(i, history) -> StoppingTime, validating the delay window."""

    def __init__(self, tree, L, rule):
        super().__init__(tree, L)
        self.rule = rule

    def stops(self, i, k, m, history):
        st = self.rule(i, history)
        theta = window_start(history, self.tree.N)
        # A stopping time that fires before this claim's window is a broken
        # rule, not a market event; refuse it loudly.
        for kk in range(st.start, k):
            if kk < theta and st.stops_at(kk, m >> (k - kk)):
                raise ContractError(
                    f"claim {i} rule stops at level {kk}, window opens at {theta}"
                )
        return st.stops_at(k, m)


@dataclass(frozen=True)
class ClaimEvent:
    """One settled claim along one path."""

    level: int
    d: int  # 1 when the seller cancelled strictly first
    seller_stopped: bool
    buyer_stopped: bool


class ResolvedPlay:
    """The pathwise outcome of playing two strategies against each other."""

    def __init__(self, tree: ScenarioTree, L: int, events: dict):
        self.tree = tree
        self.L = L
        self.events = events  # path -> tuple of ClaimEvent, length L

    def payoff_levels(self, path: int):
        return tuple(e.level for e in self.events[path])

    def counter(self, path: int, k: int) -> int:
        """Number of claims settled by level k along the path."""
        return sum(1 for e in self.events[path] if e.level <= k)


def resolve(s: StoppingStrategy, b: StoppingStrategy) -> ResolvedPlay:
    """Play seller strategy s against buyer strategy b on every path."""
    tree = s.tree
    if b.tree is not tree or b.L != s.L:
        raise ContractError("strategies disagree on tree or claim count")
    L, N = s.L, tree.N
    events = {}
    for path in tree.paths():
        hist = ()
        out = []
        for i in range(1, L + 1):
            theta = window_start(hist, N)
            for k in range(theta, N + 1):
                m = tree.node_on_path(path, k)
                forced = k == N
                ss = forced or s.stops(i, k, m, hist)
                bs = forced or b.stops(i, k, m, hist)
                if ss or bs:
                    d = 0 if bs else 1
                    out.append(ClaimEvent(level=k, d=d, seller_stopped=ss, buyer_stopped=bs))
                    hist = hist + ((k, d),)
                    break
        events[path] = tuple(out)
    return ResolvedPlay(tree, L, events)


def game_value(contract: SwingContract, s: StoppingStrategy, b: StoppingStrategy) -> Fraction:
    """Expected total settlement under the martingale measure."""
    tree = contract.tree
    play = resolve(s, b)
    total = Fraction(0)
    for path in tree.paths():
        amount = Fraction(0)
        for i, ev in enumerate(play.events[path], start=1):
            node = tree.node_on_path(path, ev.level)
            proc = contract.Y(i) if ev.d == 0 else contract.X(i)
            amount += proc.at(ev.level, node)
        total += tree.path_prob(path, tree.ptilde) * amount
    return total


@dataclass
class ValueStack:
    """Aggregated processes Xk, Yk, Vk for k = 1..L remaining claims."""

    contract: SwingContract
    X: list  # X[k-1] is the k-remaining aggregate cancellation process
    Y: list
    V: list
    solutions: list  # DynkinSolution per stack level

    def price(self) -> Fraction:
        return self.V[-1].at(0, 0)


def price_swing(contract: SwingContract):
    """Build the value stack; returns (stack, price at the root)."""
    tree = contract.tree
    L, N = contract.L, tree.N
    xs, ys, vs, sols = [], [], [], []
    v_prev = AdaptedProcess.constant(tree, 0)
    for k in range(1, L + 1):
        i = L - k + 1
        cont_rows = [one_step_expectation(v_prev, n, MARTINGALE) for n in range(N)]
        cont_rows.append(list(v_prev.values[N]))  # no delay left at maturity
        Xk = AdaptedProcess(tree, [
            [contract.X(i).at(n, m) + cont_rows[n][m] for m in range(2 ** n)]
            for n in range(N + 1)
        ])
        Yk = AdaptedProcess(tree, [
            [contract.Y(i).at(n, m) + cont_rows[n][m] for m in range(2 ** n)]
            for n in range(N + 1)
        ])
        sol = solve_dynkin(Xk, Yk, MARTINGALE)
        xs.append(Xk)
        ys.append(Yk)
        vs.append(sol.value)
        sols.append(sol)
        v_prev = sol.value
    stack = ValueStack(contract=contract, X=xs, Y=ys, V=vs, solutions=sols)
    return stack, stack.price()


def optimal_strategies(stack: ValueStack):
    """The saddle-point strategies read off the stack.

    Claim i consults stack level k = L-i+1: the seller stops where Xk = Vk,
    the buyer where Yk = Vk, each at the first such level inside the claim's
    window (level N is forced by the resolver).
    """
    contract = stack.contract
    tree = contract.tree
    L, N = contract.L, tree.N
    seller_tables, buyer_tables = [], []
    for i in range(1, L + 1):
        k = L - i + 1
        Xk, Yk, Vk = stack.X[k - 1], stack.Y[k - 1], stack.V[k - 1]
        st = {}
        bt = {}
        for lvl in range(N):
            for m in range(2 ** lvl):
                if Xk.at(lvl, m) == Vk.at(lvl, m):
                    st[(lvl, m)] = True
                if Yk.at(lvl, m) == Vk.at(lvl, m):
                    bt[(lvl, m)] = True
        seller_tables.append(st)
        buyer_tables.append(bt)
    return (
        TableStrategy(tree, L, seller_tables),
        TableStrategy(tree, L, buyer_tables),
    )
