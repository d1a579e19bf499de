"""Dynkin stopping games on the scenario tree.

Two players watch the same tree. The minimizer (seller) picks a stopping time
sigma, the maximizer (buyer) picks tau, and the settlement is

    R(sigma, tau) = X(sigma) if sigma < tau, else Y(tau),

so ties pay Y. With Y <= X the game has the value process

    V(N) = Y(N),
    V(n) = min(X(n), max(Y(n), E[V(n+1) | node])),

and stopping at the first node where X <= V (seller) or Y = V (buyer) is
optimal. When the order Y <= X fails at a node the value is simply Y there
(the maximizer stops; waiting is dominated). That branch never fires in the
pricing pipeline, but the shortfall engine feeds cost processes with no order
guarantee through the same recursion shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ContractError
from .market import MARKET, MARTINGALE, AdaptedProcess, ScenarioTree


def _measure_prob(tree: ScenarioTree, measure: str) -> Fraction:
    if measure == MARKET:
        return tree.params.p
    if measure == MARTINGALE:
        return tree.ptilde
    raise ContractError(f"unknown measure {measure!r}")


class StoppingTime:
    """An adapted stopping time with values in [start, N].

    decisions maps (level, node index) to True (stop) for levels below N;
    nodes without an entry continue. Every level-N node stops. Only nodes
    actually reachable without stopping need entries, which keeps enumerated
    stopping times minimal.
    """

    def __init__(self, tree: ScenarioTree, start: int = 0, decisions: dict = None):
        if not (0 <= start <= tree.N):
            raise ContractError(f"start level {start} out of range 0..{tree.N}")
        self.tree = tree
        self.start = start
        self.decisions = dict(decisions or {})

    def stops_at(self, k: int, m: int) -> bool:
        if k >= self.tree.N:
            return True
        if k < self.start:
            return False
        return self.decisions.get((k, m), False)

    def stop_level(self, path: int) -> int:
        """The level where this stopping time fires along the given path."""
        for k in range(self.start, self.tree.N + 1):
            if self.stops_at(k, self.tree.node_on_path(path, k)):
                return k
        raise AssertionError("unreachable: level N always stops")

    @classmethod
    def at_level(cls, tree: ScenarioTree, level: int, start: int = 0) -> "StoppingTime":
        """The constant stopping time: stop everywhere at `level`."""
        level = max(level, start)
        decisions = {(level, m): True for m in range(2 ** level)} if level < tree.N else {}
        return cls(tree, start, decisions)

    @classmethod
    def never(cls, tree: ScenarioTree, start: int = 0) -> "StoppingTime":
        """Wait until forced: stop only at level N."""
        return cls(tree, start, {})


@dataclass
class DynkinSolution:
    value: AdaptedProcess
    seller_stop: StoppingTime
    buyer_stop: StoppingTime
    start: int = 0


def solve_dynkin(X: AdaptedProcess, Y: AdaptedProcess, measure: str = MARTINGALE,
                 start_level: int = 0) -> DynkinSolution:
    """Backward induction for the game value and both optimal stopping times."""
    tree = X.tree
    if Y.tree is not tree:
        raise ContractError("X and Y must live on the same tree")
    q = _measure_prob(tree, measure)
    N = tree.N

    values = [None] * (N + 1)
    values[N] = list(Y.values[N])
    for k in range(N - 1, -1, -1):
        row = []
        nxt = values[k + 1]
        for m in range(2 ** k):
            y, x = Y.at(k, m), X.at(k, m)
            cont = q * nxt[2 * m + 1] + (1 - q) * nxt[2 * m]
            if y > x:
                row.append(y)
            else:
                row.append(min(x, max(y, cont)))
        values[k] = row
    V = AdaptedProcess(tree, values)

    seller = {}
    buyer = {}
    for k in range(start_level, N):
        for m in range(2 ** k):
            if X.at(k, m) <= V.at(k, m):
                seller[(k, m)] = True
            if Y.at(k, m) == V.at(k, m):
                buyer[(k, m)] = True
    return DynkinSolution(
        value=V,
        seller_stop=StoppingTime(tree, start_level, seller),
        buyer_stop=StoppingTime(tree, start_level, buyer),
        start=start_level,
    )


def evaluate_game(X: AdaptedProcess, Y: AdaptedProcess, sigma: StoppingTime,
                  tau: StoppingTime, measure: str = MARTINGALE) -> Fraction:
    """Exact expected settlement R(sigma, tau) over all paths."""
    tree = X.tree
    q = _measure_prob(tree, measure)
    total = Fraction(0)
    for path in tree.paths():
        m_s = sigma.stop_level(path)
        n_b = tau.stop_level(path)
        k = min(m_s, n_b)
        node = tree.node_on_path(path, k)
        pay = X.at(k, node) if m_s < n_b else Y.at(k, node)
        total += tree.path_prob(path, q) * pay
    return total


def certify_stopped_values(X: AdaptedProcess, Y: AdaptedProcess,
                           measure: str = MARTINGALE, start_level: int = 0):
    """Check the three stopped-value properties of the solved game.

    The value process stopped at the seller's optimal time must be a
    supermartingale, stopped at the buyer's a submartingale, and stopped at
    the earlier of the two a martingale, from start_level on. Returns
    (ok, failures) where failures lists (property, level, node).
    """
    tree = X.tree
    q = _measure_prob(tree, measure)
    sol = solve_dynkin(X, Y, measure, start_level)
    V, sig, tau = sol.value, sol.seller_stop, sol.buyer_stop
    failures = []

    # seller_live[k][m]: sigma has not fired at any level < k... <= k matters
    # only through whether the step k -> k+1 is still "alive".
    for name, stops in (("supermartingale", (sig,)), ("submartingale", (tau,)),
                        ("martingale", (sig, tau))):
        for k in range(start_level, tree.N):
            for m in range(2 ** k):
                # alive iff no relevant stopping time fired at a level <= k
                # along the path to (k, m), including at (k, m) itself
                alive = True
                for kk in range(start_level, k + 1):
                    node = m >> (k - kk)
                    if any(st.stops_at(kk, node) for st in stops):
                        alive = False
                        break
                if not alive:
                    continue
                cont = q * V.at(k + 1, 2 * m + 1) + (1 - q) * V.at(k + 1, 2 * m)
                v = V.at(k, m)
                ok = {
                    "supermartingale": cont <= v,
                    "submartingale": cont >= v,
                    "martingale": cont == v,
                }[name]
                if not ok:
                    failures.append((name, k, m))
    return (not failures, failures)
