"""Shortfall risk of partial hedges, exactly, and the optimal partial hedge.

A seller who starts with capital x below the perfect-hedge price cannot cover
every play from trading alone; whenever a settlement hits, money may have to
be injected. The shortfall risk is

    R(x) = inf over trading and injection policies of
           sup over buyer behaviours of E[ total injected ],

under the market measure. On the tree this is solved exactly: the cost-to-go
at each (node, rights-remaining) state is a decreasing piecewise-linear
function of wealth, closed under the two one-period transforms (portfolio
and infusion) and under pointwise min/max. The backward recursion composes,
per node and per remaining-rights count j with active right i = L - j + 1:

    continue  = portfolio transform of the children's cost at the same j
    exercise  = infusion transform (obligation Y_i) of the post-settlement
                portfolio transform at j - 1
    cancel    = the same with obligation X_i
    cost      = min(cancel, max(exercise, continue))

with terminal cost (sum of remaining exercise legs - wealth)^+. The optimal
share counts and injections fall out of the stored transform controls, and
the optimal cancellation behaviour is "cancel where the cancel branch is the
standing cost", evaluated at the wealth the policy itself produces.

Everything downstream of the recursion (policy evaluation, simulation, the
two-route risk evaluator) works for arbitrary admissible policies too, which
is what the randomized dominance checks exercise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractError, InvariantError
from .hedge import PortfolioStrategy
from .pwl import (
    PwlFn,
    infusion_transform,
    pointwise_max,
    pointwise_min,
    portfolio_transform,
)
from .swing import StoppingStrategy, resolve


@dataclass
class RiskStack:
    """All value functions and controls of the shortfall recursion.

    Keys are (level, node, rights-remaining). J covers every level; phi (the
    pre-decision portfolio transform), the branch functions and the controls
    exist below maturity only. phi at j = 0 is the zero function: with
    nothing left to pay, no cost and no trading.
    """

    contract: object
    J: dict
    phi: dict
    phi_ctrl: dict
    exercise: dict
    cancel: dict
    exercise_ctrl: dict
    cancel_ctrl: dict

    def curve(self) -> PwlFn:
        return self.J[(0, 0, self.contract.L)]

    def risk(self, x) -> Fraction:
        x = Fraction(x)
        if x < 0:
            raise ContractError(f"initial capital must be nonnegative, got {x}")
        return self.curve().eval(x)


def build_risk_stack(contract) -> RiskStack:
    tree = contract.tree
    N, L = tree.N, contract.L
    p = tree.params.p
    a, b = tree.params.a, tree.params.b
    J, phi, phi_ctrl = {}, {}, {}
    ex_fn, ca_fn, ex_ctrl, ca_ctrl = {}, {}, {}, {}

    for m in range(2 ** N):
        J[(N, m, 0)] = PwlFn.zero()
        for j in range(1, L + 1):
            J[(N, m, j)] = PwlFn.hockey_stick(contract.terminal_bundle(L - j + 1, m))

    for k in range(N - 1, -1, -1):
        for m in range(2 ** k):
            up, dn = tree.children(k, m)
            J[(k, m, 0)] = PwlFn.zero()
            phi[(k, m, 0)] = PwlFn.zero()
            for j in range(1, L + 1):
                i = L - j + 1
                pj, ctrl = portfolio_transform(
                    J[(k + 1, up, j)], J[(k + 1, dn, j)], p, a, b
                )
                phi[(k, m, j)] = pj
                phi_ctrl[(k, m, j)] = ctrl
                settled = phi[(k, m, j - 1)]
                e_fn, e_ctrl = infusion_transform(settled, contract.Y(i).at(k, m))
                c_fn, c_ctrl = infusion_transform(settled, contract.X(i).at(k, m))
                ex_fn[(k, m, j)] = e_fn
                ca_fn[(k, m, j)] = c_fn
                ex_ctrl[(k, m, j)] = e_ctrl
                ca_ctrl[(k, m, j)] = c_ctrl
                J[(k, m, j)] = pointwise_min(c_fn, pointwise_max(e_fn, pj))

    return RiskStack(
        contract=contract,
        J=J,
        phi=phi,
        phi_ctrl=phi_ctrl,
        exercise=ex_fn,
        cancel=ca_fn,
        exercise_ctrl=ex_ctrl,
        cancel_ctrl=ca_ctrl,
    )


def shortfall_risk(contract, x) -> Fraction:
    return build_risk_stack(contract).risk(x)


def infusion_minimizer(fn: PwlFn, y):
    """(smallest optimal injection, resulting wealth) for cost-to-go fn.

    Minimizes w + fn(w) over w >= max(y, 0), taking the leftmost minimizer.
    y may be negative (wealth after an unpaid obligation); the injection
    w - y is then at least the debt.
    """
    y = Fraction(y)
    c = max(y, Fraction(0))
    best_v, best_w = None, None
    for w in [c] + [bp for bp, _ in fn.points if bp > c]:
        v = w + fn.eval(w)
        if best_v is None or v < best_v:
            best_v, best_w = v, w
    return best_w - y, best_w


class StackPortfolio(PortfolioStrategy):
    """Optimal share counts: the stored portfolio control over the price."""

    def __init__(self, stack: RiskStack):
        self.stack = stack
        self.tree = stack.contract.tree

    def units(self, level, node, claim, wealth):
        L = self.stack.contract.L
        if claim > L or level >= self.tree.N:
            return Fraction(0)
        j = L - claim + 1
        alpha = self.stack.phi_ctrl[(level, node, j)].eval(max(Fraction(wealth), Fraction(0)))
        return alpha / self.tree.price[level][node]


class StackInfusion:
    """Optimal injections. amount(level, node, claim, y) with y the wealth
    left after claim's settlement amount was charged (possibly negative)."""

    def __init__(self, stack: RiskStack):
        self.stack = stack
        self.contract = stack.contract

    def amount(self, level, node, claim, y):
        y = Fraction(y)
        N = self.contract.tree.N
        if level == N:
            due = self.contract.terminal_bundle(claim + 1, node)
            return max(due - y, Fraction(0))
        j_left = self.contract.L - claim
        fn = self.stack.phi[(level, node, j_left)]
        amount, _ = infusion_minimizer(fn, y)
        return amount


class ReplayStrategy(StoppingStrategy):
    """Stopping behaviour of the optimal partial hedge.

    The stop test compares branch values at the wealth the policy actually
    holds, so the strategy replays its own wealth from the start of the tree
    to the queried node; the node index encodes the whole path prefix, and
    the history carries the settlements, so the replay is exact. Exposes the
    same test wealth-directly for recursive evaluators.
    """

    def __init__(self, stack: RiskStack, x, gamma, infusion, side):
        contract = stack.contract
        super().__init__(contract.tree, contract.L)
        if side not in ("seller", "buyer"):
            raise ContractError(f"unknown side {side!r}")
        self.stack = stack
        self.contract = contract
        self.x = Fraction(x)
        self.gamma = gamma
        self.infusion = infusion
        self.side = side

    def stops_at_state(self, k, m, j, wealth):
        w = max(Fraction(wealth), Fraction(0))
        branch = self.stack.cancel if self.side == "seller" else self.stack.exercise
        return branch[(k, m, j)].eval(w) == self.stack.J[(k, m, j)].eval(w)

    def _wealth(self, k, m, history):
        tree = self.tree
        events = {lvl: (q, d) for q, (lvl, d) in enumerate(history, start=1)}
        w = self.x
        for lvl in range(k):
            node = m >> (k - lvl)
            if lvl in events:
                q, d = events[lvl]
                leg = self.contract.Y(q) if d == 0 else self.contract.X(q)
                rest = w - leg.at(lvl, node)
                w = rest + self.infusion.amount(lvl, node, q, rest)
            settled = sum(1 for e in history if e[0] <= lvl)
            if settled < self.L:
                shares = self.gamma.units(lvl, node, settled + 1, w)
                nxt = m >> (k - lvl - 1)
                w = w + shares * (tree.price[lvl + 1][nxt] - tree.price[lvl][node])
        return w

    def stops(self, i, k, m, history):
        if k >= self.tree.N:
            return True
        return self.stops_at_state(k, m, self.L - i + 1, self._wealth(k, m, history))


def optimal_hedge(stack: RiskStack, x):
    """(shares, injections, cancellation strategy) attaining the risk at x."""
    gamma = StackPortfolio(stack)
    infusion = StackInfusion(stack)
    seller = ReplayStrategy(stack, x, gamma, infusion, "seller")
    return gamma, infusion, seller


def optimal_buyer(stack: RiskStack, x):
    """The buyer behaviour extracting the full risk against the hedge at x."""
    gamma = StackPortfolio(stack)
    infusion = StackInfusion(stack)
    return ReplayStrategy(stack, x, gamma, infusion, "buyer")


# ---------------------------------------------------------------------------
# running and evaluating arbitrary policies

@dataclass
class SimulationOutcome:
    pre: list     # wealth at each level before that level's settlements
    post: list    # after settlements and injections
    infusions: list  # (level, claim, amount)
    cost: Fraction


def _checked_infusion(infusion, level, node, claim, y):
    z = Fraction(infusion.amount(level, node, claim, y))
    if z < 0 or y + z < 0:
        raise InvariantError(
            f"injection {z} at level {level} leaves wealth {y + z}; "
            "policies must keep wealth nonnegative"
        )
    return z


def simulate_with_infusion(contract, gamma, infusion, events, path: int, x):
    """Run a partial hedge through one resolved play on one path."""
    tree = contract.tree
    N = tree.N
    by_level = {}
    for i, ev in enumerate(events, start=1):
        by_level.setdefault(ev.level, []).append((i, ev))
    w = Fraction(x)
    pre, post, paid_in = [], [], []
    cost = Fraction(0)
    for k in range(N + 1):
        node = tree.node_on_path(path, k)
        if k > 0:
            prev = tree.node_on_path(path, k - 1)
            settled = sum(len(v) for lvl, v in by_level.items() if lvl < k)
            if settled < contract.L:
                shares = gamma.units(k - 1, prev, settled + 1, w)
                w = w + shares * (tree.price[k][node] - tree.price[k - 1][prev])
        pre.append(w)
        for i, ev in by_level.get(k, []):
            leg = contract.Y(i) if ev.d == 0 else contract.X(i)
            rest = w - leg.at(k, node)
            z = _checked_infusion(infusion, k, node, i, rest)
            w = rest + z
            cost += z
            paid_in.append((k, i, z))
        post.append(w)
    return SimulationOutcome(pre=pre, post=post, infusions=paid_in, cost=cost)


def _terminal_cost(contract, infusion, m, first, y):
    """Injection total when claims first..L all settle at maturity node m."""
    cost = Fraction(0)
    for q in range(first, contract.L + 1):
        y = y - contract.Y(q).at(contract.tree.N, m)
        z = _checked_infusion(infusion, contract.tree.N, m, q, y)
        y += z
        cost += z
    return cost


def _checked_units(gamma, level, node, claim, w, tree):
    shares = Fraction(gamma.units(level, node, claim, w))
    a, b = tree.params.a, tree.params.b
    s = tree.price[level][node]
    if w + shares * s * b < 0 or w + shares * s * a < 0:
        raise InvariantError(
            f"share count {shares} at level {level} can bankrupt wealth {w}"
        )
    return shares


@dataclass
class PolicyRisk:
    value: Fraction
    table: dict  # (level, node, rights, wealth) -> (value, exercise, cancel, cont)


def evaluate_policy_risk(contract, gamma, infusion, x) -> PolicyRisk:
    """Exact worst-buyer cost of fixed trading and injection policies.

    The seller still cancels optimally against the given policies; the buyer
    plays the exact best response. For the policies extracted from a risk
    stack this reproduces the stack's value function state by state.
    """
    tree = contract.tree
    N, L = tree.N, contract.L
    p = tree.params.p
    a, b = tree.params.a, tree.params.b
    memo = {}

    def rec(k, m, j, y):
        if j == 0:
            return Fraction(0)
        if k == N:
            return _terminal_cost(contract, infusion, m, L - j + 1, y)
        key = (k, m, j, y)
        if key in memo:
            return memo[key][0]
        i = L - j + 1
        up, dn = tree.children(k, m)
        s = tree.price[k][m]

        def settle(amount):
            rest = y - amount
            z = _checked_infusion(infusion, k, m, i, rest)
            w = rest + z
            shares = _checked_units(gamma, k, m, i + 1, w, tree) if j > 1 else Fraction(0)
            return z + p * rec(k + 1, up, j - 1, w + shares * s * b) \
                + (1 - p) * rec(k + 1, dn, j - 1, w + shares * s * a)

        ex = settle(contract.Y(i).at(k, m))
        ca = settle(contract.X(i).at(k, m))
        shares = _checked_units(gamma, k, m, i, y, tree)
        cont = p * rec(k + 1, up, j, y + shares * s * b) \
            + (1 - p) * rec(k + 1, dn, j, y + shares * s * a)
        val = ex if ex > ca else min(ca, max(ex, cont))
        memo[key] = (val, ex, ca, cont)
        return val

    value = rec(0, 0, L, Fraction(x))
    return PolicyRisk(value=value, table=memo)


def evaluate_risk(contract, gamma, infusion, seller, x, mode="enumeration", cap=None):
    """Worst-buyer expected injection cost with the seller fully committed.

    Two deliberately different routes:

    enumeration: materialize every reduced buyer strategy, resolve each
    against the committed seller, simulate every path, take the worst
    expectation. Dumb and exhaustive.

    recursion: state recursion on (node, rights, wealth) where the seller's
    committed decision is read per state; needs a seller exposing
    stops_at_state.

    The two must agree exactly; tests hold them against each other.
    """
    x = Fraction(x)
    if mode == "enumeration":
        from .oracle import DEFAULT_ENUMERATION_CAP, enumerate_buyer_strategies

        buyers = enumerate_buyer_strategies(
            contract, cap=DEFAULT_ENUMERATION_CAP if cap is None else cap
        )
        p = contract.tree.params.p
        worst = None
        for buyer in buyers:
            play = resolve(seller, buyer)
            total = Fraction(0)
            for path in contract.tree.paths():
                out = simulate_with_infusion(
                    contract, gamma, infusion, play.events[path], path, x
                )
                total += contract.tree.path_prob(path, p) * out.cost
            if worst is None or total > worst:
                worst = total
        return worst
    if mode == "recursion":
        if not hasattr(seller, "stops_at_state"):
            raise ContractError(
                "recursion mode needs a seller with wealth-addressed decisions"
            )
        tree = contract.tree
        N, L = tree.N, contract.L
        p = tree.params.p
        a, b = tree.params.a, tree.params.b
        memo = {}

        def rec(k, m, j, y):
            if j == 0:
                return Fraction(0)
            if k == N:
                return _terminal_cost(contract, infusion, m, L - j + 1, y)
            key = (k, m, j, y)
            if key in memo:
                return memo[key]
            i = L - j + 1
            up, dn = tree.children(k, m)
            s = tree.price[k][m]

            def settle(amount):
                rest = y - amount
                z = _checked_infusion(infusion, k, m, i, rest)
                w = rest + z
                shares = _checked_units(gamma, k, m, i + 1, w, tree) if j > 1 else Fraction(0)
                return z + p * rec(k + 1, up, j - 1, w + shares * s * b) \
                    + (1 - p) * rec(k + 1, dn, j - 1, w + shares * s * a)

            ex = settle(contract.Y(i).at(k, m))
            if seller.stops_at_state(k, m, j, y):
                val = max(ex, settle(contract.X(i).at(k, m)))
            else:
                shares = _checked_units(gamma, k, m, i, y, tree)
                cont = p * rec(k + 1, up, j, y + shares * s * b) \
                    + (1 - p) * rec(k + 1, dn, j, y + shares * s * a)
                val = max(ex, cont)
            memo[key] = val
            return val

        return rec(0, 0, L, x)
    raise ContractError(f"unknown evaluation mode {mode!r}")
