"""Independent cross-checks for prices, strategies, and risk values.

Everything here recomputes quantities the fast code produces, by slower but
structurally different means: explicit enumeration of stopping times and of
full strategy profiles, best-response tables against a committed opponent,
pathwise play evaluation, direct candidate minimization for the one-period
transforms, and a bracketing grid scheme for the shortfall value. None of it
shares algorithmic machinery with the production recursions, so agreement is
evidence, not tautology.

Enumeration sizes explode quickly with depth. Every enumerating entry point
takes a cap and raises EnumerationCapError before materializing anything too
large; the caller decides whether to retry with a bigger budget.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .dynkin import StoppingTime, _measure_prob, evaluate_game
from .errors import ContractError, EnumerationCapError, InvariantError
from .market import MARTINGALE, format_rational, martingale_prob
from .swing import StoppingStrategy, window_start

DEFAULT_ENUMERATION_CAP = 500_000


# ---------------------------------------------------------------------------
# stopping-time enumeration

def count_stopping_times(tree, start_level=0):
    """Number of stopping times with values in [start_level, N]."""
    N = tree.params.N
    counts = {}
    for k in range(N, -1, -1):
        for m in range(2 ** k):
            if k == N:
                counts[(k, m)] = 1
            else:
                counts[(k, m)] = 1 + counts[(k + 1, 2 * m + 1)] * counts[(k + 1, 2 * m)]
    total = 1
    for m in range(2 ** start_level):
        total *= counts[(start_level, m)]
    return total


def enumerate_stopping_times(tree, start_level=0, cap=DEFAULT_ENUMERATION_CAP):
    """All stopping times taking values in [start_level, N], as objects.

    A stopping time is a per-node stop decision on the subtree below each
    level-start node; decisions after a stop are unreachable and not stored,
    so distinct returned objects are genuinely distinct stopping times.
    """
    total = count_stopping_times(tree, start_level)
    if total > cap:
        raise EnumerationCapError(total, cap)
    N = tree.params.N

    def subtree(k, m):
        if k == N:
            return [{}]
        out = [{(k, m): True}]
        ups = subtree(k + 1, 2 * m + 1)
        downs = subtree(k + 1, 2 * m)
        for du in ups:
            for dd in downs:
                merged = dict(du)
                merged.update(dd)
                out.append(merged)
        return out

    per_node = [subtree(start_level, m) for m in range(2 ** start_level)]
    result = []
    for combo in itertools.product(*per_node):
        decisions = {}
        for d in combo:
            decisions.update(d)
        result.append(StoppingTime(tree, start=start_level, decisions=decisions))
    return result


def dynkin_minimax(X, Y, measure=MARTINGALE, cap=DEFAULT_ENUMERATION_CAP):
    """Game value by full enumeration of both players' stopping times.

    Computes min over cancel times of the max over exercise times and the
    other order too; raises if they disagree (they never should).
    """
    tree = X.tree
    times = enumerate_stopping_times(tree, cap=cap)
    table = [[evaluate_game(X, Y, sig, tau, measure) for tau in times] for sig in times]
    upper = min(max(row) for row in table)
    lower = max(min(table[i][j] for i in range(len(times))) for j in range(len(times)))
    if upper != lower:
        raise InvariantError(f"enumerated game has a value gap: {lower} vs {upper}")
    return upper


# ---------------------------------------------------------------------------
# full strategy profiles for the multi-right game

def _bundle(contract, first, m):
    return contract.terminal_bundle(first, m) if first <= contract.L else Fraction(0)


def count_strategy_profiles(contract):
    """(seller, buyer) count of reduced strategies for the whole game.

    Reduced means: a strategy is specified only on states its own play can
    reach, so the counts are exact, not an overcount of formal decision
    tables.
    """
    s, b = _profile_counts(contract)
    root = (0, 0, 1)
    return s[root], b[root]


def _profile_counts(contract):
    tree = contract.tree
    N = tree.params.N
    L = contract.L
    nS, nB = {}, {}
    for k in range(N, -1, -1):
        for m in range(2 ** k):
            for i in range(L, 0, -1):
                if k == N:
                    nS[(k, m, i)] = nB[(k, m, i)] = 1
                    continue
                u, d = (k + 1, 2 * m + 1), (k + 1, 2 * m)
                cu, cd = nS[u + (i,)], nS[d + (i,)]
                if i < L:
                    xu, xd = nS[u + (i + 1,)], nS[d + (i + 1,)]
                    nS[(k, m, i)] = (xu * xd) ** 2 + xu * xd * cu * cd
                else:
                    nS[(k, m, i)] = 1 + cu * cd
                cu, cd = nB[u + (i,)], nB[d + (i,)]
                if i < L:
                    xu, xd = nB[u + (i + 1,)], nB[d + (i + 1,)]
                    nB[(k, m, i)] = xu * xd * (1 + cu * cd)
                else:
                    nB[(k, m, i)] = 1 + cu * cd
    return nS, nB


def enumerate_buyer_strategies(contract, cap=DEFAULT_ENUMERATION_CAP):
    """Materialize every reduced buyer strategy as a DictStrategy.

    A strategy carries decisions only on states its own play can reach: a
    stop decision ends the current right and branches into the next right's
    states, a continue decision branches into both the seller-cancelled
    continuation (next right, history gains a cancelled entry) and the quiet
    continuation (same right). Counts are checked against the closed-form
    recurrence before any tuples are built.
    """
    _, nB = _profile_counts(contract)
    total = nB[(0, 0, 1)]
    if total > cap:
        raise EnumerationCapError(total, cap)
    tree = contract.tree
    N, L = tree.N, contract.L

    def build(k, m, i, hist):
        if k == N:
            return [{}]
        up, dn = 2 * m + 1, 2 * m
        here = (i, k, m, hist)
        out = []
        if i < L:
            stopped = hist + ((k, 0),)
            for du in build(k + 1, up, i + 1, stopped):
                for dd in build(k + 1, dn, i + 1, stopped):
                    out.append({here: True, **du, **dd})
        else:
            out.append({here: True})
        if i < L:
            cancelled = hist + ((k, 1),)
            branches = (
                build(k + 1, up, i + 1, cancelled),
                build(k + 1, dn, i + 1, cancelled),
                build(k + 1, up, i, hist),
                build(k + 1, dn, i, hist),
            )
            for combo in itertools.product(*branches):
                d = {here: False}
                for part in combo:
                    d.update(part)
                out.append(d)
        else:
            for cu in build(k + 1, up, i, hist):
                for cd in build(k + 1, dn, i, hist):
                    out.append({here: False, **cu, **cd})
        return out

    strategies = [DictStrategy(tree, L, d) for d in build(0, 0, 1, ())]
    if len(strategies) != total:
        raise InvariantError(
            f"buyer enumeration produced {len(strategies)}, counted {total}"
        )
    return strategies


def brute_force_value(contract, cap=DEFAULT_ENUMERATION_CAP):
    """Exact game value by strategy enumeration with best-response tables.

    For every node, active right, and enumerated substrategy of one player
    below that state, the table holds the opponent's best-response value.
    The root then gives min over seller strategies of the buyer's best reply,
    and the same with roles swapped; the two are checked equal and returned.

    Strategies are enumerated implicitly: a substrategy at a state is a local
    action plus indices of child substrategies, so table entries line up with
    the reduced-strategy count and no tuple structures are materialized.
    """
    nS, nB = _profile_counts(contract)
    need = sum(nS.values()) + sum(nB.values())
    if need > cap:
        raise EnumerationCapError(need, cap)

    tree = contract.tree
    N = tree.params.N
    L = contract.L
    pt = martingale_prob(tree.params.a, tree.params.b)
    qt = 1 - pt
    BRbuy = {}   # seller committed, buyer best-responds (values per option)
    BRsell = {}  # buyer committed, seller best-responds

    for k in range(N, -1, -1):
        for m in range(2 ** k):
            for i in range(L, 0, -1):
                if k == N:
                    v = [_bundle(contract, i, m)]
                    BRbuy[(k, m, i)] = v
                    BRsell[(k, m, i)] = list(v)
                    continue
                y = contract.Y(i).at(k, m)
                x = contract.X(i).at(k, m)
                up, dn = 2 * m + 1, 2 * m

                def mix(tab, j, iu, id_):
                    if j > L:
                        return Fraction(0)
                    return pt * tab[(k + 1, up, j)][iu] + qt * tab[(k + 1, dn, j)][id_]

                def pairs(tab, j):
                    if j > L:
                        return [((0, 0), Fraction(0))]
                    nu = len(tab[(k + 1, up, j)])
                    nd = len(tab[(k + 1, dn, j)])
                    return [((a_, b_), mix(tab, j, a_, b_))
                            for a_ in range(nu) for b_ in range(nd)]

                next_buy = pairs(BRbuy, i + 1)
                cur_buy = pairs(BRbuy, i)
                vals = []
                if i < L:
                    for _, tie in next_buy:
                        for _, canc in next_buy:
                            vals.append(max(y + tie, x + canc))
                else:
                    vals.append(max(y, x))
                for _, tie in next_buy:
                    for _, cont in cur_buy:
                        vals.append(max(y + tie, cont))
                BRbuy[(k, m, i)] = vals

                next_sell = pairs(BRsell, i + 1)
                cur_sell = pairs(BRsell, i)
                vals = []
                for _, after in next_sell:
                    vals.append(y + after)
                for _, canc in next_sell:
                    for _, cont in cur_sell:
                        vals.append(min(x + canc, cont))
                BRsell[(k, m, i)] = vals

    upper = min(BRbuy[(0, 0, 1)])
    lower = max(BRsell[(0, 0, 1)])
    if upper != lower:
        raise InvariantError(f"strategy enumeration has a value gap: {lower} vs {upper}")
    return upper


# ---------------------------------------------------------------------------
# pathwise play and saddle certificates

def play_value(contract, seller, buyer, measure=MARTINGALE):
    """Expected total payment when both strategies are played out.

    Walks every scenario separately: rights are used in order, each opens one
    period after the previous one closed (or immediately at maturity), a
    cancellation pays the penalty leg, simultaneous moves pay the exercise
    leg, and everything still open settles on the exercise leg at maturity.
    """
    tree = contract.tree
    N = tree.params.N
    q = _measure_prob(tree, measure)
    total = Fraction(0)
    for path in tree.paths():
        hist = ()
        paid = Fraction(0)
        for i in range(1, contract.L + 1):
            k = window_start(hist, N)
            while True:
                m = tree.node_on_path(path, k)
                forced = k == N
                ss = forced or seller.stops(i, k, m, hist)
                bs = forced or buyer.stops(i, k, m, hist)
                if ss or bs:
                    d = 1 if (ss and not bs) else 0
                    leg = contract.X(i) if d else contract.Y(i)
                    paid += leg.at(k, m)
                    hist = hist + ((k, d),)
                    break
                k += 1
        total += tree.path_prob(path, q) * paid
    return total


class DictStrategy(StoppingStrategy):
    """Stopping strategy backed by explicit (right, node, history) decisions."""

    def __init__(self, tree, L, decisions):
        super().__init__(tree, L)
        self.decisions = dict(decisions)

    def stops(self, i, k, m, history):
        return self.decisions.get((i, k, m, tuple(history)), False)

    def to_entries(self):
        return [
            {"claim": i, "level": k, "node": m,
             "history": [list(h) for h in hist], "stops": True}
            for (i, k, m, hist), flag in sorted(self.decisions.items())
            if flag
        ]


def _best_response(contract, opponent, opponent_is_seller, measure):
    tree = contract.tree
    N = tree.params.N
    L = contract.L
    q = _measure_prob(tree, measure)
    memo = {}
    decisions = {}

    def value(k, m, i, hist):
        if i > L:
            return Fraction(0)
        if k == N:
            return _bundle(contract, i, m)
        key = (k, m, i, hist)
        if key in memo:
            return memo[key]
        up, dn = 2 * m + 1, 2 * m

        def nxt(j, h):
            if j > L:
                return Fraction(0)
            return q * value(k + 1, up, j, h) + (1 - q) * value(k + 1, dn, j, h)

        y = contract.Y(i).at(k, m)
        x = contract.X(i).at(k, m)
        if opponent_is_seller:
            stop_val = y + nxt(i + 1, hist + ((k, 0),))
            if opponent.stops(i, k, m, hist):
                alt = x + nxt(i + 1, hist + ((k, 1),))
            else:
                alt = nxt(i, hist)
            best = max(stop_val, alt)
            decisions[(i, k, m, hist)] = stop_val >= alt
        else:
            if opponent.stops(i, k, m, hist):
                best = y + nxt(i + 1, hist + ((k, 0),))
            else:
                canc = x + nxt(i + 1, hist + ((k, 1),))
                cont = nxt(i, hist)
                best = min(canc, cont)
                decisions[(i, k, m, hist)] = canc <= cont
        memo[key] = best
        return best

    v = value(0, 0, 1, ())
    return v, DictStrategy(tree, L, decisions)


@dataclass
class SaddleCertificate:
    ok: bool
    value: Fraction
    buyer_best_response: Fraction
    seller_best_response: Fraction
    buyer_witness: Optional[DictStrategy]
    seller_witness: Optional[DictStrategy]

    def to_json_dict(self):
        out = {
            "ok": self.ok,
            "value": format_rational(self.value),
            "buyer_best_response": format_rational(self.buyer_best_response),
            "seller_best_response": format_rational(self.seller_best_response),
        }
        if self.buyer_witness is not None:
            out["buyer_deviation"] = {
                "gain": format_rational(self.buyer_best_response - self.value),
                "strategy": self.buyer_witness.to_entries(),
            }
        if self.seller_witness is not None:
            out["seller_deviation"] = {
                "gain": format_rational(self.value - self.seller_best_response),
                "strategy": self.seller_witness.to_entries(),
            }
        return out


def certify_saddle(contract, seller, buyer, measure=MARTINGALE):
    """Check that (seller, buyer) is a saddle point of the expected payment.

    Plays the pair to get its value v, then computes each player's exact best
    response against the other held fixed. The pair certifies when no buyer
    strategy beats v against this seller and no seller strategy pushes below
    v against this buyer. On failure the certificate carries the profitable
    deviation as an explicit strategy.
    """
    v = play_value(contract, seller, buyer, measure)
    b_val, b_strat = _best_response(contract, seller, True, measure)
    s_val, s_strat = _best_response(contract, buyer, False, measure)
    buyer_bad = b_val > v
    seller_bad = s_val < v
    return SaddleCertificate(
        ok=not (buyer_bad or seller_bad),
        value=v,
        buyer_best_response=b_val,
        seller_best_response=s_val,
        buyer_witness=b_strat if buyer_bad else None,
        seller_witness=s_strat if seller_bad else None,
    )


# ---------------------------------------------------------------------------
# direct evaluation of the one-period transforms

def portfolio_value_at(psi1, psi2, p, a, b, y):
    """Exact portfolio-transform value at one point, no envelope assembly.

    For fixed y the objective is piecewise linear in the up-state wealth w1,
    with kinks only where w1 meets a breakpoint of psi1 or the matching
    down-state wealth meets a breakpoint of psi2, so the minimum over the
    admissible segment is the minimum over those finitely many candidates.
    """
    y = Fraction(y)
    pt = martingale_prob(a, b)
    cands = {Fraction(0)}
    for x, _ in psi1.points:
        if pt * x <= y:
            cands.add(x)
    for x, _ in psi2.points:
        if (1 - pt) * x <= y:
            cands.add((y - (1 - pt) * x) / pt)
    p = Fraction(p)
    best = None
    for w1 in cands:
        w2 = (y - pt * w1) / (1 - pt)
        v = p * psi1.eval(w1) + (1 - p) * psi2.eval(w2)
        if best is None or v < best:
            best = v
    return best


def infusion_value_at(psi, A, y):
    """Exact infusion-transform value at one point."""
    y, A = Fraction(y), Fraction(A)
    c = max(y - A, Fraction(0))
    best = c + psi.eval(c)
    for x, _ in psi.points:
        if x > c:
            best = min(best, x + psi.eval(x))
    return (A - y) + best


def grid_portfolio_value(psi1, psi2, p, a, b, y, resolution):
    """Portfolio transform restricted to a uniform control grid (an upper bound)."""
    y, p = Fraction(y), Fraction(p)
    a, b = Fraction(a), Fraction(b)
    lo, hi = -y / b, -y / a
    best = None
    for t in range(resolution + 1):
        alpha = lo + (hi - lo) * t / resolution
        v = p * psi1.eval(y + b * alpha) + (1 - p) * psi2.eval(y + a * alpha)
        if best is None or v < best:
            best = v
    return best


def grid_infusion_value(psi, A, y, resolution):
    """Infusion transform restricted to a uniform injection grid (an upper bound)."""
    y, A = Fraction(y), Fraction(A)
    zmin = max(A - y, Fraction(0))
    zcap = max(zmin, A - y + psi.support_end)
    best = None
    for t in range(resolution + 1):
        z = zmin + (zcap - zmin) * t / resolution
        v = z + psi.eval(y - A + z)
        if best is None or v < best:
            best = v
    return best


# ---------------------------------------------------------------------------
# bracketing grid scheme for the shortfall value

def grid_risk_oracle(contract, x, resolution=8):
    """Rigorous bracket (lower, upper) around the exact shortfall risk at x.

    Upper bound: the exact state recursion with the seller's portfolio and
    injection controls restricted to finite grids. Restricting the feasible
    sets can only raise a min, and the stage combination is monotone, so the
    result dominates the true value. States are memoized on exact wealth, so
    this side is only meant for shallow trees.

    Lower bound: a wealth-grid recursion that reads every continuation at the
    next grid point up. The true stage values are non-increasing in wealth,
    so rounding wealth up before reading an under-estimate keeps it an
    under-estimate; control minimizations are carried out exactly against
    those step functions, sampling every constancy piece.

    Doubling the resolution refines both grids in a nested way, so brackets
    shrink monotonically.
    """
    x = Fraction(x)
    if x < 0:
        raise ContractError(f"initial capital must be nonnegative, got {x}")
    if resolution < 1:
        raise ContractError("resolution must be a positive integer")
    tree = contract.tree
    params = tree.params
    N = params.N
    L = contract.L
    p = params.p
    a, b = params.a, params.b

    max_y = []
    for i in range(1, L + 1):
        proc = contract.Y(i)
        max_y.append(max(v for row in proc.values for v in row))
    # if the seller never cancels and never trades, total payments are at
    # most the sum of the worst exercise legs, so risk vanishes from there on
    rem_cap = [Fraction(0)] * (L + 1)
    for j in range(1, L + 1):
        rem_cap[j] = rem_cap[j - 1] + max_y[L - j]
    wmax = rem_cap[L]
    if wmax == 0:
        return Fraction(0), Fraction(0)

    def leg(i, k, m, which):
        proc = contract.Y(i) if which == "y" else contract.X(i)
        return proc.at(k, m)

    # ---- upper side ----
    memo = {}

    def upper(k, m, j, y):
        if j == 0:
            return Fraction(0)
        if k == N:
            return max(_bundle(contract, L - j + 1, m) - y, Fraction(0))
        key = (k, m, j, y)
        if key in memo:
            return memo[key]
        i = L - j + 1
        up, dn = 2 * m + 1, 2 * m

        def invest(w, jj):
            if jj == 0:
                return Fraction(0)
            lo, hi = -w / b, -w / a
            best = None
            for t in range(resolution + 1):
                alpha = lo + (hi - lo) * t / resolution
                v = p * upper(k + 1, up, jj, w + b * alpha) \
                    + (1 - p) * upper(k + 1, dn, jj, w + a * alpha)
                if best is None or v < best:
                    best = v
            return best

        def settle(amount):
            zmin = max(amount - y, Fraction(0))
            cap = rem_cap[j - 1]
            best = None
            for t in range(resolution + 1):
                z = zmin + cap * t / resolution
                v = z + invest(y - amount + z, j - 1)
                if best is None or v < best:
                    best = v
                if cap == 0:
                    break
            return best

        exercise = settle(leg(i, k, m, "y"))
        cancel = settle(leg(i, k, m, "x"))
        cont = invest(y, j)
        out = min(cancel, max(exercise, cont))
        memo[key] = out
        return out

    hi_val = upper(0, 0, L, x)

    # ---- lower side ----
    G = resolution
    step = wmax / G

    def ceil_idx(w):
        if w > wmax:
            return None
        q, r = divmod(w * G, wmax)
        return int(q) + (1 if r else 0)

    def read(arr, w):
        idx = ceil_idx(w)
        return Fraction(0) if idx is None else arr[idx]

    def invest_lo(arr_up, arr_dn, w):
        lo, hi = -w / b, -w / a
        cands = {lo, hi}
        for g in range(G + 1):
            yg = g * step
            for rho in (b, a):
                al = (yg - w) / rho
                if lo < al < hi:
                    cands.add(al)
        xs = sorted(cands)
        xs = xs + [(x0 + x1) / 2 for x0, x1 in zip(xs, xs[1:])]
        best = None
        for alpha in xs:
            v = p * read(arr_up, w + b * alpha) + (1 - p) * read(arr_dn, w + a * alpha)
            if best is None or v < best:
                best = v
        return best

    # arrays indexed [j][g]; built from maturity backwards
    level = []
    for m in range(2 ** N):
        rows = [[Fraction(0)] * (G + 1)]
        for j in range(1, L + 1):
            base = _bundle(contract, L - j + 1, m)
            rows.append([max(base - g * step, Fraction(0)) for g in range(G + 1)])
        level.append(rows)

    for k in range(N - 1, -1, -1):
        nxt_level = level
        level = []
        for m in range(2 ** k):
            up_rows = nxt_level[2 * m + 1]
            dn_rows = nxt_level[2 * m]
            # continuation value at every grid point, per remaining-rights count
            cont = [[invest_lo(up_rows[j], dn_rows[j], g * step)
                     for g in range(G + 1)] for j in range(L + 1)]

            def settle_lo(amount, y, jj):
                zmin = max(amount - y, Fraction(0))
                w0 = max(y - amount, Fraction(0))
                best = None
                for g in range(G + 1):
                    yg = g * step
                    if yg < w0 and not (g == 0 and w0 == 0):
                        continue
                    left = max(zmin, amount - y + (g - 1) * step) if g else zmin
                    v = left + cont[jj][g]
                    if best is None or v < best:
                        best = v
                beyond = max(zmin, amount - y + wmax)
                if best is None or beyond < best:
                    best = beyond
                return best

            rows = [[Fraction(0)] * (G + 1)]
            for j in range(1, L + 1):
                i = L - j + 1
                row = []
                for g in range(G + 1):
                    y = g * step
                    ex = settle_lo(leg(i, k, m, "y"), y, j - 1)
                    ca = settle_lo(leg(i, k, m, "x"), y, j - 1)
                    row.append(min(ca, max(ex, cont[j][g])))
                rows.append(row)
            level.append(rows)

    root = level[0][L]
    idx = ceil_idx(x)
    lo_val = Fraction(0) if idx is None else root[idx]
    return lo_val, hi_val
