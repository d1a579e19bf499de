import random
from fractions import Fraction

import pytest

from conftest import random_contract, random_point, random_policy
from swinghedge.contract import build_contract
from swinghedge.errors import ContractError, InvariantError
from swinghedge.oracle import grid_risk_oracle
from swinghedge.pwl import PwlFn
from swinghedge.shortfall import (
    build_risk_stack,
    evaluate_policy_risk,
    evaluate_risk,
    infusion_minimizer,
    optimal_buyer,
    optimal_hedge,
    shortfall_risk,
    simulate_with_infusion,
)
from swinghedge.swing import price_swing, resolve

F = Fraction
EPS = F(1, 10 ** 6)

MODEL1 = {"S0": "1", "a": "-1/2", "b": "1", "p": "1/2", "N": 1}
MODEL2 = dict(MODEL1, N=2)


def contract_a():
    return build_contract({"model": MODEL1, "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "constant", "value": "1/10"}}]})


def uncancellable_two():
    return build_contract({"model": MODEL2, "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "infinite-proxy"}},
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "infinite-proxy"}}]})


def test_known_risk_curves():
    assert build_risk_stack(contract_a()).curve() == \
        PwlFn([(0, F(1, 10)), (F(1, 10), F(0))])
    assert build_risk_stack(uncancellable_two()).curve() == \
        PwlFn([(0, F(3, 2)), (F(2, 3), F(0))])
    proxy = build_contract({"model": MODEL2, "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "infinite-proxy"}}]})
    assert build_risk_stack(proxy).curve() == PwlFn([(0, F(3, 4)), (F(1, 3), F(0))])


def test_risk_can_fall_faster_than_money():
    # one extra unit of capital can cut more than one unit of risk
    curve = build_risk_stack(uncancellable_two()).curve()
    (x0, v0), (x1, v1) = curve.points
    assert (v0 - v1) / (x1 - x0) == F(9, 4)


def test_risk_is_zero_exactly_from_the_price_on():
    rng = random.Random(71)
    for _ in range(40):
        c = random_contract(rng)
        _, price = price_swing(c)
        stack = build_risk_stack(c)
        assert stack.curve().support_end == price
        assert stack.risk(price) == 0
        if price > EPS:
            assert stack.risk(price - EPS) > 0
        assert stack.risk(price + 1) == 0


def test_risk_rejects_negative_capital():
    with pytest.raises(ContractError):
        build_risk_stack(contract_a()).risk(F(-1, 2))
    assert shortfall_risk(contract_a(), F(1, 20)) == F(1, 20)


def test_infusion_minimizer_prefers_the_leftmost():
    flat = PwlFn([(0, F(2)), (1, F(1)), (2, F(1, 2)), (3, F(0))])
    # h(w) = w + psi(w) is 2, 2, 5/2, 3 at the breakpoints: stay at 0
    amount, target = infusion_minimizer(flat, F(0))
    assert (amount, target) == (F(0), F(0))
    # from a debt, the floor is the binding constraint
    amount, target = infusion_minimizer(flat, F(-3, 2))
    assert target == F(0) and amount == F(3, 2)
    steep = PwlFn([(0, F(3)), (1, F(0))])
    amount, target = infusion_minimizer(steep, F(1, 4))
    assert target == F(1) and amount == F(3, 4)


def test_optimal_policy_reproduces_the_curve_statewise():
    rng = random.Random(73)
    for _ in range(12):
        c = random_contract(rng, max_n=2)
        stack = build_risk_stack(c)
        curve = stack.curve()
        xs = {x for x, _ in curve.points}
        xs |= {random_point(rng, F(0), curve.support_end + 1) for _ in range(4)}
        for x in xs:
            gamma, infusion, _ = optimal_hedge(stack, x)
            pol = evaluate_policy_risk(c, gamma, infusion, x)
            assert pol.value == curve.eval(x)
            for (k, m, j, y), (val, _, _, _) in pol.table.items():
                assert stack.J[(k, m, j)].eval(max(y, F(0))) == val


def test_no_policy_beats_the_curve():
    rng = random.Random(79)
    for _ in range(12):
        c = random_contract(rng, max_n=2)
        stack = build_risk_stack(c)
        curve = stack.curve()
        for _ in range(4):
            x = random_point(rng, F(0), curve.support_end + 1)
            gamma, infusion = random_policy(rng, c.tree)
            pol = evaluate_policy_risk(c, gamma, infusion, x)
            assert pol.value >= curve.eval(x)
            for (k, m, j, y), (val, _, _, _) in pol.table.items():
                if y >= 0:
                    assert stack.J[(k, m, j)].eval(y) <= val


def test_both_risk_evaluators_agree_on_the_optimal_hedge():
    rng = random.Random(83)
    for _ in range(10):
        c = random_contract(rng, max_n=2)
        stack = build_risk_stack(c)
        curve = stack.curve()
        for x in [F(0), curve.support_end / 2, curve.support_end]:
            gamma, infusion, seller = optimal_hedge(stack, x)
            want = curve.eval(x)
            assert evaluate_risk(c, gamma, infusion, seller, x,
                                 mode="enumeration") == want
            assert evaluate_risk(c, gamma, infusion, seller, x,
                                 mode="recursion") == want


def test_risk_evaluators_agree_on_committed_arbitrary_policies():
    rng = random.Random(89)
    for _ in range(8):
        c = random_contract(rng, max_n=2)
        stack = build_risk_stack(c)
        x = random_point(rng, F(0), stack.curve().support_end + 1)
        gamma, infusion, seller = optimal_hedge(stack, x)
        # keep the optimal seller rule but degrade trading and injections
        bad_gamma, bad_infusion = random_policy(rng, c.tree)
        worst = evaluate_risk(c, bad_gamma, bad_infusion, seller, x,
                              mode="enumeration")
        assert worst >= stack.curve().eval(x)


def test_grid_oracle_brackets_random_curves():
    rng = random.Random(97)
    for _ in range(6):
        c = random_contract(rng, max_n=2)
        curve = build_risk_stack(c).curve()
        for t in range(3):
            x = curve.support_end * t / 2
            lo, hi = grid_risk_oracle(c, x, resolution=8)
            assert lo <= curve.eval(x) <= hi


def test_simulation_records_admissible_runs():
    c = uncancellable_two()
    stack = build_risk_stack(c)
    x = F(1, 3)
    gamma, infusion, seller = optimal_hedge(stack, x)
    buyer = optimal_buyer(stack, x)
    play = resolve(seller, buyer)
    for path in c.tree.paths():
        out = simulate_with_infusion(c, gamma, infusion, play.events[path],
                                     path, x)
        assert out.cost == sum(z for _, _, z in out.infusions)
        assert all(z >= 0 for _, _, z in out.infusions)
        assert all(w >= 0 for w in out.post)
        assert len(out.pre) == c.tree.N + 1


def test_simulation_rejects_cheating_infusions():
    c = contract_a()
    stack = build_risk_stack(c)
    gamma, _, seller = optimal_hedge(stack, F(0))
    buyer = optimal_buyer(stack, F(0))

    class Thief:
        def amount(self, level, node, claim, y):
            return F(-1)

    play = resolve(seller, buyer)
    with pytest.raises(InvariantError):
        simulate_with_infusion(c, gamma, Thief(), play.events[0], 0, F(0))


def test_unknown_mode_rejected():
    c = contract_a()
    stack = build_risk_stack(c)
    gamma, infusion, seller = optimal_hedge(stack, F(0))
    with pytest.raises(ContractError):
        evaluate_risk(c, gamma, infusion, seller, F(0), mode="guess")
    with pytest.raises(ContractError):
        evaluate_risk(c, gamma, infusion, object(), F(0), mode="recursion")
