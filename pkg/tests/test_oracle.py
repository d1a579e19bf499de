import json
import random
from fractions import Fraction

import pytest

from conftest import random_contract
from swinghedge.contract import build_contract
from swinghedge.errors import ContractError, EnumerationCapError
from swinghedge.market import MarketParams, build_tree
from swinghedge.oracle import (
    DictStrategy,
    brute_force_value,
    certify_saddle,
    count_stopping_times,
    count_strategy_profiles,
    enumerate_buyer_strategies,
    enumerate_stopping_times,
    grid_risk_oracle,
    play_value,
)
from swinghedge.shortfall import build_risk_stack
from swinghedge.swing import price_swing, resolve

MODEL1 = {"S0": "1", "a": "-1/2", "b": "1", "p": "1/2", "N": 1}


def small_tree(n):
    return build_tree(MarketParams(S0=1, a=Fraction(-1, 2), b=1,
                                   p=Fraction(1, 2), N=n))


def contract_a():
    return build_contract({"model": MODEL1, "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "constant", "value": "1/10"}}]})


def test_stopping_time_counts():
    assert count_stopping_times(small_tree(1)) == 2
    assert count_stopping_times(small_tree(2)) == 5
    assert count_stopping_times(small_tree(3)) == 26
    assert count_stopping_times(small_tree(3), start_level=3) == 1


def test_enumeration_matches_count_and_is_distinct():
    for n in (1, 2, 3):
        tree = small_tree(n)
        times = enumerate_stopping_times(tree)
        assert len(times) == count_stopping_times(tree)
        seen = {tuple(sorted(t.decisions)) for t in times}
        assert len(seen) == len(times)


def test_enumeration_cap_carries_sizes():
    with pytest.raises(EnumerationCapError) as err:
        enumerate_stopping_times(small_tree(3), cap=10)
    assert err.value.needed == 26
    assert err.value.cap == 10


def test_profile_counts():
    two = build_contract({"model": dict(MODEL1, N=2), "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "infinite-proxy"}},
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "infinite-proxy"}}]})
    assert count_strategy_profiles(two) == (32, 20)
    three = build_contract({"model": dict(MODEL1, N=3), "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "constant", "value": "1/10"}},
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "constant", "value": "1/10"}}]})
    assert count_strategy_profiles(three) == (26225, 10025)


def test_enumerate_buyer_strategies():
    two = build_contract({"model": dict(MODEL1, N=2), "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "infinite-proxy"}},
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "infinite-proxy"}}]})
    buyers = enumerate_buyer_strategies(two)
    assert len(buyers) == 20
    fingerprints = {tuple(sorted(b.decisions.items())) for b in buyers}
    assert len(fingerprints) == 20
    # every enumerated strategy resolves against a fixed opponent
    seller = DictStrategy(two.tree, two.L, {})
    for b in buyers:
        play = resolve(seller, b)
        assert all(len(play.events[p]) == 2 for p in two.tree.paths())
    with pytest.raises(EnumerationCapError):
        enumerate_buyer_strategies(two, cap=19)


def test_brute_force_values_for_bundled_shapes():
    assert brute_force_value(contract_a()) == Fraction(1, 10)


def test_play_value_on_committed_strategies():
    c = contract_a()
    never = DictStrategy(c.tree, 1, {})
    wait = DictStrategy(c.tree, 1, {})
    assert play_value(c, never, wait) == Fraction(1, 3)
    eager = DictStrategy(c.tree, 1, {(1, 0, 0, ()): True})
    assert play_value(c, eager, wait) == Fraction(1, 10)
    assert play_value(c, eager, eager) == 0  # tie settles at the exercise leg


def test_certify_saddle_rejects_and_blames_the_right_side():
    c = contract_a()
    never = DictStrategy(c.tree, 1, {})
    wait = DictStrategy(c.tree, 1, {})
    cert = certify_saddle(c, never, wait)
    assert not cert.ok
    assert cert.value == Fraction(1, 3)
    assert cert.seller_best_response == Fraction(1, 10)
    assert cert.buyer_best_response == Fraction(1, 3)
    doc = cert.to_json_dict()
    assert doc["ok"] is False
    assert doc["seller_deviation"]["gain"] == "7/30"
    json.dumps(doc)  # serializable all the way down


def test_certify_saddle_accepts_the_solved_pair():
    rng = random.Random(61)
    from swinghedge.swing import optimal_strategies

    for _ in range(20):
        c = random_contract(rng, max_n=2)
        stack, price = price_swing(c)
        cert = certify_saddle(c, *optimal_strategies(stack))
        assert cert.ok and cert.value == price
        doc = cert.to_json_dict()
        assert doc["ok"] is True
        assert "seller_deviation" not in doc


def test_grid_risk_oracle_brackets_and_nesting():
    c = contract_a()
    curve = build_risk_stack(c).curve()
    for x in [Fraction(0), Fraction(1, 20), Fraction(1, 10), Fraction(1)]:
        exact = curve.eval(x)
        lo8, hi8 = grid_risk_oracle(c, x, resolution=8)
        lo16, hi16 = grid_risk_oracle(c, x, resolution=16)
        assert lo8 <= lo16 <= exact <= hi16 <= hi8


def test_grid_risk_oracle_zero_contract():
    c = build_contract({"model": MODEL1, "claims": [
        {"exercise": {"kind": "table", "values": [["0"], ["0", "0"]]},
         "penalty": {"kind": "constant", "value": "1"}}]})
    assert grid_risk_oracle(c, Fraction(0)) == (Fraction(0), Fraction(0))


def test_grid_risk_oracle_input_guards():
    c = contract_a()
    with pytest.raises(ContractError):
        grid_risk_oracle(c, Fraction(-1))
    with pytest.raises(ContractError):
        grid_risk_oracle(c, Fraction(0), resolution=0)
