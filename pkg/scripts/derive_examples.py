"""Derive the reference numbers for the bundled contracts the slow way.

Everything here goes through the enumeration oracles (strategy tables,
pathwise play values, grid bounds); nothing touches the backward recursions.
The numbers printed by this script are the ones frozen into the test suite,
so the fast algorithms are checked against values they had no hand in.

Run from the repository root:

    python3 scripts/derive_examples.py
"""

from fractions import Fraction
from importlib import resources
import json

from swinghedge.contract import build_contract
from swinghedge.market import MarketParams, ScenarioTree
from swinghedge.oracle import (
    DictStrategy,
    brute_force_value,
    certify_saddle,
    count_stopping_times,
    count_strategy_profiles,
    dynkin_minimax,
    grid_risk_oracle,
    play_value,
)


def bundled(name):
    text = (resources.files("swinghedge") / "contracts" / f"{name}.json").read_text()
    return build_contract(json.loads(text))


def check(label, got, want=None):
    tag = ""
    if want is not None:
        assert got == want, f"{label}: got {got}, expected {want}"
        tag = "  (confirmed)"
    print(f"{label}: {got}{tag}")


def main():
    one_right = bundled("one_right_small_penalty")
    two_rights = bundled("two_rights_uncancellable")
    american = bundled("american_call_proxy")

    print("== game values by strategy enumeration ==")
    check("one right, penalty 1/10", brute_force_value(one_right), Fraction(1, 10))
    check("two uncancellable rights", brute_force_value(two_rights), Fraction(2, 3))
    check("american proxy", brute_force_value(american), Fraction(1, 3))

    print()
    print("== the same single-right value out of the stopping-time oracle ==")
    check(
        "one right, full minimax over stopping times",
        dynkin_minimax(one_right.X(1), one_right.Y(1)),
        Fraction(1, 10),
    )

    print()
    print("== enumeration sizes ==")
    for n in (1, 2, 3):
        tree = ScenarioTree(MarketParams(S0=1, a=Fraction(-1, 2), b=1,
                                         p=Fraction(1, 2), N=n))
        check(f"stopping times on N={n}", count_stopping_times(tree),
              {1: 2, 2: 5, 3: 26}[n])
    check("strategy profiles, two rights N=2",
          count_strategy_profiles(two_rights), (32, 20))
    big = build_contract({
        "model": {"S0": "1", "a": "-1/2", "b": "1", "p": "1/2", "N": 3},
        "claims": [
            {"exercise": {"kind": "call", "strike": "1"},
             "penalty": {"kind": "constant", "value": "1/10"}},
            {"exercise": {"kind": "call", "strike": "1"},
             "penalty": {"kind": "constant", "value": "1/10"}},
        ],
    })
    check("strategy profiles, two rights N=3",
          count_strategy_profiles(big), (26225, 10025))

    print()
    print("== a non-saddle pair is rejected with a profitable deviation ==")
    tree = one_right.tree
    never = DictStrategy(tree, 1, {})
    wait = DictStrategy(tree, 1, {})
    check("play value of (never cancel, wait)",
          play_value(one_right, never, wait), Fraction(1, 3))
    cert = certify_saddle(one_right, never, wait)
    assert not cert.ok
    check("seller best response against waiting",
          cert.seller_best_response, Fraction(1, 10))
    print("certificate refused, seller deviation gains "
          f"{cert.value - cert.seller_best_response}  (confirmed)")

    print()
    print("== grid bounds bracket the one-right risk values ==")
    for x, expect in [(Fraction(0), Fraction(1, 10)),
                      (Fraction(1, 20), Fraction(1, 20)),
                      (Fraction(1, 10), Fraction(0))]:
        lo, hi = grid_risk_oracle(one_right, x, resolution=16)
        assert lo <= expect <= hi, (x, lo, expect, hi)
        print(f"capital {x}: bounds [{lo}, {hi}] straddle {expect}")

    print()
    print("all reference values confirmed")


if __name__ == "__main__":
    main()
