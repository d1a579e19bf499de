"""Price the bundled contracts and walk the perfect hedge through a path.

    python3 scripts/price_examples.py
"""

import json
from importlib import resources

from swinghedge.contract import build_contract
from swinghedge.hedge import build_perfect_hedge, simulate_portfolio
from swinghedge.swing import optimal_strategies, price_swing, resolve


def bundled(name):
    text = (resources.files("swinghedge") / "contracts" / f"{name}.json").read_text()
    return build_contract(json.loads(text))


def main():
    for name in ["one_right_small_penalty", "two_rights_uncancellable",
                 "american_call_proxy"]:
        contract = bundled(name)
        stack, price = price_swing(contract)
        seller, buyer = optimal_strategies(stack)
        print(f"{name}: price {price}")
        play = resolve(seller, buyer)
        portfolio = build_perfect_hedge(stack)
        for path in contract.tree.paths():
            bits = contract.tree.path_bits(path)
            pre, post = simulate_portfolio(
                contract, portfolio, price, play.events[path], path
            )
            levels = [e.level for e in play.events[path]]
            print(f"  path {bits}: settlements at {levels}, "
                  f"wealth after {[str(w) for w in post]}")


if __name__ == "__main__":
    main()
