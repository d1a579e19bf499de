"""Trace a shortfall risk curve and cross it against the grid bounds.

Builds a two-right contract on a three-period tree where the market measure
and the martingale measure disagree, prints the exact risk curve, and checks
a few capitals against the independent grid oracle.

    python3 scripts/risk_curve_demo.py [out.csv]
"""

import sys
from fractions import Fraction

from swinghedge.contract import build_contract
from swinghedge.oracle import grid_risk_oracle
from swinghedge.shortfall import build_risk_stack
from swinghedge.swing import price_swing

CONTRACT = {
    "model": {"S0": "1", "a": "-1/2", "b": "1", "p": "3/5", "N": 3},
    "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "constant", "value": "1/4"}},
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "constant", "value": "1/4"}},
    ],
}


def main():
    contract = build_contract(CONTRACT)
    _, price = price_swing(contract)
    stack = build_risk_stack(contract)
    curve = stack.curve()
    print(f"perfect-hedge price: {price}")
    print("risk curve breakpoints:")
    for x, v in curve.points:
        print(f"  capital {x}: risk {v}")

    print("grid-oracle brackets:")
    for t in range(5):
        x = curve.support_end * t / 4
        lo, hi = grid_risk_oracle(contract, x, resolution=8)
        v = curve.eval(x)
        tag = "ok" if lo <= v <= hi else "MISMATCH"
        print(f"  capital {x}: exact {v} in [{lo}, {hi}] {tag}")

    if len(sys.argv) > 1:
        xs = [x for x, _ in curve.points]
        with open(sys.argv[1], "w") as fh:
            fh.write("capital,risk\n")
            for lo, hi in zip(xs, xs[1:]):
                for t in range(10):
                    x = lo + (hi - lo) * Fraction(t, 10)
                    fh.write(f"{float(x)},{float(curve.eval(x))}\n")
            fh.write(f"{float(xs[-1])},{float(curve.eval(xs[-1]))}\n")
        print(f"sampled curve written to {sys.argv[1]}")


if __name__ == "__main__":
    main()
