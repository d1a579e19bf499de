"""Swing game contracts.

A contract grants the buyer L ordered rights. While the i-th right is alive
the buyer may exercise it at a node and collect Y_i there, or the seller may
cancel it and pay X_i = Y_i + penalty. If both act at the same moment the
exercise payoff Y_i is paid. After a payoff the next right becomes active one
period later (or immediately at maturity, where every remaining right settles
at its exercise value).

The per-claim payoff for seller time m and buyer time n is

    H_i(m, n) = X_i(m) if m < n, else Y_i(n),

evaluated at the node reached at level min(m, n).

Contracts are ingested from a small JSON schema; payoffs are materialized as
per-node tables and validated (0 <= Y <= X everywhere).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractError
from .market import (
    AdaptedProcess,
    MarketParams,
    ScenarioTree,
    build_tree,
    format_rational,
    to_rational,
)


@dataclass(frozen=True)
class ClaimPayoffs:
    """Exercise process Y and cancellation process X of one right, Y <= X."""

    exercise: AdaptedProcess
    cancel: AdaptedProcess


@dataclass(frozen=True)
class SwingContract:
    tree: ScenarioTree
    claims: tuple

    @property
    def L(self) -> int:
        return len(self.claims)

    def Y(self, i: int) -> AdaptedProcess:
        """Exercise payoff of claim i (1-based)."""
        return self.claims[i - 1].exercise

    def X(self, i: int) -> AdaptedProcess:
        """Cancellation payoff of claim i (1-based)."""
        return self.claims[i - 1].cancel

    def terminal_bundle(self, first: int, m: int) -> Fraction:
        """Sum of Y_i(N) for i >= first at terminal node m."""
        N = self.tree.N
        return sum(
            (self.Y(i).at(N, m) for i in range(first, self.L + 1)), Fraction(0)
        )


def payoff_at(contract: SwingContract, claim: int, m: int, n: int, node: int) -> Fraction:
    """H_claim(m, n) evaluated at `node`, which lives at level min(m, n)."""
    if not (1 <= claim <= contract.L):
        raise ContractError(f"claim index {claim} out of range 1..{contract.L}")
    N = contract.tree.N
    if not (0 <= m <= N and 0 <= n <= N):
        raise ContractError(f"stopping levels ({m}, {n}) out of range 0..{N}")
    k = min(m, n)
    if not (0 <= node < 2 ** k):
        raise ContractError(f"node {node} not at level {k}")
    if m < n:
        return contract.X(claim).at(m, node)
    return contract.Y(claim).at(n, node)


def _node_name(tree: ScenarioTree, k: int, m: int) -> str:
    if k == 0:
        return "root"
    return f"level {k}, path {format(m, f'0{k}b').replace('1', 'u').replace('0', 'd')}"


def _exercise_process(kind: dict, tree: ScenarioTree) -> AdaptedProcess:
    name = kind.get("kind")
    if name == "call":
        strike = to_rational(kind["strike"])
        return AdaptedProcess.from_function(tree, lambda k, m, s: max(s - strike, Fraction(0)))
    if name == "put":
        strike = to_rational(kind["strike"])
        return AdaptedProcess.from_function(tree, lambda k, m, s: max(strike - s, Fraction(0)))
    if name == "table":
        return _table_process(kind["values"], tree)
    raise ContractError(f"unknown exercise kind {name!r}")


def _table_process(values, tree: ScenarioTree) -> AdaptedProcess:
    if len(values) != tree.N + 1:
        raise ContractError(
            f"table has {len(values)} levels, the tree has {tree.N + 1}"
        )
    rows = []
    for k, row in enumerate(values):
        if len(row) != 2 ** k:
            raise ContractError(f"table level {k} has {len(row)} entries, wants {2 ** k}")
        rows.append([to_rational(v) for v in row])
    return AdaptedProcess(tree, rows)


def _max_node_value(proc: AdaptedProcess) -> Fraction:
    return max(v for level in proc.values for v in level)


def _proxy_constant(exercise_procs, finite_penalty_caps) -> Fraction:
    """A finite stand-in for an uncancellable claim.

    Any constant strictly above the largest total the buyer could ever
    extract makes cancellation never optimal; exact infinities would not fit
    the rational scalar type.
    """
    total = Fraction(1)
    for proc in exercise_procs:
        total += _max_node_value(proc)
    for cap in finite_penalty_caps:
        total += cap
    return total


def build_contract(spec: dict, tree: ScenarioTree = None) -> SwingContract:
    """Materialize a contract from its JSON-style dict.

    Schema: {"model": {S0, a, b, p, N}, "claims": [{"exercise": ..., "penalty": ...}]}
    with exercise kinds call(strike) / put(strike) / table(values) and penalty
    kinds constant(value) / proportional(factor) / table(values) /
    infinite-proxy(optional value). Scalars are rational strings. constant and
    proportional penalties apply before maturity only (at maturity cancelling
    and exercising are the same event, so X(N) = Y(N)); table penalties are
    explicit at every level.
    """
    if not isinstance(spec, dict):
        raise ContractError("contract spec must be a JSON object")
    if tree is None:
        if "model" not in spec:
            raise ContractError("contract spec needs a 'model' section")
        tree = build_tree(MarketParams.from_dict(spec["model"]))
    raw_claims = spec.get("claims")
    if not isinstance(raw_claims, list) or not raw_claims:
        raise ContractError("contract spec needs a non-empty 'claims' list")

    exercise_procs = []
    penalties = []
    for idx, claim in enumerate(raw_claims, start=1):
        if not isinstance(claim, dict) or "exercise" not in claim or "penalty" not in claim:
            raise ContractError(f"claim {idx} needs 'exercise' and 'penalty'")
        try:
            exercise_procs.append(_exercise_process(claim["exercise"], tree))
        except KeyError as exc:
            raise ContractError(f"claim {idx} exercise spec is missing {exc}") from exc
        penalties.append(claim["penalty"])

    # Proxy penalties need the whole contract's payoff scale, so resolve the
    # finite penalty caps first.
    finite_caps = []
    for idx, pen in enumerate(penalties, start=1):
        kind = pen.get("kind") if isinstance(pen, dict) else None
        if kind == "constant":
            finite_caps.append(abs(to_rational(pen["value"])))
        elif kind == "proportional":
            finite_caps.append(abs(to_rational(pen["factor"])) * _max_node_value(exercise_procs[idx - 1]))
        elif kind == "table":
            rows = pen.get("values", [])
            vals = [to_rational(v) for row in rows for v in row]
            finite_caps.append(max((abs(v) for v in vals), default=Fraction(0)))
    proxy_default = _proxy_constant(exercise_procs, finite_caps)

    claims = []
    for idx, (Y, pen) in enumerate(zip(exercise_procs, penalties), start=1):
        if not isinstance(pen, dict):
            raise ContractError(f"claim {idx} penalty spec must be an object")
        kind = pen.get("kind")
        if kind == "constant":
            c = to_rational(pen["value"])
            delta = AdaptedProcess.from_function(
                tree, lambda k, m, s: c if k < tree.N else Fraction(0)
            )
        elif kind == "proportional":
            f = to_rational(pen["factor"])
            delta = AdaptedProcess.from_function(
                tree, lambda k, m, s, Y=Y: f * Y.at(k, m) if k < tree.N else Fraction(0)
            )
        elif kind == "table":
            delta = _table_process(pen["values"], tree)
        elif kind == "infinite-proxy":
            c = to_rational(pen["value"]) if "value" in pen else proxy_default
            delta = AdaptedProcess.from_function(
                tree, lambda k, m, s, c=c: c if k < tree.N else Fraction(0)
            )
        else:
            raise ContractError(f"claim {idx} has unknown penalty kind {kind!r}")

        X = AdaptedProcess(
            tree,
            [
                [Y.at(k, m) + delta.at(k, m) for m in range(2 ** k)]
                for k in range(tree.N + 1)
            ],
        )
        for k in range(tree.N + 1):
            for m in range(2 ** k):
                y, x = Y.at(k, m), X.at(k, m)
                if y < 0:
                    raise ContractError(
                        f"claim {idx}: negative exercise payoff {format_rational(y)} "
                        f"at {_node_name(tree, k, m)}"
                    )
                if x < y:
                    raise ContractError(
                        f"claim {idx}: cancellation payoff {format_rational(x)} below "
                        f"exercise payoff {format_rational(y)} at {_node_name(tree, k, m)}"
                    )
        claims.append(ClaimPayoffs(exercise=Y, cancel=X))

    return SwingContract(tree=tree, claims=tuple(claims))


def load_contract(path: str) -> SwingContract:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise ContractError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ContractError(f"{path} is not valid JSON: {exc}") from exc
    return build_contract(spec)
