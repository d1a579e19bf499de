"""Shared exception types.

The CLI maps these onto exit codes: contract problems exit 1, enumeration
cap overruns exit 2, internal invariant violations exit 3.
"""


class ContractError(ValueError):
    """Malformed or inconsistent contract input (bad scalars, Y > X, ...)."""


class EnumerationCapError(RuntimeError):
    """An exhaustive enumeration would exceed the configured cap."""

    def __init__(self, needed, cap):
        super().__init__(f"enumeration needs {needed} items, cap is {cap}")
        self.needed = needed
        self.cap = cap


class InvariantError(AssertionError):
    """An internal invariant failed; indicates a bug, not bad input."""
