"""Exception types shared across the package.

The command line maps these onto process exit codes: anything rooted at
UsageError exits 2, ContractViolationError and failed invariant suites exit
3, CapacityError exits 4.
"""
from __future__ import annotations


class CatlabError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(CatlabError):
    """Malformed user input: unknown config keys, bad values, short sweeps."""


class InvalidOutcomeError(UsageError):
    """Outcome violates magnetization parity or spans an empty window."""


class ImpossibleOutcomeError(UsageError):
    """Requested measurement outcome has zero probability for the state."""


class DomainError(UsageError):
    """Arguments lie outside the validity region of a formula."""


class ContractViolationError(CatlabError):
    """An input broke a documented precondition (hermiticity, purity, ...)."""


class CapacityError(CatlabError):
    """Problem size exceeds the dense-matrix cap."""
