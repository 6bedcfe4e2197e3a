"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PhishsimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PhishsimError, ValueError):
    """Invalid inputs: bad shapes, violated invariants, malformed scenarios.

    Carries a list of field-addressed messages so a loader can report every
    problem at once instead of stopping at the first.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class OracleGuardError(ConfigurationError):
    """Grid oracle refused a problem that would blow up the lattice."""


class DomainError(PhishsimError, ValueError):
    """A quantity is undefined for the given arguments (e.g. no targets)."""


class NumericalError(PhishsimError, ArithmeticError):
    """Non-finite value met during optimization."""

    def __init__(self, message, alpha=None):
        super().__init__(message)
        self.alpha = alpha


class CampaignError(PhishsimError, RuntimeError):
    """Campaign state machine used out of order (e.g. stepping a breach)."""
