"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ContractError(ValueError):
    """A caller violated an operation's precondition (e.g. a missing monotonicity flag)."""


class EnumerationInfeasible(RuntimeError):
    """The exact optimisation would need more evaluations than the configured limit."""
