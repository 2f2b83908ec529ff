"""Exception types shared across the package.

DomainError marks invalid inputs (bad dimensions, out-of-range parameters,
malformed config files); NumericError marks runtime numerical failures
(non-finite objectives, bisection that cannot bracket). The CLI maps them
to exit codes 1 and 2 respectively.
"""


class DomainError(ValueError):
    """Input violates a documented precondition or invariant."""


class ConfigError(DomainError):
    """Scenario configuration file is malformed or inconsistent."""


class NumericError(RuntimeError):
    """A numerical procedure failed (ill-conditioning, non-finite values)."""
