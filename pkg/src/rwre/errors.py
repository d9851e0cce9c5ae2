"""Exception types shared across the toolkit."""


class RWREError(Exception):
    """Base class for all toolkit errors."""


class BorderlineCriterion(RWREError):
    """The transience criterion is numerically undecidable."""


class NotTransient(RWREError):
    """An estimator requiring a transient walk was given a recurrent law."""


class BudgetExceeded(RWREError):
    """A tree expansion would exceed the configured node budget."""


class InsufficientRegenerations(RWREError):
    """Fewer than two uncensored regeneration records are available."""


class NotAncestor(RWREError):
    """Path projection requested for a pair that is not ordered in the tree."""


class InsufficientSamples(RWREError):
    """A contingency table still has small expected counts after pooling."""


class ConfigError(RWREError):
    """Malformed experiment configuration.

    Carries the offending ``field`` and, when known, the 1-based ``line``.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
