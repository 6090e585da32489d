"""Exception types raised across the package."""


class SubsetBellError(Exception):
    """Base class for all package errors."""


class DomainError(SubsetBellError, ValueError):
    """A numeric argument lies outside its documented domain."""


class MissingContextError(SubsetBellError, KeyError):
    """A behavior lacks probabilities for a context the inequality needs."""


class UnknownContextError(SubsetBellError, KeyError):
    """A context identifier is not part of the inequality or graph."""


class InvalidBehaviorError(SubsetBellError, ValueError):
    """Probabilities are negative or do not normalize per context."""


class DuplicateContextError(SubsetBellError, ValueError):
    pass


class NoViolationError(SubsetBellError):
    """The (effective) Bell value does not exceed the local bound."""


class InfeasibleError(SubsetBellError):
    """No parameter value within range satisfies the request."""


class NotFoundError(SubsetBellError):
    pass


class IncompleteTableError(SubsetBellError, KeyError):
    pass


class MissingProbabilityError(SubsetBellError, KeyError):
    pass


class GraphTooLargeError(SubsetBellError):
    """Structural operation requested on a graph outside the exact budget."""


class InconsistentRowsError(SubsetBellError):
    pass


class CatalogError(SubsetBellError):
    """Catalog file is malformed or violates an entry invariant."""


class UnknownEntryError(SubsetBellError, KeyError):
    """Requested name is not in the catalog."""
