"""Exception types raised by the solver library."""


class ParameterError(ValueError):
    """An algorithm parameter is outside its valid range."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class SchemaError(ValueError):
    """Problem data has inconsistent dimensions or an unsupported layout."""
