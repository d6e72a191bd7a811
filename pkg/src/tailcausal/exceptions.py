"""Exception types raised across the package."""


class GraphInvariantError(RuntimeError):
    """A graph structure was found in a state that should be unreachable (e.g. a cycle)."""


class EmptyTailError(ValueError):
    """No observation exceeded the tail threshold."""


class SearchSizeError(ValueError):
    """Exhaustive search was requested on an instance above the size guardrail."""


class ConfigError(ValueError):
    """An experiment or command configuration could not be parsed or is invalid."""
