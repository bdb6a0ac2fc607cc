"""
navlab - Errors
Exception types raised by the library. Handlers turn these into result dicts.
"""


class NavlabError(Exception):
    """Base for everything navlab raises on purpose."""
    exit_code = 1


class ConfigError(NavlabError):
    """Bad config file, bad world file, or a world that cannot spawn a target."""
    exit_code = 2


class ContractViolation(NavlabError):
    """A caller broke a precondition (shape mismatch, step after done, ...)."""
    exit_code = 2


class ArchitectureMismatch(NavlabError):
    """Checkpoint architecture tag does not match the requested algorithm."""
    exit_code = 2


class NanAbort(NavlabError):
    """A loss or parameter went non-finite during an update."""
    exit_code = 3
