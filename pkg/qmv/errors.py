class QmvError(Exception):
    """Base class for all simulator errors. ``exit_code`` is used by the CLI."""
    exit_code = 1


class ConfigError(QmvError, ValueError):
    """Invalid input: schema violation, out-of-range site or edge, bad argument."""
    exit_code = 2

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = '%s: %s' % (field, message)
        super(ConfigError, self).__init__(message)


class InfeasibleError(QmvError):
    exit_code = 3


class CapacityError(QmvError):
    exit_code = 4


class StiffnessError(CapacityError):
    pass


class InvariantError(QmvError, AssertionError):
    """An internal invariant was broken (indicates a bug, not bad input)."""
    exit_code = 1
