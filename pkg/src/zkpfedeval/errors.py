"""Exception hierarchy shared across the package."""


class ZkpFedEvalError(Exception):
    pass


class RangeError(ZkpFedEvalError, ValueError):
    """A value falls outside the fixed-point encodable range."""


class ShapeError(ZkpFedEvalError, ValueError):
    pass


class EmptyShardError(ZkpFedEvalError, ValueError):
    pass


class FormatError(ZkpFedEvalError, ValueError):
    """Malformed dataset file. ``offset`` is a byte offset or line number."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(ZkpFedEvalError, ValueError):
    pass


class DataError(ZkpFedEvalError):
    pass


class BuildError(ZkpFedEvalError):
    """Constraint references a variable that was never allocated."""


class UnsatisfiableError(ZkpFedEvalError):
    """No witness exists for the requested statement."""


class KeyMismatchError(ZkpFedEvalError):
    pass


class ProtocolError(ZkpFedEvalError):
    pass
