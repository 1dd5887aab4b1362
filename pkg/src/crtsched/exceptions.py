class CrtError(Exception):
    """Base class for errors raised by crtsched."""


class InvalidParameterError(CrtError, ValueError):
    pass


class UnknownSatelliteError(CrtError, KeyError):
    pass


class TopologyMismatchError(CrtError, ValueError):
    """A path, schedule or link does not exist in the snapshot it is used with."""


class UnreachablePairError(CrtError, RuntimeError):
    pass


class InstanceTooLargeError(CrtError, ValueError):
    pass


class ConfigError(CrtError, ValueError):
    pass


class ArtifactIOError(CrtError, OSError):
    """Reading or writing an output file failed; the message names the path."""
