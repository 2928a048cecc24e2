"""Exception hierarchy shared by the library and the command line."""


class KinsegError(Exception):
    """Base class for all errors raised by kinseg."""


class DomainError(KinsegError, ValueError):
    """A numeric argument lies outside its admissible range."""


class DimensionError(KinsegError, ValueError):
    """Raster or particle-array shapes are too small or do not match."""


class NetpbmError(KinsegError, OSError):
    """A portable anymap file could not be decoded."""


class MalformedHeaderError(NetpbmError):
    pass


class TruncatedDataError(NetpbmError):
    pass


class UnsupportedMaxvalError(NetpbmError):
    pass
