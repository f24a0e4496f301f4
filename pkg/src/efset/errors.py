"""Exception types shared by every structure in the package."""


class EfsetError(Exception):
    pass


class RangeError(EfsetError, IndexError):
    """Position, rank or occurrence index outside the valid range."""


class OrderingError(EfsetError, ValueError):
    """Input that must be sorted (or strictly increasing) is not.

    ``index`` is the offending position in the input, when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class MonotonicityError(OrderingError):
    pass


class UniverseError(EfsetError, ValueError):
    """Value outside the universe ``[0, m]``."""


class CapacityError(EfsetError):
    pass


class StaleIndexError(EfsetError):
    """A rank/select query hit an index built for an older bitvector state."""


class FormatError(EfsetError, ValueError):
    """Malformed serialized data."""
