"""Exception types raised by :mod:`dlmg`."""


class DlmgError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(DlmgError, ValueError):
    pass


class CriticalPointError(InvalidParameterError):
    """Raised for Lambda == 1, where every Holstein-Primakoff quantity is singular."""


class UnsupportedRegimeError(DlmgError):
    """A closed form was requested outside the regime where it is defined."""


class TooLargeError(DlmgError, MemoryError):
    pass


class CutoffError(DlmgError):
    """Fock-space truncation is too small for the requested state."""


class SectorMixingError(DlmgError):
    pass


class ConvergenceError(DlmgError, RuntimeError):
    pass
