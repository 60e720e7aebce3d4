"""
Exception hierarchy shared by every package.

Each error derives from LatticeFieldError and from the closest builtin
exception, so callers can catch either the library-specific class or the
generic one.
"""


class LatticeFieldError(Exception):
    """Base class for all library errors."""


class DimensionError(LatticeFieldError, ValueError):
    """Matrix shapes are incompatible with the requested operation."""


class SingularMatrixError(LatticeFieldError, ArithmeticError):
    """A pivot vanished during elimination."""


class ConfigurationError(LatticeFieldError, ValueError):
    """Invalid lattice spec, rank layout, element spec or CLI/YAML setting."""


class DomainError(LatticeFieldError, IndexError):
    """Coordinate, direction or site index out of range."""


class LocalityError(LatticeFieldError, LookupError):
    """Access to a site this rank neither owns nor mirrors."""


class TransportError(LatticeFieldError, RuntimeError):
    """Base class for messaging failures."""


class TransportConnectionError(TransportError, ConnectionError):
    """Peer unreachable, closed, or handshake timed out."""


class ProtocolError(TransportError):
    """Malformed frame, bad handshake or unexpected message length."""


class FieldFormatError(LatticeFieldError, ValueError):
    """Field file header or payload does not match expectations."""


class FieldFileError(LatticeFieldError, OSError):
    """Underlying I/O failure while saving or loading a field."""
