"""Exception types raised by torus_pca."""


class TorusPCAError(Exception):
    """Base class for all package errors."""


class InvalidInputError(TorusPCAError, ValueError):
    pass


class SingularityError(TorusPCAError, ValueError):
    """A polar point lies on the singular set of the deformation chart."""


class PolarDegenerateError(TorusPCAError, ValueError):
    """Polar angles are undefined for the given Cartesian point."""


class FitFailure(TorusPCAError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ProjectionUndefinedError(TorusPCAError, ValueError):
    pass


class ParseError(TorusPCAError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(TorusPCAError, ValueError):
    pass
