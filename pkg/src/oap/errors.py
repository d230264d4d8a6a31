"""Exception taxonomy shared across the package.

The CLI maps these onto fixed exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class OapError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(OapError):
    """A hyper-parameter or config entry violates its documented range."""


class DataError(OapError):
    """Malformed input data: bad file, dimension mismatch, missing class,
    out-of-order frames."""


class NumericalError(OapError):
    """A numerical invariant was violated, e.g. a non-finite gradient."""
