"""Exceptions shared across the package."""


class DataError(ValueError):
    """A data contract was violated (bad payload, range, or normalization).

    Raised when inputs are structurally valid but numerically unusable:
    a direction average too close to zero, an offset grid that does not
    cover the reconstruction region, an unreadable payload, and similar.
    The command line maps this to exit code 3; plain ``ValueError`` from
    constructors is treated as a usage problem instead.
    """
