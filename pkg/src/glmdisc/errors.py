"""Exception types raised across the package."""


class GlmdiscError(Exception):
    """Base class for all package errors."""


class MissingValue(GlmdiscError):
    pass


class SchemaMismatch(GlmdiscError):
    pass


class UnknownLevel(GlmdiscError):
    """A categorical label or code that the fitted schema does not know."""

    def __init__(self, message, row=None, feature=None):
        super().__init__(message)
        self.row = row
        self.feature = feature


class DegenerateSplit(GlmdiscError):
    pass


class SingleClass(GlmdiscError):
    pass


class NonFinite(GlmdiscError):
    pass


class ShapeMismatch(GlmdiscError):
    pass
