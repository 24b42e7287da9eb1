class PlotsError(Exception):
    """Base class for figure-generation errors."""


class SchemaMismatch(PlotsError):
    """The CSV header does not match the documented aggregate schema."""


class EmptyWindow(PlotsError):
    """No rows fall inside the requested fit window."""


class DegenerateFit(PlotsError):
    """The slope fit has fewer than two usable points."""
