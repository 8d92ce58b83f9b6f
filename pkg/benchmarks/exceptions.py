class MetricsError(Exception):
    """Base class for benchmark analytics errors."""


class DomainError(MetricsError):
    """Arguments outside the domain of a metric."""


class MissingReference(MetricsError):
    """A design has no reference PPA to compare against."""

    def __init__(self, design):
        self.design = design
        super().__init__(f"design '{design}' has no reference PPA")
