class RewardError(Exception):
    """Base class for reward computation errors."""


class NonPositiveMetric(RewardError):
    """A PPA metric is zero or negative, so its score is undefined."""

    def __init__(self, metrics):
        self.metrics = metrics
        super().__init__(f"PPA metrics must be strictly positive, got {metrics}")
