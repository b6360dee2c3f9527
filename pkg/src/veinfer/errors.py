"""Package-specific error types."""


class DegenerateWeightsError(RuntimeError):
    """All conditional weights of a non-empty observation class are zero."""
