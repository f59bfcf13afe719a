"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or physically meaningless parameter."""


class ObserverDivergence(RuntimeError):
    """Raised when the observer state leaves any physically plausible range.

    The records logged before the abort are kept on ``partial`` so callers
    can still write them out.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial if partial is not None else []
