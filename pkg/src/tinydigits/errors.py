"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Invalid network architecture or training configuration."""


class DocumentError(ValueError):
    """A persisted JSON document failed to parse or validate.

    ``path`` points at the offending field, e.g. ``layers[0].weights``.
    """

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
