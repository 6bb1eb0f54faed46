class RenyiError(Exception):
    """
    Root of every error raised by the package.

    Attributes:
        error (str): Human readable message.
        source (str): The operation that raised the error, e.g. "fit_rp()".
        details (dict): Free space for structured context (pivot index, row, key...).
        It is copied verbatim into the JSON error report written by the CLI.
    """

    exit_code = 1

    def __init__(self, error: str, source: str = None, details: dict = None):
        super().__init__(error)
        self.error = error
        self.source = source
        self.details = details if details is not None else dict()

    def __str__(self):
        return self.error if self.source is None else f"{self.source} - {self.error}"

    def to_json(self):
        return {
            "type": type(self).__name__,
            "error": self.error,
            "source": self.source,
            "details": self.details,
        }
