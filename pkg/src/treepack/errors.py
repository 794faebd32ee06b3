"""Shared exception types."""


class ConstructionError(RuntimeError):
    """A constructive search stage exhausted its options.

    `stage` names the pipeline stage so failed runs can be replayed with
    the derived seed of that stage alone.
    """

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class CertificateError(ValueError):
    """A certificate file cannot be used. `code` is one of io/version/schema."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
