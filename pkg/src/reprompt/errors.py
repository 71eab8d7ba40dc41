"""Exception types shared across the package."""


class RepromptError(Exception):
    """Base class for all package errors."""


class ProviderError(RepromptError):
    """A backend call failed. `role` names the provider role when known."""

    def __init__(self, message: str, role: str | None = None):
        self.role = role
        super().__init__(message if role is None else f"[{role}] {message}")


class BackendUnreachable(ProviderError):
    pass


class BackendError(ProviderError):
    def __init__(self, message: str, status: int | None = None, body: str = "", role: str | None = None):
        self.status = status
        self.body = body
        detail = message if status is None else f"{message} (status {status})"
        super().__init__(detail, role=role)


class BackendTimeout(ProviderError):
    pass


class UnsupportedMultiImage(ProviderError):
    """The VLM profile accepts only one image per call."""


class InvalidSize(ProviderError):
    pass


class DimensionMismatch(RepromptError):
    pass


class ZeroVector(RepromptError):
    pass


class ParseFailure(RepromptError):
    """Model output could not be parsed into fragments/labels."""


class EmptyResult(RepromptError):
    """An editing operation produced nothing (e.g. fusing two empty parts)."""


class EmptyManifest(RepromptError):
    pass


class ConfigError(RepromptError):
    """Configuration is invalid. `key` points at the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message if key is None else f"{key}: {message}")
