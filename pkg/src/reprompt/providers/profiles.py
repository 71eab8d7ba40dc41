"""Configuration and wire-shape types for the external model roles."""

from __future__ import annotations

from dataclasses import dataclass, field

from reprompt.core import ImageRef

ROLES = ("caption", "text_to_image", "vlm", "llm", "text_embedding", "image_embedding")


@dataclass(frozen=True)
class ProviderProfile:
    """Endpoint + model configuration for one backend role.

    auth names an environment variable holding a bearer token, not the
    secret itself. dimension is declared for embedding roles so paired
    text/image profiles can be checked at configuration load.
    """

    role: str
    endpoint: str = ""
    model_name: str = ""
    auth: str | None = None
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float | None = None
    dimension: int | None = None
    supports_multi_image: bool = True
    token_window: int | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown provider role {self.role!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class ChatTurn:
    """One message in a chat exchange; text, images, or both."""

    role_tag: str
    text: str = ""
    images: tuple[ImageRef, ...] = ()

    def __post_init__(self):
        if self.role_tag not in ("system", "user", "assistant"):
            raise ValueError(f"unknown chat role {self.role_tag!r}")
        if not self.text and not self.images:
            raise ValueError("chat turn needs text or images")


@dataclass(frozen=True)
class GenerationRequest:
    """Parameters for one text-to-image call."""

    prompt_text: str
    seed: int = 0
    width: int = 512
    height: int = 512
    steps: int | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be positive")
