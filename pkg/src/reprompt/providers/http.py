"""HTTP clients for the external model roles.

Wire contracts:
- chat-capable roles (caption, vlm, llm) speak the OpenAI-style
  chat-completions JSON: {"model", "messages", "temperature"} where message
  content is a list of text parts and base64 data-URL image parts;
- text_to_image: POST {"prompt", "seed", "width", "height", "steps"} ->
  {"image": "<base64 png>"};
- embeddings: POST {"input": text-or-base64, "model"} -> {"embedding": [float]}.

Auth is a bearer token read from the environment variable named in the
profile. Transient failures (connection errors, timeouts, 429/5xx) retry
with exponential backoff starting at 1 s, up to max_retries.
"""

from __future__ import annotations

import base64
import logging
import os
import time

import requests

from reprompt.core import EmbeddingVector, ImageRef
from reprompt.errors import (
    BackendError,
    BackendTimeout,
    BackendUnreachable,
    ConfigError,
    UnsupportedMultiImage,
)
from reprompt.providers.profiles import ChatTurn, GenerationRequest, ProviderProfile

log = logging.getLogger(__name__)

CAPTION_INSTRUCTION = "Describe this image in one sentence."

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


def _headers(profile: ProviderProfile) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    if profile.auth:
        token = os.environ.get(profile.auth, "")
        if not token:
            raise ConfigError(f"environment variable {profile.auth} is not set", key=f"providers.{profile.role}.auth")
        headers["Authorization"] = f"Bearer {token}"
    return headers


def _post_json(profile: ProviderProfile, payload: dict, session: requests.Session, sleep=time.sleep) -> dict:
    last_exc: Exception | None = None
    for attempt in range(profile.max_retries + 1):
        if attempt:
            sleep(2 ** (attempt - 1))
        try:
            resp = session.post(
                profile.endpoint,
                json=payload,
                headers=_headers(profile),
                timeout=profile.timeout,
            )
        except requests.Timeout:
            last_exc = BackendTimeout(f"timed out after {profile.timeout}s", role=profile.role)
            log.warning("%s attempt %d timed out", profile.role, attempt + 1)
            continue
        except requests.ConnectionError as exc:
            last_exc = BackendUnreachable(str(exc), role=profile.role)
            log.warning("%s attempt %d unreachable", profile.role, attempt + 1)
            continue
        if resp.status_code in _RETRYABLE_STATUS:
            last_exc = BackendError("transient backend failure", status=resp.status_code,
                                    body=resp.text[:500], role=profile.role)
            continue
        if resp.status_code >= 400:
            raise BackendError("backend rejected request", status=resp.status_code,
                               body=resp.text[:500], role=profile.role)
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendError(f"non-JSON response: {exc}", status=resp.status_code, role=profile.role) from exc
    raise last_exc


def _image_part(image: ImageRef) -> dict:
    b64 = base64.b64encode(image.read_bytes()).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}


def _chat_messages(turns: list[ChatTurn]) -> list[dict]:
    messages = []
    for turn in turns:
        content: list[dict] = []
        if turn.text:
            content.append({"type": "text", "text": turn.text})
        content.extend(_image_part(img) for img in turn.images)
        messages.append({"role": turn.role_tag, "content": content})
    return messages


class HttpProviders:
    """All provider roles resolved against configured HTTP profiles."""

    def __init__(self, profiles: dict[str, ProviderProfile], session: requests.Session | None = None,
                 sleep=time.sleep):
        self.profiles = profiles
        self.session = session or requests.Session()
        self._sleep = sleep
        self.truncation_warnings: list[tuple[str, int]] = []

    @property
    def multi_image_capable(self) -> bool:
        profile = self.profiles.get("vlm")
        return bool(profile and profile.supports_multi_image)

    @property
    def embedding_dimension(self) -> int | None:
        profile = self.profiles.get("text_embedding")
        return profile.dimension if profile else None

    def _profile(self, role: str) -> ProviderProfile:
        try:
            return self.profiles[role]
        except KeyError:
            raise ConfigError(f"no profile configured for role {role!r}", key=f"providers.{role}")

    def chat(self, turns: list[ChatTurn], role: str = "llm") -> str:
        if not turns:
            raise ValueError("turns must be non-empty")
        profile = self._profile(role)
        if not profile.supports_multi_image and any(len(t.images) > 1 for t in turns):
            raise UnsupportedMultiImage("profile accepts a single image per call", role=role)
        payload = {
            "model": profile.model_name,
            "messages": _chat_messages(turns),
            "temperature": profile.temperature if profile.temperature is not None else 0,
        }
        data = _post_json(profile, payload, self.session, self._sleep)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat response: {exc}", role=role) from exc

    def caption(self, image: ImageRef) -> str:
        turn = ChatTurn("user", CAPTION_INSTRUCTION, (image,))
        return self.chat([turn], role="caption").strip()

    def generate_image(self, req: GenerationRequest) -> ImageRef:
        if not req.prompt_text.strip():
            raise ValueError("prompt_text must be non-empty")
        profile = self._profile("text_to_image")
        payload = {
            "prompt": req.prompt_text,
            "seed": req.seed,
            "width": req.width,
            "height": req.height,
            "steps": req.steps,
        }
        data = _post_json(profile, payload, self.session, self._sleep)
        try:
            png = base64.b64decode(data["image"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed image response: {exc}", role="text_to_image") from exc
        return ImageRef.from_bytes(png, seed=req.seed)

    def _embed(self, role: str, payload_input: str) -> EmbeddingVector:
        profile = self._profile(role)
        data = _post_json(profile, {"input": payload_input, "model": profile.model_name},
                          self.session, self._sleep)
        try:
            values = data["embedding"]
        except (KeyError, TypeError) as exc:
            raise BackendError(f"malformed embedding response: {exc}", role=role) from exc
        return EmbeddingVector.unit(values)

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise ValueError("text must be non-empty")
        profile = self._profile("text_embedding")
        if profile.token_window is not None:
            estimate = len(text.split())
            if estimate > profile.token_window:
                self.truncation_warnings.append((text[:40], estimate))
                log.warning("text of ~%d tokens exceeds the %d-token backend window; backend will truncate",
                            estimate, profile.token_window)
        return self._embed("text_embedding", text)

    def embed_image(self, image: ImageRef) -> EmbeddingVector:
        b64 = base64.b64encode(image.read_bytes()).decode("ascii")
        return self._embed("image_embedding", b64)
