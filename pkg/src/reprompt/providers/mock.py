"""Deterministic offline backend with hand-computable similarities.

The mock speaks the same surface as the HTTP providers but every operation
is a pure function of its inputs:

- images carry a "planted" word set in their PNG metadata;
- text embeds to the L2-normalized indicator vector of vocabulary words it
  contains (dimension = vocabulary size);
- image embedding reads the planted words and embeds them the same way, so
  optimal prompts and scores can be computed by hand;
- the chat endpoint recognizes the instruction templates and answers from
  planted word sets (differences, candidates, descriptions, tag classes).

Text with no vocabulary words maps to a hash-derived basis vector so the
"embeddings are unit-normalized" invariant stays total.
"""

from __future__ import annotations

import hashlib
import io
import logging
import re

from PIL import Image, ImageDraw, UnidentifiedImageError
from PIL.PngImagePlugin import PngInfo

from reprompt.core import EmbeddingVector, ImageRef
from reprompt.errors import BackendError, UnsupportedMultiImage
from reprompt.providers.profiles import ChatTurn, GenerationRequest

log = logging.getLogger(__name__)

# 48 content words + 16 style words. Index in this tuple is the embedding axis.
CONTENT_WORDS = (
    "cat", "dog", "fox", "bird", "owl", "horse", "fish", "dragon",
    "robot", "knight", "wizard", "castle", "tower", "bridge", "boat", "tent",
    "house", "forest", "tree", "flower", "mountain", "river", "lake", "ocean",
    "desert", "island", "city", "street", "market", "garden", "moon", "star",
    "cloud", "rain", "snow", "fire", "crystal", "lantern", "mirror", "clock",
    "book", "sword", "crown", "mask", "bow", "tie", "hat", "umbrella",
)
STYLE_WORDS = (
    "blue", "red", "golden", "silver", "pastel", "neon", "monochrome", "vintage",
    "surreal", "minimalist", "baroque", "gothic", "watercolor", "sketch", "painting", "cinematic",
)
VOCABULARY = CONTENT_WORDS + STYLE_WORDS
_WORD_INDEX = {word: i for i, word in enumerate(VOCABULARY)}

DIMENSION = len(VOCABULARY)
TOKEN_WINDOW = 77

MOCK_STYLE_SENTENCE = "flat mock style rendering"
NO_DIFFERENCE_TEXT = "Image 1 and Image 2 contain the same planted words; no planted-word difference."
NO_DESCRIPTION_DIFFERENCE_TEXT = "No differences."

_WORD_RE = re.compile(r"[a-z]+")


def planted_words(text: str) -> list[str]:
    """Vocabulary words present in `text`, deduped, in first-occurrence order."""
    seen: list[str] = []
    for token in _WORD_RE.findall(text.lower()):
        if token in _WORD_INDEX and token not in seen:
            seen.append(token)
    return seen


def _hash_int(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "big")


def planted_image(words, width: int = 64, height: int = 64, seed: int = 0) -> ImageRef:
    """Render a reproducible PNG whose metadata carries the planted word set."""
    words = list(dict.fromkeys(words))
    base = _hash_int("bg|" + " ".join(words) + f"|{seed}")
    img = Image.new("RGB", (width, height), ((base >> 16) & 0xFF, (base >> 8) & 0xFF, base & 0xFF))
    draw = ImageDraw.Draw(img)
    for i, word in enumerate(words):
        h = _hash_int(f"{word}|{seed}|{i}")
        color = ((h >> 16) & 0xFF, (h >> 8) & 0xFF, h & 0xFF)
        x0 = (h >> 24) % max(1, width // 2)
        y0 = (h >> 32) % max(1, height // 2)
        draw.rectangle([x0, y0, x0 + width // 3, y0 + height // 3], fill=color)
    meta = PngInfo()
    meta.add_text("planted", " ".join(words))
    meta.add_text("mock-seed", str(seed))
    buf = io.BytesIO()
    img.save(buf, format="PNG", pnginfo=meta)
    return ImageRef.from_bytes(buf.getvalue(), seed=seed)


def read_planted(image: ImageRef) -> list[str]:
    """Recover the planted word set from a mock image's PNG metadata."""
    try:
        with Image.open(io.BytesIO(image.read_bytes())) as img:
            text = img.text.get("planted", "")
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise BackendError(f"unreadable image: {exc}", role="image_embedding") from exc
    return text.split() if text else []


def _indicator(words, oov_tag: str = "") -> EmbeddingVector:
    values = [0.0] * DIMENSION
    hits = 0
    for word in words:
        idx = _WORD_INDEX.get(word)
        if idx is not None:
            values[idx] = 1.0
            hits += 1
    if hits == 0:
        # Out-of-vocabulary input: deterministic unit basis vector.
        values[_hash_int("oov|" + oov_tag) % DIMENSION] = 1.0
    return EmbeddingVector.unit(values)


def _word_set_difference(ref_words: list[str], gen_words: list[str]) -> str:
    missing = [w for w in ref_words if w not in gen_words]
    extra = [w for w in gen_words if w not in ref_words]
    if not missing and not extra:
        return NO_DIFFERENCE_TEXT
    parts = [
        f"Image 1 contains: {', '.join(ref_words) or 'nothing'}.",
        f"Image 2 contains: {', '.join(gen_words) or 'nothing'}.",
    ]
    if missing:
        parts.append(f"Image 2 is missing: {', '.join(missing)}.")
    if extra:
        parts.append(f"Image 2 should drop: {', '.join(extra)}.")
    return " ".join(parts)


class MockProviders:
    """All six provider roles, backed by the planted-word oracle."""

    multi_image_capable: bool
    embedding_dimension: int = DIMENSION

    def __init__(self, multi_image_capable: bool = True):
        self.multi_image_capable = multi_image_capable
        self.truncation_warnings: list[tuple[str, int]] = []

    # -- caption / image generation -------------------------------------

    def caption(self, image: ImageRef) -> str:
        words = read_planted(image)
        return " ".join(words) if words else "untitled scene"

    def generate_image(self, req: GenerationRequest) -> ImageRef:
        if not req.prompt_text.strip():
            raise ValueError("prompt_text must be non-empty")
        words = planted_words(req.prompt_text)
        return planted_image(words, req.width, req.height, req.seed)

    # -- chat ------------------------------------------------------------

    def chat(self, turns: list[ChatTurn], role: str = "llm") -> str:
        if not turns:
            raise ValueError("turns must be non-empty")
        if not self.multi_image_capable and any(len(t.images) > 1 for t in turns):
            raise UnsupportedMultiImage("profile accepts a single image per call", role=role)
        text = "\n".join(t.text for t in turns if t.text)
        images = [img for t in turns for img in t.images]

        if "describe the difference between Image 1 and Image 2" in text and len(images) >= 2:
            return _word_set_difference(read_planted(images[0]), read_planted(images[1]))
        if "python list format" in text:
            return self._candidates_reply(text)
        if "describe the content of the image" in text and images:
            words = read_planted(images[0])
            return " ".join(words) if words else "nothing planted"
        if "describe the style of the image" in text and images:
            return MOCK_STYLE_SENTENCE
        if "based on their descriptions" in text:
            return self._description_difference_reply(text)
        if "Classify each of the following tags" in text:
            return self._classify_reply(text)
        return "ok"

    @staticmethod
    def _candidates_reply(text: str) -> str:
        match = re.search(r"is missing: ([^.\n]*)", text)
        if not match:
            return "[]"
        words = [w.strip() for w in match.group(1).split(",") if w.strip()]
        return "[" + ", ".join(words) + "]"

    @staticmethod
    def _description_difference_reply(text: str) -> str:
        m1 = re.search(r"The descriptions of Image 1: (.*?)\nThe descriptions of Image 2: ", text, re.S)
        m2 = re.search(r"The descriptions of Image 2: (.*?)\nPlease identify", text, re.S)
        if not m1 or not m2:
            return NO_DESCRIPTION_DIFFERENCE_TEXT
        ref_words = planted_words(m1.group(1))
        gen_words = planted_words(m2.group(1))
        if ref_words == gen_words:
            return NO_DESCRIPTION_DIFFERENCE_TEXT
        return _word_set_difference(ref_words, gen_words)

    @staticmethod
    def _classify_reply(text: str) -> str:
        lines = []
        in_tags = False
        for line in text.splitlines():
            if in_tags and line.strip():
                tag = line.strip().lstrip("- ")
                style_hits = sum(1 for w in planted_words(tag) if w in STYLE_WORDS)
                content_hits = sum(1 for w in planted_words(tag) if w in CONTENT_WORDS)
                label = "style" if style_hits > content_hits else "content"
                lines.append(f"{tag}: {label}")
            if line.strip() == "Tags:":
                in_tags = True
        return "\n".join(lines)

    # -- embeddings -------------------------------------------------------

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise ValueError("text must be non-empty")
        tokens = text.split()
        if len(tokens) > TOKEN_WINDOW:
            self.truncation_warnings.append((text[:40], len(tokens)))
            log.warning("mock embed_text truncating %d tokens to %d", len(tokens), TOKEN_WINDOW)
            text = " ".join(tokens[:TOKEN_WINDOW])
        return _indicator(planted_words(text), oov_tag=text)

    def embed_image(self, image: ImageRef) -> EmbeddingVector:
        words = read_planted(image)
        return _indicator(words, oov_tag=" ".join(words))
