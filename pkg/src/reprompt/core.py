"""Domain types shared by all modules, plus prompt rendering/parsing rules.

A reverse prompt is an ordered list of comma-free text fragments rendered as
a single comma-joined tag list. All types here are immutable values.
"""

from __future__ import annotations

import hashlib
import math
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

PROVENANCE_VALUES = ("init", "candidate", "user-edit")

_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z0-9_]+)\}")


def normalize_key(fragment: str) -> str:
    """Dedupe key for fragments: case-insensitive, inner whitespace collapsed."""
    return " ".join(fragment.split()).casefold()


@dataclass(frozen=True, eq=False)
class TagPrompt:
    """An ordered, deduplicated sequence of prompt fragments with per-fragment origin.

    Equality and hashing consider fragments only: provenance is bookkeeping
    metadata and cannot survive a render/parse round trip.
    """

    fragments: tuple[str, ...] = ()
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.fragments) != len(self.provenance):
            raise ValueError("fragments and provenance must have equal length")
        seen: set[str] = set()
        for frag, origin in zip(self.fragments, self.provenance):
            if not frag.strip():
                raise ValueError("empty or whitespace-only fragment")
            if frag != frag.strip():
                raise ValueError(f"fragment not trimmed: {frag!r}")
            if "," in frag:
                raise ValueError(f"fragment contains a comma: {frag!r}")
            if origin not in PROVENANCE_VALUES:
                raise ValueError(f"unknown provenance {origin!r}")
            key = normalize_key(frag)
            if key in seen:
                raise ValueError(f"duplicate fragment: {frag!r}")
            seen.add(key)

    @classmethod
    def from_fragments(cls, fragments, provenance="user-edit") -> "TagPrompt":
        """Build a prompt, trimming and deduplicating as needed.

        `provenance` is one origin tag applied to every fragment, or a
        sequence aligned with `fragments`. Fragments containing commas are
        rejected; empty fragments are dropped.
        """
        fragments = list(fragments)
        if isinstance(provenance, str):
            origins = [provenance] * len(fragments)
        else:
            origins = list(provenance)
            if len(origins) != len(fragments):
                raise ValueError("provenance list must match fragments")
        kept: list[str] = []
        kept_origins: list[str] = []
        seen: set[str] = set()
        for frag, origin in zip(fragments, origins):
            if "," in frag:
                raise ValueError(f"fragment contains a comma: {frag!r}")
            frag = frag.strip()
            if not frag:
                continue
            key = normalize_key(frag)
            if key in seen:
                continue
            seen.add(key)
            kept.append(frag)
            kept_origins.append(origin)
        return cls(tuple(kept), tuple(kept_origins))

    def __eq__(self, other):
        if not isinstance(other, TagPrompt):
            return NotImplemented
        return self.fragments == other.fragments

    def __hash__(self):
        return hash(self.fragments)

    def __len__(self):
        return len(self.fragments)

    def __bool__(self):
        return bool(self.fragments)

    def render(self) -> str:
        return render(self)


def render(prompt: TagPrompt) -> str:
    """Serialize a prompt: fragments joined by ", " in list order."""
    return ", ".join(prompt.fragments)


def parse_tags(text: str, provenance: str = "user-edit") -> TagPrompt:
    """Parse comma-separated tag text into a TagPrompt.

    Splits on commas, trims whitespace, drops empties, and dedupes
    case-insensitively keeping the first occurrence.
    """
    parts = [part.strip() for part in text.split(",")]
    return TagPrompt.from_fragments([p for p in parts if p], provenance)


_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _png_size(data: bytes) -> tuple[int, int]:
    # IHDR is required to be the first chunk: width/height live at bytes 16..24.
    if len(data) < 24 or not data.startswith(_PNG_MAGIC) or data[12:16] != b"IHDR":
        raise ValueError("not a PNG image")
    width, height = struct.unpack(">II", data[16:24])
    return width, height


@dataclass(frozen=True)
class ImageRef:
    """A content-addressed handle on a PNG image, in memory or on disk."""

    id: str
    width: int
    height: int
    seed: int | None = None
    data: bytes | None = field(default=None, repr=False)
    path: str | None = None

    def __post_init__(self):
        if self.data is None and self.path is None:
            raise ValueError("ImageRef needs bytes or a path")

    @classmethod
    def from_bytes(cls, data: bytes, seed: int | None = None, path: str | None = None) -> "ImageRef":
        width, height = _png_size(data)
        digest = hashlib.sha256(data).hexdigest()
        return cls(id=digest, width=width, height=height, seed=seed, data=data, path=path)

    @classmethod
    def from_path(cls, path: str | Path, seed: int | None = None) -> "ImageRef":
        data = Path(path).read_bytes()
        return cls.from_bytes(data, seed=seed, path=str(path))

    def read_bytes(self) -> bytes:
        if self.data is not None:
            return self.data
        return Path(self.path).read_bytes()

    def with_path(self, path: str | Path) -> "ImageRef":
        return ImageRef(self.id, self.width, self.height, self.seed, self.data, str(path))


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-dimension real vector from a text/image embedding backend."""

    values: tuple[float, ...]
    dimension: int
    normalized: bool = False

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        if len(self.values) != self.dimension:
            raise ValueError(f"{len(self.values)} values for dimension {self.dimension}")
        if self.normalized:
            norm = math.sqrt(sum(v * v for v in self.values))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"normalized vector has norm {norm}")

    @classmethod
    def unit(cls, values) -> "EmbeddingVector":
        """L2-normalize `values` into a unit vector."""
        values = tuple(float(v) for v in values)
        norm = math.sqrt(sum(v * v for v in values))
        if norm == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return cls(tuple(v / norm for v in values), len(values), normalized=True)


@dataclass(frozen=True)
class ScoreValue:
    """A cosine similarity in [-1, 1]; reported on the x100 scale."""

    raw_cosine: float

    def __post_init__(self):
        raw = float(self.raw_cosine)
        if abs(raw) > 1.0 + 1e-9:
            raise ValueError(f"cosine out of range: {raw}")
        # Snap float-precision overshoot back onto the closed interval.
        object.__setattr__(self, "raw_cosine", max(-1.0, min(1.0, raw)))

    @property
    def reported(self) -> float:
        return self.raw_cosine * 100.0


@dataclass(frozen=True)
class IterationRecord:
    """One optimization step: what went in, what was generated, what came out.

    generated_image is None only when the step aborted before an image
    existed; the partial record is still persisted for history completeness.
    """

    step: int
    prompt_in: TagPrompt
    generated_image: ImageRef | None
    differences: tuple[str, ...]
    candidates: tuple[str, ...]
    prompt_out: TagPrompt
    score_in: ScoreValue
    score_out: ScoreValue
    wall_time: float

    def __post_init__(self):
        if self.step < 0:
            raise ValueError("step must be >= 0")


@dataclass(frozen=True)
class PromptTemplate:
    """A named instruction template with `{placeholder}` slots."""

    name: str
    text: str
    placeholders: tuple[str, ...] = ()

    def __post_init__(self):
        found = set(_PLACEHOLDER_RE.findall(self.text))
        declared = set(self.placeholders)
        if found != declared:
            raise ValueError(
                f"template {self.name!r}: placeholders {sorted(declared)} != slots in text {sorted(found)}"
            )

    def render(self, **values: str) -> str:
        """Substitute every placeholder; refuse partial instantiation."""
        missing = set(self.placeholders) - set(values)
        if missing:
            raise ValueError(f"template {self.name!r}: missing values for {sorted(missing)}")
        out = self.text
        for name in self.placeholders:
            out = out.replace("{" + name + "}", str(values[name]))
        for name in self.placeholders:
            if "{" + name + "}" in out:
                raise ValueError(f"template {self.name!r}: unresolved placeholder {name!r}")
        return out
