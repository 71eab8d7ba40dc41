"""Textual gradients: difference descriptions and candidate fragments.

Two framework paths produce the differences. The two-step "vanilla" path
sends both images to a multi-image VLM and asks for a difference
description directly. The "enhanced" path, for backends that can only see
one image at a time, first collects per-image content and style
descriptions, then has an LLM compare the descriptions per aspect. Either
way an LLM then turns the difference text into candidate prompt fragments.

Default template texts are frozen; overrides can be loaded from a JSON map.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from reprompt.core import PromptTemplate, TagPrompt, normalize_key, render
from reprompt.errors import ParseFailure, UnsupportedMultiImage
from reprompt.providers.profiles import ChatTurn

DEFAULT_TEMPLATES: dict[str, PromptTemplate] = {
    "compare_difference": PromptTemplate(
        name="compare_difference",
        text=(
            "The first image is Image 1 and the second image is Image 2. "
            "You need to describe the difference between Image 1 and Image 2. "
            "Let's think step by step."
        ),
    ),
    "generate_candidates": PromptTemplate(
        name="generate_candidates",
        text=(
            "Generate image promts that incorporate the following difference "
            "between Image 1 and Image 2: {difference}.\n"
            "For the specific contrasts identified in the differences between "
            "Image 1 and Image 2, the image prompts should guide the creation "
            "of images that align more closely with Image 1.\n"
            "The prompts should be structured as a series of keywords or short "
            "phrases, separated by commas. Please list all possible prompts in "
            "a python list format. Your answer should only contain a python "
            "list. Let's think step by step."
        ),
        placeholders=("difference",),
    ),
    "describe_content": PromptTemplate(
        name="describe_content",
        text=(
            "You are an expert in describing image, please describe the "
            "content of the image. This includes indentifying objects, "
            "environments, events, background, actions, etc. in the image."
        ),
    ),
    "describe_style": PromptTemplate(
        name="describe_style",
        text=(
            "You are an expert in image analysis, please describe the style "
            "of the image. This includes identifying the medium of the image, "
            "the art style, the artist's style, the creative technique, the "
            "lighting, the colours and the resolution, etc."
        ),
    ),
    "compare_descriptions": PromptTemplate(
        name="compare_descriptions",
        text=(
            "I have descriptions of Image 1 and Image 2.\n"
            "The descriptions of Image 1: {image1}\n"
            "The descriptions of Image 2: {image2}\n"
            "Please identify the differences between Image 1 and Image 2 "
            "based on their descriptions. Let's think step by step."
        ),
        placeholders=("image1", "image2"),
    ),
    # Not part of the published template set; used by editing.classify.
    "classify_tags": PromptTemplate(
        name="classify_tags",
        text=(
            "You are organizing image prompt tags. Classify each of the "
            "following tags as either content (objects, characters, scenery, "
            "actions) or style (artistic style, medium, color, lighting). "
            "Reply with one line per tag in the exact form `tag: content` or "
            "`tag: style`.\nTags:\n{tags}"
        ),
        placeholders=("tags",),
    ),
}

DEFAULT_CANDIDATE_CAP = 16


def load_templates(path: str | Path) -> dict[str, PromptTemplate]:
    """Merge a JSON {name: text} override file over the defaults."""
    overrides = json.loads(Path(path).read_text(encoding="utf-8"))
    merged = dict(DEFAULT_TEMPLATES)
    for name, text in overrides.items():
        if name not in DEFAULT_TEMPLATES:
            raise ValueError(f"unknown template name {name!r}")
        placeholders = tuple(sorted(set(re.findall(r"\{([A-Za-z0-9_]+)\}", text))))
        merged[name] = PromptTemplate(name=name, text=text, placeholders=placeholders)
    return merged


@dataclass(frozen=True)
class ImageDescription:
    """Per-image content and style descriptions from the enhanced path."""

    content: str = ""
    style: str = ""

    def __post_init__(self):
        if not self.content.strip() and not self.style.strip():
            raise ValueError("description needs content or style text")


@dataclass(frozen=True)
class DifferenceSet:
    """Difference text blocks, one framework, optional per-block aspect."""

    blocks: tuple[str, ...]
    framework: str
    aspect_tags: tuple[str | None, ...] = ()

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("difference set must have at least one block")
        if self.aspect_tags and len(self.aspect_tags) != len(self.blocks):
            raise ValueError("aspect_tags must align with blocks")


@dataclass
class CandidateSet:
    """Candidate fragments plus the aspect each one came from (if known)."""

    fragments: list[str] = field(default_factory=list)
    aspects: dict[str, str | None] = field(default_factory=dict)


_ENUM_ITEM_RE = re.compile(r"(?m)^\s*\d+[.):]\s+")


def split_difference_blocks(reply: str) -> tuple[str, ...]:
    """Split an enumerated reply into items; otherwise keep one block."""
    reply = reply.strip()
    markers = list(_ENUM_ITEM_RE.finditer(reply))
    if len(markers) < 2:
        return (reply,) if reply else ()
    blocks = []
    for i, marker in enumerate(markers):
        end = markers[i + 1].start() if i + 1 < len(markers) else len(reply)
        block = reply[marker.end():end].strip()
        if block:
            blocks.append(block)
    return tuple(blocks)


def vanilla_differences(reference, generated, providers,
                        templates: dict[str, PromptTemplate] | None = None) -> DifferenceSet:
    """One multi-image VLM call comparing reference (Image 1) to generated (Image 2)."""
    templates = templates or DEFAULT_TEMPLATES
    if not providers.multi_image_capable:
        raise UnsupportedMultiImage("vanilla differences need a multi-image VLM profile", role="vlm")
    message = templates["compare_difference"].render()
    reply = providers.chat([ChatTurn("user", message, (reference, generated))], role="vlm")
    blocks = split_difference_blocks(reply)
    if not blocks:
        raise ParseFailure("difference reply was empty")
    return DifferenceSet(blocks=blocks, framework="vanilla", aspect_tags=(None,) * len(blocks))


def enhanced_describe(image, providers,
                      templates: dict[str, PromptTemplate] | None = None) -> ImageDescription:
    """Two single-image VLM calls: one for content, one for style."""
    templates = templates or DEFAULT_TEMPLATES
    content = providers.chat([ChatTurn("user", templates["describe_content"].render(), (image,))], role="vlm")
    style = providers.chat([ChatTurn("user", templates["describe_style"].render(), (image,))], role="vlm")
    return ImageDescription(content=content.strip(), style=style.strip())


NO_DIFFERENCE_BLOCK = "No differences."


def enhanced_differences(ref_desc: ImageDescription, gen_desc: ImageDescription, providers,
                         templates: dict[str, PromptTemplate] | None = None) -> DifferenceSet:
    """Per-aspect LLM comparisons of the two images' descriptions.

    An aspect whose two description texts are string-identical has no
    differences by construction, so no backend call is spent on it; if
    every comparable aspect is identical the result is a single
    no-difference block.
    """
    templates = templates or DEFAULT_TEMPLATES
    template = templates["compare_descriptions"]
    blocks: list[str] = []
    aspects: list[str | None] = []
    identical = 0
    for aspect, ref_text, gen_text in (
        ("content", ref_desc.content, gen_desc.content),
        ("style", ref_desc.style, gen_desc.style),
    ):
        if not ref_text.strip() or not gen_text.strip():
            continue
        if ref_text.strip() == gen_text.strip():
            identical += 1
            continue
        message = template.render(image1=ref_text, image2=gen_text)
        reply = providers.chat([ChatTurn("user", message)], role="llm").strip()
        if reply:
            blocks.append(reply)
            aspects.append(aspect)
    if not blocks:
        if identical:
            return DifferenceSet(blocks=(NO_DIFFERENCE_BLOCK,), framework="enhanced",
                                 aspect_tags=(None,))
        raise ParseFailure("no comparable description aspects")
    return DifferenceSet(blocks=tuple(blocks), framework="enhanced", aspect_tags=tuple(aspects))


_QUOTE_CHARS = "\"'`“”‘’"
_STRIP_SET = _QUOTE_CHARS + "[] \t\n"
_BULLET_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")


def _clean_fragment(piece: str) -> list[str]:
    while True:
        before = piece
        piece = _BULLET_RE.sub("", piece.strip()).strip(_STRIP_SET)
        if piece == before:
            break
    if not piece or not re.search(r"[A-Za-z0-9]", piece):
        return []
    if "," in piece:
        return [p for sub in piece.split(",") for p in _clean_fragment(sub)]
    return [piece]


def _first_bracketed(text: str) -> str | None:
    start = text.find("[")
    if start < 0:
        return None
    depth = 0
    quote: str | None = None
    for i in range(start, len(text)):
        ch = text[i]
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                return text[start + 1:i]
    return text[start + 1:]


def _split_top_level(text: str) -> list[str]:
    pieces: list[str] = []
    buf: list[str] = []
    depth = 0
    quote: str | None = None
    for ch in text:
        if quote:
            if ch == quote:
                quote = None
            buf.append(ch)
        elif ch in "\"'":
            quote = ch
            buf.append(ch)
        elif ch in "[({":
            depth += 1
            buf.append(ch)
        elif ch in "])}":
            depth = max(0, depth - 1)
            buf.append(ch)
        elif ch == "," and depth == 0:
            pieces.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    pieces.append("".join(buf))
    return pieces


def parse_candidate_list(text: str) -> list[str]:
    """Extract candidate fragments from a model reply.

    Prefers the first bracketed list; falls back to line/comma splitting of
    the whole reply. Quotes and list punctuation are stripped; duplicates
    and empties dropped.
    """
    fragments: list[str] = []
    body = _first_bracketed(text)
    if body is not None:
        for piece in _split_top_level(body):
            fragments.extend(_clean_fragment(piece))
    if not fragments:
        for line in text.splitlines():
            for piece in _split_top_level(line):
                fragments.extend(_clean_fragment(piece))
    deduped: list[str] = []
    seen: set[str] = set()
    for frag in fragments:
        key = normalize_key(frag)
        if key not in seen:
            seen.add(key)
            deduped.append(frag)
    if not deduped:
        raise ParseFailure("no candidate fragments found in reply")
    return deduped


def generate_candidates_with_aspects(diffs: DifferenceSet, current: TagPrompt, providers,
                                     templates: dict[str, PromptTemplate] | None = None,
                                     cap: int = DEFAULT_CANDIDATE_CAP) -> CandidateSet:
    """One LLM call per aspect group of the difference set.

    Per-group parse failures are tolerated as long as some group yields
    fragments; the aspect of the originating group is kept per fragment so
    editing can classify enhanced-framework output without another call.
    """
    templates = templates or DEFAULT_TEMPLATES
    template = templates["generate_candidates"]
    tags = diffs.aspect_tags or (None,) * len(diffs.blocks)
    groups: dict[str | None, list[str]] = {}
    for block, aspect in zip(diffs.blocks, tags):
        groups.setdefault(aspect, []).append(block)

    out = CandidateSet()
    seen: set[str] = set()
    failures = 0
    for aspect, blocks in groups.items():
        values = {"difference": "\n".join(blocks)}
        if "current" in template.placeholders:
            values["current"] = render(current)
        reply = providers.chat([ChatTurn("user", template.render(**values))], role="llm")
        try:
            fragments = parse_candidate_list(reply)
        except ParseFailure:
            failures += 1
            continue
        for frag in fragments:
            key = normalize_key(frag)
            if key not in seen:
                seen.add(key)
                out.fragments.append(frag)
                out.aspects[frag] = aspect
    if not out.fragments:
        raise ParseFailure("candidate generation yielded no fragments")
    if len(out.fragments) > cap:
        dropped = out.fragments[cap:]
        out.fragments = out.fragments[:cap]
        for frag in dropped:
            out.aspects.pop(frag, None)
    return out


def generate_candidates(diffs: DifferenceSet, current: TagPrompt, providers,
                        templates: dict[str, PromptTemplate] | None = None,
                        cap: int = DEFAULT_CANDIDATE_CAP) -> list[str]:
    return generate_candidates_with_aspects(diffs, current, providers, templates, cap).fragments
