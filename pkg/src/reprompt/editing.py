"""Tag classification, text edits, and cross-image fusion of reverse prompts."""

from __future__ import annotations

import re
from dataclasses import dataclass

from reprompt.core import TagPrompt, normalize_key
from reprompt.errors import EmptyResult, ParseFailure
from reprompt.promptgen import DEFAULT_TEMPLATES
from reprompt.providers.profiles import ChatTurn


@dataclass(frozen=True)
class ClassifiedPrompt:
    """A prompt's fragments partitioned into content and style groups."""

    content: tuple[str, ...]
    style: tuple[str, ...]
    origin: str = "external"

    def __post_init__(self):
        content_keys = {normalize_key(f) for f in self.content}
        style_keys = {normalize_key(f) for f in self.style}
        if content_keys & style_keys:
            raise ValueError("a fragment appears in both content and style")


def _parse_class_lines(reply: str, fragments: tuple[str, ...]) -> dict[str, str]:
    """Read `tag: content|style` lines, matching tags case-insensitively."""
    by_key = {normalize_key(f): f for f in fragments}
    labels: dict[str, str] = {}
    for line in reply.splitlines():
        match = re.match(r"^\s*(.+?)\s*:\s*(content|style)\s*$", line, re.I)
        if not match:
            continue
        key = normalize_key(match.group(1).strip("\"'` "))
        if key in by_key:
            fragment = by_key[key]
            label = match.group(2).lower()
            # A fragment listed twice with different labels counts as unassigned.
            if fragment in labels and labels[fragment] != label:
                labels[fragment] = "content"
            else:
                labels[fragment] = label
    if not labels:
        raise ParseFailure("no tag classifications found in reply")
    return labels


def classify(prompt: TagPrompt, providers=None, aspect_hints: dict[str, str] | None = None,
             templates=None, origin: str = "external") -> ClassifiedPrompt:
    """Partition a prompt's fragments into content and style.

    Aspect hints recorded by the enhanced generation path are used verbatim
    when they cover every fragment, skipping the LLM call entirely.
    Fragments the model omits, double-assigns, or mislabels fall back to
    content, so the result is always a partition of the input.
    """
    if not prompt:
        raise ValueError("cannot classify an empty prompt")
    hints = {normalize_key(k): v for k, v in (aspect_hints or {}).items() if v in ("content", "style")}
    labels: dict[str, str] = {}
    if all(normalize_key(f) in hints for f in prompt.fragments):
        labels = {f: hints[normalize_key(f)] for f in prompt.fragments}
    else:
        templates = templates or DEFAULT_TEMPLATES
        message = templates["classify_tags"].render(tags="\n".join(prompt.fragments))
        try:
            reply = providers.chat([ChatTurn("user", message)], role="llm")
            labels = _parse_class_lines(reply, prompt.fragments)
        except ParseFailure:
            labels = {}
    content = tuple(f for f in prompt.fragments if labels.get(f, "content") == "content")
    style = tuple(f for f in prompt.fragments if labels.get(f) == "style")
    return ClassifiedPrompt(content=content, style=style, origin=origin)


def modify(prompt: TagPrompt, find: str, replace: str) -> TagPrompt:
    """Case-insensitive substring replacement inside every fragment.

    Fragments are re-normalized afterwards (trim, dedupe, drop empties); a
    replacement containing commas splits the fragment at the separator.
    Fragments the edit touched are marked user-edit.
    """
    if not find:
        raise ValueError("find must be non-empty")
    pattern = re.compile(re.escape(find), re.IGNORECASE)
    fragments: list[str] = []
    origins: list[str] = []
    for frag, origin in zip(prompt.fragments, prompt.provenance):
        new = pattern.sub(replace, frag)
        for piece in new.split(","):
            fragments.append(piece)
            origins.append(origin if new == frag else "user-edit")
    return TagPrompt.from_fragments(fragments, origins)


def fuse(style_source: ClassifiedPrompt, content_source: ClassifiedPrompt) -> TagPrompt:
    """New prompt: content fragments of one image, style fragments of another."""
    fragments = list(content_source.content) + list(style_source.style)
    if not fragments:
        raise EmptyResult("both fusion parts are empty")
    return TagPrompt.from_fragments(fragments, "user-edit")
