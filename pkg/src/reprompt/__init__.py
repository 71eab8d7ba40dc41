"""reprompt: decode a reference image into an editable tag-form reverse prompt.

The engine iteratively generates an image from the current prompt, asks
vision/language backends to describe what differs from the reference, turns
those differences into candidate prompt fragments, and greedily keeps the
fragments that maximize embedding similarity to the reference image.
"""

from reprompt.core import (
    EmbeddingVector,
    ImageRef,
    IterationRecord,
    PromptTemplate,
    ScoreValue,
    TagPrompt,
    parse_tags,
    render,
)

__all__ = [
    "EmbeddingVector",
    "ImageRef",
    "IterationRecord",
    "PromptTemplate",
    "ScoreValue",
    "TagPrompt",
    "parse_tags",
    "render",
]

__version__ = "0.1.0"
