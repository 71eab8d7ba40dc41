"""Greedy construction of the next reverse prompt.

The pool holds the current prompt's fragments (first, in order) followed by
the new candidates (in generation order), deduplicated. Starting from an
empty selection with the current prompt's score as the bar, the fragment
whose addition yields the highest score is appended while the score keeps
matching or beating the bar. If nothing is accepted, the current prompt is
returned unchanged, so an update never regresses the score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from reprompt.core import ImageRef, ScoreValue, TagPrompt, normalize_key

Scorer = Callable[[ImageRef, TagPrompt], ScoreValue]


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of one greedy update."""

    selected: TagPrompt
    final_score: ScoreValue | None
    picks: tuple[tuple[str, ScoreValue], ...]
    fell_back: bool


def build_pool(current: TagPrompt, candidates: Sequence[str]) -> list[tuple[str, str]]:
    """Deduplicated (fragment, provenance) pool: current fragments first."""
    pool: list[tuple[str, str]] = []
    seen: set[str] = set()
    for frag, origin in zip(current.fragments, current.provenance):
        key = normalize_key(frag)
        if key not in seen:
            seen.add(key)
            pool.append((frag, origin))
    for frag in candidates:
        frag = frag.strip()
        if not frag or "," in frag:
            continue
        key = normalize_key(frag)
        if key not in seen:
            seen.add(key)
            pool.append((frag, "candidate"))
    return pool


def greedy_select(current: TagPrompt, candidates: Sequence[str], reference: ImageRef,
                  scorer: Scorer) -> SelectionOutcome:
    pool = build_pool(current, candidates)
    baseline = scorer(reference, current) if current else None
    s_max = baseline.raw_cosine if baseline is not None else float("-inf")

    chosen: list[tuple[str, str]] = []
    picks: list[tuple[str, ScoreValue]] = []
    while pool:
        best_index = -1
        best_score: ScoreValue | None = None
        for i, (frag, origin) in enumerate(pool):
            trial = TagPrompt.from_fragments(
                [f for f, _ in chosen] + [frag],
                [o for _, o in chosen] + [origin],
            )
            score = scorer(reference, trial)
            if best_score is None or score.raw_cosine > best_score.raw_cosine:
                best_index = i
                best_score = score
        if best_score.raw_cosine >= s_max:
            chosen.append(pool.pop(best_index))
            picks.append((chosen[-1][0], best_score))
            s_max = best_score.raw_cosine
        else:
            break

    if not chosen or (baseline is not None and s_max < baseline.raw_cosine):
        return SelectionOutcome(selected=current, final_score=baseline, picks=(), fell_back=True)
    selected = TagPrompt.from_fragments([f for f, _ in chosen], [o for _, o in chosen])
    return SelectionOutcome(selected=selected, final_score=picks[-1][1],
                            picks=tuple(picks), fell_back=False)
