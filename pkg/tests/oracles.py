"""Independent re-implementations used to cross-check the engine.

Nothing here imports from reprompt.selection: the greedy rule is
re-simulated from scratch so the two routes can disagree if either is
wrong. Scores come either from a caller-supplied function or from the
closed-form bag-of-words cosine below.
"""

import math
import re

_WORD_RE = re.compile(r"[a-z]+")


def _norm_key(fragment: str) -> str:
    return " ".join(fragment.split()).casefold()


def bag_of_words_cosine(fragments, reference_words, vocabulary) -> float:
    """Closed-form mock score: |overlap| / sqrt(|prompt words| * |ref words|)."""
    vocab = set(vocabulary)
    text = " ".join(fragments).lower()
    prompt_words = []
    for token in _WORD_RE.findall(text):
        if token in vocab and token not in prompt_words:
            prompt_words.append(token)
    ref = [w for w in reference_words if w in vocab]
    if not prompt_words or not ref:
        return 0.0
    overlap = sum(1 for w in prompt_words if w in ref)
    return overlap / math.sqrt(len(prompt_words) * len(ref))


def simulate_greedy(current_fragments, candidate_fragments, score_fn):
    """Brute-force re-simulation of the greedy update rule.

    score_fn takes a list of fragments and returns a float. Returns a dict
    with selected fragments, pick trace, final score, and fallback flag.
    """
    pool = []
    seen = set()
    for fragment in list(current_fragments) + list(candidate_fragments):
        fragment = fragment.strip()
        key = _norm_key(fragment)
        if fragment and "," not in fragment and key not in seen:
            seen.add(key)
            pool.append(fragment)

    baseline = score_fn(list(current_fragments)) if current_fragments else None
    s_max = baseline if baseline is not None else float("-inf")
    selected = []
    picks = []
    while pool:
        scores = [score_fn(selected + [fragment]) for fragment in pool]
        best_index = 0
        best_score = scores[0]
        for i in range(1, len(pool)):
            if scores[i] > best_score:
                best_index, best_score = i, scores[i]
        if best_score >= s_max:
            selected.append(pool.pop(best_index))
            picks.append((selected[-1], best_score))
            s_max = best_score
        else:
            break

    if not selected or (baseline is not None and s_max < baseline):
        return {"selected": list(current_fragments), "picks": [],
                "final": baseline, "fell_back": True}
    return {"selected": selected, "picks": picks,
            "final": picks[-1][1], "fell_back": False}
