import random

import pytest
from hypothesis import given, settings, strategies as st

from reprompt.core import TagPrompt, parse_tags
from reprompt.providers.mock import VOCABULARY, planted_image
from reprompt.scoring import ClipScorer
from reprompt.selection import build_pool, greedy_select

from tests.oracles import bag_of_words_cosine, simulate_greedy


def test_selection_prefers_matching_fragments(scorer, cat_reference):
    outcome = greedy_select(parse_tags("a dog"), ["cat", "dog", "blue bow tie"],
                            cat_reference, scorer.clip_sim)
    assert "cat" in outcome.selected.fragments
    assert "blue bow tie" in outcome.selected.fragments
    assert "dog" not in outcome.selected.fragments
    assert not outcome.fell_back


def test_selection_empty_pool_falls_back(scorer, cat_reference):
    outcome = greedy_select(TagPrompt(), [], cat_reference, scorer.clip_sim)
    assert outcome.fell_back
    assert outcome.selected == TagPrompt()
    assert outcome.final_score is None


def test_selection_duplicate_candidate_collapses(scorer):
    reference = planted_image(["cat"])
    outcome = greedy_select(parse_tags("cat"), ["cat"], reference, scorer.clip_sim)
    assert outcome.selected.fragments == ("cat",)


def test_selection_never_regresses(scorer, cat_reference):
    current = parse_tags("cat, blue, bow, tie")
    before = scorer.clip_sim(cat_reference, current).raw_cosine
    outcome = greedy_select(current, ["dog", "fox"], cat_reference, scorer.clip_sim)
    after = scorer.clip_sim(cat_reference, outcome.selected).raw_cosine
    assert after >= before


def test_selection_picks_scores_non_decreasing(scorer, cat_reference):
    outcome = greedy_select(parse_tags("dog"), ["cat", "blue", "bow", "tie"],
                            cat_reference, scorer.clip_sim)
    scores = [score.raw_cosine for _, score in outcome.picks]
    assert scores == sorted(scores)


def test_selection_output_is_subset_of_pool(scorer, cat_reference):
    candidates = ["cat", "blue", "bow"]
    current = parse_tags("dog, tie")
    pool = {fragment for fragment, _ in build_pool(current, candidates)}
    outcome = greedy_select(current, candidates, cat_reference, scorer.clip_sim)
    assert set(outcome.selected.fragments) <= pool
    assert len(set(outcome.selected.fragments)) == len(outcome.selected.fragments)


def test_selection_deterministic(scorer, cat_reference):
    current = parse_tags("dog")
    candidates = ["cat", "blue", "bow", "tie"]
    first = greedy_select(current, candidates, cat_reference, scorer.clip_sim)
    second = greedy_select(current, candidates, cat_reference, scorer.clip_sim)
    assert first == second


def test_tie_break_prefers_lowest_pool_index(scorer):
    # "bow" and "tie" score identically against this reference; pool order
    # must decide, and candidates keep generation order.
    reference = planted_image(["bow", "tie"])
    outcome = greedy_select(TagPrompt(), ["tie", "bow"], reference, scorer.clip_sim)
    assert outcome.picks[0][0] == "tie"


def test_current_fragments_enter_pool_before_candidates(scorer):
    reference = planted_image(["bow", "tie"])
    outcome = greedy_select(parse_tags("bow"), ["tie"], reference, scorer.clip_sim)
    assert outcome.picks[0][0] == "bow"


def test_pool_excludes_comma_and_empty_candidates(scorer, cat_reference):
    pool = build_pool(parse_tags("cat"), ["", "  ", "a, b", "blue"])
    assert [fragment for fragment, _ in pool] == ["cat", "blue"]


def _oracle_outcome(current, candidates, reference, scorer):
    def score_fn(fragments):
        return scorer.clip_sim(reference, TagPrompt.from_fragments(fragments)).raw_cosine

    return simulate_greedy(current.fragments, candidates, score_fn)


@pytest.mark.parametrize("trial", range(25))
def test_matches_independent_simulation(scorer, trial):
    rng = random.Random(9000 + trial)
    words = rng.sample(VOCABULARY, 8)
    reference = planted_image(words[:4], seed=trial)
    current = TagPrompt.from_fragments(rng.sample(words, rng.randint(0, 3)), "init")
    candidates = [" ".join(rng.sample(words, rng.randint(1, 2)))
                  for _ in range(rng.randint(0, 4))]
    outcome = greedy_select(current, candidates, reference, scorer.clip_sim)
    expected = _oracle_outcome(current, candidates, reference, scorer)
    assert list(outcome.selected.fragments) == expected["selected"]
    assert outcome.fell_back == expected["fell_back"]
    assert [(f, s.raw_cosine) for f, s in outcome.picks] == expected["picks"]


def test_scores_match_closed_form_bag_of_words(scorer):
    reference_words = ["cat", "blue", "bow", "tie"]
    reference = planted_image(reference_words)
    current = parse_tags("a dog")
    candidates = ["cat", "dog", "blue bow tie"]
    outcome = greedy_select(current, candidates, reference, scorer.clip_sim)
    for fragments_so_far, (fragment, score) in zip(
            [outcome.selected.fragments[:i + 1] for i in range(len(outcome.picks))],
            outcome.picks):
        expected = bag_of_words_cosine(fragments_so_far, reference_words, VOCABULARY)
        assert score.raw_cosine == pytest.approx(expected, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_selection_monotone_over_random_vocab_pools(data):
    from reprompt.providers.mock import MockProviders

    scorer = ClipScorer(MockProviders())
    rng = random.Random(data.draw(st.integers(0, 10_000)))
    target = rng.sample(VOCABULARY, 4)
    reference = planted_image(target)
    current_words = rng.sample(VOCABULARY, rng.randint(1, 3))
    current = TagPrompt.from_fragments(current_words, "init")
    candidates = rng.sample(VOCABULARY, rng.randint(0, 5))
    outcome = greedy_select(current, candidates, reference, scorer.clip_sim)
    before = scorer.clip_sim(reference, current).raw_cosine
    after = scorer.clip_sim(reference, outcome.selected).raw_cosine
    assert after >= before
