import random

import pytest

from reprompt.core import parse_tags
from reprompt.errors import ParseFailure, UnsupportedMultiImage
from reprompt.promptgen import (
    DEFAULT_TEMPLATES,
    enhanced_describe,
    enhanced_differences,
    generate_candidates,
    generate_candidates_with_aspects,
    ImageDescription,
    parse_candidate_list,
    split_difference_blocks,
    vanilla_differences,
)
from reprompt.providers.mock import MockProviders, planted_image

from tests import transcripts


class FakeChat:
    """Chat stub replaying scripted replies; records outgoing messages."""

    def __init__(self, replies, multi_image_capable=True):
        self.replies = list(replies)
        self.multi_image_capable = multi_image_capable
        self.sent = []

    def chat(self, turns, role="llm"):
        self.sent.append((role, turns))
        return self.replies.pop(0)


def test_templates_ship_expected_placeholders():
    assert DEFAULT_TEMPLATES["compare_difference"].placeholders == ()
    assert DEFAULT_TEMPLATES["generate_candidates"].placeholders == ("difference",)
    assert set(DEFAULT_TEMPLATES["compare_descriptions"].placeholders) == {"image1", "image2"}
    assert DEFAULT_TEMPLATES["classify_tags"].placeholders == ("tags",)


def test_candidate_template_mentions_list_contract():
    text = DEFAULT_TEMPLATES["generate_candidates"].text
    assert "python list format" in text
    assert "keywords or short phrases" in text


def test_parse_candidate_list_recovers_ten_fragments():
    fragments = parse_candidate_list(transcripts.CANDIDATE_LIST_REPLY)
    assert fragments == transcripts.CANDIDATE_LIST_EXPECTED
    assert len(fragments) == 10


def test_parse_candidate_list_tolerates_preamble_and_quotes():
    assert parse_candidate_list("Sure! Here you go: ['cat', 'dog']") == ["cat", "dog"]


def test_parse_candidate_list_empty_input_fails():
    with pytest.raises(ParseFailure):
        parse_candidate_list("")


def test_parse_candidate_list_empty_brackets_fail():
    with pytest.raises(ParseFailure):
        parse_candidate_list("[]")


def test_parse_candidate_list_falls_back_to_lines():
    reply = "1. soft lighting\n2. pastel palette\n3. wide shot"
    assert parse_candidate_list(reply) == ["soft lighting", "pastel palette", "wide shot"]


def test_parse_candidate_list_splits_quoted_commas():
    fragments = parse_candidate_list("[\"cat, small\", 'dog']")
    assert fragments == ["cat", "small", "dog"]


def test_parse_candidate_list_never_returns_quoted_or_empty():
    rng = random.Random(42)
    decorations = ["'", '"', "`", " ", "\n", "[", "]"]
    words = ["cat", "soft light", "dog", "bokeh", "film grain"]
    for _ in range(50):
        parts = rng.sample(words, rng.randint(1, len(words)))
        noise_before = "".join(rng.choice(decorations) for _ in range(rng.randint(0, 4)))
        noise_after = "".join(rng.choice(decorations) for _ in range(rng.randint(0, 4)))
        body = ", ".join(rng.choice(["{0}", "'{0}'", '"{0}"']).format(p) for p in parts)
        text = f"{noise_before}[{body}]{noise_after}"
        fragments = parse_candidate_list(text)
        assert fragments
        for fragment in fragments:
            assert fragment.strip() == fragment
            assert fragment
            assert fragment[0] not in "\"'`" and fragment[-1] not in "\"'`"


def test_split_difference_blocks_keeps_paragraph_whole():
    blocks = split_difference_blocks(transcripts.DIFFERENCE_PARAGRAPH)
    assert len(blocks) == 1


def test_split_difference_blocks_splits_enumerations():
    blocks = split_difference_blocks(transcripts.CONTENT_DIFFERENCE_LIST)
    assert len(blocks) == 4
    assert blocks[0].startswith("Color scheme:")


def test_vanilla_differences_with_recorded_transcript(cat_reference):
    fake = FakeChat([transcripts.DIFFERENCE_PARAGRAPH])
    generated = planted_image(["cat", "bow"])
    diffs = vanilla_differences(cat_reference, generated, fake)
    assert diffs.framework == "vanilla"
    assert len(diffs.blocks) == 1
    assert diffs.blocks[0].startswith("Image 1 and Image 2 both feature a cat wearing a bow tie")
    role, turns = fake.sent[0]
    assert role == "vlm"
    assert turns[0].images == (cat_reference, generated)


def test_vanilla_differences_requires_multi_image(cat_reference):
    fake = FakeChat([], multi_image_capable=False)
    with pytest.raises(UnsupportedMultiImage):
        vanilla_differences(cat_reference, planted_image(["cat"]), fake)


def test_vanilla_differences_mock_identical_images(mock_providers):
    image = planted_image(["cat"])
    diffs = vanilla_differences(image, image, mock_providers)
    assert len(diffs.blocks) == 1
    assert "no planted-word difference" in diffs.blocks[0]


def test_enhanced_describe_with_recorded_transcripts(cat_reference):
    fake = FakeChat([transcripts.CONTENT_DESCRIPTION, transcripts.STYLE_DESCRIPTION])
    description = enhanced_describe(cat_reference, fake)
    assert description.content.startswith("The image portrays a black cat")
    assert "digital art" in description.style
    assert len(fake.sent) == 2


def test_enhanced_describe_mock(mock_providers):
    image = planted_image(["cat"])
    description = enhanced_describe(image, mock_providers)
    assert description.content == "cat"
    assert description.style == "flat mock style rendering"


def test_enhanced_differences_with_recorded_transcript():
    fake = FakeChat([transcripts.CONTENT_DIFFERENCE_LIST, "No differences."])
    ref_desc = ImageDescription(content=transcripts.CONTENT_DESCRIPTION,
                                style=transcripts.STYLE_DESCRIPTION)
    gen_desc = ImageDescription(content="a cat", style="digital art")
    diffs = enhanced_differences(ref_desc, gen_desc, fake)
    assert diffs.framework == "enhanced"
    assert diffs.aspect_tags == ("content", "style")
    assert diffs.blocks[0].startswith("1. Color scheme:")


def test_enhanced_differences_skips_empty_style():
    fake = FakeChat(["content differs"])
    ref_desc = ImageDescription(content="a cat")
    gen_desc = ImageDescription(content="a dog")
    diffs = enhanced_differences(ref_desc, gen_desc, fake)
    assert diffs.aspect_tags == ("content",)
    assert len(fake.sent) == 1


def test_enhanced_differences_mock_identical_descriptions(mock_providers):
    desc = ImageDescription(content="cat", style="flat mock style rendering")
    diffs = enhanced_differences(desc, desc, mock_providers)
    assert diffs.blocks == ("No differences.",)


def test_generate_candidates_with_recorded_reply(cat_reference):
    fake = FakeChat([transcripts.CANDIDATE_LIST_REPLY])
    diffs = vanilla_differences_stub()
    fragments = generate_candidates(diffs, parse_tags("a cat"), fake)
    assert fragments[0] == "stylized artistic rendering of a cat"
    assert len(fragments) == 10
    # The instantiated template must carry the difference text verbatim.
    _, turns = fake.sent[0]
    assert transcripts.DIFFERENCE_PARAGRAPH in turns[0].text
    assert "{difference}" not in turns[0].text


def vanilla_differences_stub():
    from reprompt.promptgen import DifferenceSet
    return DifferenceSet(blocks=(transcripts.DIFFERENCE_PARAGRAPH,), framework="vanilla",
                         aspect_tags=(None,))


def test_generate_candidates_mock_emits_missing_words(mock_providers, cat_reference):
    generated = planted_image(["cat"])
    diffs = vanilla_differences(cat_reference, generated, mock_providers)
    fragments = generate_candidates(diffs, parse_tags("cat"), mock_providers)
    assert fragments == ["blue", "bow", "tie"]


def test_generate_candidates_requires_fragments(mock_providers):
    image = planted_image(["cat"])
    diffs = vanilla_differences(image, image, mock_providers)
    with pytest.raises(ParseFailure):
        generate_candidates(diffs, parse_tags("cat"), mock_providers)


def test_generate_candidates_caps_output():
    many = "[" + ", ".join(f"tag number {i}" for i in range(30)) + "]"
    fake = FakeChat([many])
    fragments = generate_candidates(vanilla_differences_stub(), parse_tags("cat"), fake, cap=16)
    assert len(fragments) == 16


def test_generate_candidates_tags_aspects_per_group():
    from reprompt.promptgen import DifferenceSet
    diffs = DifferenceSet(blocks=("content gap", "style gap"), framework="enhanced",
                          aspect_tags=("content", "style"))
    fake = FakeChat(["[a cat]", "[watercolor wash]"])
    result = generate_candidates_with_aspects(diffs, parse_tags("x"), fake)
    assert result.aspects == {"a cat": "content", "watercolor wash": "style"}
    assert len(fake.sent) == 2


def test_generate_candidates_tolerates_one_failed_group():
    from reprompt.promptgen import DifferenceSet
    diffs = DifferenceSet(blocks=("content gap", "style gap"), framework="enhanced",
                          aspect_tags=("content", "style"))
    fake = FakeChat(["[a cat]", "[]"])
    result = generate_candidates_with_aspects(diffs, parse_tags("x"), fake)
    assert result.fragments == ["a cat"]


def test_outgoing_messages_have_no_unresolved_placeholders(mock_providers, cat_reference):
    class Spy(MockProviders):
        def __init__(self):
            super().__init__()
            self.outgoing = []

        def chat(self, turns, role="llm"):
            self.outgoing.extend(t.text for t in turns)
            return super().chat(turns, role)

    spy = Spy()
    generated = spy.generate_image(
        __import__("reprompt.providers.profiles", fromlist=["GenerationRequest"])
        .GenerationRequest(prompt_text="dog", seed=0, width=32, height=32))
    diffs = vanilla_differences(cat_reference, generated, spy)
    generate_candidates(diffs, parse_tags("dog"), spy)
    for name in ("difference", "image1", "image2", "tags", "current"):
        for message in spy.outgoing:
            assert "{" + name + "}" not in message
