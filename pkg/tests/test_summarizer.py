"""Tests for ``exercise_clips.summarizer``."""

from __future__ import annotations

import dataclasses
from collections.abc import Sequence

from exercise_clips.lexicon import Lexicon, Span
from exercise_clips.models import Correctness, Relevance, SummaryMethod, SummaryPhrase
from exercise_clips.summarizer import VerbProximityProvider, summarize, summarize_sentences

from .conftest import make_sentence, small_lexicon


def test_dependency_phrase_runs_from_verb(default_lexicon: Lexicon) -> None:
    sentence = make_sentence("a common mistake is having your butt up in the air")

    phrase = summarize(sentence, default_lexicon)

    assert phrase == SummaryPhrase("having your butt up", (4, 8), SummaryMethod.DEPENDENCY)


def test_ing_word_counts_as_verb(default_lexicon: Lexicon) -> None:
    phrase = summarize("stop pointing your elbows outward".split(), default_lexicon)

    assert phrase == SummaryPhrase(
        "pointing your elbows outward", (1, 5), SummaryMethod.DEPENDENCY
    )


def test_keyword_context_without_a_verb(default_lexicon: Lexicon) -> None:
    phrase = summarize("your elbows flare".split(), default_lexicon)

    assert phrase == SummaryPhrase("elbows flare", (1, 3), SummaryMethod.KEYWORD_CONTEXT)


def test_long_context_is_shrunk_to_eight_words() -> None:
    words = "one two three four five six straight seven eight nine ten eleven twelve".split()

    phrase = summarize(words, small_lexicon(k=5))

    assert phrase is not None
    assert phrase.text == "three four five six straight seven eight nine"
    assert phrase.source_span == (2, 10)


def test_no_keyword_or_single_word_gives_none(default_lexicon: Lexicon) -> None:
    assert summarize("please do it again".split(), default_lexicon) is None
    assert summarize(["straight"], default_lexicon) is None


def test_phrase_is_verbatim_span(default_lexicon: Lexicon) -> None:
    for text in (
        "keep your elbows close and your back straight",
        "do not let your hips sag toward the floor",
        "you are dropping your head and arching your lower back",
    ):
        words = text.split()
        phrase = summarize(words, default_lexicon)
        assert phrase is not None
        start, stop = phrase.source_span
        assert phrase.text == " ".join(words[start:stop])
        assert 2 <= stop - start <= 8


def test_custom_dependency_provider(default_lexicon: Lexicon) -> None:
    class FirstWordGoverns:
        def head_of(self, words: Sequence[str], target: Span) -> int | None:
            return 0

    phrase = summarize(
        "keep your butt low and tight".split(), default_lexicon, provider=FirstWordGoverns()
    )

    assert phrase == SummaryPhrase("keep your butt low", (0, 4), SummaryMethod.DEPENDENCY)


def test_verb_proximity_window() -> None:
    provider = VerbProximityProvider(frozenset({"having"}), window=2)
    words = "having a b c butt".split()

    assert provider.head_of(words, Span(4, 4)) is None
    assert provider.head_of(words, Span(2, 2)) == 0
    assert not provider.is_verb_like("king")


def test_summarize_sentences_only_touches_incorrect(default_lexicon: Lexicon) -> None:
    text = "a common mistake is having your butt up in the air"
    incorrect = make_sentence(
        text, relevance=Relevance.RELEVANT, correctness=Correctness.INCORRECT
    )
    correct = make_sentence(
        text, sentence_id=1, relevance=Relevance.RELEVANT, correctness=Correctness.CORRECT
    )
    irrelevant = make_sentence(text, sentence_id=2, relevance=Relevance.IRRELEVANT)

    out = summarize_sentences([incorrect, correct, irrelevant], default_lexicon)

    assert out[0].summary is not None
    assert out[0].summary.text == "having your butt up"
    assert out[1:] == [correct, irrelevant]


def test_empty_verb_list_is_respected(default_lexicon: Lexicon) -> None:
    lexicon = dataclasses.replace(default_lexicon, verbs=frozenset({"let"}))
    words = "let your butt drop".split()

    assert summarize(words, lexicon) == SummaryPhrase(
        "let your butt drop", (0, 4), SummaryMethod.DEPENDENCY
    )
    assert summarize(words, lexicon, verbs=()) == SummaryPhrase(
        "let your butt drop", (0, 4), SummaryMethod.KEYWORD_CONTEXT
    )
