"""Tests for ``exercise_clips.coarse``: the two-state reject / keep scan."""

from __future__ import annotations

import itertools
import random

from exercise_clips.coarse import kept_spans, mark_coarse, rejected_ranges
from exercise_clips.lexicon import Lexicon, MatchKind, compile_lexicon, match_labeled
from exercise_clips.models import CoarseSpan, SpanLabel

from .conftest import (
    OVERLAP_ANTI_KEYWORDS,
    OVERLAP_KEYWORDS,
    OVERLAP_WORDS,
    brute_force_matches,
    make_tokens,
)


def _single_word_lexicon() -> Lexicon:
    return compile_lexicon(
        {
            "k": 1,
            "coarse": {"keywords": ["good"], "anti_keywords": ["bad"]},
            "fine": {"keywords": ["straight"], "anti_keywords": ["subscribe"]},
        }
    )


def _oracle(words: list[str]) -> list[SpanLabel]:
    labels: list[SpanLabel] = []
    rejecting = False
    for word in words:
        if not rejecting and word == "bad":
            rejecting = True
        elif rejecting and word == "good":
            rejecting = False
        labels.append(SpanLabel.REJECTED if rejecting else SpanLabel.KEPT)
    return labels


def _expand(spans: list[CoarseSpan]) -> list[SpanLabel]:
    return [span.label for span in spans for _ in range(len(span))]


def test_no_matches_keeps_everything(lexicon_small: Lexicon) -> None:
    tokens = make_tokens("keep your back straight")

    assert mark_coarse(tokens, lexicon_small) == [CoarseSpan(0, 4, SpanLabel.KEPT)]


def test_empty_stream(lexicon_small: Lexicon) -> None:
    assert mark_coarse([], lexicon_small) == []
    assert rejected_ranges([], lexicon_small) == []


def test_anti_keyword_until_keyword(lexicon_small: Lexicon) -> None:
    tokens = make_tokens("hello triangle push up and then a perfect push up form")

    spans = mark_coarse(tokens, lexicon_small)

    assert spans == [
        CoarseSpan(0, 1, SpanLabel.KEPT),
        CoarseSpan(1, 7, SpanLabel.REJECTED),
        CoarseSpan(7, 11, SpanLabel.KEPT),
    ]
    assert kept_spans(spans) == [spans[0], spans[2]]


def test_open_rejection_runs_to_end(lexicon_small: Lexicon) -> None:
    tokens = make_tokens("now do squats and more squats")

    assert rejected_ranges(tokens, lexicon_small) == [(2, 6)]
    assert mark_coarse(tokens, lexicon_small)[-1] == CoarseSpan(2, 6, SpanLabel.REJECTED)


def test_keyword_inside_variation_does_not_close(lexicon_small: Lexicon) -> None:
    # "pushup" is no variant of any keyword, so nothing closes the stretch.
    words = "squats then triangle push ups and a perfect pushup".split()
    tokens = make_tokens(words)

    assert rejected_ranges(tokens, lexicon_small) == [(0, len(words))]


def test_matches_random_streams_against_oracle() -> None:
    lexicon = _single_word_lexicon()
    rng = random.Random(2024)
    vocabulary = ["good", "bad", "keep", "your", "back", "straight"]

    for _ in range(1000):
        words = [rng.choice(vocabulary) for _ in range(rng.randint(0, 25))]
        spans = mark_coarse(make_tokens(words), lexicon)

        assert _expand(spans) == _oracle(words)
        # Ordered, disjoint, covering; no two adjacent spans share a label.
        assert [s.start_index for s in spans[1:]] == [s.end_index for s in spans[:-1]]
        if spans:
            assert spans[0].start_index == 0
            assert spans[-1].end_index == len(words)
        assert all(a.label != b.label for a, b in itertools.pairwise(spans))
        assert all(len(s) > 0 for s in spans)


def _overlap_lexicon() -> Lexicon:
    return compile_lexicon(
        {
            "k": 1,
            "coarse": {"keywords": OVERLAP_KEYWORDS, "anti_keywords": OVERLAP_ANTI_KEYWORDS},
            "fine": {"keywords": ["straight"], "anti_keywords": ["subscribe"]},
        }
    )


def _scan(words: list[str], lexicon: Lexicon) -> list[SpanLabel]:
    starts = {
        start: kind
        for start, _, kind in brute_force_matches(words, lexicon.coarse_kw, lexicon.coarse_akw)
    }
    labels: list[SpanLabel] = []
    rejecting = False
    for i in range(len(words)):
        kind = starts.get(i)
        if not rejecting and kind is MatchKind.ANTI_KEYWORD:
            rejecting = True
        elif rejecting and kind is MatchKind.KEYWORD:
            rejecting = False
        labels.append(SpanLabel.REJECTED if rejecting else SpanLabel.KEPT)
    return labels


def test_multi_word_streams_match_brute_force_scan() -> None:
    lexicon = _overlap_lexicon()
    rng = random.Random(77)

    for _ in range(1000):
        words = [rng.choice(OVERLAP_WORDS) for _ in range(rng.randint(0, 25))]
        expected = brute_force_matches(words, lexicon.coarse_kw, lexicon.coarse_akw)

        matches = match_labeled(words, lexicon.coarse_kw, lexicon.coarse_akw)
        spans = mark_coarse(make_tokens(words), lexicon)

        assert [(m.start, m.stop, m.kind) for m in matches] == expected
        assert _expand(spans) == _scan(words, lexicon)


def test_keyword_inside_losing_anti_window_is_dropped() -> None:
    lexicon = _overlap_lexicon()
    # "form check" loses to the leftmost "good form", yet still hides "check".
    words = "bad x good form check".split()

    matches = match_labeled(words, lexicon.coarse_kw, lexicon.coarse_akw)

    assert [(m.start, m.stop, m.kind) for m in matches] == [
        (0, 1, MatchKind.ANTI_KEYWORD),
        (2, 4, MatchKind.KEYWORD),
    ]
    assert _expand(mark_coarse(make_tokens(words), lexicon)) == [
        SpanLabel.REJECTED,
        SpanLabel.REJECTED,
        SpanLabel.KEPT,
        SpanLabel.KEPT,
        SpanLabel.KEPT,
    ]
