"""Tests for ``exercise_clips.lexicon``: template expansion, loading, matching."""

from __future__ import annotations

from pathlib import Path

import pytest

from exercise_clips.errors import LexiconError
from exercise_clips.lexicon import (
    Lexicon,
    MatchKind,
    Span,
    compile_lexicon,
    expand_template,
    lexicon_counts,
    load_lexicon,
    match_labeled,
    match_spans,
)


def _config(**overrides: object) -> dict[str, object]:
    config: dict[str, object] = {
        "k": 3,
        "coarse": {"keywords": ["perfect push(-)up(s)"], "anti_keywords": ["squat(s)"]},
        "fine": {"keywords": ["straight"], "anti_keywords": ["subscribe"]},
    }
    config.update(overrides)
    return config


def test_expand_template_hyphen_and_plural() -> None:
    assert set(expand_template("triangle push(-)up(s)")) == {
        ("triangle", "push-up"),
        ("triangle", "push-ups"),
        ("triangle", "push", "up"),
        ("triangle", "push", "ups"),
    }


def test_expand_template_plain_word() -> None:
    assert expand_template("Straight") == (("straight",),)


def test_expand_template_too_long_raises() -> None:
    with pytest.raises(LexiconError):
        expand_template("one two three four five")


def test_load_packaged_lexicon(default_lexicon: Lexicon) -> None:
    assert default_lexicon.k == 3
    assert ("push", "up") in default_lexicon.coarse_kw.variants | default_lexicon.fine_kw.variants
    assert ("butt",) in default_lexicon.body_parts
    assert ("butt",) in default_lexicon.fine_kw.variants
    assert "having" in default_lexicon.verbs


def test_load_lexicon_missing_file(tmp_path: Path) -> None:
    missing = tmp_path / "lex.toml"

    with pytest.raises(FileNotFoundError) as exc_info:
        load_lexicon(missing)

    assert str(missing) in str(exc_info.value)


def test_load_lexicon_invalid_toml(tmp_path: Path) -> None:
    bad = tmp_path / "lex.toml"
    bad.write_text("k = = 3\n", encoding="utf-8")

    with pytest.raises(LexiconError):
        load_lexicon(bad)


def test_compile_rejects_empty_set() -> None:
    with pytest.raises(LexiconError, match="fine.keywords"):
        compile_lexicon(_config(fine={"keywords": [], "anti_keywords": ["subscribe"]}))


def test_compile_rejects_missing_section() -> None:
    config = _config()
    del config["coarse"]

    with pytest.raises(LexiconError, match="coarse"):
        compile_lexicon(config)


def test_compile_rejects_bad_k() -> None:
    with pytest.raises(LexiconError):
        compile_lexicon(_config(k=0))


def test_compile_rejects_variant_in_two_sets() -> None:
    config = _config(
        fine={"keywords": ["push(-)up(s)"], "anti_keywords": ["subscribe"]},
        coarse={"keywords": ["push-up"], "anti_keywords": ["squat(s)"]},
    )

    with pytest.raises(LexiconError, match="push-up"):
        compile_lexicon(config)


def test_lexicon_counts(lexicon_small: Lexicon) -> None:
    counts = lexicon_counts(lexicon_small)

    assert counts["coarse.keywords"] == (2, 6)
    assert counts["coarse.anti_keywords"] == (2, 6)
    # Body parts are fine keywords too.
    assert counts["fine.keywords"] == (5, 6)
    assert counts["fine.body_parts"] == (4, 4)


def test_match_spans_inclusive_end(lexicon_small: Lexicon) -> None:
    words = "do a triangle push up now".split()

    assert match_spans(words, lexicon_small.coarse_akw) == [
        Span(2, 4, "triangle push(-)up(s)")
    ]
    assert Span(2, 4).stop == 5


def test_match_spans_longest_first_non_overlapping() -> None:
    lexicon = compile_lexicon(
        _config(fine={"keywords": ["lower", "lower back"], "anti_keywords": ["subscribe"]})
    )

    spans = match_spans("keep your lower back flat and lower".split(), lexicon.fine_kw)

    assert [(s.start, s.end) for s in spans] == [(2, 3), (6, 6)]


def test_match_labeled_keyword_inside_anti_keyword_is_dropped() -> None:
    lexicon = compile_lexicon(
        _config(
            coarse={
                "keywords": ["push(-)up(s)"],
                "anti_keywords": ["triangle push(-)up(s)"],
            }
        )
    )

    spans = match_labeled(
        "a triangle push up then a push up".split(), lexicon.coarse_kw, lexicon.coarse_akw
    )

    assert [(s.start, s.end, s.kind) for s in spans] == [
        (1, 3, MatchKind.ANTI_KEYWORD),
        (6, 7, MatchKind.KEYWORD),
    ]


def test_match_on_empty_input(lexicon_small: Lexicon) -> None:
    assert match_spans([], lexicon_small.fine_kw) == []
    assert match_labeled([], lexicon_small.fine_kw, lexicon_small.fine_akw) == []


def test_expand_plural_only() -> None:
    assert set(expand_template("squat(s)")) == {("squat",), ("squats",)}


def test_compile_collision_between_fine_sets_names_variant() -> None:
    config = _config(fine={"keywords": ["straight", "subscribe"], "anti_keywords": ["subscribe"]})

    with pytest.raises(LexiconError, match="subscribe") as exc_info:
        compile_lexicon(config)

    assert "fine.keywords" in str(exc_info.value)
    assert "fine.anti_keywords" in str(exc_info.value)


def test_match_whole_phrase(default_lexicon: Lexicon) -> None:
    assert match_spans("perfect push up".split(), default_lexicon.coarse_kw) == [
        Span(0, 2, "perfect push(-)up(s)")
    ]


def test_matches_are_variants_and_idempotent(default_lexicon: Lexicon) -> None:
    words = "keep your lower back flat and push through your hands to begin".split()

    first = match_spans(words, default_lexicon.fine_kw)

    assert first == match_spans(words, default_lexicon.fine_kw)
    for span in first:
        assert tuple(words[span.start : span.stop]) in default_lexicon.fine_kw.variants
