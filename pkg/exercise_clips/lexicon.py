"""Keyword / anti-keyword lexicon: template expansion and phrase matching.

A lexicon is a TOML file with four pattern sets and a context window size::

    k = 3

    [coarse]
    keywords = ["perfect push(-)up(s)", ...]
    anti_keywords = ["triangle push(-)up(s)", "squat(s)", ...]

    [fine]
    keywords = ["begin", "upward", ...]
    body_parts = ["butt", "elbow(s)", ...]   # also fine keywords
    anti_keywords = ["subscribe", "hello", ...]

    [summary]
    verbs = ["having", "keeping", ...]
    stop_words = ["a", "the", ...]           # optional

Templates use two markers. ``(-)`` expands to a hyphen-joined single token
or two tokens (``push(-)up`` gives ``push-up`` and ``push up``); ``(s)``
expands to singular and plural. Every expanded variant must be one to four
lowercase words. The four pattern sets must be pairwise disjoint after
expansion; a collision raises :class:`LexiconError` naming both entries.

Matching works on token word sequences. Candidates are collected over every
window, then accepted greedily longest-first, left-to-right, skipping any
candidate that overlaps an accepted one. Joint keyword / anti-keyword
matching (:func:`match_labeled`) additionally drops a keyword match that
lies strictly inside any anti-keyword-matchable window, so ``push up``
never fires inside ``triangle push up``.

Reported spans use an inclusive ``end`` index: ``"triangle push up"`` in
``"do a triangle push up now"`` is ``Span(2, 4)``. ``Span.stop`` gives the
half-open bound.
"""

from __future__ import annotations

import itertools
import logging
import tomllib
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import LexiconError
from .models import Token

logger = logging.getLogger(__name__)

DEFAULT_K: int = 3
MAX_VARIANT_WORDS: int = 4

# Fallback when the lexicon file has no ``[summary] stop_words``. "up" stays
# out of this list so "having your butt up" keeps its last word.
# fmt: off
DEFAULT_STOP_WORDS: frozenset[str] = frozenset(
    {
        "a", "an", "the", "and", "or", "but", "so", "to", "of", "in", "on", "at",
        "for", "with", "is", "are", "was", "it", "this", "that", "your", "you",
        "my", "too", "very", "just", "really", "then",
    }
)
# fmt: on

DEFAULT_VERBS: frozenset[str] = frozenset(
    {"having", "keeping", "letting", "dropping", "flaring", "sagging"}
)

_MARKERS: dict[str, tuple[str, ...]] = {"(-)": ("-", " "), "(s)": ("", "s")}


class MatchKind(StrEnum):
    KEYWORD = "keyword"
    ANTI_KEYWORD = "anti_keyword"


@dataclass(frozen=True)
class Span:
    """A phrase match over word positions ``start..end`` (both inclusive)."""

    start: int
    end: int
    surface: str = ""

    @property
    def stop(self) -> int:
        return self.end + 1

    def __len__(self) -> int:
        return self.end - self.start + 1

    def contains(self, other: Span) -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class LabeledSpan(Span):
    kind: MatchKind = MatchKind.KEYWORD


@dataclass(frozen=True)
class PatternEntry:
    """One lexicon template and its expanded word-sequence variants."""

    surface: str
    words: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class PatternSet:
    """An immutable set of entries with a variant lookup table."""

    name: str
    entries: tuple[PatternEntry, ...]
    _lookup: dict[tuple[str, ...], str] = field(init=False, repr=False, compare=False)
    max_words: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        lookup: dict[tuple[str, ...], str] = {}
        for entry in self.entries:
            for variant in entry.words:
                lookup.setdefault(variant, entry.surface)
        object.__setattr__(self, "_lookup", lookup)
        object.__setattr__(self, "max_words", max((len(v) for v in lookup), default=0))

    @property
    def variants(self) -> frozenset[tuple[str, ...]]:
        return frozenset(self._lookup)

    def surface_of(self, words: tuple[str, ...]) -> str | None:
        return self._lookup.get(words)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Lexicon:
    """Compiled pattern sets for the coarse and fine passes."""

    coarse_kw: PatternSet
    coarse_akw: PatternSet
    fine_kw: PatternSet
    fine_akw: PatternSet
    k: int = DEFAULT_K
    body_parts: frozenset[tuple[str, ...]] = frozenset()
    verbs: frozenset[str] = DEFAULT_VERBS
    stop_words: frozenset[str] = DEFAULT_STOP_WORDS

    def sets(self) -> dict[str, PatternSet]:
        return {
            "coarse.keywords": self.coarse_kw,
            "coarse.anti_keywords": self.coarse_akw,
            "fine.keywords": self.fine_kw,
            "fine.anti_keywords": self.fine_akw,
        }


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def expand_template(template: str) -> tuple[tuple[str, ...], ...]:
    """Expand the ``(-)`` and ``(s)`` markers into word-sequence variants.

    Variants come back lowercase, deduplicated, in a stable order.

    Raises:
        LexiconError: a variant is empty or longer than four words.
    """

    surface = " ".join(template.lower().split())
    if not surface:
        raise LexiconError("empty lexicon template")
    pieces: list[str | tuple[str, ...]] = []
    rest = surface
    while rest:
        positions = [(rest.find(marker), marker) for marker in _MARKERS if marker in rest]
        if not positions:
            pieces.append(rest)
            break
        at, marker = min(positions)
        pieces.append(rest[:at])
        pieces.append(_MARKERS[marker])
        rest = rest[at + len(marker) :]

    choices = [(piece,) if isinstance(piece, str) else piece for piece in pieces]
    variants: list[tuple[str, ...]] = []
    for combo in itertools.product(*choices):
        words = tuple("".join(combo).split())
        if not 1 <= len(words) <= MAX_VARIANT_WORDS:
            raise LexiconError(
                f"template {template!r} expands to {len(words)} words; "
                f"expected 1 to {MAX_VARIANT_WORDS}"
            )
        if words not in variants:
            variants.append(words)
    return tuple(variants)


def _templates(section: Mapping[str, Any], key: str, name: str) -> list[str]:
    templates = section.get(key, [])
    if not isinstance(templates, list) or not all(isinstance(t, str) for t in templates):
        raise LexiconError(f"lexicon set {name} must be a list of strings")
    return templates


def _compile_set(name: str, templates: list[str], *, allow_empty: bool = False) -> PatternSet:
    if not templates and not allow_empty:
        raise LexiconError(f"lexicon set {name} is empty")
    entries = tuple(PatternEntry(surface=t, words=expand_template(t)) for t in templates)
    return PatternSet(name=name, entries=entries)


def _check_disjoint(sets: Mapping[str, PatternSet]) -> None:
    owner: dict[tuple[str, ...], tuple[str, str]] = {}
    for set_name, pattern_set in sets.items():
        for entry in pattern_set.entries:
            for variant in entry.words:
                seen = owner.get(variant)
                if seen is not None and seen[0] != set_name:
                    raise LexiconError(
                        f"duplicate variant {' '.join(variant)!r}: "
                        f"{seen[0]} entry {seen[1]!r} and {set_name} entry {entry.surface!r}"
                    )
                owner.setdefault(variant, (set_name, entry.surface))


def _section(config: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    section = config.get(name)
    if not isinstance(section, Mapping):
        raise LexiconError(f"lexicon is missing the [{name}] section")
    return section


def _word_list(values: Any, name: str, default: frozenset[str]) -> frozenset[str]:
    if values is None:
        return default
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise LexiconError(f"lexicon field {name} must be a list of strings")
    return frozenset(v.strip().lower() for v in values if v.strip())


def compile_lexicon(config: Mapping[str, Any]) -> Lexicon:
    """Compile a parsed lexicon mapping (see module docstring for the layout)."""

    k = config.get("k", DEFAULT_K)
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise LexiconError(f"lexicon k must be an integer >= 1, got {k!r}")

    coarse = _section(config, "coarse")
    fine = _section(config, "fine")
    summary = config.get("summary", {})
    if not isinstance(summary, Mapping):
        raise LexiconError("lexicon [summary] must be a table")

    body_templates = _templates(fine, "body_parts", "fine.body_parts")
    body = _compile_set("fine.body_parts", body_templates, allow_empty=True)
    sets = {
        "coarse.keywords": _compile_set(
            "coarse.keywords", _templates(coarse, "keywords", "coarse.keywords")
        ),
        "coarse.anti_keywords": _compile_set(
            "coarse.anti_keywords", _templates(coarse, "anti_keywords", "coarse.anti_keywords")
        ),
        "fine.keywords": _compile_set(
            "fine.keywords", _templates(fine, "keywords", "fine.keywords") + body_templates
        ),
        "fine.anti_keywords": _compile_set(
            "fine.anti_keywords", _templates(fine, "anti_keywords", "fine.anti_keywords")
        ),
    }
    _check_disjoint(sets)

    return Lexicon(
        coarse_kw=sets["coarse.keywords"],
        coarse_akw=sets["coarse.anti_keywords"],
        fine_kw=sets["fine.keywords"],
        fine_akw=sets["fine.anti_keywords"],
        k=k,
        body_parts=body.variants,
        verbs=_word_list(summary.get("verbs"), "summary.verbs", DEFAULT_VERBS),
        stop_words=_word_list(summary.get("stop_words"), "summary.stop_words", DEFAULT_STOP_WORDS),
    )


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load and compile a lexicon file; ``None`` loads the packaged default."""

    if path is None:
        text = resources.files("exercise_clips.data").joinpath("lexicon.toml").read_text("utf-8")
        source = "packaged default lexicon"
    else:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"lexicon file not found: {p}")
        text = p.read_text(encoding="utf-8")
        source = str(p)
    try:
        config = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise LexiconError(f"{source}: invalid TOML: {exc}") from exc
    lexicon = compile_lexicon(config)
    logger.debug("compiled lexicon from %s", source)
    return lexicon


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def words_of(tokens: Sequence[Token] | Sequence[str]) -> list[str]:
    return [t.text if isinstance(t, Token) else t for t in tokens]


def _candidates(words: Sequence[str], pattern_set: PatternSet) -> list[Span]:
    found: list[Span] = []
    n = len(words)
    for start in range(n):
        for size in range(1, min(pattern_set.max_words, n - start) + 1):
            window = tuple(words[start : start + size])
            surface = pattern_set.surface_of(window)
            if surface is not None:
                found.append(Span(start, start + size - 1, surface))
    return found


def _select[S: Span](candidates: Iterable[S]) -> list[S]:
    """Greedy longest-first, then left-to-right, non-overlapping selection."""

    taken: list[S] = []
    covered: set[int] = set()
    for span in sorted(candidates, key=lambda s: (-len(s), s.start)):
        positions = range(span.start, span.stop)
        if covered.isdisjoint(positions):
            taken.append(span)
            covered.update(positions)
    return sorted(taken, key=lambda s: s.start)


def match_spans(tokens: Sequence[Token] | Sequence[str], pattern_set: PatternSet) -> list[Span]:
    """All non-overlapping matches of one pattern set, longest first."""

    return _select(_candidates(words_of(tokens), pattern_set))


def match_labeled(
    tokens: Sequence[Token] | Sequence[str],
    keywords: PatternSet,
    anti_keywords: PatternSet,
) -> list[LabeledSpan]:
    """Jointly match a keyword and an anti-keyword set.

    Both sets compete in one longest-first selection. A keyword match lying
    strictly inside any anti-keyword-matchable window is then dropped even if
    that window lost the selection to a third match.
    """

    words = words_of(tokens)
    akw_windows = _candidates(words, anti_keywords)
    labeled = [
        LabeledSpan(s.start, s.end, s.surface, MatchKind.KEYWORD)
        for s in _candidates(words, keywords)
    ]
    labeled += [
        LabeledSpan(s.start, s.end, s.surface, MatchKind.ANTI_KEYWORD) for s in akw_windows
    ]
    result: list[LabeledSpan] = []
    for span in _select(labeled):
        if span.kind is MatchKind.KEYWORD and any(
            window.contains(span) and len(window) > len(span) for window in akw_windows
        ):
            continue
        result.append(span)
    return result


def lexicon_counts(lexicon: Lexicon) -> dict[str, tuple[int, int]]:
    """``set name -> (entries, expanded variants)`` for ``lexicon check``."""

    counts = {name: (len(s), len(s.variants)) for name, s in lexicon.sets().items()}
    counts["fine.body_parts"] = (len(lexicon.body_parts), len(lexicon.body_parts))
    return counts
