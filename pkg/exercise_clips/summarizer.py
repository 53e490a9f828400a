"""Key-phrase extraction for relevant-incorrect sentences.

The summary is always a verbatim, contiguous span of two to eight words of
the sentence. Two stages are tried in order:

1. Dependency: for each body-part keyword, ask a :class:`DependencyProvider`
   for the word that governs it. The default :class:`VerbProximityProvider`
   picks the nearest verb-like word (listed in the lexicon's verb list, or a
   word of five or more letters ending in ``ing``) within five words before
   the keyword. The phrase runs from that verb through the keyword plus up
   to two following words.
2. Keyword context: the first fine keyword plus ``k`` words on each side.

Both stages trim stop words off the phrase edges (never into the keyword).
A stage-2 phrase longer than eight words loses words from whichever side
has more context, the right side on ties. Without any fine keyword, or when
trimming leaves fewer than two words, there is no summary.
"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Collection, Sequence
from dataclasses import dataclass
from typing import Protocol

from .lexicon import Lexicon, MatchKind, Span, match_labeled
from .models import Correctness, Relevance, Sentence, SummaryMethod, SummaryPhrase

logger = logging.getLogger(__name__)

MIN_PHRASE_WORDS: int = 2
MAX_PHRASE_WORDS: int = 8
DEPENDENCY_WINDOW: int = 5
TRAILING_WORDS: int = 2


class DependencyProvider(Protocol):
    """Finds the word governing a keyword span.

    ``head_of`` returns the position of the head word in ``words``, or
    ``None`` when there is none. A syntactic parser can stand in for the
    proximity heuristic by implementing this one method.
    """

    def head_of(self, words: Sequence[str], target: Span) -> int | None: ...


@dataclass(frozen=True)
class VerbProximityProvider:
    verbs: frozenset[str]
    window: int = DEPENDENCY_WINDOW

    def is_verb_like(self, word: str) -> bool:
        return word in self.verbs or (len(word) >= 5 and word.endswith("ing"))

    def head_of(self, words: Sequence[str], target: Span) -> int | None:
        for i in range(target.start - 1, max(-1, target.start - 1 - self.window), -1):
            if self.is_verb_like(words[i]):
                return i
        return None


def _trim(
    words: Sequence[str], start: int, stop: int, keep: Span, stop_words: Collection[str]
) -> tuple[int, int]:
    while start < keep.start and words[start] in stop_words:
        start += 1
    while stop > keep.stop and words[stop - 1] in stop_words:
        stop -= 1
    return start, stop


def _shrink(start: int, stop: int, keep: Span) -> tuple[int, int]:
    while stop - start > MAX_PHRASE_WORDS:
        left, right = keep.start - start, stop - keep.stop
        if left > right:
            start += 1
        else:
            stop -= 1
    return start, stop


def _phrase(
    words: Sequence[str], start: int, stop: int, method: SummaryMethod
) -> SummaryPhrase | None:
    if not MIN_PHRASE_WORDS <= stop - start <= MAX_PHRASE_WORDS:
        return None
    return SummaryPhrase(" ".join(words[start:stop]), (start, stop), method)


def summarize(
    sentence: Sentence | Sequence[str],
    lexicon: Lexicon,
    verbs: Collection[str] | None = None,
    *,
    provider: DependencyProvider | None = None,
) -> SummaryPhrase | None:
    """Extract the key phrase of one sentence, or ``None``."""

    words = sentence.words if isinstance(sentence, Sentence) else list(sentence)
    if provider is None:
        provider = VerbProximityProvider(frozenset(lexicon.verbs if verbs is None else verbs))
    keywords = [
        m
        for m in match_labeled(words, lexicon.fine_kw, lexicon.fine_akw)
        if m.kind is MatchKind.KEYWORD
    ]
    if not keywords:
        return None

    for match in keywords:
        if tuple(words[match.start : match.stop]) not in lexicon.body_parts:
            continue
        head = provider.head_of(words, match)
        if head is None:
            continue
        stop = min(len(words), match.stop + TRAILING_WORDS)
        start, stop = _trim(words, head, stop, match, lexicon.stop_words)
        found = _phrase(words, start, stop, SummaryMethod.DEPENDENCY)
        if found is not None:
            return found

    first = keywords[0]
    start = max(0, first.start - lexicon.k)
    stop = min(len(words), first.stop + lexicon.k)
    start, stop = _trim(words, start, stop, first, lexicon.stop_words)
    start, stop = _shrink(start, stop, first)
    return _phrase(words, start, stop, SummaryMethod.KEYWORD_CONTEXT)


def summarize_sentences(
    sentences: Sequence[Sentence],
    lexicon: Lexicon,
    *,
    provider: DependencyProvider | None = None,
) -> list[Sentence]:
    """Attach summaries to relevant-incorrect sentences; others pass through."""

    out: list[Sentence] = []
    missing = 0
    for sentence in sentences:
        if (
            sentence.relevance is not Relevance.RELEVANT
            or sentence.correctness is not Correctness.INCORRECT
        ):
            out.append(sentence)
            continue
        phrase = summarize(sentence, lexicon, provider=provider)
        if phrase is None:
            missing += 1
            logger.debug("no summary for sentence %d: %r", sentence.id, sentence.text)
        out.append(dataclasses.replace(sentence, summary=phrase))
    if missing:
        logger.info("%d incorrect sentences have no summary phrase", missing)
    return out
