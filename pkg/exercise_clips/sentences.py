"""Sentence splitting inside the spans the coarse pass kept.

Each kept span is segmented on its own, so a sentence never crosses a
rejected stretch. Boundaries come from a pluggable :class:`Segmenter`; the
default :class:`RuleSegmenter` uses the first rule that applies to the span:

1. sentence-final punctuation (``.``, ``!``, ``?``) if any token carries it;
2. else pauses: a gap longer than ``pause_ms`` between consecutive tokens;
3. else discourse markers (``so``, ``now``, ``okay``, ``alright``) that are
   not the first token of the span.

Pieces over the word or display-time limit are then split recursively at
the largest inter-token gap (ties go to the position nearest the middle,
then to the earlier position) until both limits hold. A single-token piece
that still exceeds a limit is dropped. Finally pieces shorter than
``min_chars`` characters are dropped and the survivors numbered from 0.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol

from .models import CoarseSpan, Sentence, SpanLabel, Token

logger = logging.getLogger(__name__)

DEFAULT_MIN_CHARS: int = 20
DEFAULT_MAX_WORDS: int = 30
DEFAULT_MAX_DURATION_MS: int = 15_000
DEFAULT_PAUSE_MS: int = 800
DEFAULT_MARKERS: frozenset[str] = frozenset({"so", "now", "okay", "alright"})
_FINAL_PUNCT = frozenset(".!?")


@dataclass(frozen=True)
class SentenceLimits:
    min_chars: int = DEFAULT_MIN_CHARS
    max_words: int = DEFAULT_MAX_WORDS
    max_duration_ms: int = DEFAULT_MAX_DURATION_MS


class Segmenter(Protocol):
    """Boundary provider for one kept span.

    ``boundaries`` returns the positions (relative to ``tokens``) where a new
    sentence starts. Position 0 is implied and may be omitted.
    """

    def boundaries(self, tokens: Sequence[Token]) -> list[int]: ...


@dataclass(frozen=True)
class RuleSegmenter:
    pause_ms: int = DEFAULT_PAUSE_MS
    markers: frozenset[str] = DEFAULT_MARKERS

    def boundaries(self, tokens: Sequence[Token]) -> list[int]:
        if any(_FINAL_PUNCT & set(t.punct) for t in tokens):
            return [
                j + 1 for j, t in enumerate(tokens[:-1]) if _FINAL_PUNCT & set(t.punct)
            ]
        pauses = [
            j
            for j in range(1, len(tokens))
            if tokens[j].start_ms - tokens[j - 1].end_ms > self.pause_ms
        ]
        if pauses:
            return pauses
        return [j for j in range(1, len(tokens)) if tokens[j].text in self.markers]


def _too_long(piece: Sequence[Token], limits: SentenceLimits) -> bool:
    duration = piece[-1].end_ms - piece[0].start_ms
    return len(piece) > limits.max_words or duration > limits.max_duration_ms


def _split_point(piece: Sequence[Token]) -> int:
    middle = len(piece) / 2
    return min(
        range(1, len(piece)),
        key=lambda j: (-(piece[j].start_ms - piece[j - 1].end_ms), abs(j - middle), j),
    )


def enforce_limits(piece: Sequence[Token], limits: SentenceLimits) -> list[Sequence[Token]]:
    """Split ``piece`` recursively until it fits the word and duration caps."""

    if not _too_long(piece, limits):
        return [piece]
    if len(piece) < 2:
        logger.debug("dropping unsplittable token %r over the duration cap", piece[0].text)
        return []
    at = _split_point(piece)
    return enforce_limits(piece[:at], limits) + enforce_limits(piece[at:], limits)


def _cut(tokens: Sequence[Token], cuts: Sequence[int]) -> list[Sequence[Token]]:
    edges = sorted({0, len(tokens), *(c for c in cuts if 0 < c < len(tokens))})
    return [tokens[a:b] for a, b in itertools.pairwise(edges)]


def split_sentences(
    spans: Sequence[CoarseSpan],
    tokens: Sequence[Token],
    segmenter: Segmenter | None = None,
    limits: SentenceLimits | None = None,
) -> list[Sentence]:
    """Split the kept spans of ``tokens`` into sentences.

    ``spans`` is the coarse-pass partition; rejected spans are skipped.
    ``tokens`` is the full stream the spans index.
    """

    segmenter = segmenter or RuleSegmenter()
    limits = limits or SentenceLimits()
    sentences: list[Sentence] = []
    dropped = 0
    for span in spans:
        if span.label is not SpanLabel.KEPT or len(span) == 0:
            continue
        span_tokens = tokens[span.start_index : span.end_index]
        for rough in _cut(span_tokens, segmenter.boundaries(span_tokens)):
            for piece in enforce_limits(rough, limits):
                text = " ".join(t.text for t in piece)
                if len(text) < limits.min_chars:
                    dropped += 1
                    continue
                sentences.append(
                    Sentence(
                        id=len(sentences),
                        text=text,
                        start_ms=piece[0].start_ms,
                        end_ms=piece[-1].end_ms,
                        token_start=piece[0].index,
                        token_end=piece[-1].index + 1,
                    )
                )
    logger.info("split %d sentences (%d short fragments dropped)", len(sentences), dropped)
    return sentences
