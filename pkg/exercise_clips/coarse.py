"""Coarse pass: reject whole stretches between an anti-keyword and the next keyword.

The scan walks the joint coarse keyword / anti-keyword matches left to right
with two states. In the kept state an anti-keyword match opens a rejected
stretch at its first token; in the rejected state the first keyword match
closes it immediately before the keyword, and the keyword itself is kept.
Anti-keywords inside a rejected stretch change nothing. A stretch still open
at the end of the stream runs to the end.

The result partitions the token stream into ordered, disjoint half-open
spans; adjacent kept tokens always form a single span.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from .lexicon import Lexicon, MatchKind, match_labeled
from .models import CoarseSpan, SpanLabel, Token

logger = logging.getLogger(__name__)


def rejected_ranges(
    tokens: Sequence[Token] | Sequence[str], lexicon: Lexicon
) -> list[tuple[int, int]]:
    """Half-open ``[start, end)`` token ranges the coarse pass rejects."""

    ranges: list[tuple[int, int]] = []
    opened: int | None = None
    for match in match_labeled(tokens, lexicon.coarse_kw, lexicon.coarse_akw):
        if opened is None and match.kind is MatchKind.ANTI_KEYWORD:
            opened = match.start
        elif opened is not None and match.kind is MatchKind.KEYWORD:
            ranges.append((opened, match.start))
            opened = None
    if opened is not None:
        ranges.append((opened, len(tokens)))
    return ranges


def mark_coarse(tokens: Sequence[Token] | Sequence[str], lexicon: Lexicon) -> list[CoarseSpan]:
    """Partition ``tokens`` into kept and rejected spans. Empty input gives ``[]``."""

    spans: list[CoarseSpan] = []
    cursor = 0
    for start, end in rejected_ranges(tokens, lexicon):
        if start > cursor:
            spans.append(CoarseSpan(cursor, start, SpanLabel.KEPT))
        spans.append(CoarseSpan(start, end, SpanLabel.REJECTED))
        cursor = end
    if cursor < len(tokens):
        spans.append(CoarseSpan(cursor, len(tokens), SpanLabel.KEPT))

    rejected = sum(len(s) for s in spans if s.label is SpanLabel.REJECTED)
    if rejected:
        logger.info("coarse pass rejected %d of %d tokens", rejected, len(tokens))
    return spans


def kept_spans(spans: Sequence[CoarseSpan]) -> list[CoarseSpan]:
    return [span for span in spans if span.label is SpanLabel.KEPT]
