"""Fine relevance pass: keyword windows, majority vote, visibility gate.

For one sentence:

1. Every fine keyword match marks its own words plus ``k`` words on each
   side as relevant (windows are clamped to the sentence).
2. Every fine anti-keyword match then marks its window irrelevant,
   overwriting whatever the first pass wrote.
3. The sentence is relevant only if relevant marks strictly outnumber
   irrelevant marks. Ties, including a sentence with no marks, are
   irrelevant.

A relevant sentence must also pass the visibility gate: over the frames its
time interval maps to, at least a fraction ``phi`` must have a mean
landmark visibility of at least ``tau``. Frames missing from the pose
stream count as failing; an interval with no pose frames at all fails with
the ``no-pose-data`` flag. A failing relevant sentence is demoted.
"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .lexicon import Lexicon, MatchKind, match_labeled
from .models import NO_POSE_DATA, Mark, Relevance, Sentence, WordMark
from .poses import PoseStream, time_to_frames

logger = logging.getLogger(__name__)

DEFAULT_VISIBILITY_THRESHOLD: float = 0.5
DEFAULT_VISIBILITY_FRACTION: float = 0.5


def mark_words(sentence: Sentence | Sequence[str], lexicon: Lexicon) -> list[WordMark]:
    """Stamp keyword windows, then anti-keyword windows over them."""

    words = sentence.words if isinstance(sentence, Sentence) else list(sentence)
    n = len(words)
    marks = [Mark.NONE] * n
    matches = match_labeled(words, lexicon.fine_kw, lexicon.fine_akw)
    # Keyword windows first; anti-keyword windows overwrite them.
    passes = ((MatchKind.KEYWORD, Mark.RELEVANT), (MatchKind.ANTI_KEYWORD, Mark.IRRELEVANT))
    for kind, mark in passes:
        for match in matches:
            if match.kind is not kind:
                continue
            lo = max(0, match.start - lexicon.k)
            hi = min(n, match.stop + lexicon.k)
            for i in range(lo, hi):
                marks[i] = mark
    return [WordMark(i, mark) for i, mark in enumerate(marks)]


def vote(marks: Sequence[WordMark]) -> Relevance:
    relevant = sum(1 for m in marks if m.mark is Mark.RELEVANT)
    irrelevant = sum(1 for m in marks if m.mark is Mark.IRRELEVANT)
    return Relevance.RELEVANT if relevant > irrelevant else Relevance.IRRELEVANT


@dataclass(frozen=True)
class GateResult:
    passed: bool
    fraction: float
    flag: str | None = None


def gate_by_visibility(
    sentence: Sentence,
    poses: PoseStream,
    threshold: float = DEFAULT_VISIBILITY_THRESHOLD,
    fraction: float = DEFAULT_VISIBILITY_FRACTION,
) -> GateResult:
    """Check full-body visibility over the sentence's frames."""

    frames = time_to_frames(sentence.start_ms, sentence.end_ms, poses.fps)
    present, landmarks = poses.window(frames.start, frames.stop)
    if len(frames) == 0 or present.shape[0] == 0:
        return GateResult(passed=False, fraction=0.0, flag=NO_POSE_DATA)
    qualifying = int(np.count_nonzero(landmarks[:, :, 3].mean(axis=1) >= threshold))
    share = qualifying / len(frames)
    return GateResult(passed=share >= fraction, fraction=share)


def classify_relevance(
    sentences: Sequence[Sentence],
    lexicon: Lexicon,
    poses: PoseStream | None,
    *,
    threshold: float = DEFAULT_VISIBILITY_THRESHOLD,
    fraction: float = DEFAULT_VISIBILITY_FRACTION,
) -> list[Sentence]:
    """Label every sentence; relevant ones are gated when ``poses`` is given."""

    labeled: list[Sentence] = []
    demoted = 0
    for sentence in sentences:
        relevance = vote(mark_words(sentence, lexicon))
        if relevance is not Relevance.RELEVANT or poses is None:
            labeled.append(dataclasses.replace(sentence, relevance=relevance))
            continue
        gate = gate_by_visibility(sentence, poses, threshold, fraction)
        if not gate.passed:
            relevance = Relevance.IRRELEVANT
            demoted += 1
        flags = sentence.flags if gate.flag is None else (*sentence.flags, gate.flag)
        labeled.append(
            dataclasses.replace(
                sentence, relevance=relevance, visible_fraction=gate.fraction, flags=flags
            )
        )
    logger.info(
        "relevance: %d relevant, %d demoted by the visibility gate",
        sum(1 for s in labeled if s.relevance is Relevance.RELEVANT),
        demoted,
    )
    return labeled
