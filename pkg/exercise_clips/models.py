"""Record types shared by the pipeline stages.

Every stage consumes and produces these frozen dataclasses; the JSONL
readers in :mod:`exercise_clips.io` are the inverse of each ``to_dict``.
Stages never mutate a record: labeling returns a copy built with
:func:`dataclasses.replace`.

Ordinals follow one convention throughout: token indices are 0-based
positions in the video's token stream, sentence ids are 0-based in
emission order, and cue indices are 1-based (the SRT convention).
Token and frame ranges are half-open ``[start, end)`` unless a field
says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any


class SpanLabel(StrEnum):
    """Coarse-pass verdict for a token span."""

    KEPT = "kept"
    REJECTED = "rejected"


class Relevance(StrEnum):
    UNSET = "unset"
    RELEVANT = "relevant"
    IRRELEVANT = "irrelevant"


class Correctness(StrEnum):
    UNSET = "unset"
    CORRECT = "correct"
    INCORRECT = "incorrect"


class Mark(StrEnum):
    """Per-word mark written by the fine relevance pass."""

    NONE = "none"
    RELEVANT = "relevant"
    IRRELEVANT = "irrelevant"


class SummaryMethod(StrEnum):
    DEPENDENCY = "dependency"
    KEYWORD_CONTEXT = "keyword_context"


class ClipLabel(StrEnum):
    IRRELEVANT = "irrelevant"
    RELEVANT_CORRECT = "relevant_correct"
    RELEVANT_INCORRECT = "relevant_incorrect"


# Flag written on a sentence whose time interval has no pose frames.
NO_POSE_DATA = "no-pose-data"


@dataclass(frozen=True)
class Cue:
    """One subtitle cue. ``text`` is tag-stripped and whitespace-collapsed."""

    index: int
    start_ms: int
    end_ms: int
    text: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "text": self.text,
        }


@dataclass(frozen=True)
class Token:
    """A lowercase word with interpolated timing.

    ``punct`` keeps the trailing punctuation stripped from the word (``"."``
    for ``"straight."``) so a segmenter can still see sentence-final marks.
    It is empty for most tokens and omitted from :meth:`to_dict` when empty.
    """

    text: str
    start_ms: int
    end_ms: int
    index: int
    punct: str = ""

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "text": self.text,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "index": self.index,
        }
        if self.punct:
            data["punct"] = self.punct
        return data


@dataclass(frozen=True)
class CoarseSpan:
    """Half-open token range ``[start_index, end_index)`` with its verdict."""

    start_index: int
    end_index: int
    label: SpanLabel

    def __len__(self) -> int:
        return self.end_index - self.start_index

    def to_dict(self) -> dict[str, Any]:
        return {
            "start_index": self.start_index,
            "end_index": self.end_index,
            "label": self.label.value,
        }


@dataclass(frozen=True)
class SummaryPhrase:
    """Verbatim sub-span of a sentence naming an execution error.

    ``source_span`` is the half-open word range inside the sentence.
    """

    text: str
    source_span: tuple[int, int]
    method: SummaryMethod

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "source_span": list(self.source_span),
            "method": self.method.value,
        }


@dataclass(frozen=True)
class Sentence:
    """A contiguous token slice plus the labels later stages attach to it.

    ``token_start`` / ``token_end`` index the video's token stream
    (half-open). ``text`` is the space-joined token texts, so ``words``
    recovers the slice without the stream.
    """

    id: int
    text: str
    start_ms: int
    end_ms: int
    token_start: int
    token_end: int
    relevance: Relevance = Relevance.UNSET
    correctness: Correctness = Correctness.UNSET
    summary: SummaryPhrase | None = None
    log_odds: float | None = None
    visible_fraction: float | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def words(self) -> list[str]:
        return self.text.split(" ")

    @property
    def char_len(self) -> int:
        return len(self.text)

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "token_start": self.token_start,
            "token_end": self.token_end,
            "relevance": self.relevance.value,
            "correctness": self.correctness.value,
            "summary": self.summary.to_dict() if self.summary is not None else None,
            "log_odds": self.log_odds,
            "visible_fraction": self.visible_fraction,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class WordMark:
    """Mark for one word; ``token_index`` is the position inside the sentence."""

    token_index: int
    mark: Mark


@dataclass(frozen=True)
class ClipRecord:
    """A labeled half-open frame interval, one line of the manifest."""

    clip_id: str
    video_id: str
    label: ClipLabel
    frame_start: int
    frame_end: int
    source_sentence_ids: tuple[int, ...] = ()
    summary: str | None = None

    @property
    def length_frames(self) -> int:
        return self.frame_end - self.frame_start

    def to_dict(self) -> dict[str, Any]:
        return {
            "clip_id": self.clip_id,
            "video_id": self.video_id,
            "label": self.label.value,
            "frame_start": self.frame_start,
            "frame_end": self.frame_end,
            "length_frames": self.length_frames,
            "source_sentence_ids": list(self.source_sentence_ids),
            "summary": self.summary,
        }
