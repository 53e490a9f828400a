"""Turn labeled sentences into a clip partition of each video's frames.

Per video:

1. Each sentence maps to ``time_to_frames(start_ms, end_ms, fps)``. Ranges
   past ``total_frames`` are clamped (with a warning); a range starting
   before the previous one ended is cut to start there; empty ranges are
   skipped.
2. Consecutive ranges with the same clip label merge when the frames
   between them number at most ``merge_gap``. A merged
   ``relevant_incorrect`` clip keeps the first summary of its parts.
3. Frames no sentence covers (including coarse-rejected stretches) become
   ``irrelevant``; touching clips with the same label are coalesced.

The result covers ``[0, total_frames)`` exactly, in order, with no overlap.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from .io import load_manifest, write_jsonl
from .models import ClipLabel, ClipRecord, Correctness, Relevance, Sentence
from .poses import time_to_frames

logger = logging.getLogger(__name__)

DEFAULT_MERGE_GAP: int = 15

__all__ = [
    "DEFAULT_MERGE_GAP",
    "DatasetSummary",
    "Segment",
    "build_clips",
    "clip_label_for",
    "load_manifest",
    "merge_segments",
    "summarize_dataset",
    "write_manifest",
]


@dataclass(frozen=True)
class Segment:
    """A labeled half-open frame range before clip ids are assigned."""

    start: int
    stop: int
    label: ClipLabel
    sentence_ids: tuple[int, ...] = ()
    summary: str | None = None


def clip_label_for(sentence: Sentence) -> ClipLabel:
    if sentence.relevance is not Relevance.RELEVANT:
        return ClipLabel.IRRELEVANT
    if sentence.correctness is Correctness.INCORRECT:
        return ClipLabel.RELEVANT_INCORRECT
    return ClipLabel.RELEVANT_CORRECT


def _join(a: Segment, b: Segment) -> Segment:
    return Segment(
        start=a.start,
        stop=b.stop,
        label=a.label,
        sentence_ids=a.sentence_ids + b.sentence_ids,
        summary=a.summary if a.summary is not None else b.summary,
    )


def merge_segments(segments: Iterable[Segment], merge_gap: int) -> list[Segment]:
    """Merge consecutive same-label segments separated by ``<= merge_gap`` frames."""

    merged: list[Segment] = []
    for seg in segments:
        if merged and merged[-1].label == seg.label and seg.start - merged[-1].stop <= merge_gap:
            merged[-1] = _join(merged[-1], seg)
        else:
            merged.append(seg)
    return merged


def _sentence_segments(
    sentences: Sequence[Sentence], fps: float, total_frames: int, video_id: str
) -> list[Segment]:
    segments: list[Segment] = []
    cursor = 0
    for sentence in sorted(sentences, key=lambda s: (s.start_ms, s.id)):
        frames = time_to_frames(sentence.start_ms, sentence.end_ms, fps)
        start, stop = frames.start, frames.stop
        if stop > total_frames:
            logger.warning(
                "%s: sentence %d frames [%d, %d) exceed %d total frames; clamped",
                video_id,
                sentence.id,
                start,
                stop,
                total_frames,
            )
            start, stop = min(start, total_frames), total_frames
        start = max(start, cursor)
        if start >= stop:
            continue
        label = clip_label_for(sentence)
        summary = None
        if label is ClipLabel.RELEVANT_INCORRECT and sentence.summary is not None:
            summary = sentence.summary.text
        segments.append(Segment(start, stop, label, (sentence.id,), summary))
        cursor = stop
    return segments


def _fill(segments: Sequence[Segment], total_frames: int) -> list[Segment]:
    filled: list[Segment] = []
    cursor = 0
    for seg in segments:
        if seg.start > cursor:
            filled.append(Segment(cursor, seg.start, ClipLabel.IRRELEVANT))
        filled.append(seg)
        cursor = seg.stop
    if cursor < total_frames:
        filled.append(Segment(cursor, total_frames, ClipLabel.IRRELEVANT))
    return merge_segments(filled, 0)


def build_clips(
    sentences: Sequence[Sentence],
    fps: float,
    total_frames: int,
    *,
    video_id: str = "video",
    merge_gap: int = DEFAULT_MERGE_GAP,
) -> list[ClipRecord]:
    """Partition ``[0, total_frames)`` into labeled clips.

    Raises:
        ValueError: ``fps`` is not positive, or ``total_frames`` /
            ``merge_gap`` is negative.
    """

    if total_frames < 0:
        raise ValueError(f"total_frames must be >= 0, got {total_frames}")
    if merge_gap < 0:
        raise ValueError(f"merge_gap must be >= 0, got {merge_gap}")
    if not fps > 0:
        raise ValueError(f"fps must be positive, got {fps}")
    if total_frames == 0:
        return []

    segments = merge_segments(
        _sentence_segments(sentences, fps, total_frames, video_id), merge_gap
    )
    clips = [
        ClipRecord(
            clip_id=f"{video_id}-{i:04d}",
            video_id=video_id,
            label=seg.label,
            frame_start=seg.start,
            frame_end=seg.stop,
            source_sentence_ids=seg.sentence_ids,
            summary=seg.summary if seg.label is ClipLabel.RELEVANT_INCORRECT else None,
        )
        for i, seg in enumerate(_fill(segments, total_frames))
    ]
    logger.info("%s: %d clips over %d frames", video_id, len(clips), total_frames)
    return clips


# ---------------------------------------------------------------------------
# Dataset statistics and manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetSummary:
    """Per-label clip counts and mean clip lengths (frames)."""

    counts: dict[ClipLabel, int] = field(default_factory=dict)
    mean_lengths: dict[ClipLabel, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, dict[str, float]]:
        return {
            label.value: {
                "count": self.counts.get(label, 0),
                "mean_length_frames": self.mean_lengths.get(label, 0.0),
            }
            for label in ClipLabel
        }

    def to_frame(self) -> pd.DataFrame:
        """One row per label: ``label, count, mean_length_frames``."""

        rows = [
            {
                "label": label.value,
                "count": self.counts.get(label, 0),
                "mean_length_frames": self.mean_lengths.get(label, 0.0),
            }
            for label in ClipLabel
        ]
        return pd.DataFrame(rows, columns=["label", "count", "mean_length_frames"])


def summarize_dataset(clips: Iterable[ClipRecord]) -> DatasetSummary:
    """Exact counts and arithmetic-mean lengths per label (0.0 for no clips)."""

    lengths: dict[ClipLabel, list[int]] = {label: [] for label in ClipLabel}
    for clip in clips:
        lengths[clip.label].append(clip.length_frames)
    return DatasetSummary(
        counts={label: len(values) for label, values in lengths.items()},
        mean_lengths={
            label: (sum(values) / len(values) if values else 0.0)
            for label, values in lengths.items()
        },
    )


def write_manifest(clips: Iterable[ClipRecord], path: str | Path) -> Path:
    return write_jsonl(path, (clip.to_dict() for clip in clips))
