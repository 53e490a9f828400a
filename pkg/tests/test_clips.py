"""Tests for ``exercise_clips.clips``: frame partition, merging, statistics."""

from __future__ import annotations

import itertools
import random
from pathlib import Path

import pandas as pd
import pytest

from exercise_clips.clips import (
    Segment,
    build_clips,
    load_manifest,
    merge_segments,
    summarize_dataset,
    write_manifest,
)
from exercise_clips.models import (
    ClipLabel,
    ClipRecord,
    Correctness,
    Relevance,
    SummaryMethod,
    SummaryPhrase,
)

from .conftest import FPS, TOTAL_FRAMES, make_sentence

RC = {"relevance": Relevance.RELEVANT, "correctness": Correctness.CORRECT}
RI = {"relevance": Relevance.RELEVANT, "correctness": Correctness.INCORRECT}


def _summary(text: str) -> SummaryPhrase:
    return SummaryPhrase(text, (0, len(text.split())), SummaryMethod.DEPENDENCY)


def _assert_partition(clips: list[ClipRecord], total_frames: int) -> None:
    assert clips[0].frame_start == 0
    assert clips[-1].frame_end == total_frames
    for before, after in itertools.pairwise(clips):
        assert before.frame_end == after.frame_start
        assert before.label != after.label
    assert all(c.length_frames > 0 for c in clips)


def test_scripted_video_clips() -> None:
    sentences = [
        make_sentence("hello everyone welcome back to my channel", start_ms=0, end_ms=3000),
        make_sentence(
            "keep your elbows close and your back straight",
            sentence_id=1,
            start_ms=4000,
            end_ms=8000,
            **RC,
        ),
        make_sentence(
            "a common mistake is having your butt up in the air",
            sentence_id=2,
            start_ms=9000,
            end_ms=13000,
            summary=_summary("having your butt up"),
            **RI,
        ),
        make_sentence(
            "please subscribe and hit the bell for more videos",
            sentence_id=3,
            start_ms=14000,
            end_ms=18000,
            relevance=Relevance.IRRELEVANT,
        ),
    ]

    clips = build_clips(sentences, FPS, TOTAL_FRAMES, video_id="pushup-01")

    assert [(c.clip_id, c.label, c.frame_start, c.frame_end) for c in clips] == [
        ("pushup-01-0000", ClipLabel.IRRELEVANT, 0, 120),
        ("pushup-01-0001", ClipLabel.RELEVANT_CORRECT, 120, 240),
        ("pushup-01-0002", ClipLabel.IRRELEVANT, 240, 270),
        ("pushup-01-0003", ClipLabel.RELEVANT_INCORRECT, 270, 390),
        ("pushup-01-0004", ClipLabel.IRRELEVANT, 390, 720),
    ]
    assert clips[3].summary == "having your butt up"
    assert clips[3].source_sentence_ids == (2,)
    assert clips[4].source_sentence_ids == (3,)
    assert all(c.summary is None for c in clips if c.label is not ClipLabel.RELEVANT_INCORRECT)


def test_same_label_within_merge_gap_merges() -> None:
    sentences = [
        make_sentence("keep your back straight", start_ms=0, end_ms=1000, **RC),
        make_sentence("and lower your chest", sentence_id=1, start_ms=1400, end_ms=2000, **RC),
    ]

    clips = build_clips(sentences, 30.0, 60)

    assert [(c.label, c.frame_start, c.frame_end) for c in clips] == [
        (ClipLabel.RELEVANT_CORRECT, 0, 60)
    ]
    assert clips[0].source_sentence_ids == (0, 1)


def test_gap_over_merge_gap_stays_split() -> None:
    sentences = [
        make_sentence("keep your back straight", start_ms=0, end_ms=1000, **RC),
        make_sentence("and lower your chest", sentence_id=1, start_ms=1600, end_ms=2000, **RC),
    ]

    clips = build_clips(sentences, 30.0, 60)

    assert [(c.label, c.frame_start, c.frame_end) for c in clips] == [
        (ClipLabel.RELEVANT_CORRECT, 0, 30),
        (ClipLabel.IRRELEVANT, 30, 48),
        (ClipLabel.RELEVANT_CORRECT, 48, 60),
    ]
    assert len(build_clips(sentences, 30.0, 60, merge_gap=18)) == 1


def test_merged_incorrect_clip_keeps_first_summary() -> None:
    sentences = [
        make_sentence("no summary here", start_ms=0, end_ms=1000, **RI),
        make_sentence(
            "having your butt up",
            sentence_id=1,
            start_ms=1000,
            end_ms=2000,
            summary=_summary("having your butt up"),
            **RI,
        ),
        make_sentence(
            "elbows flare",
            sentence_id=2,
            start_ms=2000,
            end_ms=3000,
            summary=_summary("elbows flare"),
            **RI,
        ),
    ]

    (clip,) = build_clips(sentences, 30.0, 90)

    assert clip.summary == "having your butt up"
    assert clip.source_sentence_ids == (0, 1, 2)


def test_overrun_is_clamped_with_warning(caplog: pytest.LogCaptureFixture) -> None:
    sentence = make_sentence("keep your back straight", start_ms=20000, end_ms=30000, **RC)

    with caplog.at_level("WARNING", logger="exercise_clips.clips"):
        clips = build_clips([sentence], 30.0, 720)

    assert clips[-1].frame_start == 600
    assert clips[-1].frame_end == 720
    assert "clamped" in caplog.text


def test_sentence_past_the_end_is_skipped() -> None:
    sentence = make_sentence("keep your back straight", start_ms=40000, end_ms=41000, **RC)

    clips = build_clips([sentence], 30.0, 720)

    assert [(c.label, c.frame_start, c.frame_end) for c in clips] == [
        (ClipLabel.IRRELEVANT, 0, 720)
    ]


def test_overlapping_sentence_is_cut() -> None:
    sentences = [
        make_sentence("keep your back straight", start_ms=0, end_ms=2000, **RC),
        make_sentence("butt up", sentence_id=1, start_ms=1000, end_ms=3000, **RI),
    ]

    clips = build_clips(sentences, 30.0, 90)

    assert [(c.label, c.frame_start, c.frame_end) for c in clips] == [
        (ClipLabel.RELEVANT_CORRECT, 0, 60),
        (ClipLabel.RELEVANT_INCORRECT, 60, 90),
    ]


def test_no_sentences_and_no_frames() -> None:
    assert [(c.label, c.frame_start, c.frame_end) for c in build_clips([], 30.0, 10)] == [
        (ClipLabel.IRRELEVANT, 0, 10)
    ]
    assert build_clips([], 30.0, 0) == []


@pytest.mark.parametrize(
    ("fps", "total", "gap"),
    [(0.0, 10, 15), (30.0, -1, 15), (30.0, 10, -1)],
)
def test_bad_arguments(fps: float, total: int, gap: int) -> None:
    with pytest.raises(ValueError):
        build_clips([], fps, total, merge_gap=gap)


def test_random_sentences_always_partition() -> None:
    rng = random.Random(31)
    labels = [{"relevance": Relevance.IRRELEVANT}, RC, RI]
    for _ in range(300):
        sentences = []
        start = rng.randint(0, 2000)
        for i in range(rng.randint(0, 12)):
            end = start + rng.randint(0, 4000)
            labels_for = rng.choice(labels)
            sentences.append(
                make_sentence(
                    "keep going", sentence_id=i, start_ms=start, end_ms=end, **labels_for
                )
            )
            start = max(end + rng.randint(-500, 3000), 0)
        total = rng.randint(1, 1500)

        clips = build_clips(sentences, 30.0, total, merge_gap=rng.randint(0, 30))

        _assert_partition(clips, total)
        assert [c.clip_id for c in clips] == [f"video-{i:04d}" for i in range(len(clips))]


def test_merge_segments_respects_labels() -> None:
    segments = [
        Segment(0, 10, ClipLabel.RELEVANT_CORRECT, (0,)),
        Segment(12, 20, ClipLabel.RELEVANT_INCORRECT, (1,)),
        Segment(22, 30, ClipLabel.RELEVANT_INCORRECT, (2,)),
    ]

    merged = merge_segments(segments, 5)

    assert [(s.start, s.stop, s.sentence_ids) for s in merged] == [
        (0, 10, (0,)),
        (12, 30, (1, 2)),
    ]


def test_summarize_dataset_matches_pandas() -> None:
    rng = random.Random(8)
    clips = []
    for i in range(200):
        start = rng.randint(0, 5000)
        clips.append(
            ClipRecord(
                clip_id=f"v-{i:04d}",
                video_id="v",
                label=rng.choice(list(ClipLabel)),
                frame_start=start,
                frame_end=start + rng.randint(1, 400),
            )
        )
    frame = pd.DataFrame(
        {"label": [c.label.value for c in clips], "length": [c.length_frames for c in clips]}
    )
    expected = frame.groupby("label")["length"].agg(["count", "mean"])

    summary = summarize_dataset(clips)

    for label in ClipLabel:
        assert summary.counts[label] == expected.loc[label.value, "count"]
        assert summary.mean_lengths[label] == pytest.approx(expected.loc[label.value, "mean"])


def test_summary_of_empty_dataset() -> None:
    summary = summarize_dataset([])

    assert summary.to_dict()["relevant_incorrect"] == {"count": 0, "mean_length_frames": 0.0}
    table = summary.to_frame()
    assert list(table.columns) == ["label", "count", "mean_length_frames"]
    assert table["label"].tolist() == [label.value for label in ClipLabel]


def test_manifest_lines_carry_length(tmp_path: Path) -> None:
    clips = build_clips([], 30.0, 10, video_id="v")

    path = write_manifest(clips, tmp_path / "manifest.jsonl")

    assert '"length_frames": 10' in path.read_text(encoding="utf-8")
    assert load_manifest(path) == clips
