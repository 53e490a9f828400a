"""
Shared pytest fixtures and builders for the exercise-clips test suite.

Two safety nets apply to every test:

1. ``_isolated_env`` (autouse): removes ``EXERCISE_CLIPS_*`` variables from
   the process environment and runs the test from its own ``tmp_path``, so
   a developer's shell settings or a stray ``.env`` in the checkout never
   change a result.

2. ``_quiet_package_logger`` (autouse): resets the ``exercise_clips``
   logger after each test. The CLI installs its own stderr handler and
   turns propagation off; without the reset a CLI test would hide log
   records from ``caplog`` in the tests that run after it.

The builders below construct records directly so stage tests do not depend
on the stages upstream of them. ``build_project`` writes the synthetic
end-to-end project (one scripted push-up video) used by the pipeline and
CLI tests; its layout is described in ``tests/fixtures/README.md``.
"""

from __future__ import annotations

import logging
import os
import shutil
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pytest

from exercise_clips.lexicon import Lexicon, MatchKind, PatternSet, compile_lexicon, load_lexicon
from exercise_clips.models import (
    Correctness,
    Relevance,
    Sentence,
    SummaryPhrase,
    Token,
)
from exercise_clips.poses import N_LANDMARKS, PoseStream, make_stream, write_poses

FIXTURES_DIR = Path(__file__).parent / "fixtures"

FPS = 30.0
TOTAL_FRAMES = 720
PUSHUP_RANGES: tuple[tuple[int, int], ...] = ((120, 240), (270, 390))


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    for name in list(os.environ):
        if name.startswith("EXERCISE_CLIPS_"):
            monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)


@pytest.fixture(autouse=True)
def _quiet_package_logger() -> Iterator[None]:
    yield
    package = logging.getLogger("exercise_clips")
    package.handlers.clear()
    package.setLevel(logging.NOTSET)
    package.propagate = True


# ---------------------------------------------------------------------------
# Lexicons
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def default_lexicon() -> Lexicon:
    """The packaged push-up lexicon."""

    return load_lexicon()


def small_lexicon(k: int = 2) -> Lexicon:
    """A compact lexicon whose sets are easy to reason about in tests."""

    return compile_lexicon(
        {
            "k": k,
            "coarse": {
                "keywords": ["perfect push(-)up(s)", "push(-)up form"],
                "anti_keywords": ["triangle push(-)up(s)", "squat(s)"],
            },
            "fine": {
                "keywords": ["straight", "lower"],
                "body_parts": ["back", "elbow(s)", "butt"],
                "anti_keywords": ["subscribe", "channel"],
            },
            "summary": {"verbs": ["having", "keeping"]},
        }
    )


@pytest.fixture
def lexicon_small() -> Lexicon:
    return small_lexicon()


# Multi-word templates with nested and partially overlapping variants.
OVERLAP_KEYWORDS = ["good", "good form", "check", "push(-)up", "push up form"]
OVERLAP_ANTI_KEYWORDS = ["bad", "bad good form", "form check", "up x"]
OVERLAP_WORDS = ["good", "form", "bad", "check", "push", "up", "push-up", "x", "y"]


def brute_force_matches(
    words: Sequence[str], keywords: PatternSet, anti_keywords: PatternSet
) -> list[tuple[int, int, MatchKind]]:
    """Reference joint matcher as half-open ``(start, stop, kind)`` triples.

    Every span of ``words`` is looked up in both sets. Spans are claimed
    longest first, then leftmost, onto free positions only; a claimed
    keyword inside a strictly longer anti-keyword span is then discarded.
    """

    n = len(words)
    kinds: dict[tuple[int, int], MatchKind] = {}
    for start in range(n):
        for stop in range(start + 1, n + 1):
            window = tuple(words[start:stop])
            if window in keywords.variants:
                kinds[(start, stop)] = MatchKind.KEYWORD
            elif window in anti_keywords.variants:
                kinds[(start, stop)] = MatchKind.ANTI_KEYWORD
    claimed = [False] * n
    chosen: list[tuple[int, int, MatchKind]] = []
    for size in range(n, 0, -1):
        for start in range(n - size + 1):
            kind = kinds.get((start, start + size))
            if kind is None or any(claimed[start : start + size]):
                continue
            claimed[start : start + size] = [True] * size
            chosen.append((start, start + size, kind))
    anti_spans = [span for span, kind in kinds.items() if kind is MatchKind.ANTI_KEYWORD]
    return sorted(
        (start, stop, kind)
        for start, stop, kind in chosen
        if kind is MatchKind.ANTI_KEYWORD
        or not any(a <= start and stop <= b and b - a > stop - start for a, b in anti_spans)
    )


# ---------------------------------------------------------------------------
# Text records
# ---------------------------------------------------------------------------


def make_tokens(
    words: Sequence[str] | str,
    *,
    start_ms: int = 0,
    step_ms: int = 100,
    first_index: int = 0,
) -> list[Token]:
    """Back-to-back tokens of ``step_ms`` each."""

    items = words.split() if isinstance(words, str) else list(words)
    return [
        Token(
            text=word,
            start_ms=start_ms + i * step_ms,
            end_ms=start_ms + (i + 1) * step_ms,
            index=first_index + i,
        )
        for i, word in enumerate(items)
    ]


def make_sentence(
    text: str,
    *,
    sentence_id: int = 0,
    start_ms: int = 0,
    end_ms: int = 1000,
    relevance: Relevance = Relevance.UNSET,
    correctness: Correctness = Correctness.UNSET,
    summary: SummaryPhrase | None = None,
    token_start: int = 0,
) -> Sentence:
    return Sentence(
        id=sentence_id,
        text=text,
        start_ms=start_ms,
        end_ms=end_ms,
        token_start=token_start,
        token_end=token_start + len(text.split()),
        relevance=relevance,
        correctness=correctness,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# Poses
# ---------------------------------------------------------------------------

# Upright body in image coordinates (y grows downward), one (x, y) per landmark.
# fmt: off
STANDING_XY = np.array(
    [
        (0.50, 0.10),
        (0.51, 0.09), (0.52, 0.09), (0.53, 0.09),
        (0.49, 0.09), (0.48, 0.09), (0.47, 0.09),
        (0.54, 0.10), (0.46, 0.10),
        (0.51, 0.12), (0.49, 0.12),
        (0.58, 0.20), (0.42, 0.20),
        (0.60, 0.33), (0.40, 0.33),
        (0.61, 0.45), (0.39, 0.45),
        (0.62, 0.48), (0.38, 0.48),
        (0.61, 0.49), (0.39, 0.49),
        (0.60, 0.47), (0.40, 0.47),
        (0.55, 0.50), (0.45, 0.50),
        (0.55, 0.70), (0.45, 0.70),
        (0.55, 0.88), (0.45, 0.88),
        (0.54, 0.90), (0.46, 0.90),
        (0.57, 0.92), (0.43, 0.92),
    ],
    dtype=np.float64,
)
# fmt: on

# The same body lying horizontally, head to the left: a push-up plank.
PUSHUP_XY = np.column_stack([STANDING_XY[:, 1], 1.0 - STANDING_XY[:, 0]])

LOWER_LEG = range(27, 33)


def pose_block(
    family: str = "standing",
    *,
    visibility: float | npt.ArrayLike = 0.95,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> npt.NDArray[np.float64]:
    """One ``(33, 4)`` landmark block of the given pose family."""

    xy = (PUSHUP_XY if family == "pushup" else STANDING_XY).copy()
    if noise:
        generator = rng if rng is not None else np.random.default_rng(0)
        xy += generator.normal(0.0, noise, size=xy.shape)
    block = np.zeros((N_LANDMARKS, 4), dtype=np.float64)
    block[:, :2] = xy
    block[:, 3] = np.broadcast_to(np.asarray(visibility, dtype=np.float64), (N_LANDMARKS,))
    return block


def uniform_stream(
    n_frames: int,
    *,
    visibility: float = 0.95,
    video_id: str = "video",
    fps: float = FPS,
    first_frame: int = 0,
) -> PoseStream:
    blocks = np.stack([pose_block(visibility=visibility) for _ in range(n_frames)])
    frames = np.arange(first_frame, first_frame + n_frames)
    return make_stream(video_id, fps, frames, blocks.reshape(n_frames, N_LANDMARKS, 4))


def _in_pushup(frame: int) -> bool:
    return any(lo <= frame < hi for lo, hi in PUSHUP_RANGES)


def scripted_stream(video_id: str = "pushup-01", *, seed: int = 7) -> PoseStream:
    """Pose stream of the scripted video.

    Push-up plank frames with full visibility inside the two relevant
    sentences; a standing pose with poorly visible lower legs elsewhere.
    """

    rng = np.random.default_rng(seed)
    standing_visibility = np.full(N_LANDMARKS, 0.95)
    standing_visibility[list(LOWER_LEG)] = 0.2
    blocks = []
    for frame in range(TOTAL_FRAMES):
        if _in_pushup(frame):
            blocks.append(pose_block("pushup", visibility=0.95, noise=0.003, rng=rng))
        else:
            blocks.append(
                pose_block("standing", visibility=standing_visibility, noise=0.003, rng=rng)
            )
    return make_stream(video_id, FPS, np.arange(TOTAL_FRAMES), np.stack(blocks))


# ---------------------------------------------------------------------------
# End-to-end project
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Project:
    root: Path
    config: Path
    output_dir: Path
    poses: Path


def build_project(
    root: Path,
    *,
    extra_parameters: str = "",
    extra_videos: str = "",
) -> Project:
    """Write the scripted one-video project under ``root``."""

    root.mkdir(parents=True, exist_ok=True)
    shutil.copy(FIXTURES_DIR / "pushup-01.srt", root / "pushup-01.srt")
    shutil.copy(FIXTURES_DIR / "corpus_small.tsv", root / "corpus.tsv")
    poses = write_poses(scripted_stream(), root / "pushup-01.jsonl")
    config = root / "project.toml"
    config.write_text(
        f"""
[paths]
corpus = "corpus.tsv"
output_dir = "out"

[parameters]
cluster_k = 2
{extra_parameters}

[[videos]]
id = "pushup-01"
subtitles = "pushup-01.srt"
poses = "pushup-01.jsonl"
fps = 30
total_frames = {TOTAL_FRAMES}
{extra_videos}
""",
        encoding="utf-8",
    )
    return Project(root=root, config=config, output_dir=root / "out", poses=poses)


@pytest.fixture
def project(tmp_path: Path) -> Project:
    return build_project(tmp_path / "project")
