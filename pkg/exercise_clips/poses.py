"""Pose landmark streams: loading, validation, visibility and frame mapping.

Input is one record per frame with the 33 full-body landmarks in the usual
33-keypoint order, each as ``x, y, z, visibility``. Two layouts are read:

* JSON Lines: ``{"frame": 12, "landmarks": [[x, y, z, v], ... 33 entries]}``
* CSV: 133 columns, ``frame`` followed by ``x_i, y_i, z_i, v_i`` for
  landmarks 0..32. A header row is detected and skipped.

Validation is strict: a frame with a landmark count other than 33, a
visibility outside ``[0, 1]``, a non-finite number, or a frame index that
does not strictly increase raises :class:`PoseValidationError` naming the
frame. Missing frames are allowed; they are logged as gaps and treated as
failing by the visibility gate.

A :class:`PoseStream` keeps the data as two numpy arrays (frame indices and
an ``(N, 33, 4)`` landmark block) and never mutates them after load.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import PoseValidationError
from .io import atomic_write_text, dumps_record, iter_jsonl

logger = logging.getLogger(__name__)

N_LANDMARKS: int = 33
N_CSV_COLUMNS: int = 1 + N_LANDMARKS * 4


class LandmarkId(IntEnum):
    NOSE = 0
    LEFT_EYE_INNER = 1
    LEFT_EYE = 2
    LEFT_EYE_OUTER = 3
    RIGHT_EYE_INNER = 4
    RIGHT_EYE = 5
    RIGHT_EYE_OUTER = 6
    LEFT_EAR = 7
    RIGHT_EAR = 8
    LEFT_MOUTH = 9
    RIGHT_MOUTH = 10
    LEFT_SHOULDER = 11
    RIGHT_SHOULDER = 12
    LEFT_ELBOW = 13
    RIGHT_ELBOW = 14
    LEFT_WRIST = 15
    RIGHT_WRIST = 16
    LEFT_PINKY = 17
    RIGHT_PINKY = 18
    LEFT_INDEX = 19
    RIGHT_INDEX = 20
    LEFT_THUMB = 21
    RIGHT_THUMB = 22
    LEFT_HIP = 23
    RIGHT_HIP = 24
    LEFT_KNEE = 25
    RIGHT_KNEE = 26
    LEFT_ANKLE = 27
    RIGHT_ANKLE = 28
    LEFT_HEEL = 29
    RIGHT_HEEL = 30
    LEFT_FOOT_INDEX = 31
    RIGHT_FOOT_INDEX = 32

    @property
    def side(self) -> str:
        """``"left"``, ``"right"`` or ``"center"`` (the nose)."""

        if self.name.startswith("LEFT_"):
            return "left"
        if self.name.startswith("RIGHT_"):
            return "right"
        return "center"

    @property
    def part(self) -> str:
        """Landmark name without its side, e.g. ``"ANKLE"``."""

        return self.name.removeprefix("LEFT_").removeprefix("RIGHT_")


@dataclass(frozen=True, eq=False)
class PoseFrame:
    """One frame: ``landmarks`` is a ``(33, 4)`` array of x, y, z, visibility."""

    frame_index: int
    landmarks: npt.NDArray[np.float64]

    @property
    def visibility(self) -> npt.NDArray[np.float64]:
        return self.landmarks[:, 3]


class _PoseRecord(BaseModel):
    model_config = ConfigDict(extra="ignore")

    frame: int
    landmarks: list[list[float]]


@dataclass(frozen=True, eq=False)
class PoseStream:
    """Validated frames of one video, ordered by strictly increasing index."""

    video_id: str
    fps: float
    frame_indices: npt.NDArray[np.int64]
    landmarks: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        if not self.fps > 0:
            raise PoseValidationError(f"fps must be positive, got {self.fps}")
        self.frame_indices.setflags(write=False)
        self.landmarks.setflags(write=False)

    def __len__(self) -> int:
        return int(self.frame_indices.shape[0])

    def __iter__(self) -> Iterator[PoseFrame]:
        for i in range(len(self)):
            yield PoseFrame(int(self.frame_indices[i]), self.landmarks[i])

    @property
    def duration_s(self) -> float:
        """Seconds covered from frame 0 through the last frame."""

        if len(self) == 0:
            return 0.0
        return (int(self.frame_indices[-1]) + 1) / self.fps

    def gaps(self) -> list[tuple[int, int]]:
        """``(last_present, next_present)`` pairs around each run of missing frames."""

        jumps = np.nonzero(np.diff(self.frame_indices) > 1)[0]
        return [(int(self.frame_indices[i]), int(self.frame_indices[i + 1])) for i in jumps]

    def window(
        self, start: int, stop: int
    ) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.float64]]:
        """Frame indices and landmarks for present frames in ``[start, stop)``."""

        lo = int(np.searchsorted(self.frame_indices, start, side="left"))
        hi = int(np.searchsorted(self.frame_indices, stop, side="left"))
        return self.frame_indices[lo:hi], self.landmarks[lo:hi]

    def frame_visibility(self) -> npt.NDArray[np.float64]:
        """Mean visibility over the 33 landmarks for every present frame."""

        return self.landmarks[:, :, 3].mean(axis=1)

    def same_as(self, other: PoseStream) -> bool:
        return (
            self.video_id == other.video_id
            and self.fps == other.fps
            and np.array_equal(self.frame_indices, other.frame_indices)
            and np.array_equal(self.landmarks, other.landmarks)
        )


# ---------------------------------------------------------------------------
# Validation and loading
# ---------------------------------------------------------------------------


def _validate_block(frames: npt.NDArray[np.int64], landmarks: npt.NDArray[np.float64]) -> None:
    for i in range(frames.shape[0]):
        frame = int(frames[i])
        if frame < 0:
            raise PoseValidationError("frame index is negative", frame_index=frame)
        if i and frame <= int(frames[i - 1]):
            raise PoseValidationError(
                f"frame index does not increase (previous {int(frames[i - 1])})",
                frame_index=frame,
            )
    finite = np.isfinite(landmarks).all(axis=(1, 2))
    if not finite.all():
        bad = int(frames[int(np.argmin(finite))])
        raise PoseValidationError("non-finite landmark value", frame_index=bad)
    vis = landmarks[:, :, 3]
    in_range = ((vis >= 0.0) & (vis <= 1.0)).all(axis=1)
    if not in_range.all():
        bad = int(frames[int(np.argmin(in_range))])
        raise PoseValidationError("visibility outside [0, 1]", frame_index=bad)


def make_stream(
    video_id: str,
    fps: float,
    frame_indices: npt.ArrayLike,
    landmarks: npt.ArrayLike,
) -> PoseStream:
    """Validate raw arrays and wrap them in a :class:`PoseStream`."""

    frames = np.array(frame_indices, dtype=np.int64).reshape(-1)
    block = np.array(landmarks, dtype=np.float64)
    if frames.shape[0] == 0:
        block = block.reshape(0, N_LANDMARKS, 4)
    if block.ndim != 3 or block.shape[1:] != (N_LANDMARKS, 4) or block.shape[0] != frames.shape[0]:
        raise PoseValidationError(
            f"expected landmarks of shape (N, {N_LANDMARKS}, 4), got {block.shape}"
        )
    _validate_block(frames, block)
    stream = PoseStream(video_id=video_id, fps=float(fps), frame_indices=frames, landmarks=block)
    for before, after in stream.gaps():
        logger.info("%s: frames %d..%d missing", video_id, before + 1, after - 1)
    return stream


def _load_jsonl(path: Path) -> tuple[list[int], list[list[list[float]]]]:
    frames: list[int] = []
    blocks: list[list[list[float]]] = []
    for line_no, raw in iter_jsonl(path):
        try:
            record = _PoseRecord.model_validate(raw)
        except ValidationError as exc:
            frame = raw.get("frame")
            raise PoseValidationError(
                f"{path}:{line_no}: malformed pose record: {exc.errors()[0]['msg']}",
                frame_index=frame if isinstance(frame, int) else None,
            ) from exc
        if len(record.landmarks) != N_LANDMARKS:
            raise PoseValidationError(
                f"expected {N_LANDMARKS} landmarks, got {len(record.landmarks)}",
                frame_index=record.frame,
            )
        if any(len(point) != 4 for point in record.landmarks):
            raise PoseValidationError(
                "every landmark needs x, y, z, visibility", frame_index=record.frame
            )
        frames.append(record.frame)
        blocks.append(record.landmarks)
    return frames, blocks


def _load_csv(path: Path) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.float64]]:
    table = pd.read_csv(path, header=None)
    if table.shape[1] != N_CSV_COLUMNS:
        raise PoseValidationError(
            f"{path}: expected {N_CSV_COLUMNS} columns (frame + 33 x 4), got {table.shape[1]}"
        )
    if len(table) and pd.to_numeric(table.iloc[0], errors="coerce").isna().any():
        table = table.iloc[1:]
    numeric = table.apply(pd.to_numeric, errors="coerce")
    bad_rows = numeric.isna().any(axis=1)
    if bad_rows.any():
        row = int(np.argmax(bad_rows.to_numpy()))
        frame = numeric.iloc[row, 0]
        raise PoseValidationError(
            f"{path}: non-numeric value in data row {row + 1}",
            frame_index=None if pd.isna(frame) else int(frame),
        )
    values = numeric.to_numpy(dtype=np.float64)
    frames = values[:, 0]
    if not np.array_equal(frames, np.floor(frames)):
        raise PoseValidationError(f"{path}: frame column must hold integers")
    return frames.astype(np.int64), values[:, 1:].reshape(-1, N_LANDMARKS, 4)


def load_poses(path: str | Path, *, fps: float, video_id: str | None = None) -> PoseStream:
    """Load and validate a pose file (``.jsonl`` / ``.json`` or ``.csv``).

    ``video_id`` defaults to the file stem.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        PoseValidationError: any record violates the format.
    """

    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"pose file not found: {p}")
    vid = video_id or p.stem
    if p.suffix.lower() == ".csv":
        frames, block = _load_csv(p)
        stream = make_stream(vid, fps, frames, block)
    else:
        frame_list, blocks = _load_jsonl(p)
        stream = make_stream(vid, fps, frame_list, np.asarray(blocks, dtype=np.float64))
    logger.info("loaded %d pose frames for %s from %s", len(stream), vid, p)
    return stream


def write_poses(stream: PoseStream, path: str | Path) -> Path:
    """Write ``stream`` as pose JSONL; :func:`load_poses` reads it back unchanged."""

    lines = [
        dumps_record({"frame": frame.frame_index, "landmarks": frame.landmarks.tolist()})
        for frame in stream
    ]
    return atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


# ---------------------------------------------------------------------------
# Frame helpers
# ---------------------------------------------------------------------------


def mean_visibility(frame: PoseFrame) -> float:
    """Arithmetic mean of the 33 visibility scores."""

    return float(np.mean(frame.visibility))


def time_to_frames(start_ms: int, end_ms: int, fps: float) -> range:
    """Half-open frame range ``[floor(start*fps/1000), floor(end*fps/1000))``."""

    if not fps > 0:
        raise ValueError(f"fps must be positive, got {fps}")
    if start_ms > end_ms:
        raise ValueError(f"start {start_ms} ms is after end {end_ms} ms")
    return range(math.floor(start_ms * fps / 1000), math.floor(end_ms * fps / 1000))
