"""Per-landmark visibility statistics for validating the relevance labels.

For every clip the mean visibility of each of the 33 landmarks is taken
over the clip's pose frames. Only clips where every landmark was seen at
some point (every per-clip mean strictly above zero) enter the comparison;
clips without a pose stream or without any pose frame are excluded too.
Every exclusion is returned with its reason.

Relevant clips (``relevant_correct`` and ``relevant_incorrect``) are then
compared against ``irrelevant`` clips landmark by landmark with a two-sided
Wilcoxon rank-sum / Mann-Whitney U test. ``delta_median`` is the relevant
median minus the irrelevant median, so negative values mean the landmark
is less visible in relevant clips.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy.stats import mannwhitneyu

from ..errors import AnalysisError
from ..models import ClipLabel, ClipRecord
from ..poses import LandmarkId, PoseStream

logger = logging.getLogger(__name__)

DEFAULT_SIGNIFICANCE: float = 0.05
EXACT_MAX_SAMPLES: int = 20
RELEVANT_LABELS: frozenset[ClipLabel] = frozenset(
    {ClipLabel.RELEVANT_CORRECT, ClipLabel.RELEVANT_INCORRECT}
)
LANDMARK_COLUMNS: tuple[str, ...] = tuple(lm.name.lower() for lm in LandmarkId)

RankSumMethod = Literal["auto", "exact", "asymptotic"]


@dataclass(frozen=True)
class ExcludedClip:
    clip_id: str
    reason: str


@dataclass(frozen=True)
class VisibilityTable:
    """Clip x landmark mean visibility.

    ``frame`` is indexed by ``clip_id`` and has ``video_id`` and ``label``
    columns followed by one column per landmark (lowercase landmark names
    in landmark order).
    """

    frame: pd.DataFrame
    excluded: list[ExcludedClip] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frame)


@dataclass(frozen=True)
class RankSumResult:
    landmark: LandmarkId
    delta_median: float
    p_value: float
    n_a: int
    n_b: int
    significant: bool

    def to_dict(self) -> dict[str, object]:
        return {
            "landmark": self.landmark.part.lower(),
            "side": self.landmark.side,
            "delta_median": self.delta_median,
            "p_value": self.p_value,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "significant": self.significant,
        }


def clip_landmark_visibility(
    clips: Iterable[ClipRecord], poses: Mapping[str, PoseStream]
) -> VisibilityTable:
    """Mean visibility per clip and landmark over the clip's present frames."""

    rows: list[dict[str, object]] = []
    index: list[str] = []
    excluded: list[ExcludedClip] = []
    for clip in clips:
        stream = poses.get(clip.video_id)
        if stream is None:
            excluded.append(ExcludedClip(clip.clip_id, "no pose stream for video"))
            continue
        _, landmarks = stream.window(clip.frame_start, clip.frame_end)
        if landmarks.shape[0] == 0:
            excluded.append(ExcludedClip(clip.clip_id, "no pose frames in clip"))
            continue
        means = landmarks[:, :, 3].mean(axis=0)
        if not (means > 0).all():
            excluded.append(ExcludedClip(clip.clip_id, "landmark never visible"))
            continue
        index.append(clip.clip_id)
        rows.append(
            {"video_id": clip.video_id, "label": clip.label.value}
            | dict(zip(LANDMARK_COLUMNS, means.tolist(), strict=True))
        )

    for item in excluded:
        logger.info("excluded clip %s from visibility analysis: %s", item.clip_id, item.reason)
    frame = pd.DataFrame(
        rows,
        index=pd.Index(index, name="clip_id"),
        columns=["video_id", "label", *LANDMARK_COLUMNS],
    )
    return VisibilityTable(frame=frame, excluded=excluded)


def rank_sum_test(
    group_a: Sequence[float] | npt.ArrayLike,
    group_b: Sequence[float] | npt.ArrayLike,
    method: RankSumMethod = "auto",
) -> tuple[float, float]:
    """Two-sided rank-sum test; returns ``(median(a) - median(b), p_value)``.

    ``auto`` uses the exact null distribution when the pooled sample has at
    most 20 values and no ties, and otherwise the normal approximation with
    tie and continuity correction.

    Raises:
        AnalysisError: either group is empty.
    """

    a = np.asarray(group_a, dtype=np.float64).reshape(-1)
    b = np.asarray(group_b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise AnalysisError(f"rank-sum test needs two non-empty groups, got {a.size} and {b.size}")
    delta = float(np.median(a) - np.median(b))
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return delta, 1.0
    if method == "auto":
        no_ties = np.unique(pooled).size == pooled.size
        method = "exact" if pooled.size <= EXACT_MAX_SAMPLES and no_ties else "asymptotic"
    result = mannwhitneyu(a, b, use_continuity=True, alternative="two-sided", method=method)
    return delta, float(np.clip(result.pvalue, 0.0, 1.0))


def compare_visibility(
    table: VisibilityTable, significance: float = DEFAULT_SIGNIFICANCE
) -> list[RankSumResult]:
    """Relevant vs irrelevant clips, one test per landmark, in landmark order.

    Raises:
        AnalysisError: either group has no clips.
    """

    frame = table.frame
    relevant = frame[frame["label"].isin([label.value for label in RELEVANT_LABELS])]
    irrelevant = frame[frame["label"] == ClipLabel.IRRELEVANT.value]
    if relevant.empty or irrelevant.empty:
        raise AnalysisError(
            f"visibility comparison needs relevant and irrelevant clips, "
            f"got {len(relevant)} and {len(irrelevant)}"
        )
    results: list[RankSumResult] = []
    for landmark, column in zip(LandmarkId, LANDMARK_COLUMNS, strict=True):
        delta, p_value = rank_sum_test(relevant[column].to_numpy(), irrelevant[column].to_numpy())
        results.append(
            RankSumResult(
                landmark=landmark,
                delta_median=delta,
                p_value=p_value,
                n_a=len(relevant),
                n_b=len(irrelevant),
                significant=p_value < significance,
            )
        )
    logger.info(
        "visibility: %d relevant vs %d irrelevant clips, %d significant landmarks",
        len(relevant),
        len(irrelevant),
        sum(r.significant for r in results),
    )
    return results


# ---------------------------------------------------------------------------
# Output tables
# ---------------------------------------------------------------------------


def visibility_frame(results: Sequence[RankSumResult]) -> pd.DataFrame:
    """CSV layout: ``landmark, side, delta_median, p_value, significant``."""

    rows = [
        {
            "landmark": r.landmark.part.lower(),
            "side": r.landmark.side,
            "delta_median": r.delta_median,
            "p_value": r.p_value,
            "significant": r.significant,
        }
        for r in results
    ]
    columns = ["landmark", "side", "delta_median", "p_value", "significant"]
    return pd.DataFrame(rows, columns=columns)


def visibility_csv(results: Sequence[RankSumResult]) -> str:
    """The comparison table as CSV text, floats to six decimals."""

    return str(visibility_frame(results).to_csv(index=False, float_format="%.6f"))


def _cell(value: float, bold: bool) -> str:
    text = f"{value:.3f}"
    return f"**{text}**" if bold else text


def visibility_markdown(results: Sequence[RankSumResult]) -> str:
    """Markdown table pairing left and right landmarks; significant cells in bold.

    The nose has no side and fills the left-hand columns.
    """

    by_part: dict[str, dict[str, RankSumResult]] = {}
    for r in results:
        by_part.setdefault(r.landmark.part, {})[r.landmark.side] = r
    lines = [
        "| landmark | left Δ median | left p | right Δ median | right p |",
        "|---|---:|---:|---:|---:|",
    ]
    for part, sides in by_part.items():
        cells: list[str] = []
        for side in ("left", "right"):
            r = sides.get(side) or (sides.get("center") if side == "left" else None)
            if r is None:
                cells += ["", ""]
            else:
                cells += [_cell(r.delta_median, r.significant), _cell(r.p_value, r.significant)]
        name = part.replace("_", " ").lower()
        lines.append(f"| {name} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def mean_visibility_by_label(table: VisibilityTable) -> pd.DataFrame:
    """Mean of the per-clip landmark means per label, plus an ``overall`` column."""

    frame = table.frame
    if frame.empty:
        empty = pd.Index([], name="label")
        return pd.DataFrame(columns=[*LANDMARK_COLUMNS, "overall"], index=empty)
    numeric = frame[list(LANDMARK_COLUMNS)].astype(np.float64)
    grouped = numeric.groupby(frame["label"], sort=True).mean()
    grouped["overall"] = grouped.mean(axis=1)
    return grouped
