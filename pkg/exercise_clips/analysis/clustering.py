"""k-means over normalized pose frames.

Every pose frame is turned into a 99-value feature vector: the 33 landmark
``x, y, z`` coordinates, translated so the hip midpoint is the origin and
scaled so the hip-to-shoulder-midpoint distance is one. Frames whose torso
length is zero cannot be normalized and are skipped (and counted).

:func:`kmeans` seeds with k-means++ from a fixed seed and runs Lloyd
iterations until the largest centroid shift drops below ``tol`` with no
assignment change, or ``max_iter`` is reached. A cluster that loses all its
points is reseeded at the point farthest from every other centroid. The
assignment and update steps visit clusters in index order, so the result
is bitwise reproducible for a given input and seed.

Two modes share that routine: ``combined`` clusters all labeled frames
together and reports, for each clip label, the cluster holding most of
that label's frames; ``per-class`` clusters each label separately and ranks
the clusters by size.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
import numpy.typing as npt
from sklearn.cluster import kmeans_plusplus

from ..errors import AnalysisError, DegeneratePoseError
from ..models import ClipLabel, ClipRecord
from ..poses import LandmarkId, PoseFrame, PoseStream

logger = logging.getLogger(__name__)

DEFAULT_CLUSTER_K: int = 6
DEFAULT_SEED: int = 42
DEFAULT_MAX_ITER: int = 300
DEFAULT_TOL: float = 1e-6
MIN_TORSO: float = 1e-9
N_FEATURES: int = 99

FloatArray = npt.NDArray[np.float64]


class ClusterMode(StrEnum):
    COMBINED = "combined"
    PER_CLASS = "per-class"
    BOTH = "both"


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------


def normalize_pose(frame: PoseFrame | npt.ArrayLike) -> FloatArray:
    """Hip-centered, torso-scaled ``x, y, z`` of the 33 landmarks, flattened.

    Raises:
        DegeneratePoseError: the shoulder and hip midpoints coincide.
    """

    block = frame.landmarks if isinstance(frame, PoseFrame) else np.asarray(frame, np.float64)
    xyz = np.asarray(block, dtype=np.float64)[:, :3]
    hip = (xyz[LandmarkId.LEFT_HIP] + xyz[LandmarkId.RIGHT_HIP]) / 2.0
    shoulder = (xyz[LandmarkId.LEFT_SHOULDER] + xyz[LandmarkId.RIGHT_SHOULDER]) / 2.0
    torso = float(np.linalg.norm(shoulder - hip))
    if torso < MIN_TORSO:
        raise DegeneratePoseError(f"torso length {torso:.3g} is too small to normalize")
    return ((xyz - hip) / torso).reshape(-1)


@dataclass(frozen=True, eq=False)
class FrameSet:
    """Normalized features of the frames inside labeled clips.

    Row ``i`` of ``features`` came from frame ``frame_indices[i]`` of clip
    ``clip_ids[i]``, whose label is ``labels[i]``.
    """

    features: FloatArray
    labels: npt.NDArray[np.str_]
    clip_ids: npt.NDArray[np.str_]
    frame_indices: npt.NDArray[np.int64]
    skipped_degenerate: int = 0

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def for_label(self, label: ClipLabel) -> FrameSet:
        mask = self.labels == label.value
        return FrameSet(
            features=self.features[mask],
            labels=self.labels[mask],
            clip_ids=self.clip_ids[mask],
            frame_indices=self.frame_indices[mask],
        )


def collect_clip_frames(
    clips: Iterable[ClipRecord], poses: Mapping[str, PoseStream]
) -> FrameSet:
    """Normalize every present pose frame of every clip, in manifest order."""

    features: list[FloatArray] = []
    labels: list[str] = []
    clip_ids: list[str] = []
    frames: list[int] = []
    skipped = 0
    for clip in clips:
        stream = poses.get(clip.video_id)
        if stream is None:
            continue
        indices, landmarks = stream.window(clip.frame_start, clip.frame_end)
        for frame_index, block in zip(indices.tolist(), landmarks, strict=True):
            try:
                features.append(normalize_pose(block))
            except DegeneratePoseError:
                skipped += 1
                continue
            labels.append(clip.label.value)
            clip_ids.append(clip.clip_id)
            frames.append(frame_index)
    if skipped:
        logger.info("skipped %d degenerate pose frames", skipped)
    return FrameSet(
        features=np.array(features, dtype=np.float64).reshape(-1, N_FEATURES),
        labels=np.array(labels, dtype=np.str_),
        clip_ids=np.array(clip_ids, dtype=np.str_),
        frame_indices=np.array(frames, dtype=np.int64),
        skipped_degenerate=skipped,
    )


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    centroids: FloatArray
    assignments: npt.NDArray[np.int64]
    inertia: float
    seed: int
    n_iter: int
    inertia_history: tuple[float, ...] = field(default_factory=tuple)

    def sizes(self) -> npt.NDArray[np.int64]:
        return np.bincount(self.assignments, minlength=self.k).astype(np.int64)

    def same_as(self, other: ClusterModel) -> bool:
        return (
            self.k == other.k
            and self.seed == other.seed
            and self.n_iter == other.n_iter
            and self.inertia == other.inertia
            and np.array_equal(self.centroids, other.centroids)
            and np.array_equal(self.assignments, other.assignments)
        )


def _sq_distances(points: FloatArray, centroids: FloatArray) -> FloatArray:
    out = np.empty((points.shape[0], centroids.shape[0]), dtype=np.float64)
    for j in range(centroids.shape[0]):
        out[:, j] = ((points - centroids[j]) ** 2).sum(axis=1)
    return out


def assign(points: FloatArray, centroids: FloatArray) -> tuple[npt.NDArray[np.int64], float]:
    """Nearest-centroid labels (ties to the lower index) and their inertia."""

    dist = _sq_distances(points, centroids)
    labels = dist.argmin(axis=1).astype(np.int64)
    inertia = float(dist[np.arange(points.shape[0]), labels].sum())
    return labels, inertia


def _update(points: FloatArray, labels: npt.NDArray[np.int64], old: FloatArray) -> FloatArray:
    k = old.shape[0]
    new = old.copy()
    empty: list[int] = []
    for j in range(k):
        members = points[labels == j]
        if members.shape[0]:
            new[j] = members.mean(axis=0)
        else:
            empty.append(j)
    filled = [j for j in range(k) if j not in empty]
    for j in empty:
        far = int(_sq_distances(points, new[filled]).min(axis=1).argmax())
        logger.debug("cluster %d is empty; reseeding at point %d", j, far)
        new[j] = points[far]
        filled.append(j)
    return new


def kmeans(
    features: npt.ArrayLike,
    k: int,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> ClusterModel:
    """Seeded k-means++ / Lloyd clustering.

    Raises:
        AnalysisError: ``k < 1``, ``max_iter < 1``, or fewer than ``k``
            distinct feature vectors.
    """

    points = np.asarray(features, dtype=np.float64)
    if points.ndim != 2:
        raise AnalysisError(f"features must be a 2-D array, got shape {points.shape}")
    if k < 1:
        raise AnalysisError(f"k must be >= 1, got {k}")
    if max_iter < 1:
        raise AnalysisError(f"max_iter must be >= 1, got {max_iter}")
    distinct = np.unique(points, axis=0).shape[0] if points.shape[0] else 0
    if distinct < k:
        raise AnalysisError(f"k-means needs at least {k} distinct vectors, got {distinct}")

    centroids, _ = kmeans_plusplus(points, n_clusters=k, random_state=seed)
    centroids = np.asarray(centroids, dtype=np.float64)
    labels, inertia = assign(points, centroids)
    history = [inertia]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        updated = _update(points, labels, centroids)
        shift = float(np.sqrt(((updated - centroids) ** 2).sum(axis=1)).max())
        centroids = updated
        new_labels, inertia = assign(points, centroids)
        history.append(inertia)
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        if shift < tol and not changed:
            break
    logger.debug("k-means k=%d converged after %d iterations, inertia %.6g", k, n_iter, inertia)
    return ClusterModel(
        k=k,
        centroids=centroids,
        assignments=labels,
        inertia=inertia,
        seed=seed,
        n_iter=n_iter,
        inertia_history=tuple(history),
    )


# ---------------------------------------------------------------------------
# Label bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TopCluster:
    cluster: int
    fraction: float
    n_frames: int

    def to_dict(self) -> dict[str, Any]:
        return {"cluster": self.cluster, "fraction": self.fraction, "n_frames": self.n_frames}


def top_cluster_per_class(
    model: ClusterModel, frame_labels: Sequence[str] | npt.NDArray[np.str_]
) -> dict[ClipLabel, TopCluster]:
    """For each label, the cluster holding the largest share of its frames.

    Ties go to the lower cluster id. Labels without frames are left out.
    """

    labels = np.asarray(frame_labels, dtype=np.str_)
    if labels.shape[0] != model.assignments.shape[0]:
        raise AnalysisError(
            f"{labels.shape[0]} frame labels for {model.assignments.shape[0]} assignments"
        )
    top: dict[ClipLabel, TopCluster] = {}
    for label in ClipLabel:
        mask = labels == label.value
        n = int(mask.sum())
        if n == 0:
            logger.info("no frames labeled %s; omitted from the cluster summary", label.value)
            continue
        counts = np.bincount(model.assignments[mask], minlength=model.k)
        best = int(counts.argmax())
        top[label] = TopCluster(cluster=best, fraction=float(counts[best]) / n, n_frames=n)
    return top


@dataclass(frozen=True, eq=False)
class ClassClusters:
    """Per-class model with clusters ranked by size (largest first, then id)."""

    label: ClipLabel
    model: ClusterModel
    ranking: tuple[int, ...]

    def fractions(self) -> list[float]:
        sizes = self.model.sizes()
        total = int(sizes.sum())
        return [float(sizes[c]) / total for c in self.ranking]


def cluster_per_class(
    frames: FrameSet,
    k: int = DEFAULT_CLUSTER_K,
    seed: int = DEFAULT_SEED,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> dict[ClipLabel, ClassClusters]:
    """Cluster each label's frames on their own.

    A label with fewer than ``k`` distinct frames is skipped with a warning.
    """

    out: dict[ClipLabel, ClassClusters] = {}
    for label in ClipLabel:
        subset = frames.for_label(label)
        try:
            model = kmeans(subset.features, k, seed=seed, max_iter=max_iter, tol=tol)
        except AnalysisError as exc:
            logger.warning("per-class clustering skipped %s: %s", label.value, exc)
            continue
        sizes = model.sizes()
        ranking = tuple(sorted(range(k), key=lambda c: (-int(sizes[c]), c)))
        out[label] = ClassClusters(label=label, model=model, ranking=ranking)
    return out


def _model_dict(model: ClusterModel) -> dict[str, Any]:
    return {
        "k": model.k,
        "seed": model.seed,
        "n_iter": model.n_iter,
        "inertia": model.inertia,
        "sizes": model.sizes().tolist(),
        "centroids": model.centroids.tolist(),
    }


def clusters_document(
    frames: FrameSet,
    combined: ClusterModel | None = None,
    per_class: Mapping[ClipLabel, ClassClusters] | None = None,
) -> dict[str, Any]:
    """JSON-ready summary of a clustering run (``clusters.json``)."""

    document: dict[str, Any] = {
        "n_frames": len(frames),
        "skipped_degenerate": frames.skipped_degenerate,
        "frames_per_label": {
            label.value: int((frames.labels == label.value).sum()) for label in ClipLabel
        },
    }
    if combined is not None:
        document["combined"] = _model_dict(combined) | {
            "top_cluster_per_class": {
                label.value: top.to_dict()
                for label, top in top_cluster_per_class(combined, frames.labels).items()
            }
        }
    if per_class is not None:
        document["per_class"] = {
            label.value: _model_dict(result.model)
            | {"ranking": list(result.ranking), "fractions": result.fractions()}
            for label, result in per_class.items()
        }
    return document
