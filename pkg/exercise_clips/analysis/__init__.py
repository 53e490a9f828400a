"""Label validation from pose data.

``visibility`` compares per-landmark visibility between relevant and
irrelevant clips; ``clustering`` runs k-means over normalized poses;
``render`` draws cluster centroids as stick figures.
"""

from __future__ import annotations

from .clustering import (
    ClusterMode,
    ClusterModel,
    FrameSet,
    cluster_per_class,
    clusters_document,
    collect_clip_frames,
    kmeans,
    normalize_pose,
    top_cluster_per_class,
)
from .render import render_centroid
from .visibility import (
    RankSumResult,
    VisibilityTable,
    clip_landmark_visibility,
    compare_visibility,
    mean_visibility_by_label,
    rank_sum_test,
    visibility_csv,
    visibility_frame,
    visibility_markdown,
)

__all__ = [
    "ClusterMode",
    "ClusterModel",
    "FrameSet",
    "RankSumResult",
    "VisibilityTable",
    "clip_landmark_visibility",
    "cluster_per_class",
    "clusters_document",
    "collect_clip_frames",
    "compare_visibility",
    "kmeans",
    "mean_visibility_by_label",
    "normalize_pose",
    "rank_sum_test",
    "render_centroid",
    "top_cluster_per_class",
    "visibility_csv",
    "visibility_frame",
    "visibility_markdown",
]
