"""End-to-end run over a project: every stage per video, then the dataset analysis.

Per video (``<output_dir>/<video_id>/``)::

    tokens.jsonl      subtitle ingest + tokenization
    spans.json        coarse kept / rejected spans (with the tokens)
    sentences.jsonl   sentence splitting
    labeled.jsonl     relevance, correctness and summaries
    manifest.jsonl    clips of this video

Dataset level (``<output_dir>/``)::

    model.json                 trigram model, when trained in this run
    manifest.jsonl             every clip, videos in id order
    stats.csv                  per-label clip count and mean length
    visibility.csv / .md       per-landmark rank-sum comparison
    visibility_by_label.csv    mean landmark visibility per clip label
    clusters.json              k-means results
    figures/*.svg              centroid stick figures
    report.json                per-video counts, timings, warnings, failures

A failing video is recorded in the report (stage, category, message) and
the run continues with the others. Videos run in a process pool when
``parameters.workers > 1``; results are collected in video-id order, so
every artifact except the timings in ``report.json`` is identical between
runs with the same inputs.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from collections.abc import Iterator, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field
from tqdm import tqdm

from .analysis.clustering import (
    ClassClusters,
    ClusterMode,
    ClusterModel,
    FrameSet,
    cluster_per_class,
    clusters_document,
    collect_clip_frames,
    kmeans,
)
from .analysis.render import render_centroid
from .analysis.visibility import (
    clip_landmark_visibility,
    compare_visibility,
    mean_visibility_by_label,
    visibility_csv,
    visibility_markdown,
)
from .clips import build_clips, summarize_dataset, write_manifest
from .coarse import mark_coarse
from .config import Parameters, PipelineConfig, VideoSpec
from .correctness import (
    TrigramModel,
    label_correctness,
    load_corpus,
    load_model,
    save_model,
    train,
)
from .errors import AnalysisError, PipelineError
from .io import atomic_write_text, write_json, write_jsonl, write_spans_document
from .lexicon import Lexicon, load_lexicon
from .models import ClipLabel, ClipRecord, Correctness, Relevance, SpanLabel
from .poses import PoseStream, load_poses, time_to_frames
from .relevance import classify_relevance
from .sentences import RuleSegmenter, SentenceLimits, split_sentences
from .subtitles import read_subtitles, tokenize
from .summarizer import summarize_sentences

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION: int = 1
_PACKAGE_LOGGER = "exercise_clips"


# ---------------------------------------------------------------------------
# Report schema
# ---------------------------------------------------------------------------


class StageFailure(BaseModel):
    stage: str
    category: str
    message: str


class VideoReport(BaseModel):
    video_id: str
    status: Literal["ok", "failed"]
    counts: dict[str, int] = Field(default_factory=dict)
    timings_s: dict[str, float] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)
    failure: StageFailure | None = None


class RunReport(BaseModel):
    """Machine-readable summary of one pipeline run (``report.json``)."""

    schema_version: int = REPORT_SCHEMA_VERSION
    videos: list[VideoReport] = Field(default_factory=list)
    dataset: dict[str, dict[str, float]] = Field(default_factory=dict)
    analysis: dict[str, Any] = Field(default_factory=dict)
    artifacts: dict[str, str] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)
    timings_s: dict[str, float] = Field(default_factory=dict)

    @property
    def succeeded(self) -> list[VideoReport]:
        return [v for v in self.videos if v.status == "ok"]

    @property
    def failed(self) -> list[VideoReport]:
        return [v for v in self.videos if v.status == "failed"]

    @property
    def all_failed(self) -> bool:
        return bool(self.videos) and not self.succeeded


# ---------------------------------------------------------------------------
# Per-video processing
# ---------------------------------------------------------------------------


class _WarningCollector(logging.Handler):
    def __init__(self) -> None:
        super().__init__(level=logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.messages.append(f"{record.levelname.lower()}: {record.getMessage()}")


@contextmanager
def _collect_warnings() -> Iterator[_WarningCollector]:
    collector = _WarningCollector()
    package_logger = logging.getLogger(_PACKAGE_LOGGER)
    package_logger.addHandler(collector)
    try:
        yield collector
    finally:
        package_logger.removeHandler(collector)


@dataclass(frozen=True)
class VideoResult:
    report: VideoReport
    clips: tuple[ClipRecord, ...] = ()
    poses: PoseStream | None = None


@dataclass
class _StageClock:
    timings: dict[str, float] = dataclasses.field(default_factory=dict)
    current: str = "setup"

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        self.current = name
        started = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - started, 6)


def _total_frames(spec: VideoSpec, poses: PoseStream, last_cue_end_ms: int) -> int:
    if spec.total_frames is not None:
        return spec.total_frames
    if len(poses):
        return int(poses.frame_indices[-1]) + 1
    return time_to_frames(0, last_cue_end_ms, spec.fps).stop


def process_video(
    spec: VideoSpec,
    lexicon: Lexicon,
    model: TrigramModel,
    parameters: Parameters,
    output_dir: Path,
) -> VideoResult:
    """Run every text and clip stage for one video and write its artifacts.

    Expected input failures are caught and returned in the report, so one
    bad video never stops the run.
    """

    out = output_dir / spec.video_id
    clock = _StageClock()
    counts: dict[str, int] = {}
    with _collect_warnings() as collector:
        try:
            with clock.stage("ingest"):
                cues = read_subtitles(spec.subtitles)
                tokens = tokenize(cues)
                write_jsonl(out / "tokens.jsonl", (t.to_dict() for t in tokens))
            counts["cues"] = len(cues)
            counts["tokens"] = len(tokens)

            with clock.stage("coarse"):
                spans = mark_coarse(tokens, lexicon)
                write_spans_document(out / "spans.json", tokens, spans)
            counts["rejected_tokens"] = sum(
                len(s) for s in spans if s.label is SpanLabel.REJECTED
            )

            with clock.stage("sentences"):
                sentences = split_sentences(
                    spans,
                    tokens,
                    RuleSegmenter(pause_ms=parameters.pause_ms),
                    SentenceLimits(
                        min_chars=parameters.min_chars,
                        max_words=parameters.max_words,
                        max_duration_ms=parameters.max_duration_ms,
                    ),
                )
                write_jsonl(out / "sentences.jsonl", (s.to_dict() for s in sentences))
            counts["sentences"] = len(sentences)

            with clock.stage("poses"):
                poses = load_poses(spec.poses, fps=spec.fps, video_id=spec.video_id)
            counts["pose_frames"] = len(poses)

            with clock.stage("relevance"):
                labeled = classify_relevance(
                    sentences,
                    lexicon,
                    poses,
                    threshold=parameters.visibility_threshold,
                    fraction=parameters.visibility_fraction,
                )
            counts["relevant"] = sum(1 for s in labeled if s.relevance is Relevance.RELEVANT)

            with clock.stage("correctness"):
                labeled = label_correctness(model, labeled)
            counts["incorrect"] = sum(
                1 for s in labeled if s.correctness is Correctness.INCORRECT
            )

            with clock.stage("summarize"):
                labeled = summarize_sentences(labeled, lexicon)
                write_jsonl(out / "labeled.jsonl", (s.to_dict() for s in labeled))
            counts["summarized"] = sum(1 for s in labeled if s.summary is not None)

            with clock.stage("clips"):
                last_end = cues[-1].end_ms if cues else 0
                clips = build_clips(
                    labeled,
                    spec.fps,
                    _total_frames(spec, poses, last_end),
                    video_id=spec.video_id,
                    merge_gap=parameters.merge_gap,
                )
                write_manifest(clips, out / "manifest.jsonl")
            counts["clips"] = len(clips)
        except (PipelineError, FileNotFoundError, ValueError, OSError) as exc:
            category = exc.category if isinstance(exc, PipelineError) else type(exc).__name__
            logger.error("%s failed at %s: %s", spec.video_id, clock.current, exc)
            report = VideoReport(
                video_id=spec.video_id,
                status="failed",
                counts=counts,
                timings_s=clock.timings,
                warnings=collector.messages,
                failure=StageFailure(stage=clock.current, category=category, message=str(exc)),
            )
            return VideoResult(report=report)

    report = VideoReport(
        video_id=spec.video_id,
        status="ok",
        counts=counts,
        timings_s=clock.timings,
        warnings=collector.messages,
    )
    return VideoResult(report=report, clips=tuple(clips), poses=poses)


def _process_args(args: tuple[VideoSpec, Lexicon, TrigramModel, Parameters, Path]) -> VideoResult:
    return process_video(*args)


# ---------------------------------------------------------------------------
# Shared resources
# ---------------------------------------------------------------------------


def prepare_lexicon(config: PipelineConfig) -> Lexicon:
    lexicon = load_lexicon(config.paths.lexicon)
    if config.parameters.k is not None:
        lexicon = dataclasses.replace(lexicon, k=config.parameters.k)
    return lexicon


def prepare_model(config: PipelineConfig) -> tuple[TrigramModel, Path | None]:
    """Load the configured model, or train one and save it under the output dir."""

    if config.paths.model is not None:
        return load_model(config.paths.model), None
    if config.paths.corpus is not None:
        corpus = load_corpus(config.paths.corpus)
    else:
        with resources.as_file(
            resources.files("exercise_clips.data").joinpath("corpus.tsv")
        ) as packaged:
            corpus = load_corpus(packaged)
    model = train(corpus, alpha=config.parameters.alpha)
    saved = save_model(model, config.paths.output_dir / "model.json")
    return model, saved


# ---------------------------------------------------------------------------
# Dataset analysis
# ---------------------------------------------------------------------------


def _rel(path: Path, root: Path) -> str:
    return path.relative_to(root).as_posix()


def _analyze_visibility(
    clips: Sequence[ClipRecord],
    poses: dict[str, PoseStream],
    parameters: Parameters,
    out: Path,
    report: RunReport,
) -> None:
    table = clip_landmark_visibility(clips, poses)
    report.analysis["visibility_excluded"] = [
        {"clip_id": e.clip_id, "reason": e.reason} for e in table.excluded
    ]
    by_label = mean_visibility_by_label(table)
    path = atomic_write_text(out / "visibility_by_label.csv", by_label.to_csv(float_format="%.6f"))
    report.artifacts["visibility_by_label"] = _rel(path, out)
    try:
        results = compare_visibility(table, parameters.significance)
    except AnalysisError as exc:
        logger.warning("visibility comparison skipped: %s", exc)
        report.warnings.append(f"visibility: {exc}")
        return
    csv_path = atomic_write_text(out / "visibility.csv", visibility_csv(results))
    md_path = atomic_write_text(out / "visibility.md", visibility_markdown(results))
    report.artifacts["visibility_csv"] = _rel(csv_path, out)
    report.artifacts["visibility_md"] = _rel(md_path, out)
    report.analysis["significant_landmarks"] = [
        r.landmark.name.lower() for r in results if r.significant
    ]


def render_models(
    combined: ClusterModel | None,
    per_class: Mapping[ClipLabel, ClassClusters],
    figures: Path,
) -> list[Path]:
    written: list[Path] = []
    if combined is not None:
        for j in range(combined.k):
            written.append(
                render_centroid(
                    combined.centroids[j], figures / f"combined_{j}.svg", f"combined cluster {j}"
                )
            )
    for label, result in per_class.items():
        for rank, cluster in enumerate(result.ranking, start=1):
            written.append(
                render_centroid(
                    result.model.centroids[cluster],
                    figures / f"{label.value}_rank{rank}.svg",
                    f"{label.value} cluster rank {rank}",
                )
            )
    return written


def cluster_frames(
    frames: FrameSet, parameters: Parameters
) -> tuple[ClusterModel | None, dict[ClipLabel, ClassClusters], dict[str, Any], list[str]]:
    """Run the clustering modes ``parameters.cluster_mode`` asks for.

    Returns the combined model (or None), the per-class results, the
    ``clusters.json`` document and the warnings raised along the way.
    """

    mode = parameters.cluster_mode
    combined: ClusterModel | None = None
    per_class: dict[ClipLabel, ClassClusters] = {}
    warnings: list[str] = []
    if mode in (ClusterMode.COMBINED, ClusterMode.BOTH):
        try:
            combined = kmeans(
                frames.features,
                parameters.cluster_k,
                seed=parameters.seed,
                max_iter=parameters.max_iter,
                tol=parameters.tol,
            )
        except AnalysisError as exc:
            logger.warning("combined clustering skipped: %s", exc)
            warnings.append(f"clustering: {exc}")
    if mode in (ClusterMode.PER_CLASS, ClusterMode.BOTH):
        per_class = cluster_per_class(
            frames,
            parameters.cluster_k,
            seed=parameters.seed,
            max_iter=parameters.max_iter,
            tol=parameters.tol,
        )
    document = clusters_document(
        frames, combined, per_class if mode is not ClusterMode.COMBINED else None
    )
    return combined, per_class, document, warnings


def _analyze_clusters(
    frames: FrameSet, parameters: Parameters, out: Path, report: RunReport
) -> None:
    combined, per_class, document, warnings = cluster_frames(frames, parameters)
    report.warnings.extend(warnings)
    path = write_json(out / "clusters.json", document)
    report.artifacts["clusters"] = _rel(path, out)
    figures = render_models(combined, per_class, out / "figures")
    if figures:
        report.artifacts["figures"] = "figures"
    report.analysis["figures"] = [_rel(p, out) for p in figures]
    if "combined" in document:
        report.analysis["top_cluster_per_class"] = document["combined"]["top_cluster_per_class"]


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def run_pipeline(config: PipelineConfig, *, progress: bool | None = None) -> RunReport:
    """Run every video, then the dataset-level analysis; write ``report.json``.

    ``progress=None`` shows the progress bar only on a terminal.
    """

    out = config.paths.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport()
    started = time.perf_counter()

    lexicon = prepare_lexicon(config)
    model, saved = prepare_model(config)
    if saved is not None:
        report.artifacts["model"] = _rel(saved, out)

    jobs = [(spec, lexicon, model, config.parameters, out) for spec in config.videos]
    results: list[VideoResult] = []
    bar_disabled = None if progress is None else not progress
    if config.parameters.workers > 1 and len(jobs) > 1:
        # Executor.map yields in submission order, which is video-id order.
        with ProcessPoolExecutor(max_workers=config.parameters.workers) as pool:
            for result in tqdm(
                pool.map(_process_args, jobs), total=len(jobs), desc="videos", disable=bar_disabled
            ):
                results.append(result)
    else:
        for job in tqdm(jobs, desc="videos", disable=bar_disabled):
            results.append(_process_args(job))
    report.timings_s["videos"] = round(time.perf_counter() - started, 6)

    report.videos = [r.report for r in results]
    clips = [clip for r in results for clip in r.clips]
    poses = {r.report.video_id: r.poses for r in results if r.poses is not None}
    manifest = write_manifest(clips, out / "manifest.jsonl")
    report.artifacts["manifest"] = _rel(manifest, out)
    summary = summarize_dataset(clips)
    stats = atomic_write_text(out / "stats.csv", summary.to_frame().to_csv(index=False))
    report.artifacts["stats"] = _rel(stats, out)
    report.dataset = summary.to_dict()

    if clips:
        analysis_started = time.perf_counter()
        _analyze_visibility(clips, poses, config.parameters, out, report)
        _analyze_clusters(collect_clip_frames(clips, poses), config.parameters, out, report)
        report.timings_s["analysis"] = round(time.perf_counter() - analysis_started, 6)

    for failed in report.failed:
        logger.warning(
            "video %s failed at %s: %s",
            failed.video_id,
            failed.failure.stage if failed.failure else "?",
            failed.failure.message if failed.failure else "",
        )
    report_path = out / "report.json"
    report.artifacts["report"] = _rel(report_path, out)
    write_json(report_path, report.model_dump(mode="json"))
    logger.info(
        "pipeline: %d videos ok, %d failed, %d clips",
        len(report.succeeded),
        len(report.failed),
        len(clips),
    )
    return report
