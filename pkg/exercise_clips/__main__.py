"""Entry point for ``exercise-clips`` / ``python -m exercise_clips``.

Every pipeline stage has its own subcommand reading and writing the same
files the end-to-end run produces, so a stage can be re-run or inspected
on its own::

    ingest FILE --out tokens.jsonl
    lexicon check [FILE]
    segment coarse --tokens tokens.jsonl --out spans.json
    segment sentences --spans spans.json --out sentences.jsonl
    classify relevance --sentences sentences.jsonl [--poses poses.jsonl] --out labeled.jsonl
    correctness train --corpus corpus.tsv --out model.json
    correctness classify --model model.json --in labeled.jsonl [--out labeled.jsonl]
    summarize --in labeled.jsonl [--out labeled.jsonl]
    poses validate FILE [--fps 30]
    clips build --in labeled.jsonl --fps 30 --frames 18000 --out manifest.jsonl
    clips stats --in manifest.jsonl
    analyze visibility --manifest manifest.jsonl --poses poses.jsonl --out table.csv
    analyze cluster --manifest manifest.jsonl --poses poses.jsonl --out clusters.json
    pipeline run --config project.toml

Startup-error handling:
  * :class:`errors.PipelineError` (which includes :class:`config.ConfigError`),
    :class:`FileNotFoundError` and :class:`ValueError` are caught in
    :func:`main`. A single stderr line names the failing condition and the
    exit code is ``2``.
  * ``pipeline run`` exits ``1`` when every video failed.
  * :class:`KeyboardInterrupt` exits ``130``.
  * Other exceptions propagate (real bugs surface as tracebacks).

Verbosity comes from ``--log-level`` or ``EXERCISE_CLIPS_LOG_LEVEL``
(default ``WARNING``); log records go to stderr, results to stdout or the
``--out`` files.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from . import __version__
from .analysis.clustering import ClusterMode, collect_clip_frames
from .analysis.visibility import (
    clip_landmark_visibility,
    compare_visibility,
    visibility_csv,
    visibility_markdown,
)
from .clips import build_clips, summarize_dataset, write_manifest
from .coarse import mark_coarse
from .config import (
    LOG_LEVELS,
    ConfigError,
    Parameters,
    load_config,
    parse_parameters,
    resolve_log_level,
)
from .correctness import label_correctness, load_corpus, load_model, save_model, train
from .errors import PipelineError, UsageError
from .io import (
    atomic_write_text,
    load_manifest,
    load_sentences,
    load_spans_document,
    load_tokens,
    write_json,
    write_jsonl,
    write_spans_document,
)
from .lexicon import Lexicon, lexicon_counts, load_lexicon
from .models import ClipRecord, Correctness, Relevance, SpanLabel
from .pipeline import cluster_frames, render_models, run_pipeline
from .poses import PoseStream, load_poses
from .relevance import classify_relevance
from .sentences import RuleSegmenter, SentenceLimits, split_sentences
from .subtitles import FORMATS, read_subtitles, tokenize
from .summarizer import summarize_sentences

PROG = "exercise-clips"
DEFAULT_FPS: float = 30.0

Handler = Callable[[argparse.Namespace], int]


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_lexicon(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--lexicon",
        type=Path,
        default=None,
        help="Lexicon TOML file. Defaults to the packaged lexicon.",
    )
    parser.add_argument("--k", type=int, default=None, help="Override the lexicon's window size.")


def _add_poses(parser: argparse.ArgumentParser, *, required: bool) -> None:
    parser.add_argument(
        "--poses",
        action="append",
        default=[],
        required=required,
        metavar="[VIDEO_ID=]PATH",
        help=(
            "Pose file (JSONL or CSV). Repeat for several videos; the video id "
            "defaults to the file stem."
        ),
    )
    parser.add_argument(
        "--fps", type=float, default=DEFAULT_FPS, help=f"Frame rate (default {DEFAULT_FPS:g})."
    )


def _ingest_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("ingest", help="Parse a subtitle file into a token stream.")
    p.add_argument("file", type=Path)
    p.add_argument("--format", dest="fmt", choices=["auto", *FORMATS], default="auto")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=_cmd_ingest)


def _lexicon_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("lexicon", help="Lexicon tools.")
    actions = p.add_subparsers(dest="action", required=True)
    check = actions.add_parser("check", help="Validate a lexicon and print expansion counts.")
    check.add_argument("file", type=Path, nargs="?", default=None)
    check.set_defaults(handler=_cmd_lexicon_check)


def _segment_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("segment", help="Coarse segmentation and sentence splitting.")
    actions = p.add_subparsers(dest="action", required=True)

    coarse = actions.add_parser("coarse", help="Mark kept and rejected token spans.")
    coarse.add_argument("--tokens", type=Path, required=True)
    _add_lexicon(coarse)
    coarse.add_argument("--out", type=Path, required=True)
    coarse.set_defaults(handler=_cmd_segment_coarse)

    sentences = actions.add_parser("sentences", help="Split kept spans into sentences.")
    sentences.add_argument("--spans", type=Path, required=True)
    sentences.add_argument("--min-chars", type=int, default=None)
    sentences.add_argument("--max-words", type=int, default=None)
    sentences.add_argument("--max-duration-ms", type=int, default=None)
    sentences.add_argument("--pause-ms", type=int, default=None)
    sentences.add_argument("--out", type=Path, required=True)
    sentences.set_defaults(handler=_cmd_segment_sentences)


def _classify_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("classify", help="Sentence classification.")
    actions = p.add_subparsers(dest="action", required=True)
    relevance = actions.add_parser("relevance", help="Label sentences relevant or irrelevant.")
    relevance.add_argument("--sentences", type=Path, required=True)
    _add_lexicon(relevance)
    _add_poses(relevance, required=False)
    relevance.add_argument("--threshold", type=float, default=None)
    relevance.add_argument("--fraction", type=float, default=None)
    relevance.add_argument("--out", type=Path, required=True)
    relevance.set_defaults(handler=_cmd_classify_relevance)


def _correctness_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("correctness", help="Trigram correctness classifier.")
    actions = p.add_subparsers(dest="action", required=True)

    training = actions.add_parser("train", help="Train a model from a labeled corpus.")
    training.add_argument("--corpus", type=Path, required=True)
    training.add_argument("--alpha", type=float, default=None)
    training.add_argument("--out", type=Path, required=True)
    training.set_defaults(handler=_cmd_correctness_train)

    classify = actions.add_parser("classify", help="Label relevant sentences.")
    classify.add_argument("--model", type=Path, required=True)
    classify.add_argument("--in", dest="input", type=Path, required=True)
    classify.add_argument("--out", type=Path, default=None, help="Defaults to --in.")
    classify.set_defaults(handler=_cmd_correctness_classify)


def _summarize_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("summarize", help="Attach summary phrases to incorrect sentences.")
    p.add_argument("--in", dest="input", type=Path, required=True)
    _add_lexicon(p)
    p.add_argument("--out", type=Path, default=None, help="Defaults to --in.")
    p.set_defaults(handler=_cmd_summarize)


def _poses_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("poses", help="Pose file tools.")
    actions = p.add_subparsers(dest="action", required=True)
    validate = actions.add_parser("validate", help="Validate a pose file and print a summary.")
    validate.add_argument("file", type=Path)
    validate.add_argument("--fps", type=float, default=DEFAULT_FPS)
    validate.set_defaults(handler=_cmd_poses_validate)


def _clips_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("clips", help="Clip manifest tools.")
    actions = p.add_subparsers(dest="action", required=True)

    build = actions.add_parser("build", help="Turn labeled sentences into clips.")
    build.add_argument("--in", dest="input", type=Path, required=True)
    build.add_argument("--fps", type=float, required=True)
    build.add_argument("--frames", type=int, required=True, help="Total frames in the video.")
    build.add_argument("--video-id", default=None, help="Defaults to the input's parent dir name.")
    build.add_argument("--merge-gap", type=int, default=None)
    build.add_argument("--out", type=Path, required=True)
    build.set_defaults(handler=_cmd_clips_build)

    stats = actions.add_parser("stats", help="Per-label clip count and mean length.")
    stats.add_argument("--in", dest="input", type=Path, required=True)
    stats.set_defaults(handler=_cmd_clips_stats)


def _analyze_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("analyze", help="Label validation from pose data.")
    actions = p.add_subparsers(dest="action", required=True)

    visibility = actions.add_parser("visibility", help="Per-landmark rank-sum comparison.")
    visibility.add_argument("--manifest", type=Path, required=True)
    _add_poses(visibility, required=True)
    visibility.add_argument("--significance", type=float, default=None)
    visibility.add_argument("--out", type=Path, required=True, help="CSV table.")
    visibility.add_argument("--markdown", type=Path, default=None, help="Also write a table.")
    visibility.set_defaults(handler=_cmd_analyze_visibility)

    cluster = actions.add_parser("cluster", help="k-means over normalized pose frames.")
    cluster.add_argument("--manifest", type=Path, required=True)
    _add_poses(cluster, required=True)
    cluster.add_argument(
        "--mode", choices=[m.value for m in ClusterMode], default=ClusterMode.COMBINED.value
    )
    cluster.add_argument("--k", type=int, default=None)
    cluster.add_argument("--seed", type=int, default=None)
    cluster.add_argument("--max-iter", type=int, default=None)
    cluster.add_argument("--tol", type=float, default=None)
    cluster.add_argument("--out", type=Path, required=True)
    cluster.add_argument("--render-dir", type=Path, default=None)
    cluster.set_defaults(handler=_cmd_analyze_cluster)


def _pipeline_parser(sub: argparse._SubParsersAction) -> None:  # type: ignore[type-arg]
    p = sub.add_parser("pipeline", help="End-to-end run.")
    actions = p.add_subparsers(dest="action", required=True)
    run = actions.add_parser("run", help="Run every stage over a project.")
    run.add_argument("--config", type=Path, required=True)
    progress = run.add_mutually_exclusive_group()
    progress.add_argument("--progress", dest="progress", action="store_true", default=None)
    progress.add_argument("--no-progress", dest="progress", action="store_false")
    run.set_defaults(handler=_cmd_pipeline_run)


def _parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Turn exercise-video subtitles and pose streams into labeled clips.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        default=None,
        help="Overrides EXERCISE_CLIPS_LOG_LEVEL (default WARNING).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for register in (
        _ingest_parser,
        _lexicon_parser,
        _segment_parser,
        _classify_parser,
        _correctness_parser,
        _summarize_parser,
        _poses_parser,
        _clips_parser,
        _analyze_parser,
        _pipeline_parser,
    ):
        register(sub)
    return parser.parse_args(argv)


def _configure_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    package = logging.getLogger("exercise_clips")
    package.handlers[:] = [handler]
    package.setLevel(level)
    package.propagate = False


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _lexicon(args: argparse.Namespace) -> Lexicon:
    lexicon = load_lexicon(args.lexicon)
    if args.k is not None:
        if args.k < 1:
            raise UsageError(f"--k must be >= 1, got {args.k}")
        lexicon = dataclasses.replace(lexicon, k=args.k)
    return lexicon


def _parameters(**overrides: object) -> Parameters:
    """Validated parameters from the flags that were given."""

    return parse_parameters({k: v for k, v in overrides.items() if v is not None})


def _pose_specs(values: Sequence[str]) -> list[tuple[str | None, Path]]:
    specs: list[tuple[str | None, Path]] = []
    for value in values:
        video_id, sep, path = value.partition("=")
        if sep and video_id and path:
            specs.append((video_id, Path(path)))
        else:
            specs.append((None, Path(value)))
    return specs


def _load_pose_map(values: Sequence[str], fps: float) -> dict[str, PoseStream]:
    streams: dict[str, PoseStream] = {}
    for video_id, path in _pose_specs(values):
        stream = load_poses(path, fps=fps, video_id=video_id)
        if stream.video_id in streams:
            raise UsageError(f"two pose files for video {stream.video_id!r}")
        streams[stream.video_id] = stream
    return streams


def _manifest_poses(
    args: argparse.Namespace,
) -> tuple[list[ClipRecord], dict[str, PoseStream]]:
    clips = load_manifest(args.manifest)
    poses = _load_pose_map(args.poses, args.fps)
    # A single pose file serves a single-video manifest whatever its stem.
    video_ids = {clip.video_id for clip in clips}
    if len(poses) == 1 and len(video_ids) == 1:
        ((only, stream),) = poses.items()
        (wanted,) = video_ids
        if only != wanted:
            poses = {wanted: dataclasses.replace(stream, video_id=wanted)}
    return clips, poses


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace) -> int:
    tokens = tokenize(read_subtitles(args.file, args.fmt))
    write_jsonl(args.out, (t.to_dict() for t in tokens))
    print(f"{len(tokens)} tokens -> {args.out}")
    return 0


def _cmd_lexicon_check(args: argparse.Namespace) -> int:
    lexicon = load_lexicon(args.file)
    print(f"lexicon: {args.file or '(packaged default)'}")
    print(f"  {'k':<22}: {lexicon.k}")
    for name, (entries, variants) in lexicon_counts(lexicon).items():
        print(f"  {name:<22}: {entries} entries, {variants} variants")
    return 0


def _cmd_segment_coarse(args: argparse.Namespace) -> int:
    tokens = load_tokens(args.tokens)
    spans = mark_coarse(tokens, _lexicon(args))
    write_spans_document(args.out, tokens, spans)
    kept = sum(1 for s in spans if s.label is SpanLabel.KEPT)
    print(f"{len(spans)} spans ({kept} kept) -> {args.out}")
    return 0


def _cmd_segment_sentences(args: argparse.Namespace) -> int:
    tokens, spans = load_spans_document(args.spans)
    parameters = _parameters(
        min_chars=args.min_chars,
        max_words=args.max_words,
        max_duration_ms=args.max_duration_ms,
        pause_ms=args.pause_ms,
    )
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
    write_jsonl(args.out, (s.to_dict() for s in sentences))
    print(f"{len(sentences)} sentences -> {args.out}")
    return 0


def _cmd_classify_relevance(args: argparse.Namespace) -> int:
    sentences = load_sentences(args.sentences)
    parameters = _parameters(
        visibility_threshold=args.threshold, visibility_fraction=args.fraction
    )
    poses: PoseStream | None = None
    if args.poses:
        if len(args.poses) > 1:
            raise UsageError("classify relevance takes one --poses file")
        ((_, stream),) = _load_pose_map(args.poses, args.fps).items()
        poses = stream
    labeled = classify_relevance(
        sentences,
        _lexicon(args),
        poses,
        threshold=parameters.visibility_threshold,
        fraction=parameters.visibility_fraction,
    )
    write_jsonl(args.out, (s.to_dict() for s in labeled))
    relevant = sum(1 for s in labeled if s.relevance is Relevance.RELEVANT)
    print(f"{relevant}/{len(labeled)} relevant -> {args.out}")
    return 0


def _cmd_correctness_train(args: argparse.Namespace) -> int:
    parameters = _parameters(alpha=args.alpha)
    model = train(load_corpus(args.corpus), alpha=parameters.alpha)
    save_model(model, args.out)
    sentences = {label.value: c.sentences for label, c in model.counts.items()}
    print(f"vocabulary {model.vocab_size}, sentences {sentences} -> {args.out}")
    return 0


def _cmd_correctness_classify(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    labeled = label_correctness(model, load_sentences(args.input))
    out = args.out or args.input
    write_jsonl(out, (s.to_dict() for s in labeled))
    incorrect = sum(1 for s in labeled if s.correctness is Correctness.INCORRECT)
    print(f"{incorrect} incorrect -> {out}")
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    labeled = summarize_sentences(load_sentences(args.input), _lexicon(args))
    out = args.out or args.input
    write_jsonl(out, (s.to_dict() for s in labeled))
    summarized = sum(1 for s in labeled if s.summary is not None)
    print(f"{summarized} summaries -> {out}")
    return 0


def _cmd_poses_validate(args: argparse.Namespace) -> int:
    stream = load_poses(args.file, fps=args.fps)
    visibility = stream.frame_visibility()
    mean = float(visibility.mean()) if len(stream) else 0.0
    print(f"pose file: {args.file}")
    print(f"  video_id        : {stream.video_id}")
    print(f"  frames          : {len(stream)}")
    print(f"  duration_s      : {stream.duration_s:.3f}")
    print(f"  gaps            : {len(stream.gaps())}")
    print(f"  mean_visibility : {mean:.4f}")
    return 0


def _cmd_clips_build(args: argparse.Namespace) -> int:
    parameters = _parameters(merge_gap=args.merge_gap)
    video_id = args.video_id or args.input.resolve().parent.name or "video"
    clips = build_clips(
        load_sentences(args.input),
        args.fps,
        args.frames,
        video_id=video_id,
        merge_gap=parameters.merge_gap,
    )
    write_manifest(clips, args.out)
    print(f"{len(clips)} clips -> {args.out}")
    return 0


def _cmd_clips_stats(args: argparse.Namespace) -> int:
    summary = summarize_dataset(load_manifest(args.input))
    print(summary.to_frame().to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return 0


def _cmd_analyze_visibility(args: argparse.Namespace) -> int:
    parameters = _parameters(significance=args.significance)
    clips, poses = _manifest_poses(args)
    table = clip_landmark_visibility(clips, poses)
    results = compare_visibility(table, parameters.significance)
    atomic_write_text(args.out, visibility_csv(results))
    if args.markdown is not None:
        atomic_write_text(args.markdown, visibility_markdown(results))
    significant = sum(r.significant for r in results)
    print(
        f"{len(table)} clips compared ({len(table.excluded)} excluded), "
        f"{significant} significant landmarks -> {args.out}"
    )
    return 0


def _cmd_analyze_cluster(args: argparse.Namespace) -> int:
    parameters = _parameters(
        cluster_mode=args.mode,
        cluster_k=args.k,
        seed=args.seed,
        max_iter=args.max_iter,
        tol=args.tol,
    )
    clips, poses = _manifest_poses(args)
    frames = collect_clip_frames(clips, poses)
    combined, per_class, document, warnings = cluster_frames(frames, parameters)
    for warning in warnings:
        print(f"{PROG}: warning: {warning}", file=sys.stderr)
    write_json(args.out, document)
    figures: list[Path] = []
    if args.render_dir is not None:
        figures = render_models(combined, per_class, args.render_dir)
    print(f"{len(frames)} frames clustered, {len(figures)} figures -> {args.out}")
    return 0


def _cmd_pipeline_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    report = run_pipeline(config, progress=args.progress)
    print(
        f"{len(report.succeeded)} videos ok, {len(report.failed)} failed, "
        f"report -> {config.paths.output_dir / 'report.json'}"
    )
    for failed in report.failed:
        if failed.failure is not None:
            print(
                f"  {failed.video_id}: {failed.failure.stage}: "
                f"{failed.failure.category}: {failed.failure.message}",
                file=sys.stderr,
            )
    return 1 if report.all_failed else 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    """Dispatch one subcommand. Return the process exit code."""

    args = _parse_args(argv)
    try:
        _configure_logging(args.log_level or resolve_log_level())
    except ConfigError as exc:
        print(f"{PROG}: configuration error: {exc}", file=sys.stderr)
        return 2

    handler: Handler = args.handler
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"{PROG}: configuration error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"{PROG}: {exc.category}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"{PROG}: missing file: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"{PROG}: invalid input: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
