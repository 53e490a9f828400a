"""Project configuration for ``exercise-clips pipeline run``.

A project is one TOML file::

    [paths]
    lexicon = "lexicon.toml"        # optional; packaged default otherwise
    corpus = "corpus.tsv"           # optional; packaged starter corpus otherwise
    model = "model.json"            # optional; trained from the corpus otherwise
    subtitle_dir = "subs"           # needed when [[videos]] is absent
    pose_dir = "poses"              # needed when [[videos]] is absent
    output_dir = "out"

    [parameters]
    visibility_threshold = 0.5
    merge_gap = 15
    ...

    [[videos]]                      # optional explicit video list
    id = "pushup-01"
    subtitles = "subs/pushup-01.srt"
    poses = "poses/pushup-01.jsonl"
    fps = 30
    total_frames = 18000            # optional; last pose frame + 1 otherwise

Relative paths resolve against the project file's directory. Every path
must exist when the file is loaded, except ``output_dir``, which is
created. Without ``[[videos]]`` the loader pairs ``<subtitle_dir>/<stem>``
(``.srt`` / ``.vtt``) with ``<pose_dir>/<stem>`` (``.jsonl`` / ``.csv``) and
uses ``parameters.default_fps``.

Two environment variables apply on top of the file: ``EXERCISE_CLIPS_LOG_LEVEL``
and ``EXERCISE_CLIPS_WORKERS``. They are read from an explicit mapping
(tests), else ``os.environ`` merged over a ``.env`` file in the current
working directory.

Parsing is fail-loud: an unknown key, a wrong type or an out-of-range
value raises :class:`ConfigError` quoting the key and the value, never a
silent fallback to the default.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
import tomllib
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .analysis.clustering import (
    DEFAULT_CLUSTER_K,
    DEFAULT_MAX_ITER,
    DEFAULT_SEED,
    DEFAULT_TOL,
    ClusterMode,
)
from .analysis.visibility import DEFAULT_SIGNIFICANCE
from .clips import DEFAULT_MERGE_GAP
from .correctness import DEFAULT_ALPHA
from .errors import PipelineError
from .relevance import DEFAULT_VISIBILITY_FRACTION, DEFAULT_VISIBILITY_THRESHOLD
from .sentences import (
    DEFAULT_MAX_DURATION_MS,
    DEFAULT_MAX_WORDS,
    DEFAULT_MIN_CHARS,
    DEFAULT_PAUSE_MS,
)

logger = logging.getLogger(__name__)

ENV_LOG_LEVEL: str = "EXERCISE_CLIPS_LOG_LEVEL"
ENV_WORKERS: str = "EXERCISE_CLIPS_WORKERS"
DEFAULT_LOG_LEVEL: str = "WARNING"
DEFAULT_WORKERS: int = 1
LOG_LEVELS: tuple[str, ...] = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
SUBTITLE_SUFFIXES: tuple[str, ...] = (".srt", ".vtt")
POSE_SUFFIXES: tuple[str, ...] = (".jsonl", ".csv")


class ConfigError(PipelineError):
    """Raised when the project file or an environment override is invalid."""

    category = "config_error"


@dataclass(frozen=True)
class Parameters:
    """Tunable knobs. ``k=None`` keeps the lexicon's own window size."""

    k: int | None = None
    visibility_threshold: float = DEFAULT_VISIBILITY_THRESHOLD
    visibility_fraction: float = DEFAULT_VISIBILITY_FRACTION
    min_chars: int = DEFAULT_MIN_CHARS
    max_words: int = DEFAULT_MAX_WORDS
    max_duration_ms: int = DEFAULT_MAX_DURATION_MS
    pause_ms: int = DEFAULT_PAUSE_MS
    merge_gap: int = DEFAULT_MERGE_GAP
    alpha: float = DEFAULT_ALPHA
    cluster_k: int = DEFAULT_CLUSTER_K
    cluster_mode: ClusterMode = ClusterMode.BOTH
    seed: int = DEFAULT_SEED
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    workers: int = DEFAULT_WORKERS
    significance: float = DEFAULT_SIGNIFICANCE
    default_fps: float | None = None


@dataclass(frozen=True)
class Paths:
    output_dir: Path
    lexicon: Path | None = None
    corpus: Path | None = None
    model: Path | None = None
    subtitle_dir: Path | None = None
    pose_dir: Path | None = None


@dataclass(frozen=True)
class VideoSpec:
    video_id: str
    subtitles: Path
    poses: Path
    fps: float
    total_frames: int | None = None


@dataclass(frozen=True)
class PipelineConfig:
    paths: Paths
    parameters: Parameters = field(default_factory=Parameters)
    videos: tuple[VideoSpec, ...] = ()
    log_level: str = DEFAULT_LOG_LEVEL
    source: Path | None = None


# ---------------------------------------------------------------------------
# Environment (same precedence as the rest of the toolchain)
# ---------------------------------------------------------------------------


def _read_env_file(path: Path) -> dict[str, str]:
    """Parse ``KEY=value`` lines; blanks and ``#`` comments are skipped."""

    result: dict[str, str] = {}
    for raw_line in path.read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        if key:
            result[key] = value.strip()
    return result


def _resolve_env(env_path: Path | None, env: Mapping[str, str] | None) -> dict[str, str]:
    """Explicit ``env`` wins outright; otherwise ``os.environ`` over the ``.env`` file."""

    if env is not None:
        return dict(env)
    if env_path is not None:
        file_values = _read_env_file(env_path)
    else:
        default_dotenv = Path.cwd() / ".env"
        file_values = _read_env_file(default_dotenv) if default_dotenv.exists() else {}
    merged = dict(file_values)
    merged.update(os.environ)
    return merged


def _load_int(env: Mapping[str, str], name: str, default: int) -> int:
    raw = env.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{name} is not a valid integer: {raw!r}") from exc


def resolve_log_level(
    env: Mapping[str, str] | None = None, default: str = DEFAULT_LOG_LEVEL
) -> str:
    """Level from ``EXERCISE_CLIPS_LOG_LEVEL`` (explicit mapping, process env, then ``.env``)."""

    raw = _resolve_env(None, env).get(ENV_LOG_LEVEL, "") or default
    level = raw.strip().upper()
    if level not in LOG_LEVELS:
        raise ConfigError(f"{ENV_LOG_LEVEL} must be one of {', '.join(LOG_LEVELS)}: {raw!r}")
    return level


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return (_is_int(value) or isinstance(value, float)) and math.isfinite(value)


# name -> (type check, range check, expectation shown in errors)
_RULES: dict[str, tuple[Callable[[Any], bool], Callable[[Any], bool], str]] = {
    "k": (_is_int, lambda v: v >= 1, "an integer >= 1"),
    "visibility_threshold": (_is_number, lambda v: 0 <= v <= 1, "a number in [0, 1]"),
    "visibility_fraction": (_is_number, lambda v: 0 < v <= 1, "a number in (0, 1]"),
    "min_chars": (_is_int, lambda v: v >= 1, "an integer >= 1"),
    "max_words": (_is_int, lambda v: v >= 1, "an integer >= 1"),
    "max_duration_ms": (_is_int, lambda v: v > 0, "an integer > 0"),
    "pause_ms": (_is_int, lambda v: v >= 0, "an integer >= 0"),
    "merge_gap": (_is_int, lambda v: v >= 0, "an integer >= 0"),
    "alpha": (_is_number, lambda v: v > 0, "a number > 0"),
    "cluster_k": (_is_int, lambda v: v >= 1, "an integer >= 1"),
    "seed": (_is_int, lambda v: v >= 0, "an integer >= 0"),
    "tol": (_is_number, lambda v: v > 0, "a number > 0"),
    "max_iter": (_is_int, lambda v: v >= 1, "an integer >= 1"),
    "workers": (_is_int, lambda v: v >= 1, "an integer >= 1"),
    "significance": (_is_number, lambda v: 0 < v < 1, "a number in (0, 1)"),
    "default_fps": (_is_number, lambda v: v > 0, "a number > 0"),
}


def _check(name: str, value: Any) -> Any:
    is_type, in_range, expectation = _RULES[name]
    if not is_type(value) or not in_range(value):
        raise ConfigError(f"parameters.{name} must be {expectation}, got {value!r}")
    return value


def parse_parameters(table: Mapping[str, Any]) -> Parameters:
    """Validate a ``[parameters]`` table; unset keys keep their defaults."""

    known = {f.name for f in fields(Parameters)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"unknown parameter(s): {', '.join(unknown)}")
    values: dict[str, Any] = {}
    for name, value in table.items():
        if name == "cluster_mode":
            try:
                values[name] = ClusterMode(value)
            except ValueError as exc:
                choices = ", ".join(m.value for m in ClusterMode)
                raise ConfigError(
                    f"parameters.cluster_mode must be one of {choices}, got {value!r}"
                ) from exc
            continue
        checked = _check(name, value)
        if name in {"visibility_threshold", "visibility_fraction", "alpha", "tol"}:
            checked = float(checked)
        values[name] = checked
    return Parameters(**values)


# ---------------------------------------------------------------------------
# Paths and videos
# ---------------------------------------------------------------------------


def _path(table: Mapping[str, Any], key: str, base: Path, *, where: str) -> Path | None:
    raw = table.get(key)
    if raw is None:
        return None
    if not isinstance(raw, str) or not raw:
        raise ConfigError(f"{where}.{key} must be a non-empty string, got {raw!r}")
    path = Path(raw).expanduser()
    return path if path.is_absolute() else base / path


def _existing(path: Path | None, label: str) -> Path | None:
    if path is not None and not path.exists():
        raise ConfigError(f"{label} does not exist: {path}")
    return path


def _parse_paths(table: Mapping[str, Any], base: Path) -> Paths:
    known = {f.name for f in fields(Paths)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"unknown [paths] key(s): {', '.join(unknown)}")
    output_dir = _path(table, "output_dir", base, where="paths")
    if output_dir is None:
        raise ConfigError("paths.output_dir is required")
    return Paths(
        output_dir=output_dir,
        **{
            key: _existing(_path(table, key, base, where="paths"), f"paths.{key}")
            for key in ("lexicon", "corpus", "model", "subtitle_dir", "pose_dir")
        },
    )


def _parse_video(entry: Any, index: int, base: Path, default_fps: float | None) -> VideoSpec:
    where = f"videos[{index}]"
    if not isinstance(entry, Mapping):
        raise ConfigError(f"{where} must be a table")
    video_id = entry.get("id")
    if not isinstance(video_id, str) or not video_id or "/" in video_id:
        raise ConfigError(f"{where}.id must be a non-empty name without '/', got {video_id!r}")
    subtitles = _existing(_path(entry, "subtitles", base, where=where), f"{where}.subtitles")
    poses = _existing(_path(entry, "poses", base, where=where), f"{where}.poses")
    if subtitles is None or poses is None:
        raise ConfigError(f"{where} needs both 'subtitles' and 'poses'")
    fps = entry.get("fps", default_fps)
    if fps is None or not _is_number(fps) or not fps > 0:
        raise ConfigError(f"{where}.fps must be a number > 0, got {fps!r}")
    total = entry.get("total_frames")
    if total is not None and (not _is_int(total) or total < 0):
        raise ConfigError(f"{where}.total_frames must be an integer >= 0, got {total!r}")
    return VideoSpec(video_id, subtitles, poses, float(fps), total)


def discover_videos(subtitle_dir: Path, pose_dir: Path, fps: float) -> list[VideoSpec]:
    """Pair subtitle and pose files by stem; unpaired subtitles are skipped."""

    videos: list[VideoSpec] = []
    for subtitles in sorted(subtitle_dir.iterdir()):
        if subtitles.suffix.lower() not in SUBTITLE_SUFFIXES:
            continue
        pose = next(
            (
                candidate
                for candidate in (pose_dir / f"{subtitles.stem}{s}" for s in POSE_SUFFIXES)
                if candidate.exists()
            ),
            None,
        )
        if pose is None:
            logger.warning("no pose file for %s in %s; skipped", subtitles.name, pose_dir)
            continue
        videos.append(VideoSpec(subtitles.stem, subtitles, pose, fps))
    return videos


def build_config(
    document: Mapping[str, Any],
    base_dir: Path,
    env: Mapping[str, str] | None = None,
    *,
    source: Path | None = None,
) -> PipelineConfig:
    """Validate a parsed project document. ``env`` overrides as in :func:`load_config`."""

    unknown = sorted(set(document) - {"paths", "parameters", "videos"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    paths_table = document.get("paths", {})
    params_table = document.get("parameters", {})
    if not isinstance(paths_table, Mapping) or not isinstance(params_table, Mapping):
        raise ConfigError("[paths] and [parameters] must be tables")
    paths = _parse_paths(paths_table, base_dir)
    parameters = parse_parameters(params_table)

    resolved = dict(env) if env is not None else {}
    workers = _load_int(resolved, ENV_WORKERS, parameters.workers)
    if workers < 1:
        raise ConfigError(f"{ENV_WORKERS} must be >= 1, got {workers}")
    if workers != parameters.workers:
        parameters = dataclasses.replace(parameters, workers=workers)

    raw_videos = document.get("videos")
    if raw_videos is not None:
        if not isinstance(raw_videos, list):
            raise ConfigError("[[videos]] must be an array of tables")
        videos = [
            _parse_video(entry, i, base_dir, parameters.default_fps)
            for i, entry in enumerate(raw_videos)
        ]
    elif paths.subtitle_dir is not None and paths.pose_dir is not None:
        if parameters.default_fps is None:
            raise ConfigError("parameters.default_fps is required when videos are discovered")
        videos = discover_videos(paths.subtitle_dir, paths.pose_dir, parameters.default_fps)
    else:
        raise ConfigError("either [[videos]] or paths.subtitle_dir and paths.pose_dir is required")

    ids = [v.video_id for v in videos]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise ConfigError(f"duplicate video id(s): {', '.join(duplicates)}")

    paths.output_dir.mkdir(parents=True, exist_ok=True)
    return PipelineConfig(
        paths=paths,
        parameters=parameters,
        videos=tuple(sorted(videos, key=lambda v: v.video_id)),
        log_level=resolve_log_level(resolved),
        source=source,
    )


def load_config(
    path: str | Path,
    env: Mapping[str, str] | None = None,
    env_path: Path | None = None,
) -> PipelineConfig:
    """Load and validate a project file.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        ConfigError: the file is not valid TOML or any value is invalid.
    """

    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"project file not found: {p}")
    try:
        document = tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: invalid TOML: {exc}") from exc
    return build_config(
        document, p.resolve().parent, _resolve_env(env_path, env), source=p.resolve()
    )
