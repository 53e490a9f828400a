"""Error hierarchy for the exercise-clips pipeline.

Every failure a stage can raise on bad input derives from
:class:`PipelineError`, which carries a stable ``category`` string next to
the human-readable message. The orchestrator copies the category into the
run report next to the failing stage. The CLI maps any :class:`PipelineError`
to exit code ``2``.

Categories:
  * ``"parse_error"``: a subtitle document could not be parsed.
  * ``"usage_error"``: the caller asked for something unsupported
    (unknown format tag, bad CLI combination).
  * ``"config_error"``: lexicon or project configuration is invalid.
  * ``"validation_error"``: a pose file violates the landmark record format.
  * ``"training_error"``: the correctness corpus or model file is unusable.
  * ``"analysis_error"``: a statistics or clustering precondition failed.

:class:`ConfigError` lives in :mod:`exercise_clips.config` next to the loader
that raises it.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for every expected pipeline failure.

    Attributes:
        category: Stable machine-readable category (see module docstring).
        message: Human-readable description. ``str(err)`` returns this string.
    """

    category: str = "pipeline_error"

    def __init__(self, message: str, *, category: str | None = None) -> None:
        super().__init__(message)
        if category is not None:
            self.category = category
        self.message = message


class SubtitleParseError(PipelineError):
    """Malformed subtitle document. ``line`` is 1-based."""

    category = "parse_error"

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class UsageError(PipelineError):
    """Unsupported request, e.g. an unknown subtitle format tag."""

    category = "usage_error"


class LexiconError(PipelineError):
    """Lexicon file is missing a set, has an empty set, or has collisions."""

    category = "config_error"


class PoseValidationError(PipelineError):
    """Pose record violates the 33-landmark format.

    ``frame_index`` is the offending frame number when one could be read,
    else ``None`` (e.g. a CSV with the wrong column count).
    """

    category = "validation_error"

    def __init__(self, message: str, *, frame_index: int | None = None) -> None:
        prefix = f"frame {frame_index}: " if frame_index is not None else ""
        super().__init__(f"{prefix}{message}")
        self.frame_index = frame_index


class CorpusError(PipelineError):
    """Correctness corpus line is malformed. ``line`` is 1-based."""

    category = "training_error"

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"corpus line {line}: {message}")
        self.line = line


class TrainingError(PipelineError):
    """Corpus is unusable for training (empty or a single class)."""

    category = "training_error"


class ModelFormatError(PipelineError):
    """Persisted trigram model is malformed or has an unknown schema version."""

    category = "training_error"


class AnalysisError(PipelineError):
    """A statistics or clustering precondition failed."""

    category = "analysis_error"


class DegeneratePoseError(AnalysisError):
    """Pose has zero torso length and cannot be normalized."""
