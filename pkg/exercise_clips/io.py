"""Reading and writing the per-stage artifacts.

Every stage writes its output as JSON Lines (one record per line, UTF-8,
keys in the order ``to_dict`` emits them) so intermediate files are
inspectable and diffable, and every stage can be re-run from the previous
stage's file. The readers here are the inverse of the ``to_dict`` methods
in :mod:`exercise_clips.models`.

Loader contract (shared by all ``load_*`` functions):

* A missing file raises :class:`FileNotFoundError` with the path in the
  message.
* A line that is not valid JSON, or a record missing a required field,
  raises :class:`ValueError` naming the line number and the field.

Writes go through :func:`atomic_write_text`: temp file in the target
directory, ``flush`` + ``fsync``, then :func:`os.replace`, so a crashed run
never leaves a half-written artifact behind.
"""

from __future__ import annotations

import contextlib
import json
import os
import tempfile
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Any

from .models import (
    ClipLabel,
    ClipRecord,
    CoarseSpan,
    Correctness,
    Relevance,
    Sentence,
    SpanLabel,
    SummaryMethod,
    SummaryPhrase,
    Token,
)

_PathLike = str | Path


# ---------------------------------------------------------------------------
# Low-level helpers
# ---------------------------------------------------------------------------


def atomic_write_text(path: _PathLike, text: str) -> Path:
    """Write ``text`` to ``path`` atomically and return the final path."""

    final_path = Path(path)
    final_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(
        dir=str(final_path.parent),
        prefix=f".{final_path.name}.",
        suffix=".tmp",
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, final_path)
    except BaseException:
        with contextlib.suppress(OSError):
            Path(tmp_name).unlink(missing_ok=True)
        raise
    return final_path


def dumps_record(record: dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False)


def write_jsonl(path: _PathLike, records: Iterable[dict[str, Any]]) -> Path:
    """Write one JSON object per line."""

    lines = [dumps_record(record) for record in records]
    text = "\n".join(lines) + ("\n" if lines else "")
    return atomic_write_text(path, text)


def write_json(path: _PathLike, document: Any) -> Path:
    return atomic_write_text(path, json.dumps(document, ensure_ascii=False, indent=2) + "\n")


def iter_jsonl(path: _PathLike) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield ``(line_number, record)`` for every non-blank line of ``path``."""

    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"file not found: {p}")
    with p.open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{p}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise ValueError(f"{p}:{line_no}: expected a JSON object")
            yield line_no, record


def _require(record: dict[str, Any], key: str, where: str) -> Any:
    if key not in record:
        raise ValueError(f"{where}: missing field '{key}'")
    return record[key]


# ---------------------------------------------------------------------------
# Record reconstruction
# ---------------------------------------------------------------------------


def _dict_to_token(record: dict[str, Any], where: str) -> Token:
    return Token(
        text=str(_require(record, "text", where)),
        start_ms=int(_require(record, "start_ms", where)),
        end_ms=int(_require(record, "end_ms", where)),
        index=int(_require(record, "index", where)),
        punct=str(record.get("punct", "")),
    )


def _dict_to_span(record: dict[str, Any], where: str) -> CoarseSpan:
    label_raw = _require(record, "label", where)
    try:
        label = SpanLabel(label_raw)
    except ValueError as exc:
        raise ValueError(f"{where}: invalid span label {label_raw!r}") from exc
    return CoarseSpan(
        start_index=int(_require(record, "start_index", where)),
        end_index=int(_require(record, "end_index", where)),
        label=label,
    )


def _dict_to_summary(raw: Any, where: str) -> SummaryPhrase | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ValueError(f"{where}: field 'summary' must be an object or null")
    span = _require(raw, "source_span", where)
    if not isinstance(span, list) or len(span) != 2:
        raise ValueError(f"{where}: field 'summary.source_span' must be [start, end]")
    return SummaryPhrase(
        text=str(_require(raw, "text", where)),
        source_span=(int(span[0]), int(span[1])),
        method=SummaryMethod(_require(raw, "method", where)),
    )


def _dict_to_sentence(record: dict[str, Any], where: str) -> Sentence:
    try:
        relevance = Relevance(record.get("relevance", Relevance.UNSET.value))
        correctness = Correctness(record.get("correctness", Correctness.UNSET.value))
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from exc
    text = str(_require(record, "text", where))
    n_words = len(text.split(" "))
    token_start = int(record.get("token_start", 0))
    log_odds = record.get("log_odds")
    fraction = record.get("visible_fraction")
    return Sentence(
        id=int(_require(record, "id", where)),
        text=text,
        start_ms=int(_require(record, "start_ms", where)),
        end_ms=int(_require(record, "end_ms", where)),
        token_start=token_start,
        token_end=int(record.get("token_end", token_start + n_words)),
        relevance=relevance,
        correctness=correctness,
        summary=_dict_to_summary(record.get("summary"), where),
        log_odds=float(log_odds) if log_odds is not None else None,
        visible_fraction=float(fraction) if fraction is not None else None,
        flags=tuple(str(flag) for flag in record.get("flags", [])),
    )


def _dict_to_clip(record: dict[str, Any], where: str) -> ClipRecord:
    label_raw = _require(record, "label", where)
    try:
        label = ClipLabel(label_raw)
    except ValueError as exc:
        raise ValueError(f"{where}: invalid clip label {label_raw!r}") from exc
    summary = record.get("summary")
    return ClipRecord(
        clip_id=str(_require(record, "clip_id", where)),
        video_id=str(_require(record, "video_id", where)),
        label=label,
        frame_start=int(_require(record, "frame_start", where)),
        frame_end=int(_require(record, "frame_end", where)),
        source_sentence_ids=tuple(int(i) for i in record.get("source_sentence_ids", [])),
        summary=str(summary) if summary is not None else None,
    )


# ---------------------------------------------------------------------------
# Public loaders
# ---------------------------------------------------------------------------


def load_tokens(path: _PathLike) -> list[Token]:
    return [_dict_to_token(rec, f"{path}:{n}") for n, rec in iter_jsonl(path)]


def load_sentences(path: _PathLike) -> list[Sentence]:
    return [_dict_to_sentence(rec, f"{path}:{n}") for n, rec in iter_jsonl(path)]


def load_manifest(path: _PathLike) -> list[ClipRecord]:
    return [_dict_to_clip(rec, f"{path}:{n}") for n, rec in iter_jsonl(path)]


def write_spans_document(path: _PathLike, tokens: list[Token], spans: list[CoarseSpan]) -> Path:
    """Write ``spans.json``: the coarse spans plus the tokens they index.

    Embedding the tokens keeps the sentence stage runnable from this one
    file.
    """

    return write_json(
        path,
        {
            "tokens": [token.to_dict() for token in tokens],
            "spans": [span.to_dict() for span in spans],
        },
    )


def load_spans_document(path: _PathLike) -> tuple[list[Token], list[CoarseSpan]]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"spans file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"failed to parse JSON at {p}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{p}: expected a JSON object with 'tokens' and 'spans'")
    tokens_raw = _require(data, "tokens", str(p))
    spans_raw = _require(data, "spans", str(p))
    if not isinstance(tokens_raw, list) or not isinstance(spans_raw, list):
        raise ValueError(f"{p}: 'tokens' and 'spans' must be lists")
    tokens = [_dict_to_token(rec, f"{p}: tokens[{i}]") for i, rec in enumerate(tokens_raw)]
    spans = [_dict_to_span(rec, f"{p}: spans[{i}]") for i, rec in enumerate(spans_raw)]
    return tokens, spans
