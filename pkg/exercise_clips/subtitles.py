"""Subtitle ingestion: SRT / WebVTT documents to cues to a timed token stream.

The parser is a small line-oriented state machine rather than a wrapper
around a subtitle library, because two behaviors are needed that the common
parsers do not expose: parse errors that carry the 1-based line number of the
offending timestamp, and roll-up deduplication of auto-generated captions.

Parsing rules:

* Line endings are normalized (CRLF / CR to LF) and a UTF-8 BOM is dropped.
* Blocks are separated by blank lines. In a block, the first line containing
  ``-->`` is the timing line; lines after it are the cue text. Lines before
  it (an SRT ordinal or a WebVTT cue identifier) are ignored.
* WebVTT ``WEBVTT`` headers and ``NOTE`` / ``STYLE`` / ``REGION`` blocks
  are skipped. Cue settings after the end timestamp are ignored.
* Markup (``<i>``, ``<c.color>``, ``<00:00:01.000>``, ``{\\an8}``) is removed
  and HTML entities are unescaped; whitespace is collapsed per line.
* Roll-up dedup: a text line that appears verbatim among the previous cue's
  lines is dropped from the current cue. A cue whose text becomes empty is
  dropped.
* Cues with ``start_ms >= end_ms`` are dropped with a warning. The remaining
  cues are sorted by start time (stable) and renumbered from 1.

Tokenization follows the lexical tokenizer rule: lowercase, split on
whitespace, strip leading and trailing non-word characters, drop empties.
Intra-word hyphens and apostrophes survive (``push-up`` stays one token).
"""

from __future__ import annotations

import html
import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from .errors import SubtitleParseError, UsageError
from .models import Cue, Token

logger = logging.getLogger(__name__)

SubtitleFormat = Literal["srt", "vtt"]
FORMATS: tuple[str, ...] = ("srt", "vtt")

_TIMESTAMP = r"(?:(\d+):)?(\d{1,2}):(\d{1,2})[,.](\d{1,3})"
_TIMING_RE = re.compile(rf"^\s*{_TIMESTAMP}\s*-->\s*{_TIMESTAMP}(?:\s+.*)?\s*$")
_TAG_RE = re.compile(r"<[^>]*>")
_ASS_OVERRIDE_RE = re.compile(r"\{\\[^}]*\}")
_SPACE_RE = re.compile(r"\s+")
_EDGE_RE = re.compile(r"^\W+|\W+$")
_TRAILING_RE = re.compile(r"\W+$")
_VTT_SKIP_PREFIXES = ("WEBVTT", "NOTE", "STYLE", "REGION")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Block:
    first_line: int
    lines: list[str]


def _split_blocks(document: str) -> list[_Block]:
    blocks: list[_Block] = []
    current: list[str] = []
    first = 0
    for line_no, line in enumerate(document.split("\n"), start=1):
        if line.strip() == "":
            if current:
                blocks.append(_Block(first, current))
                current = []
            continue
        if not current:
            first = line_no
        current.append(line)
    if current:
        blocks.append(_Block(first, current))
    return blocks


def _timestamp_ms(hours: str | None, minutes: str, seconds: str, millis: str, line: int) -> int:
    mins = int(minutes)
    secs = int(seconds)
    if mins >= 60 or secs >= 60:
        raise SubtitleParseError(line, f"timestamp field out of range: {minutes}:{seconds}")
    # Short fraction fields are right-padded: ",5" is 500 ms.
    ms = int(millis.ljust(3, "0"))
    return ((int(hours or 0) * 60 + mins) * 60 + secs) * 1000 + ms


def _parse_timing(line: str, line_no: int) -> tuple[int, int]:
    match = _TIMING_RE.match(line)
    if match is None:
        raise SubtitleParseError(line_no, f"malformed timestamp line: {line.strip()!r}")
    g = match.groups()
    start = _timestamp_ms(g[0], g[1], g[2], g[3], line_no)
    end = _timestamp_ms(g[4], g[5], g[6], g[7], line_no)
    return start, end


def clean_line(line: str) -> str:
    """Strip markup and entities from one caption line, collapse whitespace."""

    text = _TAG_RE.sub("", line)
    text = _ASS_OVERRIDE_RE.sub("", text)
    text = html.unescape(text)
    return _SPACE_RE.sub(" ", text).strip()


def parse_subtitles(document: str, fmt: str) -> list[Cue]:
    """Parse an SRT or WebVTT document into cues in temporal order.

    Raises:
        UsageError: ``fmt`` is not ``"srt"`` or ``"vtt"``.
        SubtitleParseError: a timing line is malformed, or a block has no
            timing line. ``err.line`` is the 1-based line number.
    """

    if fmt not in FORMATS:
        raise UsageError(f"unknown subtitle format {fmt!r}; expected one of {', '.join(FORMATS)}")

    text = document.replace("\r\n", "\n").replace("\r", "\n").lstrip("\ufeff")
    raw: list[tuple[int, int, list[str]]] = []

    for block in _split_blocks(text):
        head = block.lines[0].strip()
        if fmt == "vtt" and head.startswith(_VTT_SKIP_PREFIXES) and "-->" not in head:
            continue
        timing_at = next((i for i, line in enumerate(block.lines) if "-->" in line), None)
        if timing_at is None:
            raise SubtitleParseError(block.first_line, "block has no timestamp line")
        start, end = _parse_timing(block.lines[timing_at], block.first_line + timing_at)
        lines = [clean_line(line) for line in block.lines[timing_at + 1 :]]
        raw.append((start, end, [line for line in lines if line]))

    cues: list[tuple[int, int, str]] = []
    previous_lines: list[str] = []
    for start, end, lines in raw:
        kept = [line for line in lines if line not in previous_lines]
        previous_lines = lines
        if start >= end:
            logger.warning("dropping cue at %d ms: end %d ms is not after start", start, end)
            continue
        if not kept:
            logger.debug("dropping cue at %d ms: no text after roll-up dedup", start)
            continue
        cues.append((start, end, " ".join(kept)))

    cues.sort(key=lambda cue: cue[0])
    return [
        Cue(index=i, start_ms=start, end_ms=end, text=body)
        for i, (start, end, body) in enumerate(cues, start=1)
    ]


def detect_format(document: str, path: Path | None = None) -> SubtitleFormat:
    """Pick ``"vtt"`` for a ``WEBVTT`` header or ``.vtt`` suffix, else ``"srt"``."""

    if document.lstrip("\ufeff").lstrip().startswith("WEBVTT"):
        return "vtt"
    if path is not None and path.suffix.lower() == ".vtt":
        return "vtt"
    return "srt"


def read_subtitles(path: str | Path, fmt: str = "auto") -> list[Cue]:
    """Read and parse a subtitle file. ``fmt`` is ``auto``, ``srt`` or ``vtt``."""

    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"subtitle file not found: {p}")
    document = p.read_text(encoding="utf-8")
    resolved = detect_format(document, p) if fmt == "auto" else fmt
    cues = parse_subtitles(document, resolved)
    logger.info("parsed %d cues from %s (%s)", len(cues), p, resolved)
    return cues


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------


def _split_word(raw: str) -> tuple[str, str]:
    lowered = raw.lower()
    trailing = _TRAILING_RE.search(lowered)
    word = _EDGE_RE.sub("", lowered)
    return word, trailing.group(0) if trailing and word else ""


def normalize_words(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation, drop empties."""

    words = (_EDGE_RE.sub("", raw.lower()) for raw in text.split())
    return [word for word in words if word]


def normalize_text(text: str) -> str:
    return " ".join(normalize_words(text))


def tokenize(cues: Sequence[Cue]) -> list[Token]:
    """Turn cues into a token stream with linearly interpolated times.

    A cue with ``n`` tokens over ``[s, e)`` gives token ``j`` the interval
    ``[s + j*(e-s)//n, s + (j+1)*(e-s)//n)``, so each cue's tokens tile its
    interval exactly. Token indices run 0, 1, 2, ... across the stream.
    """

    tokens: list[Token] = []
    for cue in cues:
        parts = [_split_word(raw) for raw in cue.text.split()]
        parts = [(word, punct) for word, punct in parts if word]
        n = len(parts)
        span = cue.end_ms - cue.start_ms
        for j, (word, punct) in enumerate(parts):
            tokens.append(
                Token(
                    text=word,
                    start_ms=cue.start_ms + (j * span) // n,
                    end_ms=cue.start_ms + ((j + 1) * span) // n,
                    index=len(tokens),
                    punct=punct,
                )
            )
    return tokens
