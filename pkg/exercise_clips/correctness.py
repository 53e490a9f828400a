"""Correct / incorrect classification of relevant sentences with word trigrams.

Each class gets its own trigram language model; a sentence goes to the class
with the higher ``log prior + sum(log P(w_i | w_{i-2}, w_{i-1}))``.

Details:

* Sentences are padded with two ``<s>`` symbols on the left and two
  ``</s>`` symbols on the right, so a sentence of ``n`` words contributes
  ``n + 2`` trigrams.
* The vocabulary is every training word plus ``<unk>`` and ``</s>``. At
  classification time any word outside the vocabulary becomes ``<unk>``.
* Probabilities use add-alpha smoothing at each order and stupid backoff
  between orders. The order is chosen once per position for both classes:
  the trigram estimate when the two-word context was seen by either class,
  otherwise ``0.4`` times the bigram estimate when the one-word context was
  seen by either class, otherwise ``0.16`` times the unigram estimate.
  Every order's estimate sums to one over the vocabulary for a given
  context; the backoff mixture does not.
* ``log_odds = score(incorrect) - score(correct)``. The label is
  ``incorrect`` only for strictly positive log-odds.

The model is plain counts and is persisted as versioned JSON.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from nltk.util import ngrams, pad_sequence
from pydantic import BaseModel, ValidationError

from .errors import CorpusError, ModelFormatError, TrainingError
from .io import atomic_write_text
from .models import Correctness, Relevance, Sentence
from .subtitles import normalize_words

logger = logging.getLogger(__name__)

BOS: str = "<s>"
EOS: str = "</s>"
UNK: str = "<unk>"
DEFAULT_ALPHA: float = 1.0
BACKOFF: float = 0.4
SCHEMA_VERSION: int = 1
CLASSES: tuple[Correctness, Correctness] = (Correctness.CORRECT, Correctness.INCORRECT)

Trigram = tuple[str, str, str]


@dataclass(frozen=True)
class CorpusEntry:
    text: str
    label: Correctness


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------


def parse_corpus(lines: Iterable[str]) -> list[CorpusEntry]:
    """Parse ``label<TAB>sentence`` lines; ``#`` comments and blanks are skipped."""

    entries: list[CorpusEntry] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        label_raw, sep, text = line.partition("\t")
        if not sep:
            raise CorpusError(line_no, "expected 'label<TAB>sentence'")
        label_raw = label_raw.strip().lower()
        if label_raw not in (Correctness.CORRECT.value, Correctness.INCORRECT.value):
            raise CorpusError(line_no, f"label must be 'correct' or 'incorrect', got {label_raw!r}")
        words = normalize_words(text)
        if not words:
            raise CorpusError(line_no, "sentence is empty")
        entries.append(CorpusEntry(" ".join(words), Correctness(label_raw)))
    return entries


def load_corpus(path: str | Path) -> list[CorpusEntry]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"corpus file not found: {p}")
    with p.open("r", encoding="utf-8") as handle:
        return parse_corpus(handle)


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassCounts:
    trigrams: Counter[Trigram]
    bigrams: Counter[tuple[str, str]]
    unigrams: Counter[str]
    contexts2: Counter[tuple[str, str]]
    contexts1: Counter[str]
    total: int
    sentences: int


@dataclass(frozen=True)
class TrigramModel:
    alpha: float
    vocabulary: frozenset[str]
    priors: dict[Correctness, float]
    counts: dict[Correctness, ClassCounts]

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def backoff_order(self, context: tuple[str, str]) -> int:
        """Highest n-gram order whose context was seen in training by any class."""

        w1, w2 = context
        if any(c.contexts2[(w1, w2)] for c in self.counts.values()):
            return 3
        if any(c.contexts1[w2] for c in self.counts.values()):
            return 2
        return 1

    def prob(
        self, label: Correctness, context: tuple[str, str], word: str, order: int | None = None
    ) -> float:
        """Smoothed ``P(word | context)`` under one class at a shared backoff order.

        ``order`` defaults to :meth:`backoff_order`, so every class is scored
        at the same order for the same context.
        """

        if order is None:
            order = self.backoff_order(context)
        c = self.counts[label]
        a, v = self.alpha, self.vocab_size
        w1, w2 = context
        if order == 3:
            return (c.trigrams[(w1, w2, word)] + a) / (c.contexts2[(w1, w2)] + a * v)
        if order == 2:
            return BACKOFF * (c.bigrams[(w2, word)] + a) / (c.contexts1[w2] + a * v)
        return BACKOFF * BACKOFF * (c.unigrams[word] + a) / (c.total + a * v)


def sentence_trigrams(words: Sequence[str]) -> list[Trigram]:
    padded = pad_sequence(
        words,
        n=3,
        pad_left=True,
        pad_right=True,
        left_pad_symbol=BOS,
        right_pad_symbol=EOS,
    )
    return list(ngrams(padded, 3))


def _count(sentences: Sequence[Sequence[str]]) -> ClassCounts:
    trigrams: Counter[Trigram] = Counter()
    for words in sentences:
        trigrams.update(sentence_trigrams(words))
    return _from_trigrams(trigrams, len(sentences))


def _from_trigrams(trigrams: Counter[Trigram], sentences: int) -> ClassCounts:
    """Derive the lower-order and context counts from trigram counts."""

    bigrams: Counter[tuple[str, str]] = Counter()
    unigrams: Counter[str] = Counter()
    contexts2: Counter[tuple[str, str]] = Counter()
    contexts1: Counter[str] = Counter()
    for (w1, w2, w3), n in trigrams.items():
        bigrams[(w2, w3)] += n
        unigrams[w3] += n
        contexts2[(w1, w2)] += n
        contexts1[w2] += n
    return ClassCounts(
        trigrams=trigrams,
        bigrams=bigrams,
        unigrams=unigrams,
        contexts2=contexts2,
        contexts1=contexts1,
        total=sum(trigrams.values()),
        sentences=sentences,
    )


def train(corpus: Sequence[CorpusEntry], alpha: float = DEFAULT_ALPHA) -> TrigramModel:
    """Count per-class trigrams over ``corpus``.

    Raises:
        TrainingError: the corpus is empty, a class is missing, or ``alpha``
            is not positive.
    """

    if not alpha > 0:
        raise TrainingError(f"alpha must be positive, got {alpha}")
    if not corpus:
        raise TrainingError("training corpus is empty")
    by_class: dict[Correctness, list[list[str]]] = {label: [] for label in CLASSES}
    for entry in corpus:
        by_class[entry.label].append(entry.text.split())
    missing = [label.value for label in CLASSES if not by_class[label]]
    if missing:
        raise TrainingError(f"training corpus has no {' or '.join(missing)} sentences")

    vocabulary = frozenset(
        {word for sentences in by_class.values() for words in sentences for word in words}
        | {UNK, EOS}
    )
    total = len(corpus)
    model = TrigramModel(
        alpha=float(alpha),
        vocabulary=vocabulary,
        priors={label: len(by_class[label]) / total for label in CLASSES},
        counts={label: _count(by_class[label]) for label in CLASSES},
    )
    logger.info(
        "trained trigram model: %d correct, %d incorrect, |V|=%d",
        len(by_class[Correctness.CORRECT]),
        len(by_class[Correctness.INCORRECT]),
        model.vocab_size,
    )
    return model


def _prepare(model: TrigramModel, text: str | Sequence[str]) -> list[str]:
    words = normalize_words(text) if isinstance(text, str) else list(text)
    return [w if w in model.vocabulary else UNK for w in words]


def score(model: TrigramModel, text: str | Sequence[str]) -> dict[Correctness, float]:
    """Per-class ``log prior + sum of log trigram probabilities``."""

    positions = [
        ((w1, w2), w3, model.backoff_order((w1, w2)))
        for w1, w2, w3 in sentence_trigrams(_prepare(model, text))
    ]
    return {
        label: math.log(model.priors[label])
        + sum(math.log(model.prob(label, ctx, word, order)) for ctx, word, order in positions)
        for label in CLASSES
    }


def classify_text(model: TrigramModel, text: str | Sequence[str]) -> tuple[Correctness, float]:
    """Return ``(label, log_odds)``; ties go to ``correct``."""

    scores = score(model, text)
    log_odds = scores[Correctness.INCORRECT] - scores[Correctness.CORRECT]
    label = Correctness.INCORRECT if log_odds > 0 else Correctness.CORRECT
    return label, log_odds


def classify(model: TrigramModel, sentence: Sentence) -> tuple[Correctness, float]:
    return classify_text(model, sentence.words)


def label_correctness(model: TrigramModel, sentences: Sequence[Sentence]) -> list[Sentence]:
    """Classify relevant sentences; others pass through unchanged."""

    labeled: list[Sentence] = []
    for sentence in sentences:
        if sentence.relevance is not Relevance.RELEVANT:
            labeled.append(sentence)
            continue
        label, log_odds = classify(model, sentence)
        labeled.append(dataclasses.replace(sentence, correctness=label, log_odds=log_odds))
    return labeled


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


class _ClassCountsFile(BaseModel):
    sentences: int
    trigrams: dict[str, int]


class _ModelFile(BaseModel):
    schema_version: Literal[1]
    alpha: float
    vocabulary: list[str]
    priors: dict[Correctness, float]
    classes: dict[Correctness, _ClassCountsFile]


def _model_to_file(model: TrigramModel) -> _ModelFile:
    return _ModelFile(
        schema_version=1,
        alpha=model.alpha,
        vocabulary=sorted(model.vocabulary),
        priors={label: model.priors[label] for label in CLASSES},
        classes={
            label: _ClassCountsFile(
                sentences=model.counts[label].sentences,
                trigrams={
                    " ".join(gram): n for gram, n in sorted(model.counts[label].trigrams.items())
                },
            )
            for label in CLASSES
        },
    )


def save_model(model: TrigramModel, path: str | Path) -> Path:
    """Atomically write ``model`` as versioned JSON."""

    document = _model_to_file(model).model_dump(mode="json")
    return atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> TrigramModel:
    """Read a model written by :func:`save_model`.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        ModelFormatError: the file is not valid JSON, has another schema
            version, or has malformed counts.
    """

    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"model file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{p}: invalid JSON: {exc}") from exc
    if isinstance(raw, dict) and raw.get("schema_version") != SCHEMA_VERSION:
        raise ModelFormatError(
            f"{p}: unsupported schema_version {raw.get('schema_version')!r}; "
            f"expected {SCHEMA_VERSION}"
        )
    try:
        document = _ModelFile.model_validate(raw)
    except ValidationError as exc:
        raise ModelFormatError(f"{p}: malformed model file: {exc}") from exc

    counts: dict[Correctness, ClassCounts] = {}
    for label in CLASSES:
        if label not in document.classes:
            raise ModelFormatError(f"{p}: missing counts for class {label.value!r}")
        stored = document.classes[label]
        trigrams: Counter[Trigram] = Counter()
        for key, n in stored.trigrams.items():
            parts = key.split(" ")
            if len(parts) != 3:
                raise ModelFormatError(f"{p}: malformed trigram key {key!r}")
            if n < 0:
                raise ModelFormatError(f"{p}: negative count for trigram {key!r}")
            trigrams[(parts[0], parts[1], parts[2])] = n
        counts[label] = _from_trigrams(trigrams, stored.sentences)
    for label in CLASSES:
        if label not in document.priors or not document.priors[label] > 0:
            raise ModelFormatError(f"{p}: prior for {label.value!r} must be positive")
    return TrigramModel(
        alpha=document.alpha,
        vocabulary=frozenset(document.vocabulary),
        priors={label: document.priors[label] for label in CLASSES},
        counts=counts,
    )
