"""Transcript/summary corpus records and their line-delimited persistence.

A corpus file holds one JSON object per line with the required keys
``id``, ``transcript``, ``gt_summary`` and ``split``. Unknown keys are
kept and written back on save, and each loaded record remembers its raw
line so an unmodified corpus round-trips byte-identically (modulo the
trailing newline). Blank lines are tolerated and skipped.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

VALID_SPLITS = ("train", "validation", "test")
REQUIRED_KEYS = ("id", "transcript", "gt_summary", "split")


class CorpusError(ValueError):
    """Base class for corpus loading/validation failures."""


class CorpusFormatError(CorpusError):
    """A line could not be parsed into a well-formed record."""


class CorpusValidationError(CorpusError):
    """Records parsed but violate corpus invariants."""


def word_count(text: str) -> int:
    """Number of maximal whitespace-delimited tokens in ``text``."""
    return len(text.split())


@dataclass
class Utterance:
    """One corpus item: an id, its transcript, and the reference summary."""

    id: str
    transcript: str
    gt_summary: str
    split: str
    extra: dict = field(default_factory=dict)
    raw_line: str | None = field(default=None, compare=False, repr=False)

    def validate(self, line_no: int | None = None) -> None:
        where = f"line {line_no}: " if line_no is not None else ""
        for name, value in (("id", self.id), ("transcript", self.transcript),
                            ("gt_summary", self.gt_summary)):
            if not isinstance(value, str) or not value.strip():
                raise CorpusValidationError(f"{where}{name} must contain at least one word token")
        if self.split not in VALID_SPLITS:
            raise CorpusValidationError(
                f"{where}split must be one of {VALID_SPLITS}, got {self.split!r}")

    def to_record(self) -> dict:
        record = {"id": self.id, "transcript": self.transcript,
                  "gt_summary": self.gt_summary, "split": self.split}
        record.update(self.extra)
        return record

    def to_line(self) -> str:
        if self.raw_line is not None:
            return self.raw_line
        return json.dumps(self.to_record(), ensure_ascii=False)


@dataclass
class Corpus:
    """Ordered, immutable-by-convention collection of utterances."""

    items: list[Utterance] = field(default_factory=list)
    name: str = ""

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, index):
        return self.items[index]

    def by_id(self) -> dict[str, Utterance]:
        return {utt.id: utt for utt in self.items}


def parse_record(line: str, line_no: int) -> Utterance:
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"line {line_no}: invalid record ({exc.msg})") from exc
    if not isinstance(payload, dict):
        raise CorpusFormatError(f"line {line_no}: record must be an object")
    missing = [key for key in REQUIRED_KEYS if key not in payload]
    if missing:
        raise CorpusFormatError(f"line {line_no}: missing keys {missing}")
    extra = {k: v for k, v in payload.items() if k not in REQUIRED_KEYS}
    utt = Utterance(id=payload["id"], transcript=payload["transcript"],
                    gt_summary=payload["gt_summary"], split=payload["split"],
                    extra=extra, raw_line=line)
    utt.validate(line_no)
    return utt


def load_corpus(path: str | os.PathLike, expected_split: str | None = None) -> Corpus:
    """Load a corpus file, enforcing unique ids and (optionally) a split tag.

    Raises CorpusFormatError naming the offending line for malformed
    records, and CorpusValidationError for duplicate ids (both lines are
    named) or a split mismatch.
    """
    items: list[Utterance] = []
    seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            utt = parse_record(line, line_no)
            if utt.id in seen:
                raise CorpusValidationError(
                    f"duplicate id {utt.id!r} on lines {seen[utt.id]} and {line_no}")
            seen[utt.id] = line_no
            if expected_split is not None and utt.split != expected_split:
                raise CorpusValidationError(
                    f"line {line_no}: expected split {expected_split!r}, got {utt.split!r}")
            items.append(utt)
    return Corpus(items=items, name=os.path.basename(os.fspath(path)))


def save_corpus(corpus: Corpus, path: str | os.PathLike) -> None:
    """Write one record per line; load_corpus(save_corpus(c)) == c."""
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for utt in corpus:
            handle.write(utt.to_line())
            handle.write("\n")
