"""Blinded four-option pairwise validity evaluation.

Annotators see two summaries for a recording without source labels and pick
one of four options: only A is valid, only B is valid, both, or neither.
Side assignment (which of gt/aug lands on side A) is a seeded coin recorded
per item, so aggregation can un-blind the tallies. Validity per source is
the exclusive-valid count plus the both-valid count, with a 95% normal-
approximation interval half-width 1.96 * sqrt(p * (1 - p) / n).

Reports carry the proportion-scale half-width at 4 decimals (truncated, not
rounded, which is what the published arithmetic for the 51/92/104/53 tally
corresponds to) and percentages at 2 decimals; machine-readable output
keeps both scales plus the raw floats.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass, field
from enum import Enum

from .detrand import Substream

Z_95 = 1.96


class EvalOption(str, Enum):
    A_ONLY_VALID = "a_only_valid"
    B_ONLY_VALID = "b_only_valid"
    BOTH_VALID = "both_valid"
    NEITHER_VALID = "neither_valid"


class EvalError(ValueError):
    """Base class for evaluation protocol violations."""


class UnknownItemError(EvalError):
    """Response references an item or annotator that does not exist."""


class DuplicateResponseError(EvalError):
    """A second response for the same (item, annotator) pair."""


@dataclass(frozen=True)
class EvalItem:
    item_id: str
    utterance_id: str
    summary_a: str
    summary_b: str
    a_source: str  # "gt" | "aug"
    b_source: str
    side_flipped: bool

    def __post_init__(self):
        if self.a_source == self.b_source:
            raise EvalError("item sides must come from different sources")

    def to_record(self, annotator_id: str) -> dict:
        return {"annotator_id": annotator_id, "item_id": self.item_id,
                "utterance_id": self.utterance_id, "summary_a": self.summary_a,
                "summary_b": self.summary_b, "a_source": self.a_source,
                "b_source": self.b_source, "side_flipped": self.side_flipped}


@dataclass(frozen=True)
class EvalResponse:
    item_id: str
    annotator_id: str
    option: EvalOption
    submitted_at: str

    def to_record(self) -> dict:
        return {"item_id": self.item_id, "annotator_id": self.annotator_id,
                "option": self.option.value, "submitted_at": self.submitted_at}


@dataclass
class Assignment:
    annotator_id: str
    items: list[EvalItem] = field(default_factory=list)


def create_assignments(items: list[tuple[str, str, str]], n_annotators: int,
                       k_per_annotator: int, seed: int) -> list[Assignment]:
    """Assign each annotator k blinded pairs sampled without replacement.

    ``items`` holds (utterance_id, gt_text, aug_text) triples. Total planned
    responses is n_annotators * k_per_annotator. The canonical pair order is
    (gt, aug); a seeded per-item coin decides whether sides are flipped.
    """
    if n_annotators < 1 or k_per_annotator < 1:
        raise EvalError("annotator and item counts must be >= 1")
    if len(items) < k_per_annotator:
        raise EvalError(f"need at least {k_per_annotator} items, got {len(items)}")
    width = max(2, len(str(n_annotators)))
    q_width = max(2, len(str(k_per_annotator)))
    assignments = []
    for index in range(1, n_annotators + 1):
        annotator_id = f"a{index:0{width}d}"
        picker = Substream(seed, f"pick:{annotator_id}")
        flipper = Substream(seed, f"flip:{annotator_id}")
        chosen = picker.sample_indices(len(items), k_per_annotator)
        eval_items = []
        for q_number, item_index in enumerate(chosen, start=1):
            utterance_id, gt_text, aug_text = items[item_index]
            flipped = flipper.coin()
            summary_a, summary_b = (aug_text, gt_text) if flipped else (gt_text, aug_text)
            a_source, b_source = ("aug", "gt") if flipped else ("gt", "aug")
            eval_items.append(EvalItem(
                item_id=f"{annotator_id}-q{q_number:0{q_width}d}",
                utterance_id=utterance_id, summary_a=summary_a,
                summary_b=summary_b, a_source=a_source, b_source=b_source,
                side_flipped=flipped))
        assignments.append(Assignment(annotator_id=annotator_id, items=eval_items))
    return assignments


def save_assignments(assignments: list[Assignment], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for assignment in assignments:
            for item in assignment.items:
                handle.write(json.dumps(item.to_record(assignment.annotator_id),
                                        ensure_ascii=False))
                handle.write("\n")


def load_assignments(path: str | os.PathLike) -> list[Assignment]:
    by_annotator: dict[str, Assignment] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            annotator_id = record["annotator_id"]
            item = EvalItem(item_id=record["item_id"],
                            utterance_id=record["utterance_id"],
                            summary_a=record["summary_a"],
                            summary_b=record["summary_b"],
                            a_source=record["a_source"],
                            b_source=record["b_source"],
                            side_flipped=record["side_flipped"])
            by_annotator.setdefault(annotator_id,
                                    Assignment(annotator_id=annotator_id)).items.append(item)
    return list(by_annotator.values())


class ResponseStore:
    """Append-only response log; one JSON record per line, crash-safe."""

    def __init__(self, path: str | os.PathLike, assignments: list[Assignment]):
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        self._ownership: dict[str, str] = {}
        for assignment in assignments:
            for item in assignment.items:
                self._ownership[item.item_id] = assignment.annotator_id
        self._answered: set[tuple[str, str]] = set()
        if os.path.exists(self.path):
            for response in self.load():
                self._answered.add((response.item_id, response.annotator_id))

    def load(self) -> list[EvalResponse]:
        responses = []
        with open(self.path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                responses.append(EvalResponse(item_id=record["item_id"],
                                              annotator_id=record["annotator_id"],
                                              option=EvalOption(record["option"]),
                                              submitted_at=record["submitted_at"]))
        return responses

    def answered(self, annotator_id: str) -> set[str]:
        with self._lock:
            return {item_id for item_id, a_id in self._answered if a_id == annotator_id}

    def record(self, response: EvalResponse) -> None:
        owner = self._ownership.get(response.item_id)
        if owner is None:
            raise UnknownItemError(f"unknown item {response.item_id!r}")
        if owner != response.annotator_id:
            raise UnknownItemError(
                f"item {response.item_id!r} is not assigned to {response.annotator_id!r}")
        with self._lock:
            pair = (response.item_id, response.annotator_id)
            if pair in self._answered:
                raise DuplicateResponseError(
                    f"response already recorded for {response.item_id!r}")
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(response.to_record(), ensure_ascii=False))
                handle.write("\n")
                handle.flush()
                os.fsync(handle.fileno())
            self._answered.add(pair)


@dataclass
class ValidityReport:
    """Per-source validity tallies with 95% interval half-widths."""

    n: int
    counts: dict  # gt_only / aug_only / both / neither
    gt_valid_pct: float
    gt_ci_half: float
    aug_valid_pct: float
    aug_ci_half: float

    def to_record(self) -> dict:
        return {"n": self.n, "counts": dict(self.counts),
                "gt": {"valid_pct": round(self.gt_valid_pct, 2),
                       "valid_proportion": self.gt_valid_pct / 100.0,
                       "ci_half_proportion": truncate4(self.gt_ci_half),
                       "ci_half_pct": 100.0 * self.gt_ci_half,
                       "ci_half_raw": self.gt_ci_half},
                "aug": {"valid_pct": round(self.aug_valid_pct, 2),
                        "valid_proportion": self.aug_valid_pct / 100.0,
                        "ci_half_proportion": truncate4(self.aug_ci_half),
                        "ci_half_pct": 100.0 * self.aug_ci_half,
                        "ci_half_raw": self.aug_ci_half}}

    def render_text(self) -> str:
        lines = ["validity report",
                 "---------------",
                 f"responses: {self.n}",
                 (f"counts: gt_only={self.counts['gt_only']} "
                  f"aug_only={self.counts['aug_only']} "
                  f"both={self.counts['both']} neither={self.counts['neither']}"),
                 (f"gt  valid: {self.gt_valid_pct:.2f}% "
                  f"+/- {truncate4(self.gt_ci_half):.4f} (proportion scale)"),
                 (f"aug valid: {self.aug_valid_pct:.2f}% "
                  f"+/- {truncate4(self.aug_ci_half):.4f} (proportion scale)")]
        return "\n".join(lines) + "\n"


def truncate4(value: float) -> float:
    """Truncate toward zero at 4 decimals (0.05385 -> 0.0538)."""
    return math.floor(value * 10000.0) / 10000.0


def normal_ci_half(p: float, n: int) -> float:
    return Z_95 * math.sqrt(p * (1.0 - p) / n)


def wilson_ci_half(p: float, n: int) -> float:
    """Wilson interval half-width; offered as an alternative to the default."""
    z2 = Z_95 * Z_95
    return (Z_95 * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))) / (1.0 + z2 / n)


def aggregate(responses: list[EvalResponse], items: list[EvalItem],
              ci_method: str = "normal") -> ValidityReport:
    """Un-blind responses through their items and tally per-source validity."""
    if not responses:
        raise EvalError("aggregate requires at least one response")
    if ci_method not in ("normal", "wilson"):
        raise EvalError(f"unknown ci method {ci_method!r}")
    by_id = {item.item_id: item for item in items}
    counts = {"gt_only": 0, "aug_only": 0, "both": 0, "neither": 0}
    for response in responses:
        item = by_id.get(response.item_id)
        if item is None:
            raise UnknownItemError(f"response for unknown item {response.item_id!r}")
        a_valid = response.option in (EvalOption.A_ONLY_VALID, EvalOption.BOTH_VALID)
        b_valid = response.option in (EvalOption.B_ONLY_VALID, EvalOption.BOTH_VALID)
        gt_valid = a_valid if item.a_source == "gt" else b_valid
        aug_valid = a_valid if item.a_source == "aug" else b_valid
        if gt_valid and aug_valid:
            counts["both"] += 1
        elif gt_valid:
            counts["gt_only"] += 1
        elif aug_valid:
            counts["aug_only"] += 1
        else:
            counts["neither"] += 1
    n = len(responses)
    half = normal_ci_half if ci_method == "normal" else wilson_ci_half
    p_gt = (counts["gt_only"] + counts["both"]) / n
    p_aug = (counts["aug_only"] + counts["both"]) / n
    return ValidityReport(n=n, counts=counts,
                          gt_valid_pct=100.0 * p_gt, gt_ci_half=half(p_gt, n),
                          aug_valid_pct=100.0 * p_aug, aug_ci_half=half(p_aug, n))


def aggregate_from_files(responses_path: str, items_path: str,
                         ci_method: str = "normal") -> ValidityReport:
    assignments = load_assignments(items_path)
    items = [item for assignment in assignments for item in assignment.items]
    responses = []
    with open(responses_path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            responses.append(EvalResponse(item_id=record["item_id"],
                                          annotator_id=record["annotator_id"],
                                          option=EvalOption(record["option"]),
                                          submitted_at=record.get("submitted_at", "")))
    return aggregate(responses, items, ci_method=ci_method)
