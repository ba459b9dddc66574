"""Lexical overlap metrics, concept coverage, and score-report emission.

ROUGE-1 is clipped unigram overlap; ROUGE-L is longest common subsequence
via dynamic programming. The metric tokenizer lowercases and splits on any
non-alphanumeric character (so "cat's" becomes two tokens). No stemming and
no stopword removal are applied, and corpus aggregation is a macro-average
over pairs, so absolute numbers are comparable only within this toolkit.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field

from .concepts import ConceptSet, lenient_token_match

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class TokenSeq:
    """Ordered lowercase alphanumeric tokens ready for scoring."""

    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        if precision + recall > 0:
            f1 = 2.0 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        return cls(precision, recall, f1)


def tokenize_metric(text: str) -> TokenSeq:
    return TokenSeq(tuple(tok for tok in _TOKEN_SPLIT.split(text.lower()) if tok))


def rouge1(candidate: TokenSeq, reference: TokenSeq) -> RougeScore:
    """Clipped unigram overlap: per-type min of counts over both lengths."""
    from collections import Counter

    cand_counts = Counter(candidate.tokens)
    ref_counts = Counter(reference.tokens)
    overlap = sum(min(count, ref_counts[token])
                  for token, count in cand_counts.items())
    precision = overlap / len(candidate) if len(candidate) else 0.0
    recall = overlap / len(reference) if len(reference) else 0.0
    return RougeScore.from_pr(precision, recall)


def lcs_length(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    """Longest common subsequence length, O(len(a) * len(b)) time, O(len(b)) space."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rougeL(candidate: TokenSeq, reference: TokenSeq) -> RougeScore:
    length = lcs_length(candidate.tokens, reference.tokens)
    precision = length / len(candidate) if len(candidate) else 0.0
    recall = length / len(reference) if len(reference) else 0.0
    return RougeScore.from_pr(precision, recall)


@dataclass
class CorpusRouge:
    """Macro-averaged pair scores; raw values stay on the [0, 1] scale."""

    rouge1_mean: RougeScore
    rougeL_mean: RougeScore
    n_pairs: int

    def as_percentages(self) -> dict:
        def pct(score: RougeScore) -> dict:
            return {"precision": round(100.0 * score.precision, 2),
                    "recall": round(100.0 * score.recall, 2),
                    "f1": round(100.0 * score.f1, 2)}

        return {"rouge1": pct(self.rouge1_mean), "rougeL": pct(self.rougeL_mean),
                "n_pairs": self.n_pairs}


def corpus_rouge(pairs: list[tuple[str, str]]) -> CorpusRouge:
    """Mean ROUGE-1/L over (candidate text, reference text) pairs."""
    if not pairs:
        raise ValueError("corpus_rouge requires at least one pair")
    totals = {"r1": [0.0, 0.0, 0.0], "rl": [0.0, 0.0, 0.0]}
    for candidate_text, reference_text in pairs:
        candidate = tokenize_metric(candidate_text)
        reference = tokenize_metric(reference_text)
        for key, score in (("r1", rouge1(candidate, reference)),
                           ("rl", rougeL(candidate, reference))):
            totals[key][0] += score.precision
            totals[key][1] += score.recall
            totals[key][2] += score.f1
    n = len(pairs)
    return CorpusRouge(
        rouge1_mean=RougeScore(*(value / n for value in totals["r1"])),
        rougeL_mean=RougeScore(*(value / n for value in totals["rl"])),
        n_pairs=n)


def concept_coverage(text: str, concepts: ConceptSet, leniency: str = "prefix4") -> float:
    """Fraction of concept words present in the text under the match mode."""
    if not concepts.words:
        raise ValueError("concept set must be nonempty")
    tokens = set(tokenize_metric(text).tokens)
    hits = sum(1 for concept in concepts.words
               if any(lenient_token_match(concept, token, leniency) for token in tokens))
    return hits / len(concepts.words)


@dataclass
class ScoreReport:
    """Flat {metric, value} rows for one candidate-set/reference-set pairing."""

    rows: list[dict] = field(default_factory=list)

    def add(self, metric: str, value: float) -> None:
        self.rows.append({"metric": metric, "value": value})

    def extend_external(self, records: list[dict]) -> None:
        """Merge externally computed per-utterance scores (model-based metrics)."""
        by_metric: dict[str, list[float]] = {}
        for record in records:
            by_metric.setdefault(record["metric_name"], []).append(float(record["value"]))
        for metric_name in sorted(by_metric):
            values = by_metric[metric_name]
            self.add(f"external/{metric_name}", round(sum(values) / len(values), 2))

    def render_text(self, title: str = "score report") -> str:
        width = max([len(row["metric"]) for row in self.rows] + [6])
        lines = [title, "-" * len(title)]
        for row in self.rows:
            value = row["value"]
            shown = f"{value:.2f}" if isinstance(value, float) else str(value)
            lines.append(f"{row['metric']:<{width}}  {shown}")
        return "\n".join(lines) + "\n"

    def write_records(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for row in self.rows:
                handle.write(json.dumps(row, ensure_ascii=False))
                handle.write("\n")


def load_external_scores(path: str | os.PathLike) -> list[dict]:
    """Side-file of {utterance_id, metric_name, value} records."""
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def build_score_report(pairs: list[tuple[str, str]],
                       coverage_values: list[float] | None = None,
                       external: list[dict] | None = None,
                       candidate_lengths: list[int] | None = None) -> ScoreReport:
    """Corpus ROUGE plus optional coverage/length statistics in one report."""
    scores = corpus_rouge(pairs)
    pct = scores.as_percentages()
    report = ScoreReport()
    report.add("rouge1/f1", pct["rouge1"]["f1"])
    report.add("rouge1/precision", pct["rouge1"]["precision"])
    report.add("rouge1/recall", pct["rouge1"]["recall"])
    report.add("rougeL/f1", pct["rougeL"]["f1"])
    report.add("rougeL/precision", pct["rougeL"]["precision"])
    report.add("rougeL/recall", pct["rougeL"]["recall"])
    report.add("pairs", scores.n_pairs)
    if coverage_values:
        report.add("concept_coverage/mean",
                   round(100.0 * sum(coverage_values) / len(coverage_values), 2))
    if candidate_lengths:
        report.add("candidate_words/mean",
                   round(sum(candidate_lengths) / len(candidate_lengths), 2))
    if external:
        report.extend_external(external)
    return report
