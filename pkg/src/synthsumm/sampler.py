"""Per-utterance synthetic-summary generation with validation and resampling.

Each sample builds its prompt, asks the client for a completion, and checks
the reply against the prompt's word-count window. A reply inside the window
is accepted outright; one within the +/- tolerance band (default 20% beyond
each bound) is accepted but flagged soft; anything further out triggers a
resample up to max_attempts. When every attempt is out of bounds the best
candidate (fewest violations, then closest to the window midpoint) is kept
with accepted=False so downstream assembly can filter instead of losing the
utterance. Concept-word presence is checked for concept-forced paraphrases
and recorded, never enforced.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .concepts import ConceptSet, concept_hits
from .corpus import Corpus, Utterance, word_count
from .llm import CompletionRecord, LLMClient, SamplingParams
from .metrics import tokenize_metric
from .prompts import PromptSpec, PromptVariant, build_direct_prompt, build_paraphrase_prompt

DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_TOLERANCE = 0.2


@dataclass
class ValidationVerdict:
    """Outcome of checking one generated summary against its constraints."""

    word_count_ok: bool
    accepted: bool
    attempts_used: int
    word_count_soft: bool = False
    concepts_missing: list[str] = field(default_factory=list)
    oov_fraction: float | None = None

    def to_record(self) -> dict:
        record = {"word_count_ok": self.word_count_ok,
                  "word_count_soft": self.word_count_soft,
                  "concepts_missing": self.concepts_missing,
                  "accepted": self.accepted,
                  "attempts_used": self.attempts_used}
        if self.oov_fraction is not None:
            record["oov_fraction"] = self.oov_fraction
        return record


@dataclass
class SyntheticSummary:
    """One sampled summary with provenance and its validation verdict."""

    utterance_id: str
    text: str
    variant: PromptVariant
    params: SamplingParams
    verdict: ValidationVerdict
    created_at: str
    sample_index: int = field(default=1, compare=False)

    def to_record(self) -> dict:
        return {"utterance_id": self.utterance_id, "text": self.text,
                "variant": self.variant.value, "params": self.params.to_record(),
                "verdict": self.verdict.to_record(), "created_at": self.created_at}


def postprocess_response(text: str) -> str:
    """Strip wrapping whitespace/quotes and collapse newlines to spaces."""
    cleaned = " ".join(text.split())
    for quote in ('"', "'", "“”", "‘’"):
        if len(quote) == 1:
            if len(cleaned) >= 2 and cleaned.startswith(quote) and cleaned.endswith(quote):
                cleaned = cleaned[1:-1].strip()
        else:
            if cleaned.startswith(quote[0]) and cleaned.endswith(quote[1]):
                cleaned = cleaned[1:-1].strip()
    return cleaned


def check_word_window(count: int, lo: int, hi: int,
                      tolerance: float) -> tuple[bool, bool]:
    """(ok, soft): ok within [lo, hi] or the tolerance band around it."""
    if lo <= count <= hi:
        return True, False
    soft_lo = math.floor(lo * (1.0 - tolerance))
    soft_hi = math.ceil(hi * (1.0 + tolerance))
    if soft_lo <= count <= soft_hi:
        return True, True
    return False, False


def _oov_fraction(text: str, transcript: str) -> float:
    tokens = tokenize_metric(text).tokens
    if not tokens:
        return 0.0
    vocab = set(tokenize_metric(transcript).tokens)
    return sum(1 for tok in tokens if tok not in vocab) / len(tokens)


class SamplingRun:
    """Shared knobs for one generation pass over a corpus."""

    def __init__(self, client: LLMClient, *, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                 tolerance: float = DEFAULT_TOLERANCE, leniency: str = "prefix4"):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.client = client
        self.max_attempts = max_attempts
        self.tolerance = tolerance
        self.leniency = leniency

    def _sample(self, prompt: PromptSpec, utt: Utterance, params: SamplingParams,
                concepts: ConceptSet | None, sample_index: int) -> SyntheticSummary:
        base_attempt = (sample_index - 1) * self.max_attempts
        best: tuple[tuple, SyntheticSummary] | None = None
        midpoint = (prompt.lo + prompt.hi) / 2.0

        for try_index in range(1, self.max_attempts + 1):
            record: CompletionRecord = self.client.complete(
                prompt, params, attempt=base_attempt + try_index)
            text = postprocess_response(record.response_text)
            count = word_count(text)
            ok, soft = check_word_window(count, prompt.lo, prompt.hi, self.tolerance)

            missing: list[str] = []
            if prompt.variant is PromptVariant.PARAPHRASE_CONCEPT and concepts is not None:
                missing = concept_hits(tokenize_metric(text).tokens,
                                       concepts.words, self.leniency)
            oov = (_oov_fraction(text, utt.transcript)
                   if prompt.variant is PromptVariant.DIRECT else None)

            verdict = ValidationVerdict(word_count_ok=ok, word_count_soft=soft,
                                        concepts_missing=missing, accepted=ok,
                                        attempts_used=try_index, oov_fraction=oov)
            summary = SyntheticSummary(utterance_id=utt.id, text=text,
                                       variant=prompt.variant, params=params,
                                       verdict=verdict, created_at=record.timestamp,
                                       sample_index=sample_index)
            if ok:
                return summary
            violations = 1 + len(missing)
            badness = (violations, abs(count - midpoint), try_index)
            if best is None or badness < best[0]:
                best = (badness, summary)

        assert best is not None
        rejected = best[1]
        rejected.verdict.accepted = False
        rejected.verdict.attempts_used = self.max_attempts
        return rejected

    def generate_direct(self, utt: Utterance, params: SamplingParams,
                        sample_index: int = 1) -> SyntheticSummary:
        prompt = build_direct_prompt(utt.transcript)
        return self._sample(prompt, utt, params, None, sample_index)

    def generate_paraphrase(self, utt: Utterance, concepts: ConceptSet | None,
                            params: SamplingParams,
                            sample_index: int = 1) -> SyntheticSummary:
        prompt = build_paraphrase_prompt(utt.gt_summary, concepts)
        return self._sample(prompt, utt, params, concepts, sample_index)


def augment_corpus(corpus: Corpus, variant: PromptVariant, n_per_utt: int,
                   params: SamplingParams, seed: int, client: LLMClient, *,
                   concepts_by_id: dict[str, ConceptSet] | None = None,
                   max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                   tolerance: float = DEFAULT_TOLERANCE,
                   leniency: str = "prefix4") -> list[SyntheticSummary]:
    """Generate n_per_utt samples per utterance, ordered by (id, sample index).

    Work is fanned out over a bounded pool sized to the client concurrency;
    results are re-ordered deterministically before returning. The run fails
    only if some utterance yields zero successful samples.
    """
    if len(corpus) == 0:
        raise ValueError("corpus must be nonempty")
    if n_per_utt < 1:
        raise ValueError("n_per_utt must be >= 1")
    if variant is PromptVariant.PARAPHRASE_CONCEPT and concepts_by_id is None:
        raise ValueError("paraphrase-concept generation requires concepts_by_id")
    if params.seed_hint is None:
        # The run seed doubles as the provider-side sampling seed so reruns
        # with the same seed hit the same cache entries.
        params = replace(params, seed_hint=seed)

    run = SamplingRun(client, max_attempts=max_attempts, tolerance=tolerance,
                      leniency=leniency)

    def task(utt: Utterance, sample_index: int):
        if variant is PromptVariant.DIRECT:
            return run.generate_direct(utt, params, sample_index)
        concepts = concepts_by_id.get(utt.id) if concepts_by_id else None
        if variant is PromptVariant.PARAPHRASE_CONCEPT and concepts is None:
            raise ValueError(f"no concepts for utterance {utt.id!r}")
        if variant is PromptVariant.PARAPHRASE_PLAIN:
            concepts = None
        return run.generate_paraphrase(utt, concepts, params, sample_index)

    jobs = [(utt, s) for utt in corpus for s in range(1, n_per_utt + 1)]
    results: dict[tuple[str, int], SyntheticSummary] = {}
    failures: dict[str, list[str]] = {}

    with ThreadPoolExecutor(max_workers=client.concurrency) as pool:
        futures = {pool.submit(task, utt, s): (utt.id, s) for utt, s in jobs}
        for future, (utt_id, s) in futures.items():
            try:
                results[(utt_id, s)] = future.result()
            except Exception as exc:  # collected; fail only on full gaps
                failures.setdefault(utt_id, []).append(f"sample {s}: {exc}")

    uncovered = [utt.id for utt in corpus
                 if not any((utt.id, s) in results for s in range(1, n_per_utt + 1))]
    if uncovered:
        detail = "; ".join(f"{uid}: {failures.get(uid, ['unknown'])[0]}" for uid in uncovered)
        raise RuntimeError(f"no successful samples for utterances {uncovered} ({detail})")

    ordered = sorted(results, key=lambda key: (key[0], key[1]))
    return [results[key] for key in ordered]


def save_summaries(summaries: list[SyntheticSummary], path: str | os.PathLike) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for summary in summaries:
            handle.write(json.dumps(summary.to_record(), ensure_ascii=False))
            handle.write("\n")


def load_summaries(path: str | os.PathLike) -> list[SyntheticSummary]:
    """Read an augmented-corpus file; sample indexes follow file order."""
    summaries: list[SyntheticSummary] = []
    counters: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            verdict_rec = record["verdict"]
            verdict = ValidationVerdict(
                word_count_ok=verdict_rec["word_count_ok"],
                word_count_soft=verdict_rec.get("word_count_soft", False),
                concepts_missing=list(verdict_rec.get("concepts_missing", [])),
                accepted=verdict_rec["accepted"],
                attempts_used=verdict_rec["attempts_used"],
                oov_fraction=verdict_rec.get("oov_fraction"))
            params_rec = record["params"]
            params = SamplingParams(model_id=params_rec["model_id"],
                                    temperature=params_rec["temperature"],
                                    top_p=params_rec["top_p"],
                                    max_tokens=params_rec["max_tokens"],
                                    seed_hint=params_rec.get("seed_hint"))
            utt_id = record["utterance_id"]
            counters[utt_id] = counters.get(utt_id, 0) + 1
            summaries.append(SyntheticSummary(
                utterance_id=utt_id, text=record["text"],
                variant=PromptVariant(record["variant"]), params=params,
                verdict=verdict, created_at=record["created_at"],
                sample_index=counters[utt_id]))
    return summaries
