"""Training-manifest assembly for every label-mixing strategy.

A manifest is an ordered list of (utterance_id, source, summary_text)
entries for one training stage. Single-stage strategies produce one
manifest; the two-stage strategies produce a [pretrain, finetune] pair.
Everything is a pure function of (strategy, corpus, aug, seed): the
half-and-half source coin and the final entry shuffle both draw from named
substreams of the seed, so replaying a seed reproduces each manifest byte
for byte.

Source selection when an utterance has several accepted synthetic
summaries: enlarging uses all of them, every other consumer takes the
first by sample index.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum

from .corpus import Corpus, Utterance
from .detrand import Substream
from .sampler import SyntheticSummary


class Strategy(str, Enum):
    GT_ONLY = "gt-only"
    AUG_ONLY = "aug-only"
    HALF_HALF = "half-half"
    ENLARGE = "enlarge"
    TWO_STAGE_PT_AUG_FT_GT = "two-stage-pt-aug-ft-gt"
    TWO_STAGE_PT_ENLARGE_FT_GT = "two-stage-pt-enlarge-ft-gt"
    TWO_STAGE_PT_GT_FT_AUG = "two-stage-pt-gt-ft-aug"


TWO_STAGE = {Strategy.TWO_STAGE_PT_AUG_FT_GT, Strategy.TWO_STAGE_PT_ENLARGE_FT_GT,
             Strategy.TWO_STAGE_PT_GT_FT_AUG}


class AssemblyError(ValueError):
    """Strategy preconditions violated (usually missing aug coverage)."""


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    source: str  # "gt" | "aug"
    summary_text: str

    def to_record(self) -> dict:
        return {"utterance_id": self.utterance_id, "source": self.source,
                "summary_text": self.summary_text}


@dataclass
class TrainingManifest:
    strategy: Strategy
    stage: str  # "single" | "pretrain" | "finetune"
    entries: list[ManifestEntry] = field(default_factory=list)
    seed: int = 0

    @property
    def file_name(self) -> str:
        return f"{self.strategy.value}.{self.stage}.manifest"


def _aug_index(aug: list[SyntheticSummary],
               accepted_only: bool) -> dict[str, list[SyntheticSummary]]:
    index: dict[str, list[SyntheticSummary]] = {}
    for summary in aug:
        if accepted_only and not summary.verdict.accepted:
            continue
        index.setdefault(summary.utterance_id, []).append(summary)
    for samples in index.values():
        samples.sort(key=lambda s: s.sample_index)
    return index


def _require_coverage(corpus: Corpus, index: dict[str, list[SyntheticSummary]],
                      what: str) -> None:
    uncovered = [utt.id for utt in corpus if not index.get(utt.id)]
    if uncovered:
        raise AssemblyError(f"{what}: utterances without usable synthetic "
                            f"summaries: {uncovered}")


def _gt_entries(corpus: Corpus) -> list[ManifestEntry]:
    return [ManifestEntry(utt.id, "gt", utt.gt_summary) for utt in corpus]


def _aug_first_entries(corpus: Corpus,
                       index: dict[str, list[SyntheticSummary]]) -> list[ManifestEntry]:
    return [ManifestEntry(utt.id, "aug", index[utt.id][0].text) for utt in corpus]


def _aug_all_entries(corpus: Corpus,
                     index: dict[str, list[SyntheticSummary]]) -> list[ManifestEntry]:
    entries = []
    for utt in corpus:
        for summary in index[utt.id]:
            entries.append(ManifestEntry(utt.id, "aug", summary.text))
    return entries


def _half_half_entries(corpus: Corpus, index: dict[str, list[SyntheticSummary]],
                       seed: int, exact_half: bool) -> list[ManifestEntry]:
    # Default: an independent fair coin per utterance in corpus order, so
    # every utterance appears exactly once and the expected split is 50/50.
    # exact_half instead assigns gt to a seeded random half of the corpus.
    if exact_half:
        order = list(range(len(corpus)))
        Substream(seed, "half-half-partition").shuffle(order)
        gt_positions = set(order[:len(corpus) // 2 + len(corpus) % 2])
        picks = [position in gt_positions for position in range(len(corpus))]
    else:
        coin = Substream(seed, "half-half")
        picks = [coin.coin() for _ in corpus]
    entries = []
    for utt, take_gt in zip(corpus, picks):
        if take_gt:
            entries.append(ManifestEntry(utt.id, "gt", utt.gt_summary))
        else:
            entries.append(ManifestEntry(utt.id, "aug", index[utt.id][0].text))
    return entries


def assemble(strategy: Strategy, corpus: Corpus, aug: list[SyntheticSummary],
             seed: int, accepted_only: bool = True,
             exact_half: bool = False) -> list[TrainingManifest]:
    """Build the manifest (or [pretrain, finetune] pair) for a strategy."""
    if not isinstance(strategy, Strategy):
        raise AssemblyError(f"unknown strategy {strategy!r}")
    index = _aug_index(aug, accepted_only)
    if strategy is not Strategy.GT_ONLY:
        _require_coverage(corpus, index, strategy.value)

    def stage(name: str, entries: list[ManifestEntry]) -> TrainingManifest:
        shuffled = list(entries)
        Substream(seed, f"shuffle:{strategy.value}:{name}").shuffle(shuffled)
        return TrainingManifest(strategy=strategy, stage=name, entries=shuffled,
                                seed=seed)

    if strategy is Strategy.GT_ONLY:
        return [stage("single", _gt_entries(corpus))]
    if strategy is Strategy.AUG_ONLY:
        return [stage("single", _aug_first_entries(corpus, index))]
    if strategy is Strategy.HALF_HALF:
        return [stage("single", _half_half_entries(corpus, index, seed, exact_half))]
    if strategy is Strategy.ENLARGE:
        return [stage("single", _gt_entries(corpus) + _aug_all_entries(corpus, index))]
    if strategy is Strategy.TWO_STAGE_PT_AUG_FT_GT:
        return [stage("pretrain", _aug_first_entries(corpus, index)),
                stage("finetune", _gt_entries(corpus))]
    if strategy is Strategy.TWO_STAGE_PT_ENLARGE_FT_GT:
        return [stage("pretrain", _gt_entries(corpus) + _aug_all_entries(corpus, index)),
                stage("finetune", _gt_entries(corpus))]
    if strategy is Strategy.TWO_STAGE_PT_GT_FT_AUG:
        return [stage("pretrain", _gt_entries(corpus)),
                stage("finetune", _aug_first_entries(corpus, index))]
    raise AssemblyError(f"unhandled strategy {strategy!r}")


def build_augmented_testset(test_corpus: Corpus,
                            aug: list[SyntheticSummary]) -> Corpus:
    """Test corpus with each reference replaced by its first accepted sample.

    Transcripts, splits, and any extra record keys are untouched.
    """
    index = _aug_index(aug, accepted_only=True)
    _require_coverage(test_corpus, index, "augmented test set")
    items = []
    for utt in test_corpus:
        items.append(Utterance(id=utt.id, transcript=utt.transcript,
                               gt_summary=index[utt.id][0].text, split=utt.split,
                               extra=dict(utt.extra)))
    return Corpus(items=items, name=f"{test_corpus.name or 'test'}.augmented")


def save_manifest(manifest: TrainingManifest, out_dir: str | os.PathLike) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(os.fspath(out_dir), manifest.file_name)
    with open(path, "w", encoding="utf-8") as handle:
        for entry in manifest.entries:
            handle.write(json.dumps(entry.to_record(), ensure_ascii=False))
            handle.write("\n")
    return path
