import json

import pytest

from synthsumm.corpus import Corpus, Utterance
from synthsumm.llm import SamplingParams
from synthsumm.manifests import (AssemblyError, Strategy, assemble,
                                 build_augmented_testset, save_manifest)
from synthsumm.metrics import corpus_rouge
from synthsumm.prompts import PromptVariant
from synthsumm.sampler import SyntheticSummary, ValidationVerdict

PARAMS = SamplingParams()


def make_corpus(n, split="train"):
    return Corpus(items=[Utterance(id=f"u{i:03d}", transcript=f"transcript {i} words",
                                   gt_summary=f"reference summary number {i}",
                                   split=split)
                         for i in range(1, n + 1)], name="fixture")


def make_aug(corpus, per_utt=1, accepted=True):
    summaries = []
    for utt in corpus:
        for s in range(1, per_utt + 1):
            verdict = ValidationVerdict(word_count_ok=accepted, accepted=accepted,
                                        attempts_used=1)
            summaries.append(SyntheticSummary(
                utterance_id=utt.id, text=f"synthetic {s} for {utt.id}",
                variant=PromptVariant.PARAPHRASE_PLAIN, params=PARAMS,
                verdict=verdict, created_at="1970-01-01T00:00:00+00:00",
                sample_index=s))
    return summaries


class TestSingleStage:
    def test_gt_only(self):
        corpus = make_corpus(4)
        (manifest,) = assemble(Strategy.GT_ONLY, corpus, [], seed=1)
        assert manifest.stage == "single"
        assert len(manifest.entries) == 4
        assert all(entry.source == "gt" for entry in manifest.entries)

    def test_enlarge_counts_and_sources(self):
        corpus = make_corpus(4)
        (manifest,) = assemble(Strategy.ENLARGE, corpus, make_aug(corpus), seed=1)
        assert len(manifest.entries) == 8
        sources = [entry.source for entry in manifest.entries]
        assert sources.count("gt") == 4 and sources.count("aug") == 4
        per_utt_gt = {}
        for entry in manifest.entries:
            if entry.source == "gt":
                per_utt_gt[entry.utterance_id] = per_utt_gt.get(entry.utterance_id, 0) + 1
        assert all(count == 1 for count in per_utt_gt.values())

    def test_enlarge_includes_all_accepted_samples(self):
        corpus = make_corpus(3)
        (manifest,) = assemble(Strategy.ENLARGE, corpus, make_aug(corpus, per_utt=2),
                               seed=1)
        assert len(manifest.entries) == 3 + 6

    def test_aug_only_takes_first_sample(self):
        corpus = make_corpus(3)
        (manifest,) = assemble(Strategy.AUG_ONLY, corpus, make_aug(corpus, per_utt=3),
                               seed=1)
        assert len(manifest.entries) == 3
        assert all(entry.summary_text.startswith("synthetic 1 ")
                   for entry in manifest.entries)

    def test_half_half_each_utterance_once(self):
        corpus = make_corpus(100)
        (manifest,) = assemble(Strategy.HALF_HALF, corpus, make_aug(corpus), seed=11)
        assert len(manifest.entries) == 100
        assert len({entry.utterance_id for entry in manifest.entries}) == 100

    def test_half_half_seed_replay_identical(self):
        corpus = make_corpus(100)
        first = assemble(Strategy.HALF_HALF, corpus, make_aug(corpus), seed=11)
        second = assemble(Strategy.HALF_HALF, corpus, make_aug(corpus), seed=11)
        assert first[0].entries == second[0].entries

    def test_half_half_fraction_near_half(self):
        corpus = make_corpus(100)
        (manifest,) = assemble(Strategy.HALF_HALF, corpus, make_aug(corpus), seed=11)
        gt_fraction = sum(1 for e in manifest.entries if e.source == "gt") / 100
        assert 0.35 <= gt_fraction <= 0.65

    def test_half_half_seeds_disagree(self):
        corpus = make_corpus(100)
        a = assemble(Strategy.HALF_HALF, corpus, make_aug(corpus), seed=1)[0]
        b = assemble(Strategy.HALF_HALF, corpus, make_aug(corpus), seed=2)[0]
        assert a.entries != b.entries

    def test_exact_half_partition(self):
        corpus = make_corpus(10)
        (manifest,) = assemble(Strategy.HALF_HALF, corpus, make_aug(corpus), seed=3,
                               exact_half=True)
        sources = [entry.source for entry in manifest.entries]
        assert sources.count("gt") == 5 and sources.count("aug") == 5


class TestTwoStage:
    @pytest.mark.parametrize("strategy,pretrain_sources,finetune_sources", [
        (Strategy.TWO_STAGE_PT_AUG_FT_GT, {"aug"}, {"gt"}),
        (Strategy.TWO_STAGE_PT_ENLARGE_FT_GT, {"gt", "aug"}, {"gt"}),
        (Strategy.TWO_STAGE_PT_GT_FT_AUG, {"gt"}, {"aug"}),
    ])
    def test_stage_pair_and_purity(self, strategy, pretrain_sources, finetune_sources):
        corpus = make_corpus(4)
        manifests = assemble(strategy, corpus, make_aug(corpus), seed=5)
        assert [m.stage for m in manifests] == ["pretrain", "finetune"]
        assert {e.source for e in manifests[0].entries} == pretrain_sources
        assert {e.source for e in manifests[1].entries} == finetune_sources

    def test_enlarge_pretrain_counts(self):
        corpus = make_corpus(4)
        manifests = assemble(Strategy.TWO_STAGE_PT_ENLARGE_FT_GT, corpus,
                             make_aug(corpus), seed=5)
        assert len(manifests[0].entries) == 8
        assert len(manifests[1].entries) == 4


class TestInvariants:
    def test_no_cross_utterance_leakage(self):
        corpus = make_corpus(6)
        aug = make_aug(corpus, per_utt=2)
        by_id = corpus.by_id()
        aug_texts = {}
        for summary in aug:
            aug_texts.setdefault(summary.utterance_id, set()).add(summary.text)
        for strategy in Strategy:
            for manifest in assemble(strategy, corpus, aug, seed=9):
                for entry in manifest.entries:
                    utt = by_id[entry.utterance_id]
                    allowed = {utt.gt_summary} | aug_texts[utt.id]
                    assert entry.summary_text in allowed

    def test_determinism_bytes(self, tmp_path):
        corpus = make_corpus(5)
        aug = make_aug(corpus)
        for run_dir in ("one", "two"):
            out = tmp_path / run_dir
            for manifest in assemble(Strategy.ENLARGE, corpus, aug, seed=4):
                save_manifest(manifest, out)
        first = (tmp_path / "one" / "enlarge.single.manifest").read_bytes()
        second = (tmp_path / "two" / "enlarge.single.manifest").read_bytes()
        assert first == second

    def test_rejected_summaries_excluded_by_default(self):
        corpus = make_corpus(2)
        accepted = make_aug(corpus)
        rejected = make_aug(corpus, accepted=False)
        for summary in rejected:
            summary.sample_index = 2
        (manifest,) = assemble(Strategy.ENLARGE, corpus, accepted + rejected, seed=1)
        assert len(manifest.entries) == 4  # 2 gt + 2 accepted aug only

    def test_missing_coverage_lists_ids(self):
        corpus = make_corpus(3)
        aug = [s for s in make_aug(corpus) if s.utterance_id != "u002"]
        with pytest.raises(AssemblyError, match="u002"):
            assemble(Strategy.ENLARGE, corpus, aug, seed=1)

    def test_gt_only_needs_no_aug(self):
        corpus = make_corpus(3)
        assert assemble(Strategy.GT_ONLY, corpus, [], seed=1)

    def test_manifest_file_schema(self, tmp_path):
        corpus = make_corpus(2)
        (manifest,) = assemble(Strategy.GT_ONLY, corpus, [], seed=1)
        path = save_manifest(manifest, tmp_path)
        assert path.endswith("gt-only.single.manifest")
        rows = [json.loads(line) for line in open(path, encoding="utf-8")]
        assert all(set(row) == {"utterance_id", "source", "summary_text"}
                   for row in rows)


class TestAugmentedTestset:
    def test_references_replaced_transcripts_untouched(self):
        corpus = make_corpus(3, split="test")
        result = build_augmented_testset(corpus, make_aug(corpus))
        assert len(result) == 3
        for original, replaced in zip(corpus, result):
            assert replaced.transcript == original.transcript
            assert replaced.split == original.split
            assert replaced.gt_summary == f"synthetic 1 for {original.id}"

    def test_uncovered_utterance_named(self):
        corpus = make_corpus(3, split="test")
        aug = [s for s in make_aug(corpus) if s.utterance_id != "u003"]
        with pytest.raises(AssemblyError, match="u003"):
            build_augmented_testset(corpus, aug)

    def test_rejected_only_coverage_fails(self):
        corpus = make_corpus(2, split="test")
        with pytest.raises(AssemblyError):
            build_augmented_testset(corpus, make_aug(corpus, accepted=False))

    def test_identity_scoring_hits_100(self):
        corpus = make_corpus(3, split="test")
        result = build_augmented_testset(corpus, make_aug(corpus))
        pairs = [(utt.gt_summary, utt.gt_summary) for utt in result]
        pct = corpus_rouge(pairs).as_percentages()
        assert pct["rouge1"]["f1"] == 100.00
        assert pct["rougeL"]["f1"] == 100.00
