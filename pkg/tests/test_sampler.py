import pytest

from synthsumm.concepts import ConceptSet
from synthsumm.corpus import Corpus, Utterance
from synthsumm.llm import LLMClient, MockResponder, SamplingParams
from synthsumm.prompts import PromptVariant
from synthsumm.sampler import (SamplingRun, augment_corpus, check_word_window,
                               load_summaries, postprocess_response,
                               save_summaries)

from conftest import YOGA_CONCEPTS, YOGA_GT, YOGA_PARAPHRASE

PARAMS = SamplingParams()


def words(n, prefix="tok"):
    return " ".join(f"{prefix}{i}" for i in range(n))


class ByAttemptResponder(MockResponder):
    """Canned text per attempt index; used to exercise the resample loop."""

    def __init__(self, by_attempt, default="fallback words"):
        super().__init__()
        self.by_attempt = dict(by_attempt)
        self.default = default

    def generate(self, prompt, params, attempt):
        return self.by_attempt.get(attempt, self.default)


def make_client(responder):
    return LLMClient(mock=responder)


def direct_utterance(transcript=None):
    return Utterance(id="u001", transcript=transcript or words(80),
                     gt_summary=words(30, "ref"), split="train")


class TestPostprocess:
    def test_strips_wrapping_quotes(self):
        assert postprocess_response('"quoted text"') == "quoted text"
        assert postprocess_response("'single quoted'") == "single quoted"

    def test_collapses_newlines(self):
        assert postprocess_response("line one\nline two\n") == "line one line two"

    def test_plain_text_untouched(self):
        assert postprocess_response("already clean") == "already clean"


class TestWordWindow:
    def test_inside_window(self):
        assert check_word_window(50, 40, 60, 0.2) == (True, False)

    def test_soft_zone(self):
        ok, soft = check_word_window(66, 40, 60, 0.2)  # 60 * 1.2 = 72
        assert ok and soft

    def test_beyond_soft_zone(self):
        assert check_word_window(80, 40, 60, 0.2) == (False, False)

    def test_zero_tolerance_is_hard(self):
        assert check_word_window(61, 40, 60, 0.0) == (False, False)


class TestGenerateDirect:
    def test_in_budget_accepted_first_attempt(self):
        run = SamplingRun(make_client(ByAttemptResponder({1: words(50)})))
        summary = run.generate_direct(direct_utterance(), PARAMS)
        assert summary.variant is PromptVariant.DIRECT
        assert summary.verdict.accepted
        assert summary.verdict.attempts_used == 1

    def test_resample_after_short_reply(self):
        responder = ByAttemptResponder({1: words(10), 2: words(45)})
        run = SamplingRun(make_client(responder))
        summary = run.generate_direct(direct_utterance(), PARAMS)
        assert summary.verdict.accepted
        assert summary.verdict.attempts_used == 2
        assert len(summary.text.split()) == 45

    def test_exhausted_attempts_keeps_best_flagged(self):
        responder = ByAttemptResponder({1: words(5), 2: words(90), 3: words(8)})
        run = SamplingRun(make_client(responder), max_attempts=3, tolerance=0.0)
        summary = run.generate_direct(direct_utterance(), PARAMS)
        assert not summary.verdict.accepted
        assert summary.verdict.attempts_used == 3
        # best candidate is the one closest to the window midpoint (50)
        assert len(summary.text.split()) == 90

    def test_extractive_diagnostic_zero_when_subset(self):
        transcript = words(80)
        subset = " ".join(transcript.split()[:50])
        run = SamplingRun(make_client(ByAttemptResponder({1: subset})))
        summary = run.generate_direct(direct_utterance(transcript), PARAMS)
        assert summary.verdict.oov_fraction == 0.0

    def test_extractive_diagnostic_counts_novel_tokens(self):
        transcript = words(80)
        reply = " ".join(transcript.split()[:40] + ["novel"] * 10)
        run = SamplingRun(make_client(ByAttemptResponder({1: reply})))
        summary = run.generate_direct(direct_utterance(transcript), PARAMS)
        assert summary.verdict.oov_fraction == pytest.approx(10 / 50)


class TestGenerateParaphrase:
    def yoga_utterance(self):
        return Utterance(id="u001", transcript=words(70), gt_summary=YOGA_GT,
                         split="train")

    def concept_set(self):
        return ConceptSet(utterance_id="u001", words=list(YOGA_CONCEPTS), max_k=10)

    def test_women_woman_leniency_modes(self):
        responder = ByAttemptResponder({1: YOGA_PARAPHRASE})
        exact = SamplingRun(make_client(responder), leniency="exact")
        summary = exact.generate_paraphrase(self.yoga_utterance(), self.concept_set(),
                                            PARAMS)
        assert summary.verdict.concepts_missing == ["women"]

        lenient = SamplingRun(make_client(responder), leniency="prefix4")
        summary = lenient.generate_paraphrase(self.yoga_utterance(), self.concept_set(),
                                              PARAMS)
        assert summary.verdict.concepts_missing == []

    def test_all_concepts_verbatim(self):
        text = "covers " + " ".join(YOGA_CONCEPTS) + " " + words(8)
        run = SamplingRun(make_client(ByAttemptResponder({1: text})))
        summary = run.generate_paraphrase(self.yoga_utterance(), self.concept_set(),
                                          PARAMS)
        assert summary.verdict.concepts_missing == []
        assert summary.variant is PromptVariant.PARAPHRASE_CONCEPT

    def test_bounds_traced_for_50_word_summary(self):
        # window for gt_len=50 is (20, 55); with hard bounds 60 words is out
        responder = ByAttemptResponder({1: words(60), 2: words(54)})
        run = SamplingRun(make_client(responder), tolerance=0.0)
        summary = run.generate_paraphrase(self.yoga_utterance(), None, PARAMS)
        assert summary.variant is PromptVariant.PARAPHRASE_PLAIN
        assert summary.verdict.accepted
        assert summary.verdict.attempts_used == 2

    def test_soft_acceptance_is_flagged(self):
        run = SamplingRun(make_client(ByAttemptResponder({1: words(60)})))
        summary = run.generate_paraphrase(self.yoga_utterance(), None, PARAMS)
        assert summary.verdict.accepted
        assert summary.verdict.word_count_soft


class TestAugmentCorpus:
    def corpus(self, n=3):
        return Corpus(items=[Utterance(id=f"u{i:03d}", transcript=words(70),
                                       gt_summary=words(30, "ref"), split="train")
                             for i in range(1, n + 1)], name="aug-test")

    def test_cardinality_and_ordering(self):
        client = make_client(MockResponder())
        results = augment_corpus(self.corpus(), PromptVariant.PARAPHRASE_PLAIN, 1,
                                 PARAMS, seed=7, client=client)
        assert [s.utterance_id for s in results] == ["u001", "u002", "u003"]
        assert all(s.sample_index == 1 for s in results)

    def test_multiple_samples_differ(self):
        client = make_client(MockResponder())
        results = augment_corpus(self.corpus(1), PromptVariant.PARAPHRASE_PLAIN, 2,
                                 PARAMS, seed=7, client=client)
        assert len(results) == 2
        assert results[0].text != results[1].text

    def test_warm_cache_rerun_identical_bytes_no_provider_calls(self, tmp_path):
        cache_dir = str(tmp_path / "cache")
        out_a = tmp_path / "a.aug"
        out_b = tmp_path / "b.aug"

        client_a = LLMClient(mock=MockResponder(), cache_dir=cache_dir)
        save_summaries(augment_corpus(self.corpus(), PromptVariant.DIRECT, 1,
                                      PARAMS, seed=7, client=client_a), out_a)
        client_b = LLMClient(mock=MockResponder(), cache_dir=cache_dir)
        save_summaries(augment_corpus(self.corpus(), PromptVariant.DIRECT, 1,
                                      PARAMS, seed=7, client=client_b), out_b)

        assert out_a.read_bytes() == out_b.read_bytes()
        assert client_b.stats["provider_calls"] == 0
        assert client_b.stats["cache_hits"] == 3

    def test_verdicts_recomputable_from_visible_data(self):
        client = make_client(MockResponder())
        results = augment_corpus(self.corpus(), PromptVariant.PARAPHRASE_PLAIN, 1,
                                 PARAMS, seed=7, client=client)
        for summary in results:
            count = len(summary.text.split())
            ok, soft = check_word_window(count, 20, 35, 0.2)  # gt_len=30 window
            assert summary.verdict.word_count_ok == ok
            assert summary.verdict.word_count_soft == soft

    def test_round_trip_save_load(self, tmp_path):
        client = make_client(MockResponder())
        results = augment_corpus(self.corpus(), PromptVariant.PARAPHRASE_PLAIN, 2,
                                 PARAMS, seed=7, client=client)
        path = tmp_path / "round.aug"
        save_summaries(results, path)
        loaded = load_summaries(path)
        assert [(s.utterance_id, s.sample_index, s.text) for s in loaded] == \
               [(s.utterance_id, s.sample_index, s.text) for s in results]

    def test_concept_variant_requires_concepts(self):
        client = make_client(MockResponder())
        with pytest.raises(ValueError, match="concepts"):
            augment_corpus(self.corpus(), PromptVariant.PARAPHRASE_CONCEPT, 1,
                           PARAMS, seed=7, client=client)

    def test_empty_corpus_rejected(self):
        client = make_client(MockResponder())
        with pytest.raises(ValueError):
            augment_corpus(Corpus(items=[]), PromptVariant.DIRECT, 1, PARAMS,
                           seed=7, client=client)
