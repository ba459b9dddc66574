from collections import Counter
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from synthsumm.concepts import ConceptSet
from synthsumm.metrics import (TokenSeq, build_score_report, concept_coverage,
                               corpus_rouge, lcs_length, rouge1, rougeL,
                               tokenize_metric)

from conftest import YOGA_CONCEPTS, YOGA_PARAPHRASE


def seq(*tokens):
    return TokenSeq(tuple(tokens))


def brute_force_lcs(a, b):
    """Exponential-time oracle: enumerate every subsequence of a."""
    best = 0
    for size in range(len(a), 0, -1):
        if size <= best:
            break
        for positions in combinations(range(len(a)), size):
            candidate = [a[i] for i in positions]
            it = iter(b)
            if all(token in it for token in candidate):
                best = size
                break
    return best


def counting_overlap(a, b):
    """Independent clipped-count oracle for unigram overlap."""
    counts_a, counts_b = Counter(a), Counter(b)
    return sum(min(counts_a[tok], counts_b[tok]) for tok in set(a) | set(b))


class TestTokenizer:
    def test_possessive_splits(self):
        assert tokenize_metric("The cat's mat.").tokens == ("the", "cat", "s", "mat")

    def test_empty(self):
        assert tokenize_metric("").tokens == ()

    def test_idempotent_fixed_point(self):
        tokens = tokenize_metric("Hello, world! It's 42.").tokens
        assert tokenize_metric(" ".join(tokens)).tokens == tokens


class TestRouge1:
    def test_identical_sequences(self):
        score = rouge1(seq("a", "b", "c"), seq("a", "b", "c"))
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_hand_counted_clipped_overlap(self):
        # overlap = 3 over candidate length 3 and reference length 6
        score = rouge1(seq("the", "cat", "sat"),
                       seq("the", "cat", "sat", "on", "the", "mat"))
        assert score.precision == 1.0
        assert score.recall == 0.5
        assert score.f1 == pytest.approx(2 / 3, abs=1e-9)

    def test_disjoint_vocabulary(self):
        score = rouge1(seq("a", "b"), seq("c", "d"))
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_empty_candidate(self):
        score = rouge1(seq(), seq("a"))
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_clipping_limits_repeats(self):
        score = rouge1(seq("the", "the", "the"), seq("the"))
        assert score.precision == pytest.approx(1 / 3)
        assert score.recall == 1.0


class TestRougeL:
    def test_identical_sequences(self):
        score = rougeL(seq("a", "b", "c"), seq("a", "b", "c"))
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_order_sensitivity_witness(self):
        # hand-checked: LCS of (the cat the dog) vs (the dog the cat) is 2,
        # while unigram overlap is total
        candidate = seq("the", "cat", "the", "dog")
        reference = seq("the", "dog", "the", "cat")
        lcs_score = rougeL(candidate, reference)
        assert (lcs_score.precision, lcs_score.recall, lcs_score.f1) == (0.5, 0.5, 0.5)
        assert rouge1(candidate, reference).f1 == 1.0

    def test_empty_candidate(self):
        score = rougeL(seq(), seq("a", "b"))
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)


token_lists = st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=8)


class TestOracleEquivalence:
    @given(token_lists, token_lists)
    @settings(max_examples=300)
    def test_lcs_matches_brute_force(self, a, b):
        assert lcs_length(tuple(a), tuple(b)) == brute_force_lcs(a, b)

    @given(token_lists, token_lists)
    def test_rouge1_matches_counting_oracle(self, a, b):
        score = rouge1(TokenSeq(tuple(a)), TokenSeq(tuple(b)))
        overlap = counting_overlap(a, b)
        expected_p = overlap / len(a) if a else 0.0
        expected_r = overlap / len(b) if b else 0.0
        assert score.precision == pytest.approx(expected_p)
        assert score.recall == pytest.approx(expected_r)

    @given(token_lists, token_lists)
    def test_symmetry_precision_recall(self, a, b):
        forward = rouge1(TokenSeq(tuple(a)), TokenSeq(tuple(b)))
        backward = rouge1(TokenSeq(tuple(b)), TokenSeq(tuple(a)))
        assert forward.precision == pytest.approx(backward.recall)

    @given(token_lists, token_lists)
    def test_rougeL_f1_never_exceeds_rouge1_f1(self, a, b):
        ca, cb = TokenSeq(tuple(a)), TokenSeq(tuple(b))
        assert rougeL(ca, cb).f1 <= rouge1(ca, cb).f1 + 1e-12

    @given(token_lists, token_lists)
    def test_scores_within_unit_interval(self, a, b):
        for score in (rouge1(TokenSeq(tuple(a)), TokenSeq(tuple(b))),
                      rougeL(TokenSeq(tuple(a)), TokenSeq(tuple(b)))):
            for value in (score.precision, score.recall, score.f1):
                assert 0.0 <= value <= 1.0


class TestCorpusRouge:
    def test_identical_pairs_hit_100(self):
        result = corpus_rouge([("same text here", "same text here")] * 3)
        pct = result.as_percentages()
        assert pct["rouge1"]["f1"] == 100.00
        assert pct["rougeL"]["f1"] == 100.00

    def test_mean_of_one_and_zero(self):
        result = corpus_rouge([("match match", "match match"),
                               ("aaa bbb", "ccc ddd")])
        assert result.rouge1_mean.f1 == pytest.approx(0.5)
        assert result.as_percentages()["rouge1"]["f1"] == 50.00

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            corpus_rouge([])

    def test_mean_matches_independent_recomputation(self):
        pairs = [("the cat sat on the mat", "a cat sat near that mat"),
                 ("dogs bark loudly at night", "the dog barked at the moon"),
                 ("totally different words", "nothing shared here at all"),
                 ("half of these words match", "half of other words differ")]
        result = corpus_rouge(pairs)
        f1_values = []
        for cand_text, ref_text in pairs:
            a = tokenize_metric(cand_text).tokens
            b = tokenize_metric(ref_text).tokens
            overlap = counting_overlap(list(a), list(b))
            p = overlap / len(a)
            r = overlap / len(b)
            f1_values.append(2 * p * r / (p + r) if p + r else 0.0)
        assert result.rouge1_mean.f1 == pytest.approx(sum(f1_values) / len(f1_values))


class TestConceptCoverage:
    def concept_set(self):
        return ConceptSet(utterance_id="t1", words=list(YOGA_CONCEPTS), max_k=10)

    def test_verbatim_presence_is_full_coverage(self):
        text = " ".join(YOGA_CONCEPTS)
        assert concept_coverage(text, self.concept_set(), "exact") == 1.0

    def test_worked_paraphrase_prefix4_full_coverage(self):
        assert concept_coverage(YOGA_PARAPHRASE, self.concept_set(), "prefix4") == 1.0

    def test_worked_paraphrase_exact_misses_women(self):
        coverage = concept_coverage(YOGA_PARAPHRASE, self.concept_set(), "exact")
        assert coverage == pytest.approx(0.9)

    def test_no_concept_present(self):
        assert concept_coverage("zebra quilt jumps", self.concept_set()) == 0.0

    def test_empty_concepts_rejected(self):
        with pytest.raises(ValueError):
            concept_coverage("text", ConceptSet(utterance_id="t1", words=[]))


def test_score_report_render_and_records(tmp_path):
    report = build_score_report([("same words", "same words")],
                                coverage_values=[1.0, 0.5],
                                external=[{"utterance_id": "u1",
                                           "metric_name": "semantic_sim",
                                           "value": 88.0},
                                          {"utterance_id": "u2",
                                           "metric_name": "semantic_sim",
                                           "value": 90.0}],
                                candidate_lengths=[2, 2])
    text = report.render_text()
    assert "rouge1/f1" in text and "100.00" in text
    assert "external/semantic_sim" in text and "89.00" in text
    out = tmp_path / "scores.jsonl"
    report.write_records(out)
    assert out.read_text().count("\n") == len(report.rows)
