import json

import pytest

from synthsumm.corpus import Corpus, Utterance

# Worked example texts used across modules (keep byte-exact; several
# regression values below are frozen against these strings).
YOGA_GT = ("The side angle squat pose is a great yoga exercise for pregnant women "
           "to increase leg strength and circulation as well as staying active and "
           "healthy throughout their third trimester. Stay a healthy pregnant woman "
           "with yoga poses and exercise tips from an experienced yoga instructor "
           "in this free video.")

YOGA_PARAPHRASE = ("The side angle squat pose is a beneficial yoga exercise for a "
                   "pregnant woman in their first trimester. Stay active and healthy "
                   "during pregnancy with yoga poses and exercise tips from an "
                   "experienced yoga instructor in this free video.")

YOGA_CONCEPTS = ["side", "angle", "squat", "pose", "yoga", "exercise",
                 "trimester", "women", "instructor", "video"]

YOGA_GT_WORDS = 50  # frozen hand count of YOGA_GT whitespace tokens


@pytest.fixture
def yoga_gt():
    return YOGA_GT


@pytest.fixture
def yoga_paraphrase():
    return YOGA_PARAPHRASE


@pytest.fixture
def yoga_concepts():
    return list(YOGA_CONCEPTS)


def make_utterance(idx: int, split: str = "train", transcript_words: int = 50) -> Utterance:
    words = ["today", "we", "show", "how", "to", "fix", "things", "step", "by", "step"]
    transcript = " ".join(words[i % len(words)] + str(i) for i in range(transcript_words))
    summary = " ".join(f"summary word{i} utterance{idx}".split()[i % 3]
                       for i in range(24))
    return Utterance(id=f"u{idx:03d}", transcript=transcript,
                     gt_summary=f"how to fix things {summary}", split=split)


@pytest.fixture
def small_corpus():
    return Corpus(items=[make_utterance(i) for i in range(1, 4)], name="small")


@pytest.fixture
def corpus_file(tmp_path, small_corpus):
    path = tmp_path / "small.corpus"
    with open(path, "w", encoding="utf-8") as handle:
        for utt in small_corpus:
            handle.write(json.dumps(utt.to_record(), ensure_ascii=False) + "\n")
    return path
