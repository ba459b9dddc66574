"""Prompt rendering for the three synthetic-summary variants.

Template wording is frozen byte-for-byte against the golden files under
fixtures/prompts/; do not reflow or "fix" the phrasing, downstream caches
key on the exact text. The paraphrase length window is computed literally
as min(gt_len - 10, 20) to max(gt_len + 5, 20) even though the lower rule
looks inverted for long summaries; the lower bound is clamped at zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .concepts import ConceptSet
from .corpus import word_count

DIRECT_BOUNDS = (40, 60)

DIRECT_TEMPLATE = (
    "You are here to create an extractive summary from the transcript. "
    "An extractive summary uses words from the input to convey the important "
    "portions of the video. Please make sure that the summary has between "
    "40 and 60 words. Respond with only the extractive summary for: "
    "{transcription}. transcription:"
)

PARAPHRASE_TEMPLATE = (
    "You are here to paraphrase a given summary in the same style as the "
    "provided input. Please make sure that the summary has between "
    "{lo} to {hi} words. given summary:"
)

PARAPHRASE_CONCEPT_TEMPLATE = (
    "You are here to paraphrase a given summary in the same style as the "
    "provided input. Please make sure that the summary has between "
    "{lo} to {hi} words. Also please include these words in the summary: "
    "{important_keys}. given summary:"
)


class PromptVariant(str, Enum):
    DIRECT = "direct"
    PARAPHRASE_PLAIN = "paraphrase"
    PARAPHRASE_CONCEPT = "paraphrase-concept"


class PromptInputError(ValueError):
    """Prompt construction preconditions violated."""


@dataclass(frozen=True)
class PromptSpec:
    """A fully rendered prompt plus the word-count window it encodes."""

    variant: PromptVariant
    instruction: str
    payload: str
    lo: int
    hi: int
    concept_words: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.lo > self.hi:
            raise PromptInputError(f"lo {self.lo} exceeds hi {self.hi}")
        if self.variant is PromptVariant.PARAPHRASE_CONCEPT and not self.concept_words:
            raise PromptInputError("paraphrase-concept prompt requires concept words")

    @property
    def text(self) -> str:
        """Complete prompt as sent to the model: instruction then payload."""
        return f"{self.instruction} {self.payload}"


def length_bounds(variant: PromptVariant, gt_len: int) -> tuple[int, int]:
    """Word-count window for a variant; gt_len is ignored for direct prompts."""
    if variant is PromptVariant.DIRECT:
        return DIRECT_BOUNDS
    lo = max(0, min(gt_len - 10, 20))
    hi = max(gt_len + 5, 20)
    return lo, hi


def build_direct_prompt(transcript: str) -> PromptSpec:
    """Extractive-summary prompt over a transcript; window fixed at 40-60."""
    if not transcript or not transcript.strip():
        raise PromptInputError("transcript must be nonempty")
    instruction = DIRECT_TEMPLATE.format(transcription=transcript)
    lo, hi = DIRECT_BOUNDS
    return PromptSpec(variant=PromptVariant.DIRECT, instruction=instruction,
                      payload=transcript, lo=lo, hi=hi)


def build_paraphrase_prompt(gt_summary: str,
                            concepts: ConceptSet | None = None) -> PromptSpec:
    """Paraphrase prompt over a reference summary, optionally concept-forced.

    Concept words are injected in rank order, comma-space separated, with a
    terminal period.
    """
    if not gt_summary or not gt_summary.strip():
        raise PromptInputError("gt_summary must be nonempty")
    gt_len = word_count(gt_summary)
    if concepts is None:
        lo, hi = length_bounds(PromptVariant.PARAPHRASE_PLAIN, gt_len)
        instruction = PARAPHRASE_TEMPLATE.format(lo=lo, hi=hi)
        return PromptSpec(variant=PromptVariant.PARAPHRASE_PLAIN,
                          instruction=instruction, payload=gt_summary, lo=lo, hi=hi)
    if not concepts.words:
        raise PromptInputError("concept set is present but empty")
    lo, hi = length_bounds(PromptVariant.PARAPHRASE_CONCEPT, gt_len)
    instruction = PARAPHRASE_CONCEPT_TEMPLATE.format(
        lo=lo, hi=hi, important_keys=", ".join(concepts.words))
    return PromptSpec(variant=PromptVariant.PARAPHRASE_CONCEPT,
                      instruction=instruction, payload=gt_summary, lo=lo, hi=hi,
                      concept_words=tuple(concepts.words))
