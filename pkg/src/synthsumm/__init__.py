"""Synthetic reference summaries for transcript corpora.

Pipeline stages: generate LLM-sampled reference summaries (direct from the
transcript or by paraphrasing the existing reference, optionally forced to
contain extracted concept words), validate and score them lexically,
assemble training manifests for the label-mixing strategies, and run a
blinded four-option human validity evaluation with confidence intervals.
"""

from .concepts import ConceptSet, extract_concepts, lenient_token_match
from .corpus import Corpus, Utterance, load_corpus, save_corpus, word_count
from .humaneval import (EvalItem, EvalOption, EvalResponse, ValidityReport,
                        aggregate, create_assignments)
from .llm import CompletionRecord, LLMClient, MockResponder, SamplingParams, cache_key
from .manifests import Strategy, TrainingManifest, assemble, build_augmented_testset
from .metrics import (RougeScore, TokenSeq, concept_coverage, corpus_rouge,
                      rouge1, rougeL, tokenize_metric)
from .prompts import (PromptSpec, PromptVariant, build_direct_prompt,
                      build_paraphrase_prompt, length_bounds)
from .sampler import SamplingRun, SyntheticSummary, ValidationVerdict, augment_corpus

__version__ = "0.1.0"

__all__ = [
    "ConceptSet", "extract_concepts", "lenient_token_match",
    "Corpus", "Utterance", "load_corpus", "save_corpus", "word_count",
    "EvalItem", "EvalOption", "EvalResponse", "ValidityReport",
    "aggregate", "create_assignments",
    "CompletionRecord", "LLMClient", "MockResponder", "SamplingParams", "cache_key",
    "Strategy", "TrainingManifest", "assemble", "build_augmented_testset",
    "RougeScore", "TokenSeq", "concept_coverage", "corpus_rouge",
    "rouge1", "rougeL", "tokenize_metric",
    "PromptSpec", "PromptVariant", "build_direct_prompt",
    "build_paraphrase_prompt", "length_bounds",
    "SamplingRun", "SyntheticSummary", "ValidationVerdict", "augment_corpus",
    "__version__",
]
