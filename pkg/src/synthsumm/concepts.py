"""Ranked concept-word (keyword) extraction from reference summaries.

The extractor is deliberately self-contained and deterministic so the same
summary always yields the same concept list on any machine. It approximates
"content nouns and verbs" without a tagger, using four documented rules:

1. Tokenize: lowercase, split on non-alphanumeric characters, keep tokens of
   length >= 2 that are not in the shipped stopword list.
2. Screen out likely adjectives/adverbs/verb inflections by suffix
   (-ing, -ed, -ly, -ive, -ous, -ful, -less, -ish, -ant, -ent, and -y after a
   consonant), each with a minimum stem length so short nouns survive, and
   skip tokens immediately preceded by "to" (bare infinitives).
3. Chunk the token stream on stopwords and clause punctuation (.!?;:,); the
   last surviving token of a chunk is its head (typically the head noun of
   the phrase).
4. Score each distinct word: occurrence count + 0.2 if it heads any chunk
   + 1/(first occurrence position). Rank by score, break exact ties by first
   occurrence then alphabetically, and return the top max_k.

The head bonus and the position term let head nouns from late phrases
compete with early modifiers, which plain frequency ranking cannot do.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")
_CLAUSE_SPLIT = re.compile(r"[.!?;:,]+")
_VOWELS = set("aeiou")

# (suffix, minimum stem length once the suffix is removed)
_NON_NOUN_SUFFIXES = (
    ("ing", 4),
    ("ed", 4),
    ("ly", 3),
    ("ive", 3),
    ("ous", 3),
    ("ful", 3),
    ("less", 3),
    ("ish", 3),
    ("ant", 4),
    ("ent", 4),
)

DEFAULT_MAX_K = 10
_STOPWORDS_PATH = Path(__file__).parent / "data" / "stopwords.txt"
_DEFAULT_STOPWORDS: frozenset[str] | None = None

MATCH_MODES = ("exact", "prefix4", "off")


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stopword list, one word per line; the shipped list when path is None."""
    global _DEFAULT_STOPWORDS
    if path is None:
        if _DEFAULT_STOPWORDS is None:
            _DEFAULT_STOPWORDS = _read_stopwords(_STOPWORDS_PATH)
        return _DEFAULT_STOPWORDS
    return _read_stopwords(Path(path))


def _read_stopwords(path: Path) -> frozenset[str]:
    words = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word:
            words.add(word)
    return frozenset(words)


@dataclass
class ConceptSet:
    """Ranked concept words extracted from one summary."""

    utterance_id: str
    words: list[str] = field(default_factory=list)
    max_k: int = DEFAULT_MAX_K


def tokenize_words(text: str) -> list[str]:
    """Lowercase alphanumeric tokens in text order."""
    return [tok for tok in _TOKEN_SPLIT.split(text.lower()) if tok]


def _suffix_screened(word: str) -> bool:
    for suffix, min_stem in _NON_NOUN_SUFFIXES:
        if word.endswith(suffix) and len(word) - len(suffix) >= min_stem:
            return True
    # -y adjectives (healthy, sticky); spare -ay/-ey/-oy/-uy nouns and short words
    if word.endswith("y") and len(word) >= 5 and word[-2] not in _VOWELS:
        return True
    return False


def extract_concepts(summary: str, max_k: int = DEFAULT_MAX_K, *,
                     utterance_id: str = "",
                     stopwords: frozenset[str] | None = None) -> ConceptSet:
    """Top max_k concept words of a summary under the documented ranking.

    Deterministic: identical (summary, max_k) always produces the same list,
    and the list for max_k is a prefix of the list for max_k + 1.
    """
    if max_k < 1:
        raise ValueError("max_k must be >= 1")
    if stopwords is None:
        stopwords = load_stopwords()

    # stats[word] = [count, first_position (1-based), heads_any_chunk]
    stats: dict[str, list] = {}
    chunk: list[str] = []  # candidate words of the current stopword-free run
    position = 0

    def close_chunk() -> None:
        if chunk:
            stats[chunk[-1]][2] = True
        chunk.clear()

    for clause in _CLAUSE_SPLIT.split(summary.lower()):
        prev_token: str | None = None
        for token in _TOKEN_SPLIT.split(clause):
            if not token:
                continue
            position += 1
            if token in stopwords:
                close_chunk()
            else:
                candidate = (len(token) >= 2
                             and not _suffix_screened(token)
                             and prev_token != "to")
                if candidate:
                    entry = stats.setdefault(token, [0, position, False])
                    entry[0] += 1
                    chunk.append(token)
            prev_token = token
        close_chunk()

    def score(word: str) -> float:
        count, first_pos, is_head = stats[word]
        return count + (0.2 if is_head else 0.0) + 1.0 / first_pos

    ranked = sorted(stats, key=lambda w: (-score(w), stats[w][1], w))
    return ConceptSet(utterance_id=utterance_id, words=ranked[:max_k], max_k=max_k)


def lenient_token_match(concept: str, token: str, mode: str = "prefix4") -> bool:
    """Whether a generated token counts as a hit for a concept word.

    exact    -- string equality only.
    prefix4  -- equality, or agreement on the first min(4, len) characters,
                or (for equal-length words of >= 4 chars) a single differing
                character after the first position, which covers close
                inflection pairs such as women/woman.
    off      -- always a miss (coverage checking disabled).
    """
    if mode not in MATCH_MODES:
        raise ValueError(f"unknown match mode {mode!r}")
    if mode == "off":
        return False
    if concept == token:
        return True
    if mode == "exact":
        return False
    k = min(4, len(concept), len(token))
    if k > 0 and concept[:k] == token[:k]:
        return True
    if len(concept) == len(token) and len(concept) >= 4 and concept[0] == token[0]:
        diffs = sum(1 for a, b in zip(concept, token) if a != b)
        if diffs == 1:
            return True
    return False


def concept_hits(text_tokens: list[str], concepts: list[str], mode: str) -> list[str]:
    """Concept words from ``concepts`` that are missing from the tokens."""
    token_set = set(text_tokens)
    missing = []
    for concept in concepts:
        if mode == "exact":
            found = concept in token_set
        else:
            found = any(lenient_token_match(concept, tok, mode) for tok in token_set)
        if not found:
            missing.append(concept)
    return missing


def save_concept_cache(concept_sets: list[ConceptSet], path: str) -> None:
    """Line-delimited {utterance_id, words} cache records."""
    import json
    with open(path, "w", encoding="utf-8") as handle:
        for cs in concept_sets:
            handle.write(json.dumps({"utterance_id": cs.utterance_id, "words": cs.words},
                                    ensure_ascii=False))
            handle.write("\n")


def load_concept_cache(path: str) -> dict[str, ConceptSet]:
    import json
    cache: dict[str, ConceptSet] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            cache[record["utterance_id"]] = ConceptSet(
                utterance_id=record["utterance_id"],
                words=list(record["words"]),
                max_k=max(1, len(record["words"])))
    return cache
