"""Corpus-level text statistics: lengths, pairwise edit distance, BLEU.

Edit distance is word-level Levenshtein (corpus values are commensurate
with word counts). BLEU uses up to 4-grams with uniform weights and the
standard brevity penalty; any zero n-gram precision zeroes the score.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .records import UserSummary


@dataclass(frozen=True)
class SummaryStats:
    mean_length: float
    length_percentiles: dict[str, float]
    mean_pairwise_edit_distance: float
    std_pairwise_edit_distance: float
    mean_pairwise_bleu4: float
    std_pairwise_bleu4: float
    n_pairs: int
    pair_seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean_pairwise_bleu4 <= 1.0:
            raise ValueError("BLEU must lie in [0, 1]")
        if self.mean_pairwise_edit_distance < 0:
            raise ValueError("edit distance must be >= 0")


def words(text: str) -> list[str]:
    return text.split()


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Word-level Levenshtein distance, row-vectorized."""
    if len(a) == 0:
        return len(b)
    if len(b) == 0:
        return len(a)
    bb = np.asarray(b, dtype=object)
    m = len(b)
    js = np.arange(m + 1)
    prev = js.copy()
    for i, wa in enumerate(a, start=1):
        sub = prev[:-1] + (bb != wa)
        base = np.concatenate(([i], np.minimum(prev[1:] + 1, sub)))
        prev = np.minimum.accumulate(base - js) + js
    return int(prev[-1])


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: str, reference: str) -> float:
    """Sentence BLEU with effective order min(4, len(cand), len(ref));
    returns 1 exactly on identical texts."""
    c = words(candidate)
    r = words(reference)
    n_max = min(4, len(c), len(r))
    if n_max == 0:
        return 0.0
    log_precision = 0.0
    for n in range(1, n_max + 1):
        cand = _ngram_counts(c, n)
        ref = _ngram_counts(r, n)
        overlap = sum(min(count, ref[g]) for g, count in cand.items())
        total = len(c) - n + 1
        if overlap == 0:
            return 0.0
        log_precision += math.log(overlap / total)
    log_precision /= n_max
    brevity = 1.0 if len(c) >= len(r) else math.exp(1.0 - len(r) / len(c))
    return brevity * math.exp(log_precision)


def symmetric_bleu4(a: str, b: str) -> float:
    return 0.5 * (bleu4(a, b) + bleu4(b, a))


def sample_pairs(n: int, count: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform unordered pairs without replacement; exhaustive when small."""
    total = n * (n - 1) // 2
    if total <= count:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen: set[int] = set()
    while len(chosen) < count:
        chosen.add(int(rng.integers(total)))
    pairs = []
    for rank in sorted(chosen):
        # unrank a triangular index: row i has (n - 1 - i) pairs
        i = 0
        remaining = rank
        row = n - 1
        while remaining >= row:
            remaining -= row
            row -= 1
            i += 1
        pairs.append((i, i + 1 + remaining))
    return pairs


def corpus_stats(summaries: Sequence[UserSummary], pair_sample: int = 10_000,
                 seed: int = 0) -> SummaryStats:
    """Length distribution plus mean pairwise edit distance and BLEU over a
    seeded uniform sample of unordered pairs."""
    if len(summaries) < 2:
        raise ValueError("need at least two summaries")
    lengths = np.asarray([s.words for s in summaries], dtype=np.float64)
    tokenized = [words(s.text) for s in summaries]
    rng = np.random.default_rng(seed)
    pairs = sample_pairs(len(summaries), pair_sample, rng)
    distances = np.asarray([edit_distance(tokenized[i], tokenized[j]) for i, j in pairs],
                           dtype=np.float64)
    bleus = np.asarray([symmetric_bleu4(summaries[i].text, summaries[j].text)
                        for i, j in pairs], dtype=np.float64)
    percentiles = {
        "min": float(lengths.min()),
        "p10": float(np.percentile(lengths, 10)),
        "p50": float(np.percentile(lengths, 50)),
        "p90": float(np.percentile(lengths, 90)),
        "max": float(lengths.max()),
    }
    return SummaryStats(
        mean_length=float(lengths.mean()),
        length_percentiles=percentiles,
        mean_pairwise_edit_distance=float(distances.mean()),
        std_pairwise_edit_distance=float(distances.std()),
        mean_pairwise_bleu4=float(bleus.mean()),
        std_pairwise_bleu4=float(bleus.std()),
        n_pairs=len(pairs),
        pair_seed=seed,
    )
