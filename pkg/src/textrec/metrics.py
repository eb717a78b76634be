"""Ranking quality and controllability metrics.

All functions are pure and operate on :class:`~textrec.ranking.RankedList`
values produced by the ranking module, so positions always index unseen
items only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dataio import ItemCatalog
from .ranking import RankedList


@dataclass
class MetricReport:
    """Per-user metric values with mean/std, optionally pooled across seeds."""

    name: str
    k: int
    per_user: np.ndarray
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.per_user, dtype=np.float64)
        self.per_user = values
        self.mean = float(values.mean()) if values.size else float("nan")
        self.std = float(values.std()) if values.size else float("nan")

    @property
    def stderr(self) -> float:
        n = self.per_user.size
        return float(self.std / math.sqrt(n)) if n else float("nan")


def pool_across_seeds(reports: Sequence[MetricReport]) -> tuple[float, float]:
    """Mean and std of the per-seed means."""
    means = np.asarray([r.mean for r in reports], dtype=np.float64)
    return float(means.mean()), float(means.std())


def _discount(position: int) -> float:
    """1-based position discount 1/log2(position + 1)."""
    return 1.0 / math.log2(position + 1)


def recall_at_k(ranked: RankedList, relevant: Iterable[int], k: int) -> float:
    """|top-k hits| / min(k, |relevant|)."""
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = sum(1 for item in ranked.items[:k] if item in relevant)
    return hits / min(k, len(relevant))


def ndcg_at_k(ranked: RankedList, relevant: Iterable[int], k: int) -> float:
    """Binary-relevance truncated NDCG with the ideal capped at |relevant|."""
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    dcg = sum(_discount(pos) for pos, item in enumerate(ranked.items[:k], start=1)
              if item in relevant)
    idcg = sum(_discount(pos) for pos in range(1, min(k, len(relevant)) + 1))
    return dcg / idcg


def ndcg_genre_at_k(ranked: RankedList, genre: int, catalog: ItemCatalog, k: int) -> float:
    """Genre-wise NDCG over the unseen catalog.

    Gain at position i is 1 when the item there carries ``genre``; the ideal
    is capped at the number of unseen catalog items carrying the genre.
    Returns 0 when no unseen item carries the genre.
    """
    if genre < 0 or genre >= catalog.n_genres:
        raise ValueError(f"genre id {genre} outside vocabulary of {catalog.n_genres}")
    dcg = sum(_discount(pos) for pos, item in enumerate(ranked.items[:k], start=1)
              if genre in catalog.genres_of(item))
    n_genre = sum(1 for i in catalog.item_order
                  if genre in catalog.genres_of(i) and i not in ranked.masked_seen)
    if n_genre == 0:
        return 0.0
    idcg = sum(_discount(pos) for pos in range(1, min(k, n_genre) + 1))
    return dcg / idcg


def delta_at_k(ndcg_original: float, ndcg_augmented: float) -> float:
    """Original minus augmented genre NDCG. Consumers report the magnitudes
    of the shift for the promoted and demoted genres separately."""
    return ndcg_original - ndcg_augmented


def delta_rank(original: int, after: int) -> int:
    """Original minus post-edit rank; positive means the edit promoted the item."""
    if original < 1 or after < 1:
        raise ValueError("ranks are 1-based")
    return original - after


def streaming_mean_std(values: Iterable[float]) -> tuple[float, float]:
    """Welford one-pass mean and population std; cross-checks the numpy path."""
    n = 0
    mean = 0.0
    m2 = 0.0
    for v in values:
        n += 1
        d = v - mean
        mean += d / n
        m2 += d * (v - mean)
    if n == 0:
        return float("nan"), float("nan")
    return mean, math.sqrt(m2 / n)
