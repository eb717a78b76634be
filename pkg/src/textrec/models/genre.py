"""Genre-count user profiles: the inspectable alternative to text summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..dataio import DataError, ItemCatalog

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class GenreProfile:
    """Normalized genre-count vector over the catalog vocabulary.

    ``degenerate`` marks the uniform fallback used when a user has no
    positive items, so downstream code can report it.
    """

    weights: np.ndarray
    vocabulary: tuple[str, ...]
    degenerate: bool = False

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or len(w) != len(self.vocabulary):
            raise ValueError("weights must be a vector over the genre vocabulary")
        if (w < -SIMPLEX_TOL).any() or abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("weights must lie on the simplex")

    def top_genres(self, n: int = 3) -> list[str]:
        order = np.argsort(-self.weights, kind="stable")
        return [self.vocabulary[i] for i in order[:n]]

    def bottom_genres(self, n: int = 3) -> list[str]:
        order = np.argsort(self.weights, kind="stable")
        return [self.vocabulary[i] for i in order[:n]]

    def favorite(self) -> int:
        """Genre id with the largest weight (ties: lowest id)."""
        return int(np.argmax(self.weights))

    def least_favorite(self) -> int:
        """Genre id with the smallest weight (ties: lowest id)."""
        return int(np.argmin(self.weights))

    def swapped(self, a: int, b: int) -> "GenreProfile":
        """Profile with the weights of genres ``a`` and ``b`` exchanged."""
        w = self.weights.copy()
        w[a], w[b] = w[b], w[a]
        return GenreProfile(w, self.vocabulary)

    def one_hot(self, genre: int) -> "GenreProfile":
        """Profile with all mass on ``genre``: a vertex of the simplex."""
        w = np.zeros_like(self.weights)
        w[genre] = 1.0
        return GenreProfile(w, self.vocabulary)


def genre_profile(positives: Sequence[int], catalog: ItemCatalog) -> GenreProfile:
    """Normalized count of genres across positively rated items.

    Multi-genre items increment every genre they carry. With no positives
    the profile falls back to uniform and is flagged degenerate.
    """
    counts = np.zeros(catalog.n_genres, dtype=np.float64)
    for item_id in positives:
        if item_id not in catalog.items:
            raise DataError(f"unknown item id {item_id}")
        for g in catalog.genres_of(item_id):
            counts[g] += 1.0
    total = counts.sum()
    if total == 0:
        if catalog.n_genres == 0:
            raise DataError("catalog has an empty genre vocabulary")
        return GenreProfile(np.full(catalog.n_genres, 1.0 / catalog.n_genres),
                            tuple(catalog.genre_vocabulary), degenerate=True)
    return GenreProfile(counts / total, tuple(catalog.genre_vocabulary))


def profile_from_ratings(inter_items: Iterable[int], inter_positive: Iterable[bool],
                         catalog: ItemCatalog) -> GenreProfile:
    positives = [i for i, pos in zip(inter_items, inter_positive) if pos]
    return genre_profile(positives, catalog)
