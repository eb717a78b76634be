"""Inference-time ranking: latent mixing, guided arithmetic, masked top-k.

All rankings use Gaussian means, never samples, so repeated calls agree
bit for bit. Ties break toward the lower item id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .models import AlignedRecommender, GenreProfile


@dataclass(frozen=True)
class MixSpec:
    """How to combine the history latent with the profile latent.

    With ``guidance`` set, alpha is ignored and the fixed half-weight forms
    apply: positive guidance averages the two latents, negative guidance
    subtracts the guidance latent and halves.
    """

    alpha: float = 0.5
    guidance: str | None = None
    guidance_mode: str = "positive"

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside [0, 1]")
        if self.guidance is not None and not self.guidance.strip():
            raise ValueError("guidance text must be non-empty when present")
        if self.guidance_mode not in {"positive", "negative"}:
            raise ValueError(f"unknown guidance mode {self.guidance_mode!r}")


@dataclass(frozen=True)
class RankedList:
    """Top-k items with scores; masked items never appear."""

    items: tuple[int, ...]
    scores: tuple[float, ...]
    masked_seen: frozenset[int]
    k: int
    truncated: bool = True  # False when fewer unseen items exist than k

    def __post_init__(self) -> None:
        if any(i in self.masked_seen for i in self.items):
            raise ValueError("masked item leaked into the ranking")
        for a, b in zip(self.scores, self.scores[1:]):
            if b > a:
                raise ValueError("scores must be non-increasing")


def mix_latents(z_s: torch.Tensor, z_r: torch.Tensor, alpha: float) -> torch.Tensor:
    """Convex combination alpha * z_s + (1 - alpha) * z_r."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1]")
    if z_s.shape != z_r.shape:
        raise ValueError("latent shapes differ")
    return alpha * z_s + (1.0 - alpha) * z_r

def guided_latent(z_r: torch.Tensor, z_guidance: torch.Tensor, mode: str) -> torch.Tensor:
    """Half-weight steering: (z_r + z_g)/2 to favor the guidance phrase,
    (z_r - z_g)/2 to push away from it."""
    if z_r.shape != z_guidance.shape:
        raise ValueError("latent shapes differ")
    if mode == "positive":
        return (z_r + z_guidance) / 2.0
    if mode == "negative":
        return (z_r - z_guidance) / 2.0
    raise ValueError(f"unknown guidance mode {mode!r}")


def rank_items(scores: np.ndarray, item_order: Sequence[int], seen: Sequence[int],
               k: int | None = None) -> RankedList:
    """Order unseen items by descending score, ties toward lower item id."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or len(scores) != len(item_order):
        raise ValueError("scores must align with the item axis")
    item_ids = np.asarray(item_order, dtype=np.int64)
    seen_set = frozenset(int(s) for s in seen)
    if seen_set:
        unseen_mask = ~np.isin(item_ids, np.asarray(sorted(seen_set), dtype=np.int64))
    else:
        unseen_mask = np.ones(len(item_ids), dtype=bool)
    ids = item_ids[unseen_mask]
    vals = scores[unseen_mask]
    order = np.lexsort((ids, -vals))
    truncated = True
    if k is None:
        k = len(ids)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(ids):
        truncated = False
        k_eff = len(ids)
    else:
        k_eff = k
    top = order[:k_eff]
    return RankedList(
        items=tuple(int(i) for i in ids[top]),
        scores=tuple(float(v) for v in vals[top]),
        masked_seen=seen_set,
        k=k,
        truncated=truncated,
    )


def _resolve_latent(model: AlignedRecommender, row: np.ndarray | torch.Tensor,
                    profile: str | GenreProfile | None, spec: MixSpec) -> torch.Tensor:
    z_r = model.encode_blackbox(row).mu
    if spec.guidance is not None:
        z_g = model.encode_text([spec.guidance]).mu
        return guided_latent(z_r, z_g, spec.guidance_mode)
    if spec.alpha == 0.0:
        return z_r
    if profile is None:
        raise ValueError("a summary (or genre profile) is required when alpha > 0")
    z_s = model.encode_profile([profile]).mu
    return mix_latents(z_s, z_r, spec.alpha)


def recommend(model: AlignedRecommender, row: np.ndarray | torch.Tensor,
              profile: str | GenreProfile | None, spec: MixSpec, k: int,
              seen: Sequence[int]) -> RankedList:
    """Top-k unseen items for one user.

    ``seen`` holds the raw item ids of the user's input interactions;
    evaluation items stay rankable.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    with torch.no_grad():
        z = _resolve_latent(model, row, profile, spec)
        probs = model.decode(z)[0].numpy()
    return rank_items(probs, model.item_order, seen, k)


def rank_of(model: AlignedRecommender, row: np.ndarray | torch.Tensor,
            profile: str | GenreProfile | None, spec: MixSpec, item_id: int,
            seen: Sequence[int]) -> int:
    """1-based position of ``item_id`` in the full masked ranking."""
    if item_id in set(seen):
        raise ValueError(f"item {item_id} is in the seen set")
    ranked = recommend(model, row, profile, spec, k=model.n_items, seen=seen)
    try:
        return ranked.items.index(item_id) + 1
    except ValueError:
        raise ValueError(f"item {item_id} not found in the catalog ranking") from None
