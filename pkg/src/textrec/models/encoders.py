"""Profile encoders: map a user summary (or genre profile) to a Gaussian latent.

Two encoders ship with the package. The hashed-token encoder is fully
deterministic and vocabulary-free, which keeps every benchmark reproducible
without a pretrained artifact; the adapter wraps any external sentence
embedder behind the same Gaussian head so a pretrained bidirectional
encoder with low-rank adapters can slot in later.
"""

from __future__ import annotations

import re
import zlib
from typing import Callable, Protocol, Sequence

import numpy as np
import torch
import torch.nn as nn

from .backbones import normalize_per_concept
from .genre import GenreProfile

SIGMA_MIN = 1e-4
SIGMA_MAX = 1e2

_TOKEN_RE = re.compile(r"[a-z0-9']+")
_SENTENCE_RE = re.compile(r"[.!?\n]+")
_NEGATION_CUES = (
    "not enjoy", "doesn't enjoy", "dislike", "disinterest", "least favorite",
    "least favourite", "avoid", "conversely", "does not", "don't enjoy",
    "lesser interest", "less appreciated", "steer clear", "not captivate",
)


def sentence_features(text: str) -> list[str]:
    """Hashed-feature stream for a summary: unigrams and bigrams, with
    tokens inside dislike-scoped sentences marked.

    The scope marker is what lets a bag-of-features encoder tell "enjoys
    westerns ... avoids horror" apart from its flipped rewrite; plain
    unigrams are identical between the two.
    """
    feats: list[str] = []
    for sentence in _SENTENCE_RE.split(text.lower()):
        if not sentence.strip():
            continue
        negated = any(cue in sentence for cue in _NEGATION_CUES)
        prefix = "neg##" if negated else ""
        tokens = _TOKEN_RE.findall(sentence)
        feats.extend(prefix + t for t in tokens)
        feats.extend(f"{prefix}{a}_{b}" for a, b in zip(tokens, tokens[1:]))
    return feats


def feature_buckets(feats: Sequence[str], n_buckets: int) -> np.ndarray:
    """Stable CRC32 bucket per feature; independent of process hash seeds."""
    return np.asarray([zlib.crc32(f.encode()) % n_buckets for f in feats], dtype=np.int64)


class GaussianHead(nn.Module):
    """MLP from a pooled embedding to (mu, sigma) with sigma clamped."""

    def __init__(self, in_dim: int, hidden: int, latent_dim: int, n_concepts: int = 1):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden),
            nn.Tanh(),
            nn.Linear(hidden, 2 * latent_dim),
        )
        self.n_concepts = n_concepts

    def forward(self, pooled: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        mu, logvar = self.net(pooled).chunk(2, dim=-1)
        if self.n_concepts > 1:
            mu = normalize_per_concept(mu, self.n_concepts)
        sigma = torch.clamp(torch.exp(0.5 * logvar), SIGMA_MIN, SIGMA_MAX)
        return mu, sigma


class ProfileEncoder(Protocol):
    """Anything that turns user profiles into a Gaussian latent batch."""

    latent_dim: int

    def encode(self, profiles: Sequence) -> tuple[torch.Tensor, torch.Tensor]: ...


class HashedTextEncoder(nn.Module):
    """Deterministic hashed bag-of-features text encoder with Gaussian head.

    Features hash into a fixed embedding table, are mean-pooled, and pass
    through the head. No vocabulary, no pretrained weights.
    """

    def __init__(self, latent_dim: int, n_buckets: int = 4096, emb_dim: int = 64,
                 head_hidden: int = 128, n_concepts: int = 1, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.latent_dim = latent_dim
        self.n_buckets = n_buckets
        self.table = nn.Parameter(torch.randn(n_buckets, emb_dim) * 0.1)
        self.head = GaussianHead(emb_dim, head_hidden, latent_dim, n_concepts)

    def pool(self, texts: Sequence[str]) -> torch.Tensor:
        pooled = []
        for text in texts:
            if not text or not text.strip():
                raise ValueError("cannot encode empty text")
            feats = sentence_features(text)
            if not feats:
                raise ValueError("text produced zero tokens")
            idx = torch.from_numpy(feature_buckets(feats, self.n_buckets))
            pooled.append(self.table[idx].mean(dim=0))
        return torch.stack(pooled)

    def encode(self, texts: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
        return self.head(self.pool(texts))

    forward = encode


class EmbedderAdapter(nn.Module):
    """Gaussian head over an external sentence embedder.

    ``embed_fn`` maps a list of texts to a float tensor (batch, emb_dim);
    fine-tuning hooks for the embedder itself are out of scope here, the
    head alone trains.
    """

    def __init__(self, embed_fn: Callable[[Sequence[str]], torch.Tensor], emb_dim: int,
                 latent_dim: int, head_hidden: int = 256, n_concepts: int = 1, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.latent_dim = latent_dim
        self.embed_fn = embed_fn
        self.head = GaussianHead(emb_dim, head_hidden, latent_dim, n_concepts)

    def encode(self, texts: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
        for text in texts:
            if not text or not text.strip():
                raise ValueError("cannot encode empty text")
        return self.head(self.embed_fn(texts))

    forward = encode


class GenreProfileEncoder(nn.Module):
    """Gaussian head over normalized genre-count vectors."""

    def __init__(self, n_genres: int, latent_dim: int, head_hidden: int = 128,
                 n_concepts: int = 1, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.latent_dim = latent_dim
        self.n_genres = n_genres
        self.head = GaussianHead(n_genres, head_hidden, latent_dim, n_concepts)

    def encode(self, profiles: Sequence[GenreProfile]) -> tuple[torch.Tensor, torch.Tensor]:
        rows = np.stack([p.weights for p in profiles]).astype(np.float32)
        return self.head(torch.from_numpy(rows))

    forward = encode
