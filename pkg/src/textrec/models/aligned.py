"""The aligned recommender: frozen rating encoder, trainable profile encoder,
and a shared decoder initialized from the backbone's.

The profile encoder may consume text summaries or genre profiles; either
way its latent lives in the backbone's space, so any convex mix of the two
decodes through the same head.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn

from ..dataio import ItemCatalog
from .backbones import Backbone, BackboneSpec, normalize_per_concept
from .encoders import GenreProfileEncoder
from .genre import GenreProfile


class NumericError(RuntimeError):
    """Non-finite values surfaced from a model forward pass."""


@dataclass
class LatentGaussian:
    """Diagonal Gaussian over the latent space; batched (batch, dim)."""

    mu: torch.Tensor
    sigma: torch.Tensor

    def __post_init__(self) -> None:
        if self.mu.shape != self.sigma.shape:
            raise ValueError("mu and sigma must have matching shapes")
        if not torch.isfinite(self.mu).all() or not torch.isfinite(self.sigma).all():
            raise NumericError("non-finite latent")
        if (self.sigma < 0).any():
            raise ValueError("sigma must be non-negative")

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]

    def detached(self) -> "LatentGaussian":
        return LatentGaussian(self.mu.detach(), self.sigma.detach())


def sample_latent(g: LatentGaussian, seed: int | None = None, mode: str = "sample",
                  generator: torch.Generator | None = None) -> torch.Tensor:
    """Reparameterized draw mu + sigma * eps, or the mean when mode="mean"."""
    if mode == "mean":
        return g.mu
    if mode != "sample":
        raise ValueError(f"unknown mode {mode!r}")
    if generator is None:
        generator = torch.Generator()
        generator.manual_seed(0 if seed is None else seed)
    eps = torch.randn(g.mu.shape, generator=generator, dtype=g.mu.dtype)
    return g.mu + g.sigma * eps


class AlignedRecommender(nn.Module):
    """Bundle of backbone (frozen), profile encoder, and decoder copy.

    The decoder starts as a deep copy of the backbone's decoder and is the
    only rating-side component that trains. ``catalog_hash`` binds the model
    to the item axis it was built for.
    """

    def __init__(self, backbone: Backbone, profile_encoder: nn.Module,
                 catalog: ItemCatalog):
        super().__init__()
        spec = backbone.spec
        if not spec.stochastic:
            raise ValueError(f"{spec.kind} has no Gaussian latent; cannot align to it")
        if profile_encoder.latent_dim != spec.latent_dim:
            raise ValueError("profile encoder and backbone disagree on latent dim")
        if spec.n_items != catalog.n_items:
            raise ValueError("backbone and catalog disagree on item count")
        self.backbone = backbone
        self.profile_encoder = profile_encoder
        self.decoder = backbone.clone_decoder()
        self.catalog_hash = catalog.content_hash()
        self.genre_vocabulary = tuple(catalog.genre_vocabulary)
        self.item_order = tuple(catalog.item_order)
        self.n_items = spec.n_items
        self.latent_dim = spec.latent_dim
        self._freeze_backbone()

    def _freeze_backbone(self) -> None:
        self.backbone.eval()
        for p in self.backbone.parameters():
            p.requires_grad_(False)

    @property
    def macrid_concepts(self) -> int:
        spec = self.backbone.spec
        return spec.macrid.n_concepts if spec.kind == "macrid-vae" else 1

    @property
    def genre_based(self) -> bool:
        return isinstance(self.profile_encoder, GenreProfileEncoder)

    def trainable_parameters(self):
        yield from self.profile_encoder.parameters()
        yield from self.decoder.parameters()

    def encode_blackbox(self, rows: torch.Tensor | np.ndarray) -> LatentGaussian:
        """Rating rows -> frozen-backbone Gaussian, dropout disabled."""
        if isinstance(rows, np.ndarray):
            rows = torch.from_numpy(rows.astype(np.float32))
        if rows.ndim == 1:
            rows = rows.unsqueeze(0)
        if rows.shape[1] != self.n_items:
            raise ValueError(f"expected rows of width {self.n_items}, got {rows.shape[1]}")
        self.backbone.eval()
        with torch.no_grad():
            mu, sigma = self.backbone.encode(rows)
        return LatentGaussian(mu, sigma)

    def encode_profile(self, profiles: Sequence[str] | Sequence[GenreProfile]) -> LatentGaussian:
        """Summaries (or genre profiles) -> trainable-encoder Gaussian."""
        mu, sigma = self.profile_encoder.encode(profiles)
        return LatentGaussian(mu, sigma)

    def encode_text(self, texts: Sequence[str]) -> LatentGaussian:
        if self.genre_based:
            raise ValueError("this model encodes genre profiles, not text")
        return self.encode_profile(texts)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        """Latents -> probability rows via softmax over decoder logits."""
        logits = self.decoder(z)
        if not torch.isfinite(logits).all():
            raise NumericError("decoder produced non-finite logits")
        return torch.softmax(logits, dim=-1)

    def frozen_checksum(self) -> str:
        """Digest over every frozen tensor; unchanged across training."""
        h = hashlib.sha256()
        for name, p in sorted(self.backbone.state_dict().items()):
            h.update(name.encode())
            h.update(p.detach().cpu().numpy().tobytes())
        return h.hexdigest()

    def trainable_checksum(self) -> str:
        h = hashlib.sha256()
        for module in (self.profile_encoder, self.decoder):
            for name, p in sorted(module.state_dict().items()):
                h.update(name.encode())
                h.update(p.detach().cpu().numpy().tobytes())
        return h.hexdigest()
