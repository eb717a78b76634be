"""Autoencoder backbones over the rating matrix.

Three variants share one interface: ``encode`` maps a batch of raw rating
rows to a diagonal Gaussian (MultiDAE degenerates to a point mass), and
``decode_logits`` maps latents to item logits whose softmax is the
recommendation distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F


@dataclass(frozen=True)
class MacridOptions:
    n_concepts: int = 4
    tau: float = 0.1

    def __post_init__(self) -> None:
        if self.n_concepts < 2:
            raise ValueError("macrid-vae requires n_concepts >= 2")


@dataclass(frozen=True)
class BackboneSpec:
    kind: str  # multi-dae | multi-vae | macrid-vae
    n_items: int
    latent_dim: int
    hidden_dims: tuple[int, ...] = (600,)
    dropout: float = 0.5
    macrid: MacridOptions | None = None

    def __post_init__(self) -> None:
        if self.kind not in {"multi-dae", "multi-vae", "macrid-vae"}:
            raise ValueError(f"unknown backbone kind {self.kind!r}")
        if self.kind == "macrid-vae":
            macrid = self.macrid or MacridOptions()
            object.__setattr__(self, "macrid", macrid)
            if self.latent_dim % macrid.n_concepts != 0:
                raise ValueError("latent_dim must divide evenly into concepts")

    @property
    def stochastic(self) -> bool:
        return self.kind != "multi-dae"


def build_backbone(spec: BackboneSpec, seed: int = 0) -> "Backbone":
    torch.manual_seed(seed)
    if spec.kind == "multi-dae":
        return MultiDAE(spec)
    if spec.kind == "multi-vae":
        return MultiVAE(spec)
    return MacridVAE(spec)


def _mlp(dims: list[int]) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        layers.append(nn.Linear(a, b))
        if i < len(dims) - 2:
            layers.append(nn.Tanh())
    return nn.Sequential(*layers)


def normalize_rows(x: torch.Tensor) -> torch.Tensor:
    """L2-normalize rating rows; all-zero rows stay zero."""
    return F.normalize(x, p=2.0, dim=1, eps=1e-12)


class Backbone(nn.Module):
    """Common surface: encode rows to (mu, sigma), decode latents to logits."""

    spec: BackboneSpec

    def encode(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        raise NotImplementedError

    def decode_logits(self, z: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def clone_decoder(self) -> nn.Module:
        raise NotImplementedError


class MultiVAE(Backbone):
    """Normalize-dropout-MLP encoder with a Gaussian head, MLP decoder."""

    def __init__(self, spec: BackboneSpec):
        super().__init__()
        self.spec = spec
        dims = [spec.n_items, *spec.hidden_dims, 2 * spec.latent_dim]
        self.encoder = _mlp(dims)
        self.drop = nn.Dropout(spec.dropout)
        self.decoder = _mlp([spec.latent_dim, *reversed(spec.hidden_dims), spec.n_items])

    def encode(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.drop(normalize_rows(x))
        out = self.encoder(h)
        mu, logvar = out.chunk(2, dim=-1)
        return mu, torch.exp(0.5 * logvar)

    def decode_logits(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z)

    def clone_decoder(self) -> nn.Module:
        import copy

        return copy.deepcopy(self.decoder)


class MultiDAE(Backbone):
    """Deterministic denoising variant: baseline only, no Gaussian head."""

    def __init__(self, spec: BackboneSpec):
        super().__init__()
        self.spec = spec
        dims = [spec.n_items, *spec.hidden_dims, spec.latent_dim]
        self.encoder = _mlp(dims)
        self.drop = nn.Dropout(spec.dropout)
        self.decoder = _mlp([spec.latent_dim, *reversed(spec.hidden_dims), spec.n_items])

    def encode(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.drop(normalize_rows(x))
        mu = self.encoder(h)
        return mu, torch.zeros_like(mu)

    def decode_logits(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z)

    def clone_decoder(self) -> nn.Module:
        import copy

        return copy.deepcopy(self.decoder)


class MacridConcepts(nn.Module):
    """Item embeddings plus concept prototypes; assigns items to concepts."""

    def __init__(self, n_items: int, n_concepts: int, dim: int):
        super().__init__()
        self.item_emb = nn.Parameter(torch.randn(n_items, dim) * 0.1)
        self.cores = nn.Parameter(torch.randn(n_concepts, dim) * 0.1)

    def assignments(self, tau: float) -> torch.Tensor:
        """Softmax over concepts of cosine similarity / tau, per item."""
        items = F.normalize(self.item_emb, dim=1)
        cores = F.normalize(self.cores, dim=1)
        return torch.softmax(items @ cores.t() / tau, dim=1)


class MacridVAE(Backbone):
    """Disentangled backbone: per-concept encoding with normalized means and
    a mixture-of-softmaxes decoder over shared item embeddings.

    The latent is the concatenation of ``n_concepts`` slices of size
    ``latent_dim / n_concepts``; each mean slice is L2-normalized.
    """

    def __init__(self, spec: BackboneSpec):
        super().__init__()
        assert spec.macrid is not None
        self.spec = spec
        self.d_k = spec.latent_dim // spec.macrid.n_concepts
        self.concepts = MacridConcepts(spec.n_items, spec.macrid.n_concepts, self.d_k)
        dims = [spec.n_items, *spec.hidden_dims, 2 * self.d_k]
        self.encoder = _mlp(dims)
        self.drop = nn.Dropout(spec.dropout)

    @property
    def n_concepts(self) -> int:
        return self.spec.macrid.n_concepts

    def encode(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        cates = self.concepts.assignments(self.spec.macrid.tau)  # (n_items, K)
        mus, sigmas = [], []
        for k in range(self.n_concepts):
            xk = self.drop(normalize_rows(x * cates[:, k]))
            out = self.encoder(xk)
            mu, logvar = out.chunk(2, dim=-1)
            mus.append(normalize_per_concept(mu, 1))
            sigmas.append(torch.exp(0.5 * logvar))
        return torch.cat(mus, dim=-1), torch.cat(sigmas, dim=-1)

    def decode_logits(self, z: torch.Tensor) -> torch.Tensor:
        return macrid_mixture_logits(z, self.concepts, self.spec.macrid.tau, self.n_concepts)

    def clone_decoder(self) -> nn.Module:
        import copy

        return MacridDecoder(copy.deepcopy(self.concepts), self.spec.macrid.tau, self.n_concepts)


class MacridDecoder(nn.Module):
    """Stand-alone copy of the macrid decoding path with its own trainable
    item embeddings; the backbone keeps the frozen originals for encoding."""

    def __init__(self, concepts: MacridConcepts, tau: float, n_concepts: int):
        super().__init__()
        self.concepts = concepts
        self.tau = tau
        self.n_concepts = n_concepts

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return macrid_mixture_logits(z, self.concepts, self.tau, self.n_concepts)


def macrid_mixture_logits(z: torch.Tensor, concepts: MacridConcepts, tau: float,
                          n_concepts: int) -> torch.Tensor:
    """Log of the concept-weighted mixture of per-concept softmaxes.

    Returning log-probabilities keeps the shared ``softmax(D(z))`` contract:
    softmax of a log-simplex vector reproduces the simplex vector.
    """
    cates = concepts.assignments(tau)  # (n_items, K)
    items = F.normalize(concepts.item_emb, dim=1)
    slices = z.chunk(n_concepts, dim=-1)
    probs = None
    for k in range(n_concepts):
        logits_k = slices[k] @ items.t() / tau
        p_k = torch.softmax(logits_k, dim=-1) * cates[:, k]
        probs = p_k if probs is None else probs + p_k
    return torch.log(probs + 1e-20)


def normalize_per_concept(mu: torch.Tensor, n_concepts: int) -> torch.Tensor:
    """L2-normalize each concept slice of the latent mean."""
    if n_concepts == 1:
        return F.normalize(mu, dim=-1, eps=1e-12)
    parts = [F.normalize(p, dim=-1, eps=1e-12) for p in mu.chunk(n_concepts, dim=-1)]
    return torch.cat(parts, dim=-1)
