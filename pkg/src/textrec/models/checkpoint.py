"""Versioned checkpoint container for aligned recommenders.

The file stores enough to rebuild the model exactly: backbone spec, encoder
configuration, all tensors, catalog hash and genre vocabulary, plus the
frozen-parameter checksum that loading re-verifies.
"""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import torch

from ..dataio import ItemCatalog
from .aligned import AlignedRecommender
from .backbones import BackboneSpec, MacridOptions, build_backbone
from .encoders import GenreProfileEncoder, HashedTextEncoder

CHECKPOINT_FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Unreadable, mismatched, or tampered checkpoint."""


def _encoder_config(model: AlignedRecommender) -> dict:
    enc = model.profile_encoder
    if isinstance(enc, HashedTextEncoder):
        return {
            "kind": "hashed-text",
            "n_buckets": enc.n_buckets,
            "emb_dim": enc.table.shape[1],
            "head_hidden": enc.head.net[0].out_features,
        }
    if isinstance(enc, GenreProfileEncoder):
        return {
            "kind": "genre-profile",
            "n_genres": enc.n_genres,
            "head_hidden": enc.head.net[0].out_features,
        }
    raise CheckpointError(f"cannot serialize encoder of type {type(enc).__name__}")


def save_checkpoint(model: AlignedRecommender, path: str | Path) -> str:
    """Write the container; returns the frozen checksum recorded inside."""
    spec = model.backbone.spec
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "backbone_spec": asdict(spec),
        "encoder_config": _encoder_config(model),
        "backbone_state": model.backbone.state_dict(),
        "encoder_state": model.profile_encoder.state_dict(),
        "decoder_state": model.decoder.state_dict(),
        "catalog_hash": model.catalog_hash,
        "genre_vocabulary": list(model.genre_vocabulary),
        "frozen_checksum": model.frozen_checksum(),
    }
    torch.save(payload, Path(path))
    return payload["frozen_checksum"]


def load_checkpoint(path: str | Path, catalog: ItemCatalog) -> AlignedRecommender:
    """Rebuild the model and verify catalog binding and frozen checksums."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('format_version')}")
    if payload["catalog_hash"] != catalog.content_hash():
        raise CheckpointError("checkpoint was built against a different catalog")

    spec_doc = dict(payload["backbone_spec"])
    if spec_doc.get("macrid"):
        spec_doc["macrid"] = MacridOptions(**spec_doc["macrid"])
    spec_doc["hidden_dims"] = tuple(spec_doc["hidden_dims"])
    spec = BackboneSpec(**spec_doc)
    backbone = build_backbone(spec)
    backbone.load_state_dict(payload["backbone_state"])

    cfg = payload["encoder_config"]
    n_concepts = spec.macrid.n_concepts if spec.kind == "macrid-vae" else 1
    if cfg["kind"] == "hashed-text":
        encoder = HashedTextEncoder(spec.latent_dim, cfg["n_buckets"], cfg["emb_dim"],
                                    cfg["head_hidden"], n_concepts)
    elif cfg["kind"] == "genre-profile":
        encoder = GenreProfileEncoder(cfg["n_genres"], spec.latent_dim,
                                      cfg["head_hidden"], n_concepts)
    else:
        raise CheckpointError(f"unknown encoder kind {cfg['kind']!r}")
    encoder.load_state_dict(payload["encoder_state"])

    model = AlignedRecommender(backbone, encoder, catalog)
    model.decoder.load_state_dict(payload["decoder_state"])
    actual = model.frozen_checksum()
    if actual != payload["frozen_checksum"]:
        raise CheckpointError("frozen-parameter checksum mismatch; checkpoint corrupt")
    return model
