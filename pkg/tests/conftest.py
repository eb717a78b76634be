import numpy as np
import pytest
import torch

from textrec.bench import SyntheticConfig, generate
from textrec.models import (
    AlignedRecommender,
    BackboneSpec,
    GenreProfileEncoder,
    HashedTextEncoder,
    build_backbone,
)
from textrec.training import (
    BackboneTrainConfig,
    TrainConfig,
    prepare_training_data,
    train,
    train_backbone,
)

# One trained system at the scale the controllability checks need; built a
# single time and shared read-only by the bench, gateway, and acceptance
# tests. Training stays deterministic, so every test sees identical weights.

TOY_BACKBONE = dict(kind="multi-vae", latent_dim=32, hidden_dims=(128,), dropout=0.5)
TOY_BACKBONE_TRAIN = dict(epochs=40, batch=100, seed=1, beta_max=0.2)
TOY_TRAIN = dict(epochs=60, batch=32, seed=5, lambda1=0.5, lr=2e-3)


class ToySystem:
    def __init__(self):
        import time

        started = time.time()
        self.dataset = generate(SyntheticConfig())
        ds = self.dataset
        self.data = prepare_training_data(ds.interactions, ds.plan, ds.catalog,
                                          ds.summary_texts)
        spec = BackboneSpec(n_items=ds.catalog.n_items, **TOY_BACKBONE)
        self.backbone = build_backbone(spec, seed=1)
        self.backbone_history = train_backbone(
            self.backbone, self.data.x_train, self.data.y_train, self.data.val_cases,
            self.data.item_order, BackboneTrainConfig(**TOY_BACKBONE_TRAIN))
        encoder = HashedTextEncoder(latent_dim=spec.latent_dim, n_buckets=4096,
                                    emb_dim=64, head_hidden=128, seed=2)
        self.model = AlignedRecommender(self.backbone, encoder, ds.catalog)
        self.result = train(self.model, self.data, TrainConfig(**TOY_TRAIN))

        # genre-vector sibling over the same frozen backbone
        self.genre_profiles = ds.genre_profiles()
        self.genre_data = prepare_training_data(ds.interactions, ds.plan, ds.catalog,
                                                self.genre_profiles)
        genre_backbone = build_backbone(spec, seed=1)
        genre_backbone.load_state_dict(self.backbone.state_dict())
        genre_encoder = GenreProfileEncoder(ds.catalog.n_genres, spec.latent_dim,
                                            head_hidden=64, seed=3)
        self.genre_model = AlignedRecommender(genre_backbone, genre_encoder, ds.catalog)
        self.genre_result = train(self.genre_model, self.genre_data,
                                  TrainConfig(epochs=40, batch=32, seed=6,
                                              lambda1=0.5, lr=2e-3))
        self.build_seconds = time.time() - started


@pytest.fixture(scope="session")
def toy() -> ToySystem:
    return ToySystem()


class MiniSystem:
    """Much smaller trained system for gateway and CLI style tests."""

    def __init__(self, seed: int = 3):
        self.dataset = generate(SyntheticConfig(n_users=120, n_items=200, n_val=15,
                                                n_test=15, seed=seed))
        ds = self.dataset
        self.data = prepare_training_data(ds.interactions, ds.plan, ds.catalog,
                                          ds.summary_texts)
        spec = BackboneSpec(kind="multi-vae", n_items=ds.catalog.n_items,
                            latent_dim=16, hidden_dims=(64,), dropout=0.5)
        self.backbone = build_backbone(spec, seed=1)
        train_backbone(self.backbone, self.data.x_train, self.data.y_train,
                       self.data.val_cases, self.data.item_order,
                       BackboneTrainConfig(epochs=10, batch=64, seed=1))
        encoder = HashedTextEncoder(latent_dim=16, n_buckets=1024, emb_dim=32,
                                    head_hidden=64, seed=2)
        self.model = AlignedRecommender(self.backbone, encoder, ds.catalog)
        self.result = train(self.model, self.data,
                            TrainConfig(epochs=6, batch=32, seed=5, lambda1=0.5, lr=2e-3))


@pytest.fixture(scope="session")
def mini() -> MiniSystem:
    return MiniSystem()
