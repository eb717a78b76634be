import numpy as np
import pytest
import torch

from textrec.bench import SyntheticConfig, generate
from textrec.models import AlignedRecommender, BackboneSpec, HashedTextEncoder, build_backbone
from textrec.training import (
    BackboneTrainConfig,
    MissingProfileError,
    TrainConfig,
    checkpoint_metric,
    evaluate_ndcg,
    prepare_training_data,
    train,
    train_backbone,
)


@pytest.fixture(scope="module")
def tiny():
    ds = generate(SyntheticConfig(n_users=80, n_items=120, n_val=10, n_test=10, seed=11))
    data = prepare_training_data(ds.interactions, ds.plan, ds.catalog, ds.summary_texts)
    return ds, data


def fresh_model(ds, data, seed=1):
    spec = BackboneSpec(kind="multi-vae", n_items=ds.catalog.n_items, latent_dim=16,
                        hidden_dims=(48,), dropout=0.5)
    backbone = build_backbone(spec, seed=seed)
    train_backbone(backbone, data.x_train, data.y_train, data.val_cases, data.item_order,
                   BackboneTrainConfig(epochs=8, batch=64, seed=seed))
    encoder = HashedTextEncoder(16, n_buckets=512, emb_dim=24, head_hidden=48, seed=seed + 1)
    return AlignedRecommender(backbone, encoder, ds.catalog)


class TestPrepare:
    def test_missing_train_profile_names_user(self, tiny):
        ds, _ = tiny
        profiles = dict(ds.summary_texts)
        victim = ds.plan.users_with_role("train")[0]
        del profiles[victim]
        with pytest.raises(MissingProfileError, match=str(victim)):
            prepare_training_data(ds.interactions, ds.plan, ds.catalog, profiles)

    def test_matrices_shapes(self, tiny):
        ds, data = tiny
        assert data.x_train.shape == (len(data.train_users), ds.catalog.n_items)
        assert data.y_train.shape == data.x_train.shape
        # inputs hold raw ratings, targets are binary
        assert set(np.unique(data.y_train)) <= {0.0, 1.0}
        assert data.x_train.max() == 5.0

    def test_eval_cases_have_positives_and_seen(self, tiny):
        ds, data = tiny
        for case in data.val_cases + data.test_cases:
            assert len(case.positives) >= 1
            assert set(case.seen) == set(ds.plan.input_items[case.user])


class TestTrainLoop:
    def test_freezing_and_improvement(self, tiny):
        ds, data = tiny
        model = fresh_model(ds, data)
        before = model.frozen_checksum()
        result = train(model, data, TrainConfig(epochs=10, batch=32, seed=5,
                                                lambda1=0.5, lr=2e-3))
        assert result.frozen_checksum_after == before
        assert result.best_metric > result.history[0].val_metric
        assert result.history[0].epoch == 0 and len(result.history) == 11

    def test_deterministic_runs(self, tiny):
        ds, data = tiny
        cfg = TrainConfig(epochs=4, batch=32, seed=9, lambda1=0.5, lr=2e-3)
        r1 = train(fresh_model(ds, data), data, cfg)
        r2 = train(fresh_model(ds, data), data, cfg)
        l1 = [rec.losses for rec in r1.history[1:]]
        l2 = [rec.losses for rec in r2.history[1:]]
        assert l1 == l2
        assert [rec.val_metric for rec in r1.history] == [rec.val_metric for rec in r2.history]

    def test_checkpoint_metric_averages_alphas(self, tiny):
        ds, data = tiny
        model = fresh_model(ds, data)
        cfg = TrainConfig(epochs=1, checkpoint_alphas=(0.0, 0.5, 1.0))
        metric = checkpoint_metric(model, data.val_cases, cfg)
        values = [evaluate_ndcg(model, data.val_cases, a, cfg.checkpoint_k)
                  for a in (0.0, 0.5, 1.0)]
        assert metric == pytest.approx(float(np.mean(values)))

    def test_alpha1_only_checkpoint_switch(self, tiny):
        ds, data = tiny
        model = fresh_model(ds, data)
        cfg = TrainConfig(epochs=1, checkpoint_alphas=(1.0,))
        metric = checkpoint_metric(model, data.val_cases, cfg)
        assert metric == pytest.approx(evaluate_ndcg(model, data.val_cases, 1.0, 50))


class TestBackboneTraining:
    def test_multi_dae_trains(self, tiny):
        ds, data = tiny
        spec = BackboneSpec(kind="multi-dae", n_items=ds.catalog.n_items, latent_dim=16,
                            hidden_dims=(48,), dropout=0.5)
        backbone = build_backbone(spec, seed=2)
        history = train_backbone(backbone, data.x_train, data.y_train, data.val_cases,
                                 data.item_order, BackboneTrainConfig(epochs=6, batch=64, seed=2))
        assert len(history) == 6
        assert history[-1]["loss"] < history[0]["loss"]

    def test_macrid_trains_and_normalizes(self, tiny):
        ds, data = tiny
        from textrec.models import MacridOptions

        spec = BackboneSpec(kind="macrid-vae", n_items=ds.catalog.n_items, latent_dim=16,
                            hidden_dims=(48,), dropout=0.5,
                            macrid=MacridOptions(n_concepts=4, tau=0.1))
        backbone = build_backbone(spec, seed=3)
        train_backbone(backbone, data.x_train, data.y_train, data.val_cases,
                       data.item_order, BackboneTrainConfig(epochs=3, batch=64, seed=3))
        backbone.eval()
        mu, _ = backbone.encode(torch.from_numpy(data.x_train[:4]))
        for chunk in mu.chunk(4, dim=-1):
            assert torch.allclose(chunk.norm(dim=-1), torch.ones(4), atol=1e-5)

    def test_macrid_aligned_training_freezes_input_copy(self, tiny):
        # the encoder-side item embeddings stay frozen while the decoder's
        # own copy trains away from them
        ds, data = tiny
        from textrec.models import MacridOptions

        spec = BackboneSpec(kind="macrid-vae", n_items=ds.catalog.n_items, latent_dim=16,
                            hidden_dims=(48,), dropout=0.5,
                            macrid=MacridOptions(n_concepts=4, tau=0.1))
        backbone = build_backbone(spec, seed=4)
        encoder = HashedTextEncoder(16, n_buckets=256, emb_dim=16, head_hidden=32,
                                    n_concepts=4, seed=5)
        model = AlignedRecommender(backbone, encoder, ds.catalog)
        frozen_items = backbone.concepts.item_emb.detach().clone()
        assert torch.equal(model.decoder.concepts.item_emb, frozen_items)
        before = model.frozen_checksum()
        result = train(model, data, TrainConfig(epochs=2, batch=32, seed=6,
                                                lambda1=0.5, lr=2e-3))
        assert result.frozen_checksum_after == before
        assert torch.equal(backbone.concepts.item_emb, frozen_items)

        # one explicit update: the decoder copy moves, the frozen original not
        from textrec.training import total_loss

        optimizer = torch.optim.AdamW(model.trainable_parameters(), lr=1e-2)
        rows = torch.from_numpy(data.x_train[:8])
        targets = torch.from_numpy(data.y_train[:8])
        report = total_loss(model, (rows, data.profiles_train[:8], targets),
                            TrainConfig(epochs=1, lambda1=0.5), 0, 10, seed=0)
        optimizer.zero_grad()
        report.total.backward()
        optimizer.step()
        assert torch.equal(backbone.concepts.item_emb, frozen_items)
        assert not torch.equal(model.decoder.concepts.item_emb, frozen_items)
        assert model.frozen_checksum() == before
