import numpy as np
import pytest
import torch

from textrec.ranking import MixSpec, RankedList, guided_latent, mix_latents, rank_items, rank_of, recommend

from test_models import make_model, small_catalog


class TestMixLatents:
    def vectors(self):
        return torch.tensor([[2.0, 0.0]]), torch.tensor([[0.0, 2.0]])

    def test_endpoints(self):
        z_s, z_r = self.vectors()
        assert torch.equal(mix_latents(z_s, z_r, 0.0), z_r)
        assert torch.equal(mix_latents(z_s, z_r, 1.0), z_s)

    def test_midpoint(self):
        z_s, z_r = self.vectors()
        assert torch.equal(mix_latents(z_s, z_r, 0.5), torch.tensor([[1.0, 1.0]]))

    def test_alpha_out_of_range(self):
        z_s, z_r = self.vectors()
        for alpha in (-0.1, 1.1):
            with pytest.raises(ValueError):
                mix_latents(z_s, z_r, alpha)

    def test_mixspec_validation(self):
        with pytest.raises(ValueError):
            MixSpec(alpha=1.5)
        with pytest.raises(ValueError):
            MixSpec(guidance="  ")
        with pytest.raises(ValueError):
            MixSpec(guidance="More Noir movies", guidance_mode="sideways")


class TestGuidedLatent:
    def test_fixed_point(self):
        z = torch.tensor([[1.0, -1.0]])
        assert torch.equal(guided_latent(z, z, "positive"), z)

    def test_cancellation(self):
        z = torch.tensor([[1.0, -1.0]])
        assert torch.equal(guided_latent(z, z, "negative"), torch.zeros(1, 2))

    def test_positive_equals_half_mix(self):
        rng = torch.Generator().manual_seed(0)
        z_r = torch.randn(3, 8, generator=rng)
        z_g = torch.randn(3, 8, generator=rng)
        assert torch.allclose(guided_latent(z_r, z_g, "positive"),
                              mix_latents(z_g, z_r, 0.5))


class TestRankItems:
    def test_tie_break_ascending_id(self):
        ranked = rank_items(np.array([0.5, 0.5, 0.9, 0.5]), [10, 2, 7, 4], seen=[], k=4)
        assert ranked.items == (7, 2, 4, 10)

    def test_masked_items_absent(self):
        ranked = rank_items(np.array([0.9, 0.8, 0.7]), [1, 2, 3], seen=[1], k=3)
        assert 1 not in ranked.items
        assert ranked.truncated is False  # only 2 unseen remain

    def test_prefix_stability_as_k_grows(self):
        rng = np.random.default_rng(0)
        scores = rng.uniform(size=50)
        items = list(range(50))
        small = rank_items(scores, items, seen=[3, 4], k=10)
        large = rank_items(scores, items, seen=[3, 4], k=30)
        assert large.items[:10] == small.items

    def test_scores_non_increasing_enforced(self):
        with pytest.raises(ValueError):
            RankedList(items=(1, 2), scores=(0.1, 0.9), masked_seen=frozenset(), k=2)


class TestRecommend:
    def setup_method(self):
        self.catalog = small_catalog()
        self.model = make_model(catalog=self.catalog)
        rng = np.random.default_rng(5)
        self.row = rng.uniform(0, 5, size=30).astype(np.float32)
        self.seen = [1, 2, 3]
        self.summary = "Summary: the user enjoys noir heists. The user does not enjoy musicals."

    def test_alpha_zero_matches_backbone_at_init(self):
        # decoder starts as a copy of the backbone's, so the alpha=0 path
        # must reproduce the raw backbone ranking exactly
        ranked = recommend(self.model, self.row, None, MixSpec(alpha=0.0), 10, self.seen)
        with torch.no_grad():
            mu, _ = self.model.backbone.encode(torch.from_numpy(self.row).unsqueeze(0))
            probs = torch.softmax(self.model.backbone.decode_logits(mu), dim=-1)[0].numpy()
        backbone_ranked = rank_items(probs, self.model.item_order, self.seen, 10)
        assert ranked.items == backbone_ranked.items

    def test_alpha_one_ignores_rating_row(self):
        spec = MixSpec(alpha=1.0)
        a = recommend(self.model, self.row, self.summary, spec, 10, self.seen)
        permuted = np.random.default_rng(0).permutation(self.row)
        b = recommend(self.model, permuted, self.summary, spec, 10, self.seen)
        assert a.items == b.items and a.scores == b.scores

    def test_seen_never_appear(self):
        ranked = recommend(self.model, self.row, self.summary, MixSpec(alpha=0.5), 30, self.seen)
        assert not set(self.seen) & set(ranked.items)

    def test_k_larger_than_unseen_flagged(self):
        ranked = recommend(self.model, self.row, None, MixSpec(alpha=0.0), 500, self.seen)
        assert len(ranked.items) == 27
        assert ranked.truncated is False

    def test_missing_summary_with_positive_alpha(self):
        with pytest.raises(ValueError, match="summary"):
            recommend(self.model, self.row, None, MixSpec(alpha=0.7), 5, self.seen)

    def test_deterministic(self):
        spec = MixSpec(alpha=0.5)
        a = recommend(self.model, self.row, self.summary, spec, 10, self.seen)
        b = recommend(self.model, self.row, self.summary, spec, 10, self.seen)
        assert a == b

    def test_alpha_continuity(self):
        a = recommend(self.model, self.row, self.summary, MixSpec(alpha=0.5), 20, self.seen)
        b = recommend(self.model, self.row, self.summary, MixSpec(alpha=0.5 + 1e-12), 20, self.seen)
        assert a.items == b.items

    def test_guidance_path(self):
        spec = MixSpec(alpha=0.9, guidance="More Genre0 movies", guidance_mode="positive")
        ranked = recommend(self.model, self.row, None, spec, 10, self.seen)
        assert len(ranked.items) == 10


class TestRankOf:
    def setup_method(self):
        self.catalog = small_catalog()
        self.model = make_model(catalog=self.catalog)
        self.row = np.random.default_rng(6).uniform(0, 5, size=30).astype(np.float32)

    def test_top_item_is_rank_one(self):
        ranked = recommend(self.model, self.row, None, MixSpec(alpha=0.0), 1, seen=[])
        assert rank_of(self.model, self.row, None, MixSpec(alpha=0.0),
                       ranked.items[0], seen=[]) == 1

    def test_consistent_with_recommend(self):
        spec = MixSpec(alpha=0.0)
        full = recommend(self.model, self.row, None, spec, 30, seen=[2])
        for position, item in enumerate(full.items, start=1):
            assert rank_of(self.model, self.row, None, spec, item, seen=[2]) == position

    def test_seen_item_rejected(self):
        with pytest.raises(ValueError, match="seen"):
            rank_of(self.model, self.row, None, MixSpec(alpha=0.0), 5, seen=[5])
