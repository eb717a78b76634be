import numpy as np
import pytest
import torch

from textrec.bench import (
    FlipRecord,
    SyntheticConfig,
    alpha_sweep,
    default_alpha_grid,
    generate,
    route_guidance,
    run_fine_grained,
    run_genre_flip,
    run_guided,
    run_large_scope,
    top_genres_by_items,
)
from textrec.summaries.synth import insert_theme_sentence

ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


def theme_editor(ds):
    def edit(summary, item, rerun):
        return insert_theme_sentence(summary, ds.theme_words_for_item(item),
                                     seed=1000 * item + rerun)
    return edit


def omitted_theme_pools(ds):
    """Eval items whose theme the user's summary does not already describe."""
    return {u: tuple(i for i in ds.plan.eval_items[u]
                     if ds.item_theme[i] not in ds.liked_themes[u])
            for u in ds.plan.role}


class TestSyntheticDataset:
    def test_regeneration_identical(self):
        a = generate(SyntheticConfig(n_users=50, n_items=80, n_val=6, n_test=6, seed=2))
        b = generate(SyntheticConfig(n_users=50, n_items=80, n_val=6, n_test=6, seed=2))
        assert a.interactions.content_hash() == b.interactions.content_hash()
        assert a.plan == b.plan
        assert a.summary_texts == b.summary_texts

    def test_flip_records_name_planted_pair(self):
        ds = generate(SyntheticConfig(n_users=30, n_items=60, n_val=4, n_test=4, seed=3))
        for user, record in ds.flipped.items():
            planted = ds.planted[user]
            assert record.favorite == planted.vocabulary[planted.favorite()]
            assert record.least_favorite == planted.vocabulary[planted.least_favorite()]

    def test_files_roundtrip(self, tmp_path):
        from textrec.dataio import load_catalog, load_ratings

        ds = generate(SyntheticConfig(n_users=30, n_items=60, n_val=4, n_test=4, seed=4))
        paths = ds.write_files(tmp_path)
        inter = load_ratings(paths["ratings"])
        assert inter.n_interactions == ds.interactions.n_interactions
        catalog = load_catalog(paths["catalog"])
        assert catalog.content_hash() == ds.catalog.content_hash()


class TestLargeScope:
    def test_noop_edit_yields_zero_everywhere(self, toy):
        ds = toy.dataset
        noop = {u: FlipRecord(summary=s, favorite=ds.flipped[u].favorite,
                              least_favorite=ds.flipped[u].least_favorite)
                for u, s in ds.summaries.items()}
        run = run_large_scope(toy.model, ds.catalog, toy.data.test_cases,
                              ds.summary_texts, noop, ALPHAS, k=20)
        for alpha in ALPHAS:
            out = run.outputs[f"{alpha:g}"]
            assert out["delta_up_abs_mean"] == 0.0
            assert out["delta_down_abs_mean"] == 0.0

    def test_alpha_zero_decouples_text(self, toy):
        ds = toy.dataset
        run = run_large_scope(toy.model, ds.catalog, toy.data.test_cases,
                              ds.summary_texts, ds.flipped, (0.0,), k=20)
        out = run.outputs["0"]
        assert out["delta_up_abs_mean"] < 1e-9
        assert out["delta_down_abs_mean"] < 1e-9

    def test_flip_moves_genres_at_alpha_one(self, toy):
        ds = toy.dataset
        run = run_large_scope(toy.model, ds.catalog, toy.data.test_cases,
                              ds.summary_texts, ds.flipped, (1.0,), k=20)
        out = run.outputs["1"]
        assert out["delta_up_abs_mean"] > 0.0
        assert out["delta_down_abs_mean"] > 0.0
        assert out["sign_correct_up"] >= 0.7
        assert out["sign_correct_down"] >= 0.7

    def test_missing_edit_skipped_with_count(self, toy):
        ds = toy.dataset
        partial = {u: r for u, r in ds.flipped.items()
                   if u != toy.data.test_cases[0].user}
        run = run_large_scope(toy.model, ds.catalog, toy.data.test_cases,
                              ds.summary_texts, partial, (1.0,), k=20)
        assert run.counts["skipped_missing_edit"] == 1

    def test_reproducible_outputs(self, toy):
        ds = toy.dataset
        a = run_large_scope(toy.model, ds.catalog, toy.data.test_cases,
                            ds.summary_texts, ds.flipped, (0.5,), k=20)
        b = run_large_scope(toy.model, ds.catalog, toy.data.test_cases,
                            ds.summary_texts, ds.flipped, (0.5,), k=20)
        assert a.outputs == b.outputs
        assert a.manifest == b.manifest


class TestFineGrained:
    def test_noop_editor_zero_delta(self, toy):
        ds = toy.dataset

        def identity_edit(summary, item, rerun):
            return summary

        run = run_fine_grained(toy.model, toy.data.test_cases, ds.summaries,
                               identity_edit, alphas=(1.0,), rank_window=(100, 500),
                               seed=11, eval_items=omitted_theme_pools(ds))
        out = run.outputs["1"]
        assert out["delta_rank_mean"] == 0.0
        assert out["fraction_positive"] == 0.0

    def test_theme_edit_promotes_target(self, toy):
        ds = toy.dataset
        run = run_fine_grained(toy.model, toy.data.test_cases, ds.summaries,
                               theme_editor(ds), alphas=(1.0,), rank_window=(100, 500),
                               seed=11, eval_items=omitted_theme_pools(ds))
        out = run.outputs["1"]
        assert out["fraction_positive"] >= 0.7
        assert out["delta_rank_mean"] > 0

    def test_eligibility_monotone_in_window(self, toy):
        ds = toy.dataset
        pools = omitted_theme_pools(ds)
        narrow = run_fine_grained(toy.model, toy.data.test_cases, ds.summaries,
                                  theme_editor(ds), alphas=(1.0,), rank_window=(150, 350),
                                  seed=11, eval_items=pools)
        wide = run_fine_grained(toy.model, toy.data.test_cases, ds.summaries,
                                theme_editor(ds), alphas=(1.0,), rank_window=(100, 500),
                                seed=11, eval_items=pools)
        assert wide.counts["eligible_users"] >= narrow.counts["eligible_users"]

    def test_no_eligible_users_is_error(self, toy):
        ds = toy.dataset
        with pytest.raises(ValueError, match="rank window"):
            run_fine_grained(toy.model, toy.data.test_cases, ds.summaries,
                             theme_editor(ds), alphas=(1.0,), rank_window=(599, 600),
                             seed=11)

    def test_bad_window_rejected(self, toy):
        with pytest.raises(ValueError):
            run_fine_grained(toy.model, toy.data.test_cases, toy.dataset.summaries,
                             theme_editor(toy.dataset), alphas=(1.0,), rank_window=(50, 50))


class TestGuided:
    def test_routing_keywords(self):
        assert route_guidance("More Noir movies") == "positive"
        assert route_guidance("Less Noir movies") == "negative"
        assert route_guidance("fewer musicals") == "negative"

    def test_top_genres_by_items(self, toy):
        genres = top_genres_by_items(toy.dataset.catalog, 10)
        assert len(genres) == 8  # synthetic vocabulary holds 8 genres
        counts = [len(toy.dataset.catalog.items_with_genre(g)) for g in genres]
        assert counts == sorted(counts, reverse=True)

    def test_positive_guidance_raises_target_genre(self, toy):
        run = run_guided(toy.model, toy.dataset.catalog, toy.data.test_cases, k=20)
        signed = [v["more"]["delta_signed_mean"] for v in run.outputs.values()]
        # promoted genre gains => original-minus-augmented is negative
        assert np.mean(signed) < 0
        assert np.mean([v["more"]["sign_correct"] for v in run.outputs.values()]) >= 0.6

    def test_zero_guidance_latent_decodes_uniform_baseline(self, toy):
        # negative mode with z_guidance equal to the history latent cancels to
        # the zero vector; recorded here as the decode of zero
        model = toy.model
        case = toy.data.test_cases[0]
        z_r = model.encode_blackbox(case.row).mu
        from textrec.ranking import guided_latent

        z = guided_latent(z_r, z_r, "negative")
        assert torch.equal(z, torch.zeros_like(z))
        probs = model.decode(z)
        assert torch.isfinite(probs).all()


class TestGenreFlip:
    def test_swap_sign_correct(self, toy):
        run = run_genre_flip(toy.genre_model, toy.dataset.catalog,
                             toy.genre_data.test_cases, "swap", (1.0,), k=20)
        out = run.outputs["1"]
        assert out["sign_correct_up"] >= 0.7

    def test_one_hot_upper_bounds_swap(self, toy):
        swap = run_genre_flip(toy.genre_model, toy.dataset.catalog,
                              toy.genre_data.test_cases, "swap", (1.0,), k=20)
        upper = run_genre_flip(toy.genre_model, toy.dataset.catalog,
                               toy.genre_data.test_cases, "one-hot-upper-bound", (1.0,), k=20)
        assert upper.outputs["1"]["delta_up_abs_mean"] >= \
            swap.outputs["1"]["delta_up_abs_mean"] - 1e-12

    def test_equal_weights_user_skipped(self, toy):
        from textrec.models import GenreProfile
        from textrec.training.loop import UserEvalCase

        case = toy.genre_data.test_cases[0]
        uniform = GenreProfile(np.full(8, 1 / 8), tuple(toy.dataset.catalog.genre_vocabulary))
        degenerate = UserEvalCase(user=case.user, row=case.row, profile=uniform,
                                  seen=case.seen, positives=case.positives)
        run = run_genre_flip(toy.genre_model, toy.dataset.catalog,
                             [degenerate, case], "swap", (1.0,), k=20)
        assert run.counts["skipped_degenerate"] == 1
        assert run.counts["users"] == 1

    def test_text_cases_rejected(self, toy):
        with pytest.raises(TypeError):
            run_genre_flip(toy.model, toy.dataset.catalog, toy.data.test_cases,
                           "swap", (1.0,), k=20)


class TestAlphaSweep:
    def test_grid_construction(self):
        assert len(default_alpha_grid(0.01)) == 101
        assert default_alpha_grid(0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_rows_and_monotone_controllability(self, toy):
        ds = toy.dataset
        run = alpha_sweep(toy.model, ds.catalog, toy.data.test_cases, ds.summary_texts,
                          ds.flipped, ALPHAS, k=20, val_cases=toy.data.val_cases)
        rows = run.outputs["rows"]
        assert [r["alpha"] for r in rows] == list(ALPHAS)
        assert rows[0]["delta_up_abs"] < 1e-9
        from scipy.stats import spearmanr

        rho = spearmanr(ALPHAS, [r["delta_up_abs"] for r in rows]).statistic
        assert rho >= 0.8
        assert run.outputs["best_alpha"] in ALPHAS

    def test_endpoint_consistency(self, toy):
        ds = toy.dataset
        run = alpha_sweep(toy.model, ds.catalog, toy.data.test_cases, ds.summary_texts,
                          ds.flipped, (0.0, 1.0), k=20)
        from textrec.metrics import ndcg_at_k
        from textrec.ranking import MixSpec, recommend

        case = toy.data.test_cases[0]
        pure_backbone = recommend(toy.model, case.row, None, MixSpec(alpha=0.0), 20, case.seen)
        assert run.outputs["rows"][0]["ndcg"] == pytest.approx(np.mean([
            ndcg_at_k(recommend(toy.model, c.row, None, MixSpec(alpha=0.0), 20, c.seen),
                      c.positives, 20)
            for c in toy.data.test_cases]))
        assert len(pure_backbone.items) == 20

    def test_save_outputs(self, toy, tmp_path):
        ds = toy.dataset
        run = alpha_sweep(toy.model, ds.catalog, toy.data.test_cases[:5], ds.summary_texts,
                          ds.flipped, (0.0, 1.0), k=10)
        path = run.save(tmp_path / "sweep")
        assert path.exists()
        assert (tmp_path / "sweep" / "manifest.json").exists()
