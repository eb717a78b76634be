"""Serving core: one loaded model snapshot plus per-user state and previews.

The service owns nothing mutable except the summary store; model
parameters are read-only after load, and previews never persist anything.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..dataio import Interactions, ItemCatalog, SplitPlan, binarize, build_matrices, load_catalog, load_ratings
from ..metrics import ndcg_genre_at_k
from ..models import AlignedRecommender, load_checkpoint
from ..ranking import MixSpec, RankedList, rank_items, recommend
from ..summaries.store import SummaryStore


class ServiceError(RuntimeError):
    pass


class UnknownUserError(KeyError):
    pass


@dataclass(frozen=True)
class ServeConfig:
    checkpoint: Path
    catalog: Path
    ratings: Path
    split_plan: Path
    summary_dir: Path
    default_alpha: float = 0.5
    default_k: int = 20
    rating_threshold: int = 4
    host: str = "127.0.0.1"
    port: int = 8080

    @staticmethod
    def from_file(path: str | Path) -> "ServeConfig":
        import json

        doc = json.loads(Path(path).read_text())
        base = Path(path).parent
        def p(key: str) -> Path:
            value = Path(doc[key])
            return value if value.is_absolute() else base / value
        return ServeConfig(
            checkpoint=p("checkpoint"), catalog=p("catalog"), ratings=p("ratings"),
            split_plan=p("split_plan"), summary_dir=p("summary_dir"),
            default_alpha=doc.get("default_alpha", 0.5), default_k=doc.get("default_k", 20),
            rating_threshold=doc.get("rating_threshold", 4),
            host=doc.get("host", "127.0.0.1"), port=doc.get("port", 8080),
        )


@dataclass
class RankDiff:
    """Per-item rank movement and per-genre gain shift between two rankings."""

    items: list[dict]
    genres: list[dict]


def ranked_payload(ranked: RankedList, catalog: ItemCatalog) -> list[dict]:
    out = []
    for pos, (item, score) in enumerate(zip(ranked.items, ranked.scores), start=1):
        out.append({
            "rank": pos,
            "item": item,
            "title": catalog.items[item].title,
            "genres": sorted(catalog.genre_vocabulary[g] for g in catalog.genres_of(item)),
            "score": score,
        })
    return out


class RecommenderService:
    def __init__(self, model: AlignedRecommender, catalog: ItemCatalog,
                 interactions: Interactions, plan: SplitPlan, store: SummaryStore,
                 default_alpha: float = 0.5, default_k: int = 20):
        if model.catalog_hash != catalog.content_hash():
            raise ServiceError("checkpoint/catalog hash mismatch; refusing to serve")
        self.model = model
        self.catalog = catalog
        self.plan = plan
        self.store = store
        self.default_alpha = default_alpha
        self.default_k = default_k
        self.checkpoint_hash = model.frozen_checksum()
        users = sorted(u for u in plan.role)
        x, _ = build_matrices(interactions, plan, users, catalog)
        self._rows = {u: x[i] for i, u in enumerate(users)}
        self._locks: dict[int, threading.Lock] = {}
        self._lock = threading.Lock()

    @staticmethod
    def from_config(cfg: ServeConfig) -> "RecommenderService":
        from ..dataio import _sorted_interactions, load_interactions

        catalog = load_catalog(cfg.catalog)
        model = load_checkpoint(cfg.checkpoint, catalog)
        if str(cfg.ratings).endswith(".npz"):
            inter = load_interactions(cfg.ratings)
        else:
            inter = load_ratings(cfg.ratings)
        known = np.isin(inter.item, np.asarray(catalog.item_order))
        if not known.all():
            inter = _sorted_interactions(inter.user[known], inter.item[known],
                                         inter.rating[known], inter.timestamp[known])
        inter = binarize(inter, cfg.rating_threshold)
        plan = SplitPlan.load(cfg.split_plan)
        store = SummaryStore(cfg.summary_dir)
        return RecommenderService(model, catalog, inter, plan, store,
                                  cfg.default_alpha, cfg.default_k)

    def _row(self, user: int) -> np.ndarray:
        if user not in self._rows:
            raise UnknownUserError(f"unknown user {user}")
        return self._rows[user]

    def _seen(self, user: int) -> tuple[int, ...]:
        return tuple(self.plan.input_items[user])

    def health(self) -> dict:
        return {"status": "ok", "checkpoint": self.checkpoint_hash,
                "items": self.catalog.n_items, "users": len(self._rows)}

    def genres(self) -> list[str]:
        return list(self.catalog.genre_vocabulary)

    def get_summary(self, user: int) -> dict:
        self._row(user)
        try:
            active = self.store.active(user)
        except KeyError:
            raise UnknownUserError(f"user {user} has no summary") from None
        return {"user": user, "text": active.text, "version": active.version,
                "source": active.source, "parent": active.parent,
                "history_length": len(self.store.history(user))}

    def commit_summary(self, user: int, draft_text: str,
                       expected_version: int | None = None) -> dict:
        self._row(user)
        committed = self.store.commit(user, draft_text, expected_version=expected_version)
        return {"user": user, "text": committed.text, "version": committed.version,
                "parent": committed.parent}

    def _ranking(self, user: int, text: str | None, alpha: float, k: int,
                 guidance: str | None = None, mode: str = "positive") -> RankedList:
        spec = MixSpec(alpha=alpha, guidance=guidance, guidance_mode=mode)
        return recommend(self.model, self._row(user), text, spec, k, self._seen(user))

    def recommendations(self, user: int, alpha: float | None = None, k: int | None = None,
                        guidance: str | None = None, mode: str = "positive") -> dict:
        alpha = self.default_alpha if alpha is None else alpha
        k = self.default_k if k is None else k
        text = None
        if guidance is None and alpha > 0:
            text = self.store.active(user).text if user in set(self.store.users()) else None
            if text is None:
                raise ServiceError(f"user {user} has no summary; alpha > 0 needs one")
        ranked = self._ranking(user, text, alpha, k, guidance, mode)
        return {"user": user, "alpha": alpha, "k": k,
                "guidance": guidance, "mode": mode if guidance else None,
                "items": ranked_payload(ranked, self.catalog)}

    def preview(self, user: int, draft_text: str, alpha: float | None = None,
                k: int | None = None) -> dict:
        """Rankings under the active vs draft summary, plus the diff; the
        store is never written."""
        if not draft_text or not draft_text.strip():
            raise ValueError("draft text must be non-empty")
        alpha = self.default_alpha if alpha is None else alpha
        k = self.default_k if k is None else k
        active = self.store.active(user)
        full = self.catalog.n_items
        before_full = self._ranking(user, active.text, alpha, full)
        after_full = self._ranking(user, draft_text, alpha, full)
        before_pos = {item: pos for pos, item in enumerate(before_full.items, start=1)}
        after_pos = {item: pos for pos, item in enumerate(after_full.items, start=1)}

        top_union = list(dict.fromkeys(list(before_full.items[:k]) + list(after_full.items[:k])))
        items = [{
            "item": item,
            "title": self.catalog.items[item].title,
            "rank_before": before_pos[item],
            "rank_after": after_pos[item],
            "delta": before_pos[item] - after_pos[item],
        } for item in top_union]

        genres = []
        for g, name in enumerate(self.catalog.genre_vocabulary):
            before_g = ndcg_genre_at_k(before_full, g, self.catalog, k)
            after_g = ndcg_genre_at_k(after_full, g, self.catalog, k)
            genres.append({"genre": name, "before": before_g, "after": after_g,
                           "delta": before_g - after_g})

        after_top = RankedList(items=after_full.items[:k], scores=after_full.scores[:k],
                               masked_seen=after_full.masked_seen, k=k)
        return {"user": user, "alpha": alpha, "k": k,
                "diff": {"items": items, "genres": genres},
                "ranking": ranked_payload(after_top, self.catalog)}

    def export_latents(self, alpha: float = 0.5) -> list[dict]:
        """Per-user latent means for external visualization."""
        out = []
        with_summaries = set(self.store.users())
        for user in sorted(self._rows):
            row = self._rows[user]
            z_r = self.model.encode_blackbox(row).mu[0]
            record = {"user": user, "mu_r": z_r.tolist()}
            if user in with_summaries:
                z_s = self.model.encode_text([self.store.active(user).text]).mu[0]
                record["mu_s"] = z_s.tolist()
                record["z_c"] = (alpha * z_s + (1 - alpha) * z_r).tolist()
            out.append(record)
        return out
