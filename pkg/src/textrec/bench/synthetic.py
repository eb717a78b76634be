"""Synthetic dataset with planted preferences for the controllability suite.

Users get an explicit favorite/least-favorite genre and two liked themes;
items carry genres and exactly one theme. Summaries are synthesized from
the planted profile, so edits have a known causal target: flipping the
genres, inserting a theme sentence, or steering toward a genre all have a
ground-truth expected direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataio import (
    CatalogItem,
    Interactions,
    ItemCatalog,
    SplitPlan,
    _sorted_interactions,
    binarize,
    make_splits,
)
from ..models.genre import GenreProfile, genre_profile
from ..summaries.records import UserSummary
from ..summaries.synth import flip_offline, synthesize_offline

GENRES = ("Courtroom", "Heist", "Monster", "Musical", "Noir", "Space", "Survival", "Western")

THEME_WORDS = (
    ("redemption", "forgiveness", "atonement", "guilt", "grace"),
    ("betrayal", "conspiracy", "paranoia", "deception", "moles"),
    ("friendship", "loyalty", "camaraderie", "banter", "reunions"),
    ("wilderness", "expedition", "frostbite", "summit", "endurance"),
    ("dynasty", "inheritance", "patriarch", "estates", "succession"),
    ("rebellion", "uprising", "tyranny", "barricades", "manifesto"),
    ("heartbreak", "longing", "letters", "farewell", "reconciliation"),
    ("machines", "automation", "circuitry", "sentience", "obsolescence"),
    ("carnival", "illusion", "sleight", "spectacle", "masks"),
    ("plague", "quarantine", "antidote", "outbreak", "immunity"),
    ("memory", "amnesia", "flashback", "fragments", "recollection"),
    ("gambits", "wagers", "bluffing", "jackpot", "deadlock"),
)

_TITLE_NOUNS = ("Reckoning", "Voyage", "Gambit", "Lament", "Covenant", "Cartographer",
                "Vigil", "Ballad", "Meridian", "Harvest", "Protocol", "Masquerade")


@dataclass(frozen=True)
class SyntheticConfig:
    n_users: int = 500
    n_items: int = 600
    n_val: int = 60
    n_test: int = 60
    min_ratings: int = 25
    max_ratings: int = 70
    max_input: int = 50
    seed: int = 7
    rating_threshold: int = 4


@dataclass
class FlipRecord:
    """An edited summary with the genre pair it swapped."""

    summary: UserSummary
    favorite: str
    least_favorite: str


@dataclass
class SyntheticDataset:
    config: SyntheticConfig
    catalog: ItemCatalog
    interactions: Interactions
    plan: SplitPlan
    summaries: dict[int, UserSummary]
    flipped: dict[int, FlipRecord]
    planted: dict[int, GenreProfile]
    liked_themes: dict[int, tuple[int, ...]]
    item_theme: dict[int, int]

    @property
    def summary_texts(self) -> dict[int, str]:
        return {u: s.text for u, s in self.summaries.items()}

    def genre_profiles(self, users: list[int] | None = None) -> dict[int, GenreProfile]:
        """Operational profiles from each user's positively rated input items."""
        users = users if users is not None else sorted(self.plan.role)
        by_user = self.interactions.by_user()
        out = {}
        for u in users:
            inputs = set(self.plan.input_items[u])
            positives = [int(self.interactions.item[i]) for i in by_user[u]
                         if int(self.interactions.item[i]) in inputs
                         and self.interactions.implicit[i]]
            out[u] = genre_profile(positives, self.catalog)
        return out

    def theme_words_for_item(self, item_id: int) -> list[str]:
        return list(THEME_WORDS[self.item_theme[item_id]])

    def write_files(self, directory: str | Path) -> dict[str, Path]:
        """Materialize ratings/catalog files in the ingestion formats."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        ratings = directory / "ratings.dat"
        with ratings.open("w") as fh:
            for row in range(self.interactions.n_interactions):
                fh.write(f"{self.interactions.user[row]}::{self.interactions.item[row]}"
                         f"::{self.interactions.rating[row]}::{self.interactions.timestamp[row]}\n")
        catalog = directory / "items.dat"
        with catalog.open("w") as fh:
            for item_id in self.catalog.item_order:
                item = self.catalog.items[item_id]
                genres = "|".join(self.catalog.genre_vocabulary[g] for g in sorted(item.genres))
                fh.write(f"{item_id}::{item.title}::{genres}\n")
        return {"ratings": ratings, "catalog": catalog}


def _build_catalog(cfg: SyntheticConfig, rng: np.random.Generator) -> tuple[ItemCatalog, dict[int, int]]:
    items: dict[int, CatalogItem] = {}
    item_theme: dict[int, int] = {}
    vocab = tuple(sorted(GENRES))
    for item_id in range(1, cfg.n_items + 1):
        primary = int(rng.integers(len(vocab)))
        genres = {primary}
        if rng.random() < 0.3:
            genres.add(int(rng.integers(len(vocab))))
        theme = int(rng.integers(len(THEME_WORDS)))
        item_theme[item_id] = theme
        noun = _TITLE_NOUNS[int(rng.integers(len(_TITLE_NOUNS)))]
        title = f"The {vocab[primary]} {noun} {item_id:04d}"
        items[item_id] = CatalogItem(title=title, genres=frozenset(genres))
    catalog = ItemCatalog(items=items, genre_vocabulary=vocab,
                          item_order=tuple(sorted(items)))
    return catalog, item_theme


def generate(cfg: SyntheticConfig = SyntheticConfig()) -> SyntheticDataset:
    rng = np.random.default_rng(cfg.seed)
    catalog, item_theme = _build_catalog(cfg, rng)
    n_genres = catalog.n_genres
    item_ids = np.asarray(catalog.item_order)
    item_genres = [catalog.genres_of(int(i)) for i in item_ids]

    users_list, items_list, ratings_list, stamps_list = [], [], [], []
    planted: dict[int, GenreProfile] = {}
    liked_themes: dict[int, tuple[int, ...]] = {}

    for user in range(1, cfg.n_users + 1):
        fav = int(rng.integers(n_genres))
        least = int((fav + 1 + rng.integers(n_genres - 1)) % n_genres)
        weights = np.ones(n_genres)
        weights[fav] = 8.0
        weights[least] = 0.25
        planted[user] = GenreProfile(weights / weights.sum(), tuple(catalog.genre_vocabulary))
        themes = tuple(sorted(rng.choice(len(THEME_WORDS), size=2, replace=False).tolist()))
        liked_themes[user] = themes

        affinity = np.asarray([np.mean([weights[g] for g in gs]) for gs in item_genres])
        boost = np.asarray([3.0 if item_theme[int(i)] in themes else 1.0 for i in item_ids])
        probs = affinity * boost
        probs = probs / probs.sum()
        n_rated = int(rng.integers(cfg.min_ratings, cfg.max_ratings + 1))
        n_rated = min(n_rated, len(item_ids))
        chosen = rng.choice(len(item_ids), size=n_rated, replace=False, p=probs)
        for stamp, idx in enumerate(chosen):
            gs = item_genres[idx]
            themed = item_theme[int(item_ids[idx])] in themes
            if fav in gs:
                rating = 5 if (themed or rng.random() < 0.5) else 4
            elif least in gs:
                rating = 1 if rng.random() < 0.5 else 2
            elif themed:
                rating = 5 if rng.random() < 0.35 else 4
            else:
                rating = int(rng.choice((2, 3, 3, 4)))
            users_list.append(user)
            items_list.append(int(item_ids[idx]))
            ratings_list.append(rating)
            stamps_list.append(stamp)

    inter = _sorted_interactions(
        np.asarray(users_list, dtype=np.int64), np.asarray(items_list, dtype=np.int64),
        np.asarray(ratings_list, dtype=np.int64), np.asarray(stamps_list, dtype=np.int64))
    inter = binarize(inter, cfg.rating_threshold)
    plan = make_splits(inter, cfg.n_val, cfg.n_test, max_input=cfg.max_input, seed=cfg.seed)

    summaries: dict[int, UserSummary] = {}
    flipped: dict[int, FlipRecord] = {}
    for user in range(1, cfg.n_users + 1):
        phrases = [", ".join(THEME_WORDS[t]) for t in liked_themes[user]]
        summaries[user] = synthesize_offline(planted[user], phrases, [],
                                             seed=cfg.seed * 100_000 + user, user=user)
        edited, fav_name, least_name = flip_offline(
            summaries[user], planted[user], phrases, [], seed=cfg.seed * 100_000 + user + 1)
        flipped[user] = FlipRecord(summary=edited, favorite=fav_name,
                                   least_favorite=least_name)

    return SyntheticDataset(config=cfg, catalog=catalog, interactions=inter, plan=plan,
                            summaries=summaries, flipped=flipped, planted=planted,
                            liked_themes=liked_themes, item_theme=item_theme)
