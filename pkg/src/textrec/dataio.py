"""Ratings and catalog ingestion, filtering, implicit targets, and user splits.

Everything here is pure: functions take immutable inputs and return new
objects, so they are safe to call from concurrent contexts.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

SPLIT_PLAN_FORMAT_VERSION = 1

TRAIN = "train"
VALIDATION = "validation"
TEST = "test"


class DataError(Exception):
    """Malformed input files or inconsistent dataset state."""


class EmptyDatasetError(DataError):
    """Filtering removed every interaction."""


@dataclass(frozen=True)
class CatalogItem:
    title: str
    genres: frozenset[int]


@dataclass(frozen=True)
class ItemCatalog:
    """Item metadata with a dense, lexicographically sorted genre vocabulary.

    ``item_order`` fixes the dense item axis used by every model: the model
    column for an item is its position in this tuple.
    """

    items: dict[int, CatalogItem]
    genre_vocabulary: tuple[str, ...]
    item_order: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.genre_vocabulary)
        for item_id, item in self.items.items():
            if not item.genres:
                raise DataError(f"item {item_id} has no genres")
            if not item.title:
                raise DataError(f"item {item_id} has an empty title")
            if any(g < 0 or g >= n for g in item.genres):
                raise DataError(f"item {item_id} has a genre id outside the vocabulary")

    @property
    def n_items(self) -> int:
        return len(self.item_order)

    @property
    def n_genres(self) -> int:
        return len(self.genre_vocabulary)

    def column_of(self, item_id: int) -> int:
        return self._column_index()[item_id]

    def _column_index(self) -> dict[int, int]:
        cached = getattr(self, "_columns", None)
        if cached is None:
            cached = {item_id: j for j, item_id in enumerate(self.item_order)}
            object.__setattr__(self, "_columns", cached)
        return cached

    def genres_of(self, item_id: int) -> frozenset[int]:
        return self.items[item_id].genres

    def genre_id(self, name: str) -> int:
        try:
            return self.genre_vocabulary.index(name)
        except ValueError:
            raise DataError(f"unknown genre {name!r}") from None

    def items_with_genre(self, genre: int) -> list[int]:
        return [i for i in self.item_order if genre in self.items[i].genres]

    def restrict(self, item_ids: Iterable[int]) -> "ItemCatalog":
        """Catalog limited to ``item_ids``, with the genre vocabulary rebuilt."""
        keep = set(item_ids)
        missing = keep - set(self.items)
        if missing:
            raise DataError(f"unknown item ids: {sorted(missing)[:5]}")
        names = sorted({self.genre_vocabulary[g] for i in keep for g in self.items[i].genres})
        remap = {self.genre_vocabulary.index(n): j for j, n in enumerate(names)}
        items = {
            i: CatalogItem(self.items[i].title, frozenset(remap[g] for g in self.items[i].genres))
            for i in keep
        }
        return ItemCatalog(items=items, genre_vocabulary=tuple(names), item_order=tuple(sorted(keep)))

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for i in self.item_order:
            item = self.items[i]
            h.update(f"{i}\t{item.title}\t{sorted(item.genres)}\n".encode())
        h.update("\t".join(self.genre_vocabulary).encode())
        return h.hexdigest()


@dataclass
class Interactions:
    """Sparse (user, item, rating, timestamp) records plus derived implicit targets.

    Parallel arrays sorted by (user, timestamp, item) so output order is
    deterministic. ``implicit`` is None until :func:`binarize` runs.
    """

    user: np.ndarray  # int64 raw user ids
    item: np.ndarray  # int64 raw item ids
    rating: np.ndarray  # int64 in 1..5
    timestamp: np.ndarray  # int64
    implicit: np.ndarray | None = None  # uint8, aligned with rating
    threshold: int | None = None

    def __post_init__(self) -> None:
        pairs = set(zip(self.user.tolist(), self.item.tolist()))
        if len(pairs) != len(self.user):
            raise DataError("duplicate (user, item) pairs in interactions")
        order = np.lexsort((self.item, self.timestamp, self.user))
        if not np.array_equal(order, np.arange(len(order))):
            self.user = self.user[order]
            self.item = self.item[order]
            self.rating = self.rating[order]
            self.timestamp = self.timestamp[order]
            if self.implicit is not None:
                self.implicit = self.implicit[order]

    @property
    def n_interactions(self) -> int:
        return len(self.user)

    def user_ids(self) -> np.ndarray:
        return np.unique(self.user)

    def item_ids(self) -> np.ndarray:
        return np.unique(self.item)

    def by_user(self) -> dict[int, np.ndarray]:
        """Row indices per user, in stored (timestamp, item) order.

        Memoized; Interactions are treated as immutable after construction.
        """
        cached = getattr(self, "_by_user", None)
        if cached is None:
            index: dict[int, list[int]] = {}
            for row, u in enumerate(self.user.tolist()):
                index.setdefault(u, []).append(row)
            cached = {u: np.asarray(rows) for u, rows in index.items()}
            self._by_user = cached
        return cached

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for arr in (self.user, self.item, self.rating, self.timestamp):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SplitPlan:
    """Per-user role assignment and input/eval item partition."""

    role: dict[int, str]
    input_items: dict[int, tuple[int, ...]]
    eval_items: dict[int, tuple[int, ...]]
    seed: int
    max_input: int

    def users_with_role(self, role: str) -> list[int]:
        return sorted(u for u, r in self.role.items() if r == role)

    def to_json(self) -> str:
        doc = {
            "format_version": SPLIT_PLAN_FORMAT_VERSION,
            "seed": self.seed,
            "max_input": self.max_input,
            "roles": {str(u): r for u, r in sorted(self.role.items())},
            "per_user": {
                str(u): {"input": list(self.input_items[u]), "eval": list(self.eval_items[u])}
                for u in sorted(self.role)
            },
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "SplitPlan":
        doc = json.loads(text)
        if doc.get("format_version") != SPLIT_PLAN_FORMAT_VERSION:
            raise DataError(f"unsupported split plan version {doc.get('format_version')}")
        role = {int(u): r for u, r in doc["roles"].items()}
        inputs = {int(u): tuple(v["input"]) for u, v in doc["per_user"].items()}
        evals = {int(u): tuple(v["eval"]) for u, v in doc["per_user"].items()}
        return SplitPlan(role=role, input_items=inputs, eval_items=evals,
                         seed=doc["seed"], max_input=doc["max_input"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @staticmethod
    def load(path: str | Path) -> "SplitPlan":
        return SplitPlan.from_json(Path(path).read_text())


def load_catalog(path: str | Path, delimiter: str = "::", genre_delimiter: str = "|",
                 encoding: str = "utf-8") -> ItemCatalog:
    """Parse an item metadata file with rows ``id<delim>title<delim>genre|genre``.

    Rows with zero genres are rejected and logged; malformed rows raise with
    their line number. The genre vocabulary is the sorted union of observed
    genre names.
    """
    path = Path(path)
    raw: dict[int, tuple[str, tuple[str, ...]]] = {}
    with path.open(encoding=encoding, errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(delimiter)
            if len(parts) != 3:
                raise DataError(f"{path.name}:{lineno}: expected 3 fields, got {len(parts)}")
            id_text, title, genre_text = parts
            try:
                item_id = int(id_text)
            except ValueError:
                raise DataError(f"{path.name}:{lineno}: item id {id_text!r} is not an integer") from None
            if item_id in raw:
                raise DataError(f"{path.name}:{lineno}: duplicate item id {item_id}")
            genres = tuple(g.strip() for g in genre_text.split(genre_delimiter) if g.strip())
            if not genres:
                logger.warning("%s:%d: item %d has no genres, row dropped", path.name, lineno, item_id)
                continue
            if not title.strip():
                raise DataError(f"{path.name}:{lineno}: empty title for item {item_id}")
            raw[item_id] = (title.strip(), genres)
    names = sorted({g for _, genres in raw.values() for g in genres})
    name_to_id = {n: j for j, n in enumerate(names)}
    items = {
        i: CatalogItem(title, frozenset(name_to_id[g] for g in genres))
        for i, (title, genres) in raw.items()
    }
    return ItemCatalog(items=items, genre_vocabulary=tuple(names), item_order=tuple(sorted(items)))


def load_ratings(path: str | Path, delimiter: str = "::", encoding: str = "utf-8") -> Interactions:
    """Parse a ratings file with rows ``user<delim>item<delim>rating<delim>timestamp``."""
    path = Path(path)
    users: list[int] = []
    items: list[int] = []
    ratings: list[int] = []
    stamps: list[int] = []
    with path.open(encoding=encoding, errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(delimiter)
            if len(parts) != 4:
                raise DataError(f"{path.name}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                u, i, r, t = (int(p) for p in parts)
            except ValueError:
                raise DataError(f"{path.name}:{lineno}: non-integer field") from None
            if not 1 <= r <= 5:
                raise DataError(f"{path.name}:{lineno}: rating {r} outside 1..5")
            users.append(u)
            items.append(i)
            ratings.append(r)
            stamps.append(t)
    if not users:
        raise EmptyDatasetError(f"{path} holds no interactions")
    return _sorted_interactions(
        np.asarray(users, dtype=np.int64),
        np.asarray(items, dtype=np.int64),
        np.asarray(ratings, dtype=np.int64),
        np.asarray(stamps, dtype=np.int64),
    )


def _sorted_interactions(user: np.ndarray, item: np.ndarray, rating: np.ndarray,
                         timestamp: np.ndarray, implicit: np.ndarray | None = None,
                         threshold: int | None = None) -> Interactions:
    # construction sorts by (user, timestamp, item)
    return Interactions(user=user, item=item, rating=rating, timestamp=timestamp,
                        implicit=implicit, threshold=threshold)


def filter_interactions(inter: Interactions, min_user: int, min_item: int) -> Interactions:
    """Alternately drop light users and light items until a fixpoint.

    Dropping items can push users back under ``min_user`` (and vice versa),
    so one pass is not enough; the fixpoint is order-independent.
    """
    if min_user < 0 or min_item < 0:
        raise ValueError("filter thresholds must be >= 0")
    keep = np.ones(inter.n_interactions, dtype=bool)
    while True:
        changed = False
        users, counts = np.unique(inter.user[keep], return_counts=True)
        light = set(users[counts < min_user].tolist())
        if light:
            mask = keep & ~np.isin(inter.user, list(light))
            changed = changed or mask.sum() != keep.sum()
            keep = mask
        items, counts = np.unique(inter.item[keep], return_counts=True)
        light = set(items[counts < min_item].tolist())
        if light:
            mask = keep & ~np.isin(inter.item, list(light))
            changed = changed or mask.sum() != keep.sum()
            keep = mask
        if not changed:
            break
    if not keep.any():
        raise EmptyDatasetError(
            f"no interactions survive filtering at min_user={min_user}, min_item={min_item}"
        )
    return _sorted_interactions(
        inter.user[keep], inter.item[keep], inter.rating[keep], inter.timestamp[keep]
    )


def load_and_filter(path: str | Path, min_user: int, min_item: int,
                    delimiter: str = "::") -> Interactions:
    return filter_interactions(load_ratings(path, delimiter=delimiter), min_user, min_item)


def binarize(inter: Interactions, r: int) -> Interactions:
    """Populate implicit targets: positive iff rating >= r. Ratings are kept
    unchanged because models consume the raw values as input."""
    if not 1 <= r <= 5:
        raise ValueError(f"threshold {r} outside 1..5")
    implicit = (inter.rating >= r).astype(np.uint8)
    return Interactions(
        user=inter.user, item=inter.item, rating=inter.rating,
        timestamp=inter.timestamp, implicit=implicit, threshold=r,
    )


def make_splits(inter: Interactions, n_val: int, n_test: int, max_input: int = 50,
                seed: int = 0) -> SplitPlan:
    """Strong-generalization split with per-user input/eval partitions.

    Held-out users are sampled uniformly. Per user, interactions sorted by
    (timestamp, item id): more than ``max_input`` ratings keeps the oldest
    ``max_input`` as input, the rest for evaluation; otherwise the two most
    recent become evaluation.
    """
    if max_input < 3:
        raise ValueError("max_input must be >= 3")
    users = np.unique(inter.user)
    if n_val + n_test >= len(users):
        raise ValueError(f"cannot hold out {n_val + n_test} of {len(users)} users")
    rng = np.random.default_rng(seed)
    shuffled = users[rng.permutation(len(users))]
    val_users = set(shuffled[:n_val].tolist())
    test_users = set(shuffled[n_val:n_val + n_test].tolist())

    role: dict[int, str] = {}
    input_items: dict[int, tuple[int, ...]] = {}
    eval_items: dict[int, tuple[int, ...]] = {}
    for u, rows in inter.by_user().items():
        if len(rows) < 3:
            raise DataError(f"user {u} has {len(rows)} ratings; filtering should prevent this")
        # rows are already ordered by (timestamp, item id) for this user
        items = inter.item[rows]
        if len(items) > max_input:
            cut = max_input
        else:
            cut = len(items) - 2
        role[u] = VALIDATION if u in val_users else TEST if u in test_users else TRAIN
        input_items[u] = tuple(items[:cut].tolist())
        eval_items[u] = tuple(items[cut:].tolist())
    return SplitPlan(role=role, input_items=input_items, eval_items=eval_items,
                     seed=seed, max_input=max_input)


def align_to_catalog(inter: Interactions, catalog: ItemCatalog) -> tuple[Interactions, ItemCatalog]:
    """Drop interactions on unknown items and restrict the catalog to rated items."""
    known = np.isin(inter.item, np.asarray(catalog.item_order))
    if not known.all():
        inter = _sorted_interactions(
            inter.user[known], inter.item[known], inter.rating[known], inter.timestamp[known],
            None if inter.implicit is None else inter.implicit[known], inter.threshold,
        )
    return inter, catalog.restrict(np.unique(inter.item).tolist())


def build_matrices(inter: Interactions, plan: SplitPlan, users: Sequence[int],
                   catalog: ItemCatalog) -> tuple[np.ndarray, np.ndarray]:
    """Dense (X, Y) for a user list: X holds raw ratings on input items only,
    Y holds implicit targets over all of the user's rated items."""
    if inter.implicit is None:
        raise DataError("interactions must be binarized before building matrices")
    n = catalog.n_items
    x = np.zeros((len(users), n), dtype=np.float32)
    y = np.zeros((len(users), n), dtype=np.float32)
    col = {item_id: j for j, item_id in enumerate(catalog.item_order)}
    by_user = inter.by_user()
    for row, u in enumerate(users):
        if u not in by_user:
            raise DataError(f"user {u} absent from interactions")
        inputs = set(plan.input_items[u])
        for idx in by_user[u]:
            item_id = int(inter.item[idx])
            j = col[item_id]
            if item_id in inputs:
                x[row, j] = inter.rating[idx]
            if inter.implicit[idx]:
                y[row, j] = 1.0
    return x, y


def save_interactions(inter: Interactions, path: str | Path) -> None:
    np.savez_compressed(
        Path(path), user=inter.user, item=inter.item, rating=inter.rating,
        timestamp=inter.timestamp,
        implicit=inter.implicit if inter.implicit is not None else np.zeros(0, dtype=np.uint8),
        threshold=np.asarray([inter.threshold if inter.threshold is not None else -1]),
    )


def load_interactions(path: str | Path) -> Interactions:
    data = np.load(Path(path))
    threshold = int(data["threshold"][0])
    implicit = data["implicit"] if data["implicit"].size else None
    return Interactions(user=data["user"], item=data["item"], rating=data["rating"],
                        timestamp=data["timestamp"], implicit=implicit,
                        threshold=threshold if threshold >= 0 else None)


def save_catalog(catalog: ItemCatalog, path: str | Path, delimiter: str = "::",
                 genre_delimiter: str = "|") -> None:
    """Canonical catalog file in the same format load_catalog reads."""
    with Path(path).open("w") as fh:
        for item_id in catalog.item_order:
            item = catalog.items[item_id]
            genres = genre_delimiter.join(
                catalog.genre_vocabulary[g] for g in sorted(item.genres))
            fh.write(f"{item_id}{delimiter}{item.title}{delimiter}{genres}\n")


def eval_positives(inter: Interactions, plan: SplitPlan, user: int) -> list[int]:
    """Raw ids of the user's positively rated evaluation items."""
    if inter.implicit is None:
        raise DataError("interactions must be binarized first")
    held = set(plan.eval_items[user])
    ids = []
    for idx in inter.by_user()[user]:
        item_id = int(inter.item[idx])
        if item_id in held and inter.implicit[idx]:
            ids.append(item_id)
    return ids
