"""Controllability task runners: large-scope flips, fine-grained edits,
guided steering, genre-vector flips, and the alpha tradeoff sweep.

Each runner consumes a trained model plus stored corpora (edits are never
generated inline, so runs replay exactly), and emits a TaskRun whose
manifest pins everything needed to reproduce it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import torch

from ..dataio import ItemCatalog
from ..metrics import delta_rank, ndcg_at_k, ndcg_genre_at_k
from ..models import AlignedRecommender, GenreProfile
from ..ranking import guided_latent, rank_items
from ..summaries.records import UserSummary
from ..training.loop import UserEvalCase
from .synthetic import FlipRecord


@dataclass
class TaskRun:
    task: str
    alphas: tuple[float, ...]
    k: int
    outputs: dict
    counts: dict[str, int]
    manifest: dict

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "manifest.json").write_text(json.dumps(self.manifest, indent=1, sort_keys=True))
        out = directory / f"{self.task}.json"
        out.write_text(json.dumps({"task": self.task, "alphas": list(self.alphas),
                                   "k": self.k, "outputs": self.outputs,
                                   "counts": self.counts}, indent=1, sort_keys=True))
        return out


def corpus_hash(texts: Mapping[int, str]) -> str:
    h = hashlib.sha256()
    for user in sorted(texts):
        h.update(f"{user}\n{texts[user]}\n".encode())
    return h.hexdigest()


def _manifest(task: str, model: AlignedRecommender, alphas: Sequence[float], k: int,
              seed: int | None = None, **extra) -> dict:
    doc = {
        "task": task,
        "alphas": list(alphas),
        "k": k,
        "model_frozen_checksum": model.frozen_checksum(),
        "model_trainable_checksum": model.trainable_checksum(),
        "catalog_hash": model.catalog_hash,
    }
    if seed is not None:
        doc["seed"] = seed
    doc.update(extra)
    return doc


def _batched_probs(model: AlignedRecommender, z: torch.Tensor) -> np.ndarray:
    with torch.no_grad():
        return model.decode(z).numpy()


def _mixed_probs(model: AlignedRecommender, z_r: torch.Tensor, profiles: Sequence,
                 alpha: float) -> np.ndarray:
    if alpha == 0.0:
        return _batched_probs(model, z_r)
    with torch.no_grad():
        z_s = model.encode_profile(profiles).mu
    return _batched_probs(model, alpha * z_s + (1.0 - alpha) * z_r)


def _history_latents(model: AlignedRecommender, cases: Sequence[UserEvalCase]) -> torch.Tensor:
    rows = torch.from_numpy(np.stack([c.row for c in cases]).astype(np.float32))
    return model.encode_blackbox(rows).mu


def _flip_deltas(model: AlignedRecommender, catalog: ItemCatalog,
                 cases: Sequence[UserEvalCase], originals: Sequence,
                 edits: Sequence, favorites: Sequence[int], leasts: Sequence[int],
                 alphas: Sequence[float], k: int) -> dict:
    """Per alpha: signed deltas for the demoted (favorite) and promoted
    (least favorite) genres, their magnitudes, and sign agreement."""
    z_r = _history_latents(model, cases)
    out: dict[str, dict] = {}
    for alpha in alphas:
        probs_o = _mixed_probs(model, z_r, originals, alpha)
        probs_a = _mixed_probs(model, z_r, edits, alpha)
        d_up, d_down = [], []
        for i, case in enumerate(cases):
            ranked_o = rank_items(probs_o[i], model.item_order, case.seen, k)
            ranked_a = rank_items(probs_a[i], model.item_order, case.seen, k)
            d_up.append(ndcg_genre_at_k(ranked_o, leasts[i], catalog, k)
                        - ndcg_genre_at_k(ranked_a, leasts[i], catalog, k))
            d_down.append(ndcg_genre_at_k(ranked_o, favorites[i], catalog, k)
                          - ndcg_genre_at_k(ranked_a, favorites[i], catalog, k))
        up = np.asarray(d_up)
        down = np.asarray(d_down)
        out[f"{alpha:g}"] = {
            "delta_up_abs_mean": float(np.abs(up).mean()),
            "delta_up_abs_std": float(np.abs(up).std()),
            "delta_down_abs_mean": float(np.abs(down).mean()),
            "delta_down_abs_std": float(np.abs(down).std()),
            "delta_up_signed_mean": float(up.mean()),
            "delta_down_signed_mean": float(down.mean()),
            # promoted genre should gain (delta_up < 0), demoted should lose (> 0)
            "sign_correct_up": float((up < 0).mean()),
            "sign_correct_down": float((down > 0).mean()),
        }
    return out


def run_large_scope(model: AlignedRecommender, catalog: ItemCatalog,
                    cases: Sequence[UserEvalCase], originals: Mapping[int, str],
                    edited: Mapping[int, FlipRecord], alphas: Sequence[float],
                    k: int = 20) -> TaskRun:
    """Flip task: compare rankings under the original summary and the
    stored flipped rewrite, per user and alpha."""
    usable, orig_texts, edit_texts, favs, leasts = [], [], [], [], []
    skipped = 0
    for case in cases:
        record = edited.get(case.user)
        if record is None or case.user not in originals:
            skipped += 1
            continue
        usable.append(case)
        orig_texts.append(originals[case.user])
        edit_texts.append(record.summary.text)
        favs.append(catalog.genre_id(record.favorite))
        leasts.append(catalog.genre_id(record.least_favorite))
    if not usable:
        raise ValueError("no users with both original and flipped summaries")
    outputs = _flip_deltas(model, catalog, usable, orig_texts, edit_texts, favs, leasts,
                           alphas, k)
    return TaskRun(
        task="large-scope", alphas=tuple(alphas), k=k, outputs=outputs,
        counts={"users": len(usable), "skipped_missing_edit": skipped},
        manifest=_manifest("large-scope", model, alphas, k,
                           original_corpus=corpus_hash({c.user: t for c, t in zip(usable, orig_texts)}),
                           edited_corpus=corpus_hash({c.user: t for c, t in zip(usable, edit_texts)})),
    )


EditFn = Callable[[UserSummary, int, int], UserSummary]
"""(original summary, target item id, rerun index) -> edited summary."""


def _full_rank_positions(probs: np.ndarray, model: AlignedRecommender,
                         case: UserEvalCase) -> dict[int, int]:
    ranked = rank_items(probs, model.item_order, case.seen, k=None)
    return {item: pos for pos, item in enumerate(ranked.items, start=1)}


def run_fine_grained(model: AlignedRecommender, cases: Sequence[UserEvalCase],
                     originals: Mapping[int, UserSummary], edit_fn: EditFn,
                     alphas: Sequence[float], rank_window: tuple[int, int] = (100, 500),
                     reruns: int = 3, seed: int = 0, eval_items: Mapping[int, Sequence[int]]
                     | None = None) -> TaskRun:
    """Single-item promotion task.

    A target is sampled per user among evaluation items whose original rank
    sits inside ``rank_window`` at every alpha; the stored editor runs
    ``reruns`` times and the median rank gain is the user's score.
    """
    lo, hi = rank_window
    if lo < 1 or hi <= lo:
        raise ValueError("rank window must satisfy 1 <= lo < hi")
    rng = np.random.default_rng(seed)
    z_r = _history_latents(model, cases)

    # original full rankings per alpha, shared by eligibility and scoring
    positions: dict[float, list[dict[int, int]]] = {}
    for alpha in alphas:
        probs = _mixed_probs(model, z_r, [originals[c.user].text for c in cases], alpha)
        positions[alpha] = [_full_rank_positions(probs[i], model, case)
                            for i, case in enumerate(cases)]

    eligible: list[tuple[int, UserEvalCase, int]] = []  # (case idx, case, target item)
    for i, case in enumerate(cases):
        candidates = []
        pool = (eval_items or {}).get(case.user)
        if pool is None:
            pool = case.positives
        for item in pool:
            ranks = [positions[alpha][i].get(item) for alpha in alphas]
            if all(r is not None and lo <= r <= hi for r in ranks):
                candidates.append(item)
        if candidates:
            eligible.append((i, case, int(rng.choice(sorted(candidates)))))
    if not eligible:
        raise ValueError("no users hold an evaluation item inside the rank window")

    outputs: dict[str, dict] = {}
    for alpha in alphas:
        medians = []
        for i, case, target in eligible:
            original_rank = positions[alpha][i][target]
            gains = []
            for rerun in range(reruns):
                edited = edit_fn(originals[case.user], target, rerun)
                probs = _mixed_probs(model, z_r[i:i + 1], [edited.text], alpha)
                new_rank = _full_rank_positions(probs[0], model, case)[target]
                gains.append(delta_rank(original_rank, new_rank))
            medians.append(float(np.median(gains)))
        med = np.asarray(medians)
        outputs[f"{alpha:g}"] = {
            "delta_rank_mean": float(med.mean()),
            "delta_rank_stderr": float(med.std() / np.sqrt(len(med))),
            "delta_rank_median": float(np.median(med)),
            "fraction_positive": float((med > 0).mean()),
            "per_user_median": med.tolist(),
        }
    return TaskRun(
        task="fine-grained", alphas=tuple(alphas), k=hi, outputs=outputs,
        counts={"eligible_users": len(eligible),
                "filtered_users": len(cases) - len(eligible), "reruns": reruns},
        manifest=_manifest("fine-grained", model, alphas, hi, seed=seed,
                           rank_window=list(rank_window),
                           original_corpus=corpus_hash({c.user: originals[c.user].text
                                                        for c in cases})),
    )


def top_genres_by_items(catalog: ItemCatalog, n: int = 10) -> list[int]:
    counts = [(len(catalog.items_with_genre(g)), g) for g in range(catalog.n_genres)]
    ranked = sorted(counts, key=lambda t: (-t[0], t[1]))
    return [g for count, g in ranked[:n] if count > 0]


def run_guided(model: AlignedRecommender, catalog: ItemCatalog,
               cases: Sequence[UserEvalCase], k: int = 20, n_genres: int = 10,
               item_noun: str = "movies") -> TaskRun:
    """Steering task: short "More/Less {genre} {noun}" phrases move the
    history-only ranking at half weight, positive or negative."""
    genres = top_genres_by_items(catalog, n_genres)
    if not genres:
        raise ValueError("catalog has no populated genres")
    z_r = _history_latents(model, cases)
    probs_o = _batched_probs(model, z_r)
    ranked_o = [rank_items(probs_o[i], model.item_order, c.seen, k)
                for i, c in enumerate(cases)]
    outputs: dict[str, dict] = {}
    for genre in genres:
        name = catalog.genre_vocabulary[genre]
        per_direction = {}
        for direction, phrase in (("more", f"More {name} {item_noun}"),
                                  ("less", f"Less {name} {item_noun}")):
            mode = route_guidance(phrase)
            with torch.no_grad():
                z_g = model.encode_text([phrase]).mu.expand_as(z_r)
                probs_a = _batched_probs(model, guided_latent(z_r, z_g, mode))
            deltas = []
            for i, case in enumerate(cases):
                ranked_a = rank_items(probs_a[i], model.item_order, case.seen, k)
                deltas.append(ndcg_genre_at_k(ranked_o[i], genre, catalog, k)
                              - ndcg_genre_at_k(ranked_a, genre, catalog, k))
            arr = np.asarray(deltas)
            want_negative = direction == "more"  # promoted genre gains => delta < 0
            per_direction[direction] = {
                "phrase": phrase,
                "mode": mode,
                "delta_abs_mean": float(np.abs(arr).mean()),
                "delta_signed_mean": float(arr.mean()),
                "sign_correct": float((arr < 0).mean() if want_negative else (arr > 0).mean()),
            }
        outputs[name] = per_direction
    return TaskRun(
        task="guided", alphas=(0.0, 0.5), k=k, outputs=outputs,
        counts={"users": len(cases), "genres": len(genres)},
        manifest=_manifest("guided", model, (0.0, 0.5), k, item_noun=item_noun),
    )


def route_guidance(phrase: str) -> str:
    """Keyword sentiment routing: "less"/"fewer" phrases subtract, everything
    else adds."""
    head = phrase.strip().lower()
    return "negative" if head.startswith(("less", "fewer")) else "positive"


def run_genre_flip(model: AlignedRecommender, catalog: ItemCatalog,
                   cases: Sequence[UserEvalCase], mode: str, alphas: Sequence[float],
                   k: int = 20) -> TaskRun:
    """Genre-vector analog of the flip task.

    ``swap`` exchanges the favorite and least-favorite weights in the
    profile; ``one-hot-upper-bound`` puts all mass on the promoted genre.
    Cases must carry GenreProfile profiles.
    """
    if mode not in {"swap", "one-hot-upper-bound"}:
        raise ValueError(f"unknown mode {mode!r}")
    usable, originals, edits, favs, leasts = [], [], [], [], []
    skipped = 0
    for case in cases:
        profile = case.profile
        if not isinstance(profile, GenreProfile):
            raise TypeError("genre flip requires GenreProfile cases")
        fav, least = profile.favorite(), profile.least_favorite()
        if fav == least or profile.weights[fav] == profile.weights[least]:
            skipped += 1
            continue
        usable.append(case)
        originals.append(profile)
        edits.append(profile.swapped(fav, least) if mode == "swap"
                     else profile.one_hot(least))
        favs.append(fav)
        leasts.append(least)
    if not usable:
        raise ValueError("no users with distinct favorite/least-favorite genres")
    outputs = _flip_deltas(model, catalog, usable, originals, edits, favs, leasts, alphas, k)
    return TaskRun(
        task=f"genre-flip-{mode}", alphas=tuple(alphas), k=k, outputs=outputs,
        counts={"users": len(usable), "skipped_degenerate": skipped},
        manifest=_manifest(f"genre-flip-{mode}", model, alphas, k, mode=mode),
    )


def alpha_sweep(model: AlignedRecommender, catalog: ItemCatalog,
                cases: Sequence[UserEvalCase], originals: Mapping[int, str],
                edited: Mapping[int, FlipRecord], grid: Sequence[float], k: int = 20,
                val_cases: Sequence[UserEvalCase] | None = None,
                val_profiles: Mapping[int, str] | None = None) -> TaskRun:
    """Performance/controllability tradeoff table over the alpha grid, plus
    the argmax alpha on validation NDCG."""
    for alpha in grid:
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha {alpha} outside [0, 1]")
    flips = run_large_scope(model, catalog, cases, originals, edited, grid, k)
    z_r = _history_latents(model, cases)
    rows = []
    for alpha in grid:
        probs = _mixed_probs(model, z_r, [originals[c.user] for c in cases], alpha)
        ndcgs = [ndcg_at_k(rank_items(probs[i], model.item_order, c.seen, k),
                           c.positives, k)
                 for i, c in enumerate(cases)]
        entry = flips.outputs[f"{alpha:g}"]
        rows.append({
            "alpha": float(alpha),
            "ndcg": float(np.mean(ndcgs)),
            "delta_up_abs": entry["delta_up_abs_mean"],
            "delta_down_abs": entry["delta_down_abs_mean"],
        })
    best_alpha = None
    if val_cases:
        profiles = val_profiles or originals
        z_val = _history_latents(model, val_cases)
        best = -1.0
        for alpha in grid:
            probs = _mixed_probs(model, z_val, [profiles[c.user] for c in val_cases], alpha)
            score = float(np.mean([
                ndcg_at_k(rank_items(probs[i], model.item_order, c.seen, k), c.positives, k)
                for i, c in enumerate(val_cases)]))
            if score > best:
                best, best_alpha = score, float(alpha)
    return TaskRun(
        task="alpha-sweep", alphas=tuple(grid), k=k,
        outputs={"rows": rows, "best_alpha": best_alpha},
        counts={"users": len(cases), "grid_points": len(list(grid))},
        manifest=_manifest("alpha-sweep", model, grid, k),
    )


def default_alpha_grid(step: float = 0.01) -> list[float]:
    n = round(1.0 / step)
    return [round(i * step, 10) for i in range(n + 1)]
