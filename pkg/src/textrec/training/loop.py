"""Training loops: backbone pretraining and aligned-model fine-tuning.

Both loops are deterministic given their config seed, freeze exactly what
they promise to freeze, and pick the best checkpoint on validation
NDCG@50 (averaged over the configured alpha grid for aligned models).
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import torch

from ..dataio import Interactions, ItemCatalog, SplitPlan, binarize, build_matrices, eval_positives
from ..metrics import ndcg_at_k
from ..models import AlignedRecommender, Backbone, GenreProfile, LatentGaussian
from ..ranking import rank_items
from .losses import LossReport, TrainConfig, kl_loss, multinomial_nll, total_loss


@dataclass
class UserEvalCase:
    user: int
    row: np.ndarray
    profile: object  # summary text or GenreProfile
    seen: tuple[int, ...]
    positives: tuple[int, ...]


@dataclass
class TrainData:
    """Dense tensors for train users plus evaluation cases for held-out users."""

    x_train: np.ndarray
    y_train: np.ndarray
    profiles_train: list
    train_users: list[int]
    val_cases: list[UserEvalCase]
    test_cases: list[UserEvalCase]
    item_order: tuple[int, ...]


class MissingProfileError(KeyError):
    pass


def _cases_for(users: Sequence[int], inter: Interactions, plan: SplitPlan,
               catalog: ItemCatalog, profiles: Mapping[int, object]) -> list[UserEvalCase]:
    x, _ = build_matrices(inter, plan, users, catalog)
    cases = []
    for row, u in enumerate(users):
        positives = tuple(eval_positives(inter, plan, u))
        if not positives:
            continue  # nothing to score this user on
        if u not in profiles:
            raise MissingProfileError(f"no profile for held-out user {u}")
        cases.append(UserEvalCase(user=u, row=x[row], profile=profiles[u],
                                  seen=tuple(plan.input_items[u]), positives=positives))
    return cases


def prepare_training_data(inter: Interactions, plan: SplitPlan, catalog: ItemCatalog,
                          profiles: Mapping[int, object]) -> TrainData:
    """Assemble matrices and eval cases; every train/val user needs a profile."""
    if inter.implicit is None:
        inter = binarize(inter, 4)
    train_users = plan.users_with_role("train")
    missing = [u for u in train_users if u not in profiles]
    if missing:
        raise MissingProfileError(f"no profile for train users {missing[:5]}")
    x_train, y_train = build_matrices(inter, plan, train_users, catalog)
    return TrainData(
        x_train=x_train,
        y_train=y_train,
        profiles_train=[profiles[u] for u in train_users],
        train_users=list(train_users),
        val_cases=_cases_for(plan.users_with_role("validation"), inter, plan, catalog, profiles),
        test_cases=_cases_for(plan.users_with_role("test"), inter, plan, catalog, profiles),
        item_order=tuple(catalog.item_order),
    )


def evaluate_ndcg(model: AlignedRecommender, cases: Sequence[UserEvalCase],
                  alpha: float, k: int = 50) -> float:
    """Mean NDCG@k over eval cases at one mixing weight, mean latents only."""
    if not cases:
        raise ValueError("no evaluation cases")
    rows = torch.from_numpy(np.stack([c.row for c in cases]).astype(np.float32))
    with torch.no_grad():
        z_r = model.encode_blackbox(rows).mu
        if alpha == 0.0:
            z = z_r
        else:
            z_s = model.encode_profile([c.profile for c in cases]).mu
            z = alpha * z_s + (1.0 - alpha) * z_r
        probs = model.decode(z).numpy()
    scores = []
    for i, case in enumerate(cases):
        ranked = rank_items(probs[i], model.item_order, case.seen, k)
        scores.append(ndcg_at_k(ranked, case.positives, k))
    return float(np.mean(scores))


def checkpoint_metric(model: AlignedRecommender, cases: Sequence[UserEvalCase],
                      cfg: TrainConfig) -> float:
    values = [evaluate_ndcg(model, cases, a, cfg.checkpoint_k) for a in cfg.checkpoint_alphas]
    return float(np.mean(values))


@dataclass
class EpochRecord:
    epoch: int
    losses: dict[str, float]
    val_ndcg_by_alpha: dict[str, float]
    val_metric: float


@dataclass
class TrainResult:
    history: list[EpochRecord]
    best_epoch: int
    best_metric: float
    frozen_checksum_before: str
    frozen_checksum_after: str

    def history_records(self) -> list[dict]:
        return [asdict(r) for r in self.history]


def train(model: AlignedRecommender, data: TrainData, cfg: TrainConfig) -> TrainResult:
    """Fine-tune the profile encoder and decoder; the backbone stays frozen.

    Each epoch the validation metric is NDCG@checkpoint_k averaged over the
    configured alphas; the best epoch's weights are restored at the end.
    """
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    frozen_before = model.frozen_checksum()

    params = list(model.trainable_parameters())
    optimizer = torch.optim.AdamW(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    n = data.x_train.shape[0]
    steps_per_epoch = max(1, (n + cfg.batch - 1) // cfg.batch)
    total_steps = cfg.epochs * steps_per_epoch

    def snapshot() -> dict:
        return {
            "encoder": copy.deepcopy(model.profile_encoder.state_dict()),
            "decoder": copy.deepcopy(model.decoder.state_dict()),
        }

    history: list[EpochRecord] = []
    baseline = checkpoint_metric(model, data.val_cases, cfg)
    history.append(EpochRecord(
        epoch=0, losses={},
        val_ndcg_by_alpha={str(a): evaluate_ndcg(model, data.val_cases, a, cfg.checkpoint_k)
                           for a in cfg.checkpoint_alphas},
        val_metric=baseline))
    best_metric = baseline
    best_epoch = 0
    best_state = snapshot()

    step = 0
    for epoch in range(1, cfg.epochs + 1):
        model.profile_encoder.train()
        model.decoder.train()
        order = rng.permutation(n)
        epoch_losses: list[dict[str, float]] = []
        for start in range(0, n, cfg.batch):
            idx = order[start:start + cfg.batch]
            rows = torch.from_numpy(data.x_train[idx])
            targets = torch.from_numpy(data.y_train[idx])
            profiles = [data.profiles_train[i] for i in idx]
            generator = torch.Generator()
            generator.manual_seed(cfg.seed * 1_000_003 + step)
            report = total_loss(model, (rows, profiles, targets), cfg, step,
                                total_steps, generator=generator)
            optimizer.zero_grad()
            report.total.backward()
            optimizer.step()
            epoch_losses.append(report.to_floats())
            step += 1
        model.profile_encoder.eval()
        model.decoder.eval()
        by_alpha = {str(a): evaluate_ndcg(model, data.val_cases, a, cfg.checkpoint_k)
                    for a in cfg.checkpoint_alphas}
        metric = float(np.mean(list(by_alpha.values())))
        mean_losses = {key: float(np.mean([l[key] for l in epoch_losses]))
                       for key in epoch_losses[0]}
        history.append(EpochRecord(epoch=epoch, losses=mean_losses,
                                   val_ndcg_by_alpha=by_alpha, val_metric=metric))
        if metric > best_metric:
            best_metric = metric
            best_epoch = epoch
            best_state = snapshot()

    model.profile_encoder.load_state_dict(best_state["encoder"])
    model.decoder.load_state_dict(best_state["decoder"])
    model.profile_encoder.eval()
    model.decoder.eval()
    frozen_after = model.frozen_checksum()
    if frozen_after != frozen_before:
        raise RuntimeError("frozen backbone parameters changed during training")
    return TrainResult(history=history, best_epoch=best_epoch, best_metric=best_metric,
                       frozen_checksum_before=frozen_before,
                       frozen_checksum_after=frozen_after)


@dataclass(frozen=True)
class BackboneTrainConfig:
    lr: float = 1e-3
    weight_decay: float = 0.0
    batch: int = 500
    epochs: int = 200
    beta_max: float = 0.2
    anneal_fraction: float = 0.25
    seed: int = 0
    eval_k: int = 50


def train_backbone(backbone: Backbone, x_train: np.ndarray, y_train: np.ndarray,
                   val_cases: Sequence[UserEvalCase], item_order: Sequence[int],
                   cfg: BackboneTrainConfig) -> list[dict]:
    """Standard pretraining for a backbone: multinomial likelihood plus an
    annealed prior term for the stochastic variants. Best checkpoint on
    validation NDCG@eval_k is restored."""
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    optimizer = torch.optim.Adam(backbone.parameters(), lr=cfg.lr,
                                 weight_decay=cfg.weight_decay)
    n = x_train.shape[0]
    steps_per_epoch = max(1, (n + cfg.batch - 1) // cfg.batch)
    total_steps = cfg.epochs * steps_per_epoch

    def eval_ndcg() -> float:
        backbone.eval()
        rows = torch.from_numpy(np.stack([c.row for c in val_cases]).astype(np.float32))
        with torch.no_grad():
            mu, _ = backbone.encode(rows)
            probs = torch.softmax(backbone.decode_logits(mu), dim=-1).numpy()
        vals = []
        for i, case in enumerate(val_cases):
            ranked = rank_items(probs[i], item_order, case.seen, cfg.eval_k)
            vals.append(ndcg_at_k(ranked, case.positives, cfg.eval_k))
        return float(np.mean(vals))

    history: list[dict] = []
    best = eval_ndcg()
    best_state = copy.deepcopy(backbone.state_dict())
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        backbone.train()
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch):
            idx = order[start:start + cfg.batch]
            rows = torch.from_numpy(x_train[idx])
            targets = torch.from_numpy(y_train[idx])
            mu, sigma = backbone.encode(rows)
            if backbone.spec.stochastic:
                generator = torch.Generator()
                generator.manual_seed(cfg.seed * 7_368_787 + step)
                eps = torch.randn(mu.shape, generator=generator)
                z = mu + sigma * eps
                beta = cfg.beta_max * min(1.0, step / max(1.0, cfg.anneal_fraction * total_steps))
                prior = kl_loss(LatentGaussian(mu, sigma))
            else:
                z = mu
                beta = 0.0
                prior = torch.tensor(0.0)
            probs = torch.softmax(backbone.decode_logits(z), dim=-1)
            loss = multinomial_nll(targets, probs) + beta * prior
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
            step += 1
        metric = eval_ndcg()
        history.append({"epoch": epoch, "loss": float(np.mean(losses)), "val_ndcg": metric})
        if metric > best:
            best = metric
            best_state = copy.deepcopy(backbone.state_dict())
    backbone.load_state_dict(best_state)
    backbone.eval()
    return history


def write_history(history: Sequence[Mapping | EpochRecord], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for rec in history:
            doc = asdict(rec) if isinstance(rec, EpochRecord) else dict(rec)
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


def write_manifest(path: str | Path, **fields) -> None:
    """Run manifest: config, seeds, artifact hashes; one JSON document."""
    Path(path).write_text(json.dumps(fields, indent=1, sort_keys=True, default=str))
