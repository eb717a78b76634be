"""The three-term objective: reconstruction, latent alignment, prior pull.

Alignment is the closed-form squared 2-Wasserstein distance between
diagonal Gaussians; with commuting covariances the trace term collapses
to the sum of squared sigma differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import torch

from ..models import AlignedRecommender, LatentGaussian, NumericError, sample_latent


@dataclass(frozen=True)
class TrainConfig:
    lambda1: float = 0.1
    lambda2_max: float = 0.5
    anneal_fraction: float = 0.25
    alpha_train: float = 0.5
    lr: float = 1e-3
    weight_decay: float = 0.0
    batch: int = 32
    epochs: int = 200
    seed: int = 0
    checkpoint_alphas: tuple[float, ...] = (0.0, 0.5, 1.0)
    checkpoint_k: int = 50

    def __post_init__(self) -> None:
        if self.lambda1 < 0:
            raise ValueError("lambda1 must be >= 0")
        if not 0.0 <= self.alpha_train <= 1.0:
            raise ValueError("alpha_train must lie in [0, 1]")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if not 0.0 < self.anneal_fraction <= 1.0:
            raise ValueError("anneal_fraction must lie in (0, 1]")


@dataclass
class LossReport:
    l_r_c: torch.Tensor
    l_r_s: torch.Tensor
    l_r_r: torch.Tensor
    l_ot: torch.Tensor
    l_kl: torch.Tensor
    lambda2: float
    lambda1: float

    @property
    def l_r_total(self) -> torch.Tensor:
        return self.l_r_c + self.l_r_s + self.l_r_r

    @property
    def total(self) -> torch.Tensor:
        return self.l_r_total + self.lambda1 * self.l_ot + self.lambda2 * self.l_kl

    def to_floats(self) -> dict[str, float]:
        return {
            "l_r_total": float(self.l_r_total.detach()),
            "l_r_c": float(self.l_r_c.detach()),
            "l_r_s": float(self.l_r_s.detach()),
            "l_r_r": float(self.l_r_r.detach()),
            "l_ot": float(self.l_ot.detach()),
            "l_kl": float(self.l_kl.detach()),
            "lambda2": self.lambda2,
            "total": float(self.total.detach()),
        }


def ot_loss(a: LatentGaussian, b: LatentGaussian) -> torch.Tensor:
    """Squared 2-Wasserstein distance between diagonal Gaussians, batch mean:
    ||mu_a - mu_b||^2 + sum_i (sigma_a_i - sigma_b_i)^2."""
    if a.dim != b.dim:
        raise ValueError(f"latent dims differ: {a.dim} vs {b.dim}")
    mean_term = ((a.mu - b.mu) ** 2).sum(dim=-1)
    trace_term = ((a.sigma - b.sigma) ** 2).sum(dim=-1)
    return (mean_term + trace_term).mean()


def kl_loss(g: LatentGaussian) -> torch.Tensor:
    """KL( N(mu, diag(sigma^2)) || N(0, I) ), batch mean."""
    var = g.sigma ** 2
    per_user = 0.5 * (var + g.mu ** 2 - 1.0 - torch.log(var)).sum(dim=-1)
    return per_user.mean()


def multinomial_nll(y: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
    """Negative multinomial log-likelihood -sum_i y_i log(p_i), batch mean."""
    if y.shape != p.shape:
        raise ValueError("target and probability shapes differ")
    per_row = -(y * torch.log(p + 1e-12)).sum(dim=-1)
    return per_row.mean()


def lambda2_at(step: int, cfg: TrainConfig, total_steps: int) -> float:
    """Linear ramp to lambda2_max over the first anneal_fraction of steps."""
    horizon = max(1.0, cfg.anneal_fraction * total_steps)
    return cfg.lambda2_max * min(1.0, step / horizon)


def total_loss(model: AlignedRecommender, batch: tuple[torch.Tensor, Sequence, torch.Tensor],
               cfg: TrainConfig, step: int, total_steps: int,
               seed: int | None = None,
               generator: torch.Generator | None = None) -> LossReport:
    """Full objective on one aligned batch of (rating rows, profiles, targets).

    The history latent comes from the frozen backbone at its mean; the
    profile latent is sampled with the reparameterization trick so its
    gradient reaches the encoder.
    """
    rows, profiles, targets = batch
    if len(profiles) != rows.shape[0] or targets.shape[0] != rows.shape[0]:
        raise ValueError("batch components are misaligned")
    latent_r = model.encode_blackbox(rows)
    latent_s = model.encode_profile(profiles)
    z_r = latent_r.mu
    z_s = sample_latent(latent_s, seed=seed, mode="sample", generator=generator)
    z_c = cfg.alpha_train * z_s + (1.0 - cfg.alpha_train) * z_r

    report = LossReport(
        l_r_c=multinomial_nll(targets, model.decode(z_c)),
        l_r_s=multinomial_nll(targets, model.decode(z_s)),
        l_r_r=multinomial_nll(targets, model.decode(z_r)),
        l_ot=ot_loss(latent_s, latent_r),
        l_kl=kl_loss(latent_s),
        lambda2=lambda2_at(step, cfg, total_steps),
        lambda1=cfg.lambda1,
    )
    if not torch.isfinite(report.total):
        bad = [name for name, value in report.to_floats().items()
               if not torch.isfinite(torch.tensor(value))]
        raise NumericError(f"non-finite loss terms: {bad}")
    return report
