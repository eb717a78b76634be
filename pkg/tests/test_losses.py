import math

import numpy as np
import pytest
import torch
from scipy.linalg import sqrtm

from textrec.models import LatentGaussian
from textrec.training import (
    TrainConfig,
    kl_loss,
    lambda2_at,
    multinomial_nll,
    ot_loss,
    total_loss,
)

from test_models import make_model, small_catalog


def gaussian(mu, sigma):
    return LatentGaussian(mu=torch.as_tensor(np.asarray(mu), dtype=torch.float64),
                          sigma=torch.as_tensor(np.asarray(sigma), dtype=torch.float64))


def full_matrix_ot(mu_a, sigma_a, mu_b, sigma_b):
    """Independent reference: the general closed form with full covariance
    matrices, evaluated with a dense matrix square root."""
    cov_a = np.diag(np.asarray(sigma_a, dtype=np.float64) ** 2)
    cov_b = np.diag(np.asarray(sigma_b, dtype=np.float64) ** 2)
    root_b = sqrtm(cov_b)
    cross = sqrtm(root_b @ cov_a @ root_b)
    mean_term = float(np.sum((np.asarray(mu_a) - np.asarray(mu_b)) ** 2))
    trace_term = float(np.trace(cov_a + cov_b - 2 * np.real(cross)))
    return mean_term + trace_term


class TestOtLoss:
    def test_identical_latents_zero(self):
        g = gaussian([[1.0, 2.0]], [[0.5, 0.7]])
        assert float(ot_loss(g, g)) == 0.0

    def test_pure_mean_shift(self):
        a = gaussian([[1.0, 0.0]], [[1.0, 1.0]])
        b = gaussian([[0.0, 0.0]], [[1.0, 1.0]])
        assert float(ot_loss(a, b)) == pytest.approx(1.0)

    def test_pure_sigma_shift(self):
        a = gaussian([[0.0, 0.0]], [[2.0, 2.0]])
        b = gaussian([[0.0, 0.0]], [[1.0, 1.0]])
        assert float(ot_loss(a, b)) == pytest.approx(2.0)

    def test_matches_full_matrix_form_100_cases(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            d = int(rng.integers(1, 16))
            mu_a, mu_b = rng.normal(size=d), rng.normal(size=d)
            sigma_a = rng.uniform(0.1, 3.0, size=d)
            sigma_b = rng.uniform(0.1, 3.0, size=d)
            ours = float(ot_loss(gaussian([mu_a], [sigma_a]), gaussian([mu_b], [sigma_b])))
            reference = full_matrix_ot(mu_a, sigma_a, mu_b, sigma_b)
            assert ours == pytest.approx(reference, abs=1e-6)

    def test_symmetry_exact(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            a = gaussian([rng.normal(size=6)], [rng.uniform(0.1, 2, 6)])
            b = gaussian([rng.normal(size=6)], [rng.uniform(0.1, 2, 6)])
            assert float(ot_loss(a, b)) == float(ot_loss(b, a))

    def test_zero_iff_equal(self):
        rng = np.random.default_rng(9)
        a = gaussian([rng.normal(size=4)], [rng.uniform(0.5, 1.5, 4)])
        b = gaussian([rng.normal(size=4)], [rng.uniform(0.5, 1.5, 4)])
        assert float(ot_loss(a, b)) > 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ot_loss(gaussian([[0.0]], [[1.0]]), gaussian([[0.0, 0.0]], [[1.0, 1.0]]))

    def test_batch_mean(self):
        a = gaussian([[1.0], [3.0]], [[1.0], [1.0]])
        b = gaussian([[0.0], [0.0]], [[1.0], [1.0]])
        assert float(ot_loss(a, b)) == pytest.approx((1.0 + 9.0) / 2)


class TestKlLoss:
    def test_prior_matches_posterior(self):
        assert float(kl_loss(gaussian([[0.0, 0.0]], [[1.0, 1.0]]))) == 0.0

    def test_unit_mean_shift(self):
        assert float(kl_loss(gaussian([[1.0]], [[1.0]]))) == pytest.approx(0.5)

    def test_nonnegative_1000_random(self):
        rng = np.random.default_rng(10)
        mus = rng.normal(size=(1000, 5))
        sigmas = rng.uniform(1e-3, 5.0, size=(1000, 5))
        values = 0.5 * (sigmas ** 2 + mus ** 2 - 1 - np.log(sigmas ** 2)).sum(axis=1)
        assert (values >= -1e-12).all()
        batch = kl_loss(gaussian(mus, sigmas))
        assert float(batch) == pytest.approx(values.mean(), rel=1e-9)


class TestMultinomialNll:
    def test_perfect_prediction_near_zero(self):
        y = torch.tensor([[0.0, 1.0, 0.0]])
        p = torch.tensor([[1e-9, 1.0 - 2e-9, 1e-9]])
        assert float(multinomial_nll(y, p)) == pytest.approx(0.0, abs=1e-6)

    def test_two_positives_uniform_four(self):
        y = torch.tensor([[1.0, 0.0, 1.0, 0.0]])
        p = torch.full((1, 4), 0.25)
        assert float(multinomial_nll(y, p)) == pytest.approx(2.772588722239781, rel=1e-6)

    def test_all_zero_targets(self):
        y = torch.zeros(1, 5)
        p = torch.full((1, 5), 0.2)
        assert float(multinomial_nll(y, p)) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            multinomial_nll(torch.zeros(1, 3), torch.zeros(1, 4))


class TestSchedule:
    def cfg(self, **kw):
        return TrainConfig(**{"lambda2_max": 0.5, "anneal_fraction": 0.25, **kw})

    def test_zero_at_step_zero(self):
        assert lambda2_at(0, self.cfg(), total_steps=100) == 0.0

    def test_reaches_max_at_fraction(self):
        cfg = self.cfg()
        assert lambda2_at(25, cfg, total_steps=100) == pytest.approx(0.5)
        assert lambda2_at(80, cfg, total_steps=100) == 0.5

    def test_non_decreasing(self):
        cfg = self.cfg()
        values = [lambda2_at(s, cfg, 200) for s in range(200)]
        assert all(b >= a for a, b in zip(values, values[1:]))


class TestTotalLoss:
    def batch(self, model, n=5):
        rng = np.random.default_rng(3)
        rows = torch.from_numpy(rng.uniform(0, 5, size=(n, model.n_items)).astype(np.float32))
        targets = torch.from_numpy((rng.uniform(size=(n, model.n_items)) > 0.8)
                                   .astype(np.float32))
        profiles = [f"Summary: user {i} enjoys westerns and heists." for i in range(n)]
        return rows, profiles, targets

    def test_degenerate_weights_reduce_to_reconstruction(self):
        model = make_model()
        cfg = TrainConfig(lambda1=0.0, lambda2_max=0.0, epochs=1)
        report = total_loss(model, self.batch(model), cfg, step=0, total_steps=10, seed=0)
        assert float(report.total.detach()) == pytest.approx(float(report.l_r_total.detach()), rel=1e-6)

    def test_step_zero_drops_kl(self):
        model = make_model()
        cfg = TrainConfig(lambda1=0.3, lambda2_max=0.5, epochs=1)
        report = total_loss(model, self.batch(model), cfg, step=0, total_steps=10, seed=0)
        assert report.lambda2 == 0.0
        expected = float(report.l_r_total.detach()) + 0.3 * float(report.l_ot.detach())
        assert float(report.total.detach()) == pytest.approx(expected, rel=1e-6)

    def test_report_identity(self):
        model = make_model()
        cfg = TrainConfig(lambda1=0.7, lambda2_max=0.5, epochs=1)
        report = total_loss(model, self.batch(model), cfg, step=9, total_steps=12, seed=1)
        expected = (float(report.l_r_total.detach()) + 0.7 * float(report.l_ot.detach())
                    + report.lambda2 * float(report.l_kl.detach()))
        assert float(report.total.detach()) == pytest.approx(expected, rel=1e-6)
        parts = float(report.l_r_c.detach()) + float(report.l_r_s.detach()) + float(report.l_r_r.detach())
        assert float(report.l_r_total.detach()) == pytest.approx(parts, rel=1e-6)

    def test_weight_scaling_linearity(self):
        model = make_model()
        base = TrainConfig(lambda1=0.2, lambda2_max=0.4, epochs=1)
        report = total_loss(model, self.batch(model), base, step=100, total_steps=100, seed=2)
        value = (float(report.l_r_total.detach()) + 0.2 * float(report.l_ot.detach())
                 + report.lambda2 * float(report.l_kl.detach()))
        scaled = 3.0 * value
        tripled = (3.0 * float(report.l_r_total.detach()) + 3.0 * 0.2 * float(report.l_ot.detach())
                   + 3.0 * report.lambda2 * float(report.l_kl.detach()))
        assert tripled == pytest.approx(scaled, rel=1e-9)

    def test_misaligned_batch_rejected(self):
        model = make_model()
        rows, profiles, targets = self.batch(model)
        with pytest.raises(ValueError):
            total_loss(model, (rows, profiles[:-1], targets), TrainConfig(epochs=1), 0, 10)


def finite_difference_gradients(model, loss_fn, eps=1e-6):
    """Central differences over every trainable scalar parameter."""
    grads = {}
    for name, param in model.named_parameters():
        if not param.requires_grad:
            continue
        grad = torch.zeros_like(param)
        flat = param.data.view(-1)
        gflat = grad.view(-1)
        for j in range(flat.numel()):
            orig = float(flat[j])
            flat[j] = orig + eps
            up = float(loss_fn().detach())
            flat[j] = orig - eps
            down = float(loss_fn().detach())
            flat[j] = orig
            gflat[j] = (up - down) / (2 * eps)
        grads[name] = grad
    return grads


def relative_error(a, b):
    scale = max(1.0, float(a.abs().max()), float(b.abs().max()))
    return float((a - b).abs().max()) / scale


class TestGradients:
    """Analytic (autograd) gradients against central finite differences on a
    d=8, 30-item model in float64."""

    def setup_method(self):
        torch.manual_seed(0)
        self.model = make_model(n_items=30, latent=8).double()
        self.model.profile_encoder.eval()
        self.model.decoder.eval()
        rng = np.random.default_rng(0)
        self.rows = torch.from_numpy(rng.uniform(0, 5, size=(5, 30))).double()
        self.targets = torch.from_numpy((rng.uniform(size=(5, 30)) > 0.7)
                                        .astype(np.float64))
        self.profiles = [f"Summary: user {i} likes noir heists, dislikes musicals."
                         for i in range(5)]

    def check(self, loss_fn, tol=1e-4):
        for p in self.model.parameters():
            if p.grad is not None:
                p.grad = None
        loss = loss_fn()
        loss.backward()
        numeric = finite_difference_gradients(self.model, loss_fn)
        worst = 0.0
        for name, param in self.model.named_parameters():
            if not param.requires_grad:
                continue
            analytic = param.grad if param.grad is not None else torch.zeros_like(param)
            worst = max(worst, relative_error(analytic, numeric[name]))
        assert worst < tol, f"max relative error {worst}"

    def latents(self):
        latent_r = self.model.encode_blackbox(self.rows)
        latent_s = self.model.encode_profile(self.profiles)
        return latent_r, latent_s

    def test_ot_gradients(self):
        def loss_fn():
            latent_r, latent_s = self.latents()
            return ot_loss(latent_s, LatentGaussian(latent_r.mu.double(),
                                                    latent_r.sigma.double()))
        self.check(loss_fn)

    def test_kl_gradients(self):
        def loss_fn():
            _, latent_s = self.latents()
            return kl_loss(latent_s)
        self.check(loss_fn)

    def test_reconstruction_gradients(self):
        def loss_fn():
            latent_r, latent_s = self.latents()
            z_c = 0.5 * latent_s.mu + 0.5 * latent_r.mu.double()
            return (multinomial_nll(self.targets, self.model.decode(z_c))
                    + multinomial_nll(self.targets, self.model.decode(latent_s.mu))
                    + multinomial_nll(self.targets, self.model.decode(latent_r.mu.double())))
        self.check(loss_fn)

    def test_composite_gradients(self):
        cfg = TrainConfig(lambda1=0.5, lambda2_max=0.5, epochs=1)

        def loss_fn():
            generator = torch.Generator()
            generator.manual_seed(123)
            report = total_loss(self.model, (self.rows, self.profiles, self.targets),
                                cfg, step=50, total_steps=100, generator=generator)
            return report.total
        self.check(loss_fn)
