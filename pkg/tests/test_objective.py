import numpy as np
import pytest

from vano.core import ops
from vano.core.params import ParamStore
from vano.core.rng import Purpose, rng_stream
from vano.core.tape import Tape, backward
from vano.data.generators import sample_grf
from vano.exceptions import ConfigError, DimensionError
from vano.model.latent import LatentGaussian, sample_latent
from vano.model.vano_model import VanoModel
from vano.objective import (
    Quadrature,
    elbo_eval,
    elbo_loss,
    elbo_terms,
    kl_gaussian,
    reconstruction_term,
    white_noise_loglik,
)
from vano.schemas import ELBOConfig, GRFParams, TrainConfig


def test_uniform_quadrature_weights_sum_to_measure():
    q = Quadrature.uniform(np.array([[0.0, 2.0], [1.0, 1.5]]), [4, 5])
    assert q.size == 20
    assert q.weights.sum() == pytest.approx(1.0)
    raw = Quadrature.uniform(np.array([[0.0, 2.0]]), [8], mode="raw_sum")
    np.testing.assert_array_equal(raw.weights, np.ones(8))
    with pytest.raises(ConfigError):
        Quadrature.uniform(np.array([[0.0, 1.0]]), [4], mode="simpson")


def test_white_noise_loglik_trivial_cases():
    q = Quadrature.uniform(np.array([[0.0, 1.0]]), [16])
    v = np.random.default_rng(0).normal(size=16)
    assert white_noise_loglik(v, v, q) == pytest.approx(0.5 * np.sum(q.weights * v * v), abs=1e-12)
    assert white_noise_loglik(np.zeros(16), v, q) == 0.0
    with pytest.raises(DimensionError):
        white_noise_loglik(np.zeros(15), v, q)


def test_likelihood_completion_identity():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        m = int(rng.integers(2, 64))
        lo = rng.uniform(-1.0, 1.0)
        q = Quadrature.uniform(np.array([[lo, lo + rng.uniform(0.1, 3.0)]]), [m])
        d, u = rng.normal(size=m), rng.normal(size=m)
        total = white_noise_loglik(d, u, q) + 0.5 * q.norm_sq(u) + 0.5 * q.norm_sq(d - u)
        assert abs(total) < 1e-10


def test_kl_closed_form_cases():
    assert kl_gaussian(LatentGaussian(np.zeros(3), np.zeros(3))) == 0.0
    assert kl_gaussian(LatentGaussian(np.array([1.0]), np.zeros(1))) == pytest.approx(0.5)
    rng = np.random.default_rng(2)
    post = LatentGaussian(rng.normal(size=(10, 5)), rng.normal(size=(10, 5)))
    assert np.all(kl_gaussian(post) >= 0.0)


def test_kl_matches_monte_carlo():
    rng = np.random.default_rng(3)
    n = 8
    mu, log_sigma = rng.normal(scale=0.7, size=n), rng.normal(scale=0.3, size=n)
    sigma = np.exp(log_sigma)
    z = mu + sigma * rng.normal(size=(100_000, n))
    log_q = np.sum(-0.5 * ((z - mu) / sigma) ** 2 - log_sigma, axis=1)
    log_p = np.sum(-0.5 * z * z, axis=1)
    samples = log_q - log_p
    error = samples.std() / np.sqrt(samples.size)
    assert abs(samples.mean() - kl_gaussian(LatentGaussian(mu, log_sigma))) < 3.0 * error


def test_elbo_report_decomposes(linear_model, grf_data):
    cfg = ELBOConfig(beta=0.3, mc_samples=3, norm_rescale=True)
    q = Quadrature.for_dataset(grf_data)
    total, report = elbo_loss(linear_model, grf_data.values[:5], cfg, q, rng_stream(0, Purpose.LATENT_NOISE))
    per = np.array(report.per_example)
    assert per.shape == (5, 2)
    assert report.total == pytest.approx(np.mean(per[:, 0] + 0.3 * per[:, 1]), abs=1e-12)
    assert float(total.value) == report.total


def test_elbo_rejects_empty_batch_and_zero_samples(linear_model, grf_data):
    q = Quadrature.for_dataset(grf_data)
    stream = rng_stream(0, Purpose.LATENT_NOISE)
    with pytest.raises(ConfigError):
        elbo_loss(linear_model, np.zeros((0, grf_data.m)), ELBOConfig(), q, stream)
    with pytest.raises(ConfigError):
        elbo_loss(linear_model, grf_data.values[:2], ELBOConfig.model_construct(mc_samples=0, beta=0.0), q, stream)


def test_perfect_decoder_reaches_the_reconstruction_minimum(linear_model, grf_data):
    # a decoder equal to u leaves recon = -1/2 ||u||^2
    q = Quadrature.for_dataset(grf_data)
    u = grf_data.values[0]
    recon = -white_noise_loglik(u, u, q)
    assert recon == pytest.approx(-0.5 * q.norm_sq(u))
    other = u + 0.1 * np.random.default_rng(4).normal(size=u.shape)
    assert -white_noise_loglik(other, u, q) > recon


def test_elbo_gradients_match_finite_differences(make_config, numeric_grad):
    data = sample_grf(GRFParams(n=2, m=5, n_eig=4), seed=0)
    config = make_config(latent_dim=2, encoder_hidden=[2], decoder_hidden=[2], harmonics=2, decoder="concat")
    model = VanoModel.build(config, data.extents, data.counts)
    cfg = ELBOConfig(beta=0.5, mc_samples=3, norm_rescale=False)
    q = Quadrature.for_dataset(data)
    eps = rng_stream(1, Purpose.LATENT_NOISE).normal((2, 3, 2))

    def loss_value():
        return float(elbo_terms(model, data.values, data.values, cfg, q, eps)[0].value)

    model.store.zero_grad()
    with Tape() as tape:
        total, _ = elbo_terms(model, data.values, data.values, cfg, q, eps)
        backward(tape, total)
    analytic = model.store.grads.copy()
    numeric = numeric_grad(loss_value, model.store.values)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-8)


def test_reparameterised_gradient_of_identity_decoder():
    # D(z) = z on a one-point quadrature: d/dmu E[1/2 z^2 - z u] = mu - u
    mu, u, n = 0.7, -0.4, 10_000
    q = Quadrature.on_grid(np.array([[0.5]]), measure=1.0)
    store = ParamStore()
    store.declare("mu", np.full((n, 1), mu))
    store.declare("log_sigma", np.full((n, 1), np.log(0.3)))
    eps = rng_stream(2, Purpose.LATENT_NOISE).normal((n, 1))

    with Tape() as tape:
        z = sample_latent(store.node("mu"), store.node("log_sigma"), eps)
        backward(tape, ops.total(reconstruction_term(z, np.full((n, 1), u), q)))

    grads = store.grad_view("mu")[:, 0]
    np.testing.assert_allclose(grads, z.value[:, 0] - u, atol=1e-12)
    assert abs(grads.mean() - (mu - u)) < 3.0 * grads.std() / np.sqrt(n)


def test_elbo_eval_reproduces_elbo_loss(linear_model, grf_data):
    cfg = ELBOConfig(beta=0.1, mc_samples=2)
    q = Quadrature.for_dataset(grf_data)
    _, direct = elbo_loss(linear_model, grf_data.values, cfg, q, rng_stream(5, Purpose.LATENT_NOISE, 0))
    evaluated = elbo_eval(linear_model, grf_data, cfg, q, seed=5)
    assert evaluated.total == pytest.approx(direct.total, rel=1e-12)
    assert evaluated.per_example == direct.per_example


def test_elbo_is_invariant_to_point_order(linear_model, grf_data):
    cfg = ELBOConfig(beta=0.1, mc_samples=2)
    q = Quadrature.for_dataset(grf_data)
    order = np.random.default_rng(6).permutation(grf_data.m)
    shuffled = Quadrature(q.points[order], q.weights[order])
    eps = rng_stream(7, Purpose.LATENT_NOISE).normal((4, 2, 4))
    values = grf_data.values[:4]
    a = elbo_terms(linear_model, values, values, cfg, q, eps)[1]
    b = elbo_terms(linear_model, values, values[:, order], cfg, shuffled, eps)[1]
    assert a.total == pytest.approx(b.total, rel=1e-10)


def test_weighted_quadrature_is_resolution_consistent():
    config = TrainConfig.from_preset("grf", latent_dim=4, harmonics=4, encoder_hidden=[8], decoder_hidden=[8])
    params = GRFParams(n=8, n_eig=8)
    encoder_input = sample_grf(params.model_copy(update={"m": 33}), seed=2)
    model = VanoModel.build(config, encoder_input.extents, encoder_input.counts)
    coarse = sample_grf(params.model_copy(update={"m": 65}), seed=2)
    fine = sample_grf(params.model_copy(update={"m": 129}), seed=2)

    def recon(ds, mode):
        cfg = ELBOConfig(beta=0.0, mc_samples=2, norm_rescale=False, quadrature_mode=mode)
        return elbo_eval(model, ds, cfg, seed=0, encoder_input=encoder_input).recon

    assert recon(fine, "weighted") == pytest.approx(recon(coarse, "weighted"), rel=0.02)
    assert 1.8 <= recon(fine, "raw_sum") / recon(coarse, "raw_sum") <= 2.2
