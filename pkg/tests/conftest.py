import numpy as np
import pytest

from vano.data.generators import sample_grf
from vano.model.vano_model import VanoModel
from vano.schemas import GRFParams, TrainConfig
from vano.settings import settings


def small_config(**overrides) -> TrainConfig:
    fields = dict(
        experiment="custom",
        latent_dim=4,
        beta=1e-3,
        mc_samples=2,
        decoder="linear",
        encoding="periodic",
        harmonics=3,
        encoder_hidden=[8],
        decoder_hidden=[8],
        batch_size=4,
        iterations=5,
        checkpoint_every=2,
        rwf=True,
    )
    fields.update(overrides)
    return TrainConfig(**fields)


def finite_difference(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function of ``x``, perturbing ``x`` in place."""
    grad = np.zeros_like(x)
    flat, out = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = f()
        flat[i] = keep - h
        down = f()
        flat[i] = keep
        out[i] = (up - down) / (2.0 * h)
    return grad


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.setattr(settings, "VANO_THREADS", 1)
    monkeypatch.setattr(settings, "VANO_DETERMINISTIC", True)


@pytest.fixture
def grf_params():
    return GRFParams(n=16, m=17, n_eig=8)


@pytest.fixture
def grf_data(grf_params):
    return sample_grf(grf_params, seed=3)


@pytest.fixture
def linear_model(grf_data):
    return VanoModel.build(small_config(), grf_data.extents, grf_data.counts)


@pytest.fixture
def grf_preset_model(grf_data):
    config = TrainConfig.from_preset(
        "grf", latent_dim=4, harmonics=4, encoder_hidden=[8], decoder_hidden=[8], mc_samples=2
    )
    return VanoModel.build(config, grf_data.extents, grf_data.counts)


@pytest.fixture
def make_config():
    return small_config


@pytest.fixture
def numeric_grad():
    return finite_difference
