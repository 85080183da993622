import math

import numpy as np
import pytest

from vano.config import dump_config_text
from vano.constants import METRICS_COLUMNS, TRAIN_LOG_COLUMNS
from vano.data.generators import sample_grf
from vano.data.storage import save_dataset
from vano.exceptions import ConfigError, DimensionError, NumericalError
from vano.model.vano_model import VanoModel
from vano.objective import elbo_eval
from vano.repositories import RunRepository, read_csv_rows
from vano.schemas import KernelFamily
from vano.services import EvaluationService, SamplingService, TrainingService
from vano.services.evaluation_service import parse_analytic


@pytest.fixture
def run_repo(tmp_path, make_config):
    repo = RunRepository(tmp_path / "run")
    repo.prepare(make_config())
    return repo


def test_prepare_writes_a_complete_skeleton(run_repo, make_config):
    assert run_repo.load_config() == make_config()
    assert run_repo.version_path.read_text().startswith("vano-")
    with run_repo.train_log_path.open() as handle:
        assert handle.readline().strip() == ",".join(TRAIN_LOG_COLUMNS)
    with run_repo.metrics_path.open() as handle:
        assert handle.readline().strip() == ",".join(METRICS_COLUMNS)
    assert run_repo.audit() == ["no checkpoint written"]


def test_audit_of_a_missing_directory(tmp_path):
    problems = RunRepository(tmp_path / "absent").audit()
    assert len(problems) == 1 and "does not exist" in problems[0]


def test_training_logs_every_step_and_checkpoints(run_repo, make_config, grf_data):
    result = TrainingService(make_config(iterations=5, checkpoint_every=2), grf_data, run_repo).run()
    assert result.steps == 5
    rows = run_repo.read_log()
    assert [int(row["step"]) for row in rows] == [1, 2, 3, 4, 5]
    assert all(math.isfinite(float(row["total"])) for row in rows)
    assert [p.name for p in run_repo.checkpoints()] == ["step_00000002.ckpt", "step_00000004.ckpt"]
    assert run_repo.latest_checkpoint() == result.final_checkpoint
    assert run_repo.audit() == []


def test_training_records_the_final_elbo_in_the_run_metrics(run_repo, make_config, grf_data):
    config = make_config(iterations=3)
    result = TrainingService(config, grf_data, run_repo, data_label="grf.fds").run()
    rows = read_csv_rows(run_repo.metrics_path)
    assert [row["metric_name"] for row in rows] == ["elbo_total", "elbo_recon", "elbo_kl"]
    assert all(row["dataset_a"] == str(result.final_checkpoint) for row in rows)
    assert rows[0]["dataset_b"] == "grf.fds" and rows[0]["aux"] == "weighted" and rows[0]["seed"] == "0"

    model = VanoModel.load(result.final_checkpoint)
    again = elbo_eval(model, grf_data, config.elbo_config(), seed=0, batch_size=config.batch_size)
    assert float(rows[0]["value"]) == pytest.approx(again.total, rel=1e-12)
    assert result.final_elbo.kl == pytest.approx(again.kl, rel=1e-12)


def test_training_is_reproducible(tmp_path, make_config, grf_data):
    finals = []
    for name in ("a", "b"):
        repo = RunRepository(tmp_path / name)
        repo.prepare(make_config())
        service = TrainingService(make_config(iterations=4), grf_data, repo)
        service.run()
        finals.append(service.model.store.values.copy())
    np.testing.assert_array_equal(finals[0], finals[1])


def test_resumed_training_matches_an_uninterrupted_run(tmp_path, make_config, grf_data):
    config = make_config(iterations=6, checkpoint_every=100)
    straight = TrainingService(config, grf_data, RunRepository(tmp_path / "straight"))
    straight.run()

    first = TrainingService(config, grf_data, RunRepository(tmp_path / "first"))
    first.run(iterations=3)
    model, adam = VanoModel.load_with_state(first.repo.final_checkpoint_path)
    assert adam.step == 3
    resumed = TrainingService(config, grf_data, RunRepository(tmp_path / "resumed"), model=model, adam=adam)
    resumed.run()

    np.testing.assert_array_equal(resumed.model.store.values, straight.model.store.values)


def test_batches_cover_the_dataset_each_epoch(run_repo, make_config, grf_data):
    service = TrainingService(make_config(batch_size=5), grf_data, run_repo)
    assert service.steps_per_epoch == 4
    seen = np.concatenate([service.batch_indices(step) for step in range(4)])
    assert sorted(seen.tolist()) == list(range(len(grf_data)))
    assert not np.array_equal(service.batch_indices(0), service.batch_indices(4))


def test_training_rejects_a_mismatched_model(run_repo, make_config, grf_data, grf_params):
    other = sample_grf(grf_params.model_copy(update={"m": 9}), seed=0)
    model = VanoModel.build(make_config(), other.extents, other.counts)
    with pytest.raises(DimensionError):
        TrainingService(make_config(), grf_data, run_repo, model=model)


def test_numerical_failure_keeps_the_last_good_state(mocker, run_repo, make_config, grf_data):
    service = TrainingService(make_config(iterations=5), grf_data, run_repo)
    service.run(iterations=2)
    good = service.model.store.values.copy()
    mocker.patch("vano.services.training_service.adam_step", side_effect=NumericalError("nan", tensor="dec.0.b"))

    with pytest.raises(NumericalError):
        service.run()
    saved = VanoModel.load(run_repo.checkpoint_path(2))
    np.testing.assert_array_equal(saved.store.values, good)


def test_prior_samples_are_seeded_and_resolution_free(linear_model):
    service = SamplingService(linear_model)
    a = service.sample_prior(6, 33, seed=1)
    b = service.sample_prior(6, 33, seed=1)
    assert a.values.shape == (6, 33)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.provenance.generator == "vano-prior"
    coarse = service.sample_prior(6, 17, seed=1)
    np.testing.assert_allclose(a.values[:, ::2], coarse.values, atol=1e-12)


def test_sampling_rejects_bad_resolutions(linear_model):
    service = SamplingService(linear_model)
    with pytest.raises(ConfigError):
        service.sample_prior(2, 1, seed=0)
    with pytest.raises(DimensionError):
        service.sample_prior(2, [5, 5], seed=0)
    with pytest.raises(ConfigError):
        service.sample_prior(0, 5, seed=0)


def test_reconstruction_error_is_exact(linear_model, grf_data):
    inputs, recon, error = SamplingService(linear_model).reconstruct(grf_data, 65)
    assert recon.m == 65
    np.testing.assert_array_equal(inputs.values, grf_data.values)
    np.testing.assert_allclose(error.values, np.abs(recon.values[:, ::4] - grf_data.values), atol=1e-12)

    same = SamplingService(linear_model).reconstruct(grf_data, 17)
    np.testing.assert_array_equal(same[2].values, np.abs(same[1].values - grf_data.values))


def test_parse_analytic():
    params = parse_analytic("grf:alpha=3,tau=1")
    assert params.alpha == 3.0 and params.tau == 1.0
    with pytest.raises(ConfigError):
        parse_analytic("matern:nu=1")
    with pytest.raises(ConfigError):
        parse_analytic("grf:alpha=0.1")


def test_evaluation_rows_are_appended(tmp_path, grf_data):
    path = save_dataset(grf_data, tmp_path / "a.fds")
    service = EvaluationService(tmp_path / "metrics.csv", seed=3)
    rows = service.gmmd(path, path, KernelFamily(grid_size=4))
    assert rows[0].value == 0.0
    service.hs_analytic("grf:n_eig=8", path)

    written = read_csv_rows(tmp_path / "metrics.csv")
    assert [row["metric_name"] for row in written] == ["gmmd", "hs"]
    assert written[0]["seed"] == "3"
    assert float(written[1]["value"]) < 1.0


def test_evaluation_rejects_different_grids(tmp_path, grf_data, grf_params):
    a = save_dataset(grf_data, tmp_path / "a.fds")
    b = save_dataset(sample_grf(grf_params.model_copy(update={"m": 9}), seed=0), tmp_path / "b.fds")
    with pytest.raises(DimensionError, match="grids differ"):
        EvaluationService(tmp_path / "metrics.csv").mmd(a, b, sigma=1.0)


def test_circular_skewness_is_reported_as_undefined(tmp_path, grf_data):
    constant = grf_data.subset(np.arange(2))
    constant.values[...] = 0.4
    path = save_dataset(constant, tmp_path / "angles.fds")
    rows = EvaluationService(tmp_path / "metrics.csv").circular(path)
    assert rows[0].value == 0.0
    assert rows[1].aux == "undefined" and math.isnan(rows[1].value)


def test_elbo_rows_from_a_checkpoint(tmp_path, linear_model, grf_data):
    ckpt = linear_model.save(tmp_path / "m.ckpt")
    data = save_dataset(grf_data, tmp_path / "a.fds")
    rows = EvaluationService(tmp_path / "metrics.csv", seed=0).elbo(ckpt, data)
    assert [row.metric_name for row in rows] == ["elbo_total", "elbo_recon", "elbo_kl"]
    assert rows[0].aux == "weighted"


def test_config_text_snapshot_matches_repository_copy(run_repo, make_config):
    assert run_repo.config_path.read_text() == dump_config_text(make_config())
