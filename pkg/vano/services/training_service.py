import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from vano.core.optim import AdamState, adam_step, effective_lr
from vano.core.rng import Purpose, rng_stream
from vano.core.tape import Tape, backward
from vano.data.dataset import Dataset
from vano.exceptions import DimensionError, NumericalError
from vano.model.vano_model import VanoModel
from vano.objective import Quadrature, elbo_eval, elbo_loss
from vano.repositories.run_repository import RunRepository
from vano.schemas import LossReport, MetricRow, TrainConfig, TrainLogRow

logger = logging.getLogger(__name__)

LOG_EVERY = 100
EVAL_SEED = 0


@dataclass
class TrainResult:
    steps: int
    final_checkpoint: Path
    last_report: Optional[LossReport]
    final_elbo: LossReport


class TrainingService:
    """Fixed-iteration Adam training of one model on one dataset.

    Step t shuffles with the shuffle stream of its epoch and draws latent
    noise from rng_stream(noise_seed, latent_noise, t), so a run is a pure
    function of the config, the dataset and the seeds.
    """

    def __init__(
            self,
            config: TrainConfig,
            dataset: Dataset,
            repo: RunRepository,
            model: Optional[VanoModel] = None,
            adam: Optional[AdamState] = None,
            data_label: str = "n/a",
    ):
        self.config = config
        self.dataset = dataset
        self.data_label = data_label
        self.repo = repo
        self.model = model or VanoModel.build(config, dataset.extents, dataset.counts)
        self.adam = adam or AdamState.for_params(
            self.model.store,
            base_lr=config.base_lr,
            decay_rate=config.decay_rate,
            decay_every=config.decay_every,
        )
        self.elbo = config.elbo_config()
        self.quadrature = Quadrature.for_dataset(dataset, self.elbo.quadrature_mode)

        if dataset.m != self.model.encoder.spec.input_dim:
            raise DimensionError(
                f"dataset has {dataset.m} grid points, encoder reads {self.model.encoder.spec.input_dim}"
            )

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(len(self.dataset) / self.config.batch_size)

    def batch_indices(self, step: int) -> np.ndarray:
        epoch, position = divmod(step, self.steps_per_epoch)
        # shuffle index 0 belongs to train/test splitting
        order = rng_stream(self.config.data_seed, Purpose.SHUFFLE, epoch + 1).permutation(len(self.dataset))
        start = position * self.config.batch_size
        return order[start:start + self.config.batch_size]

    def train_step(self) -> LossReport:
        step = self.adam.step
        values = self.dataset.values[self.batch_indices(step)]
        noise = rng_stream(self.config.noise_seed, Purpose.LATENT_NOISE, step + 1)

        self.model.store.zero_grad()
        with Tape() as tape:
            total, report = elbo_loss(self.model, values, self.elbo, self.quadrature, noise)
            if not np.isfinite(total.value):
                raise NumericalError(f"loss became non-finite at step {step + 1}", tensor="loss")
            backward(tape, total)
        adam_step(self.adam, self.model.store)
        return report

    def record_final_elbo(self, checkpoint: Path) -> LossReport:
        """ELBO of the trained model over the whole training set, appended to the run's metrics.csv."""
        report = elbo_eval(
            self.model, self.dataset, self.elbo, self.quadrature, seed=EVAL_SEED, batch_size=self.config.batch_size
        )
        for part, value in (("total", report.total), ("recon", report.recon), ("kl", report.kl)):
            self.repo.append_metric(MetricRow(
                metric_name=f"elbo_{part}",
                value=value,
                aux=self.elbo.quadrature_mode,
                dataset_a=str(checkpoint),
                dataset_b=self.data_label,
                seed=str(EVAL_SEED),
            ))
        return report

    def save(self, path: Path) -> Path:
        return self.model.save(path, adam=self.adam, extra={"step": self.adam.step})

    def run(self, iterations: Optional[int] = None) -> TrainResult:
        iterations = iterations or self.config.iterations
        every = self.config.checkpoint_every
        report = None
        logger.info(
            f"Train: start | N={len(self.dataset)} m={self.dataset.m} iterations={iterations} "
            f"batch={self.config.batch_size} run={self.repo.run_dir}"
        )

        while self.adam.step < iterations:
            lr = effective_lr(self.adam)
            started = time.perf_counter()
            try:
                report = self.train_step()
            except NumericalError:
                # adam_step commits nothing on failure, so the current state is the last good one
                path = self.save(self.repo.checkpoint_path(self.adam.step))
                logger.critical(f"Train: aborted at step {self.adam.step + 1} | last good state in {path}", exc_info=True)
                raise

            step = self.adam.step
            self.repo.append_log(TrainLogRow(
                step=step,
                total=report.total,
                recon=report.recon,
                kl=report.kl,
                effective_lr=lr,
                wall_ms=(time.perf_counter() - started) * 1000.0,
            ))
            if step % LOG_EVERY == 0 or step == 1:
                logger.info(f"Step: {step} | loss={report.total:.6g} recon={report.recon:.6g} kl={report.kl:.6g} lr={lr:.3g}")
            if step % every == 0 and step < iterations:
                path = self.save(self.repo.checkpoint_path(step))
                logger.info(f"Run: {self.repo.run_dir} | checkpoint written to {path.name}")

        final = self.save(self.repo.final_checkpoint_path)
        final_elbo = self.record_final_elbo(final)
        logger.info(f"Train: done | {self.adam.step} steps, final checkpoint {final}, elbo={final_elbo.total:.6g}")
        return TrainResult(steps=self.adam.step, final_checkpoint=final, last_report=report, final_elbo=final_elbo)
