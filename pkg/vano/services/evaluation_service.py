import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from vano.constants import CHECKPOINT_MAGIC, DATASET_MAGIC, METRICS_COLUMNS
from vano.data.dataset import Dataset
from vano.data.storage import load_dataset
from vano.exceptions import ConfigError, DatasetFormatError, DimensionError
from vano.metrics import (
    circular_stats,
    covariance_analytic,
    covariance_empirical,
    covariance_model_linear,
    gmmd,
    hs_error,
    mmd,
    pca_spectrum,
)
from vano.model.vano_model import VanoModel
from vano.objective import Quadrature, elbo_eval
from vano.repositories.run_repository import append_csv_row
from vano.schemas import GRFParams, KernelFamily, MetricRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_magic(path: PathLike) -> bytes:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    with path.open("rb") as handle:
        return handle.read(8)


def parse_analytic(spec: str) -> GRFParams:
    """``grf:alpha=2,tau=3`` -> GRFParams; unnamed fields keep their defaults."""
    kind, _, body = spec.partition(":")
    if kind != "grf":
        raise ConfigError(f"only 'grf' analytic covariances are known, got '{kind}'")
    fields = {}
    for item in filter(None, (part.strip() for part in body.split(","))):
        key, sep, value = item.partition("=")
        if not sep or key not in GRFParams.model_fields:
            raise ConfigError(f"bad analytic parameter '{item}'")
        fields[key] = value
    try:
        return GRFParams(**fields)
    except ValueError as e:
        raise ConfigError(f"invalid analytic parameters: {e}") from e


def require_same_grid(a: Dataset, b: Dataset, name_a: str, name_b: str) -> None:
    if not a.same_grid(b):
        raise DimensionError(
            f"grids differ: {name_a} has {a.m} points {a.counts}, {name_b} has {b.m} points {b.counts}"
        )


class EvaluationService:
    """Computes metrics over dataset and checkpoint files and appends them as CSV rows."""

    def __init__(self, metrics_path: PathLike, seed: Optional[int] = None):
        self.metrics_path = Path(metrics_path)
        self.seed = "n/a" if seed is None else str(seed)

    def _emit(self, rows: List[MetricRow]) -> List[MetricRow]:
        for row in rows:
            append_csv_row(self.metrics_path, METRICS_COLUMNS, row)
            logger.info(f"Metric: {row.metric_name} | value={row.value:.6g} aux={row.aux}")
        return rows

    def _row(self, name: str, value: float, aux="n/a", a: PathLike = "n/a", b: PathLike = "n/a") -> MetricRow:
        return MetricRow(metric_name=name, value=value, aux=str(aux), dataset_a=str(a), dataset_b=str(b), seed=self.seed)

    def _pair(self, path_a: PathLike, path_b: PathLike):
        a, b = load_dataset(path_a), load_dataset(path_b)
        require_same_grid(a, b, str(path_a), str(path_b))
        return a, b

    def hs_analytic(self, analytic: str, target: PathLike) -> List[MetricRow]:
        """Analytic GRF covariance against a linear-decoder checkpoint or a sample file."""
        p = parse_analytic(analytic)
        magic = read_magic(target)
        if magic == CHECKPOINT_MAGIC:
            model = VanoModel.load(target)
            grid = model.input_grid
            estimate = covariance_model_linear(model, grid)
        elif magic == DATASET_MAGIC:
            ds = load_dataset(target)
            grid = ds.grid
            estimate = covariance_empirical(ds.values)
        else:
            raise DatasetFormatError(f"{target}: neither a dataset nor a checkpoint", offset=0)
        if grid.shape[1] != 1:
            raise DimensionError("analytic GRF covariance is defined on a 1-D grid")
        value = hs_error(covariance_analytic(p, grid[:, 0]), estimate)
        return self._emit([self._row("hs", value, a=analytic, b=target)])

    def hs_files(self, path_a: PathLike, path_b: PathLike) -> List[MetricRow]:
        a, b = self._pair(path_a, path_b)
        value = hs_error(covariance_empirical(a.values), covariance_empirical(b.values))
        return self._emit([self._row("hs", value, a=path_a, b=path_b)])

    def mmd(self, path_a: PathLike, path_b: PathLike, sigma: float, raw: bool = False) -> List[MetricRow]:
        a, b = self._pair(path_a, path_b)
        q = None if raw else Quadrature.for_dataset(a)
        value = mmd(a.values, b.values, sigma, q)
        return self._emit([self._row("mmd", value, aux=sigma, a=path_a, b=path_b)])

    def gmmd(self, path_a: PathLike, path_b: PathLike, fam: KernelFamily, raw: bool = False) -> List[MetricRow]:
        a, b = self._pair(path_a, path_b)
        q = None if raw else Quadrature.for_dataset(a)
        value, sigma = gmmd(a.values, b.values, fam, q)
        return self._emit([self._row("gmmd", value, aux=sigma, a=path_a, b=path_b)])

    def circular(self, path: PathLike) -> List[MetricRow]:
        stats = circular_stats(load_dataset(path).values)
        rows = [self._row("circular_variance", stats.variance, a=path)]
        if stats.skewness is None:
            rows.append(self._row("circular_skewness", float("nan"), aux="undefined", a=path))
        else:
            rows.append(self._row("circular_skewness", stats.skewness, a=path))
        return self._emit(rows)

    def pca(self, path: PathLike, top: int = 10) -> List[MetricRow]:
        ds = load_dataset(path)
        spectrum = pca_spectrum(ds.values, Quadrature.for_dataset(ds))
        rows = [self._row("pca_eigenvalue", float(v), aux=i + 1, a=path) for i, v in enumerate(spectrum[:top])]
        return self._emit(rows)

    def elbo(
            self,
            checkpoint: PathLike,
            data: PathLike,
            quadrature_mode: str = "weighted",
            seed: int = 0,
            encoder_input: Optional[PathLike] = None,
    ) -> List[MetricRow]:
        model = VanoModel.load(checkpoint)
        ds = load_dataset(data)
        source = load_dataset(encoder_input) if encoder_input else None
        cfg = model.config.elbo_config().model_copy(update={"quadrature_mode": quadrature_mode})
        report = elbo_eval(model, ds, cfg, seed=seed, encoder_input=source)
        rows = [
            self._row(f"elbo_{part}", float(value), aux=quadrature_mode, a=checkpoint, b=data)
            for part, value in (("total", report.total), ("recon", report.recon), ("kl", report.kl))
        ]
        return self._emit(rows)

    def headline(self, rows: List[MetricRow]) -> str:
        first = rows[0]
        value = "nan" if np.isnan(first.value) else f"{first.value:.10g}"
        return f"{first.metric_name}={value}" + ("" if first.aux == "n/a" else f" ({first.aux})")
