import csv
import logging
import subprocess
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from pydantic import BaseModel

from vano.config import dump_config, load_config
from vano.constants import (
    CHECKPOINT_DIR,
    CONFIG_FILE,
    FINAL_CHECKPOINT,
    METRICS_COLUMNS,
    METRICS_FILE,
    TRAIN_LOG_COLUMNS,
    TRAIN_LOG_FILE,
    VERSION_FILE,
)
from vano.schemas import MetricRow, TrainConfig, TrainLogRow
from vano.settings import settings

logger = logging.getLogger(__name__)


def append_csv_row(path: Union[str, Path], columns: Sequence[str], row: BaseModel) -> None:
    path = Path(path)
    is_new = not path.exists() or path.stat().st_size == 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns))
        if is_new:
            writer.writeheader()
        writer.writerow(row.model_dump())


def read_csv_rows(path: Union[str, Path]) -> List[Dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def describe_version() -> str:
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=5, check=True,
        )
        described = result.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        described = ""
    return f"{settings.APP_TITLE}-{settings.APP_VERSION}" + (f"-g{described}" if described else "")


class RunRepository:
    """Files of one run directory: config snapshot, version, CSV logs and checkpoints."""

    def __init__(self, run_dir: Path):
        self.run_dir = Path(run_dir)

    @property
    def config_path(self) -> Path:
        return self.run_dir / CONFIG_FILE

    @property
    def version_path(self) -> Path:
        return self.run_dir / VERSION_FILE

    @property
    def train_log_path(self) -> Path:
        return self.run_dir / TRAIN_LOG_FILE

    @property
    def metrics_path(self) -> Path:
        return self.run_dir / METRICS_FILE

    @property
    def checkpoint_dir(self) -> Path:
        return self.run_dir / CHECKPOINT_DIR

    @property
    def final_checkpoint_path(self) -> Path:
        return self.checkpoint_dir / FINAL_CHECKPOINT

    def checkpoint_path(self, step: int) -> Path:
        return self.checkpoint_dir / f"step_{step:08d}.ckpt"

    def prepare(self, config: TrainConfig) -> None:
        """Create the directory with its config snapshot, version and empty CSVs."""
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        dump_config(config, self.config_path)
        self.version_path.write_text(describe_version() + "\n", encoding="utf-8")
        for path, columns in ((self.train_log_path, TRAIN_LOG_COLUMNS), (self.metrics_path, METRICS_COLUMNS)):
            with path.open("w", newline="", encoding="utf-8") as handle:
                csv.DictWriter(handle, fieldnames=columns).writeheader()
        logger.info(f"Run: {self.run_dir} | prepared")

    def load_config(self) -> TrainConfig:
        return load_config(self.config_path)

    def append_log(self, row: TrainLogRow) -> None:
        append_csv_row(self.train_log_path, TRAIN_LOG_COLUMNS, row)

    def append_metric(self, row: MetricRow) -> None:
        append_csv_row(self.metrics_path, METRICS_COLUMNS, row)

    def read_log(self) -> List[Dict[str, str]]:
        return read_csv_rows(self.train_log_path)

    def checkpoints(self) -> List[Path]:
        return sorted(self.checkpoint_dir.glob("step_*.ckpt"))

    def latest_checkpoint(self) -> Optional[Path]:
        if self.final_checkpoint_path.exists():
            return self.final_checkpoint_path
        found = self.checkpoints()
        return found[-1] if found else None

    def audit(self) -> List[str]:
        """Problems that make the run directory incomplete; empty when it passes."""
        problems = []
        if not self.run_dir.is_dir():
            return [f"run directory {self.run_dir} does not exist"]
        if not self.config_path.is_file():
            problems.append(f"missing config snapshot {CONFIG_FILE}")
        else:
            try:
                self.load_config()
            except ValueError as e:
                problems.append(f"config snapshot does not parse: {e}")
        if not self.version_path.is_file() or not self.version_path.read_text(encoding="utf-8").strip():
            problems.append(f"missing version string {VERSION_FILE}")
        for path, columns in ((self.train_log_path, TRAIN_LOG_COLUMNS), (self.metrics_path, METRICS_COLUMNS)):
            if not path.is_file():
                problems.append(f"missing {path.name}")
                continue
            with path.open(newline="", encoding="utf-8") as handle:
                header = next(csv.reader(handle), [])
            if header != list(columns):
                problems.append(f"{path.name} has header {header}, expected {list(columns)}")
        if self.latest_checkpoint() is None:
            problems.append("no checkpoint written")
        return problems
