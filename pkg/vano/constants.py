from typing import Literal

DATASET_MAGIC = b"VANOFDS1"
CHECKPOINT_MAGIC = b"VANOCKP1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA_FORMAT = 3
EXIT_NUMERICAL = 4

LOG_CLAMP = 10.0

TRAIN_LOG_FILE = "train_log.csv"
METRICS_FILE = "metrics.csv"
CONFIG_FILE = "config.txt"
VERSION_FILE = "VERSION"
CHECKPOINT_DIR = "checkpoints"
FINAL_CHECKPOINT = "final.ckpt"

TRAIN_LOG_COLUMNS = ["step", "total", "recon", "kl", "effective_lr", "wall_ms"]
METRICS_COLUMNS = ["metric_name", "value", "aux", "dataset_a", "dataset_b", "seed"]

Activation = Literal["identity", "gelu", "tanh", "softplus", "sigmoid"]
QuadratureMode = Literal["weighted", "raw_sum"]
