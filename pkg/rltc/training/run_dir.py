from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Any, Mapping

from rltc.model.params import ModelParams
from rltc.utils.files import atomic_write

logger = logging.getLogger(__name__)

METRICS_FIELDS = (
    "step",
    "L_D",
    "mean_c_len",
    "actor_loss",
    "critic_loss",
    "raw_reward",
    "scaled_reward",
    "cost_per_token",
)

COMPRESSOR_FILE = "compressor.rltm"
DECOMPRESSOR_FILE = "decompressor.rltm"


class RunDirectory:
    """
    Output folder of one training run.

    Holds ``config.txt`` (sorted ``key=value`` lines), a ``metrics.csv`` that
    each run starts fresh and the two checkpoints.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)

    @property
    def metrics_path(self) -> Path:
        return self.path / "metrics.csv"

    @property
    def config_path(self) -> Path:
        return self.path / "config.txt"

    @property
    def compressor_path(self) -> Path:
        return self.path / COMPRESSOR_FILE

    @property
    def decompressor_path(self) -> Path:
        return self.path / DECOMPRESSOR_FILE

    def write_config(self, values: Mapping[str, Any]) -> None:
        lines = [f"{key}={values[key]}" for key in sorted(values)]
        with atomic_write(self.config_path, mode="w") as handle:
            handle.write("\n".join(lines) + "\n")
        logger.info("Wrote run config to %s", self.config_path)

    def read_config(self) -> dict[str, str]:
        values: dict[str, str] = {}
        for line in self.config_path.read_text(encoding="utf-8").splitlines():
            if "=" in line:
                key, value = line.split("=", 1)
                values[key] = value
        return values

    def reset_metrics(self) -> None:
        """Start ``metrics.csv`` over with just the header row."""
        with atomic_write(self.metrics_path, mode="w") as handle:
            csv.DictWriter(handle, fieldnames=METRICS_FIELDS).writeheader()

    def append_metrics(self, row: Mapping[str, Any]) -> None:
        new_file = not self.metrics_path.exists()
        with open(self.metrics_path, "a", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=METRICS_FIELDS)
            if new_file:
                writer.writeheader()
            writer.writerow({key: row[key] for key in METRICS_FIELDS})

    def read_metrics(self) -> list[dict[str, float]]:
        if not self.metrics_path.exists():
            return []
        with open(self.metrics_path, newline="", encoding="utf-8") as handle:
            return [{key: float(value) for key, value in row.items()} for row in csv.DictReader(handle)]

    def save_models(self, compressor: ModelParams, decompressor: ModelParams) -> None:
        compressor.save(self.compressor_path)
        decompressor.save(self.decompressor_path)

    def load_models(self) -> tuple[ModelParams, ModelParams]:
        return ModelParams.load(self.compressor_path), ModelParams.load(self.decompressor_path)
