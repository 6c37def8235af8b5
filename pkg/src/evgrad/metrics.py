"""Metrics persistence: versioned CSV, 17-significant-digit floats.

Wall-clock per epoch is deliberately kept out of the metrics CSV (it is not
deterministic); it goes to a sidecar timing file so metrics files stay
byte-identical across reruns of the same config + seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, TextIO

SCHEMA_VERSION = "# evgrad-metrics v1"

COLUMNS = (
    "run_seed",
    "epoch",
    "mean_reward",
    "std_reward",
    "a2c_loss",
    "evm_loss",
    "evv_loss",
    "grad_var_biased",
    "grad_var_unbiased",
    "grad_var_no_baseline",
    "reduction_ratio",
    "c_hat_l",
    "c_hat_r",
)


@dataclass(frozen=True)
class MetricsRecord:
    run_seed: int
    epoch: int
    mean_reward: float
    std_reward: float
    a2c_loss: Optional[float] = None
    evm_loss: Optional[float] = None
    evv_loss: Optional[float] = None
    grad_var_biased: Optional[float] = None
    grad_var_unbiased: Optional[float] = None
    grad_var_no_baseline: Optional[float] = None
    reduction_ratio: Optional[float] = None
    c_hat_l: Optional[float] = None
    c_hat_r: Optional[float] = None
    wall_ms: int = 0


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


class MetricsWriter:
    """Appends MetricsRecords as CSV rows; header written on open."""

    def __init__(self, fh: TextIO):
        self._fh = fh
        fh.write(SCHEMA_VERSION + "\n")
        fh.write(",".join(COLUMNS) + "\n")

    def write(self, record: MetricsRecord) -> None:
        row = [format_value(getattr(record, col)) for col in COLUMNS]
        self._fh.write(",".join(row) + "\n")
        self._fh.flush()
