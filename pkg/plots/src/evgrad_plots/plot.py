"""Render training figures from evgrad metrics CSVs.

Reads one or more `metrics_<seed>.csv` files, aggregates across seeds
(mean plus a +/- 1 sample-std band), applies centered sliding-window
smoothing, and writes a raster image. Curves are labeled by the criterion
recorded in the `config.echo` next to each metrics file.
"""

from __future__ import annotations

import argparse
import configparser
import glob as globlib
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

SCHEMA_VERSION = "# evgrad-metrics v1"

REWARD_METRICS = ("mean_reward", "std_reward")
DEFAULT_REWARD_WINDOW = 25
DEFAULT_VARIANCE_WINDOW = 5


class PlotError(Exception):
    pass


def sliding_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average, truncated at the series edges."""
    if window < 1:
        raise PlotError("window must be >= 1")
    values = np.asarray(values, dtype=np.float64)
    half = window // 2
    out = np.empty_like(values)
    n = len(values)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + window - half)
        out[i] = values[lo:hi].mean()
    return out


def read_metrics(path: str) -> pd.DataFrame:
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
    if first != SCHEMA_VERSION:
        raise PlotError(f"{path}: unsupported schema line {first!r}")
    return pd.read_csv(path, comment="#")


def criterion_label(metrics_path: str) -> str:
    """Criterion recorded in config.echo beside the metrics file."""
    echo = os.path.join(os.path.dirname(metrics_path) or ".", "config.echo")
    if os.path.exists(echo):
        parser = configparser.ConfigParser()
        parser.read(echo)
        if parser.has_option("training", "criterion"):
            return parser.get("training", "criterion")
    return os.path.basename(os.path.dirname(os.path.abspath(metrics_path)))


def aggregate(frames: list[pd.DataFrame], metric: str) -> pd.DataFrame:
    """Per-epoch mean and sample std across seeds (NaN probe gaps dropped)."""
    series = []
    for df in frames:
        if metric not in df.columns:
            raise PlotError(f"column {metric!r} missing from metrics file")
        s = df[["epoch", metric]].dropna()
        series.append(s.set_index("epoch")[metric])
    joined = pd.concat(series, axis=1)
    return pd.DataFrame(
        {"mean": joined.mean(axis=1), "std": joined.std(axis=1, ddof=1).fillna(0.0)}
    )


def default_window(metric: str) -> int:
    return DEFAULT_REWARD_WINDOW if metric in REWARD_METRICS else DEFAULT_VARIANCE_WINDOW


def render(
    file_glob: str,
    metric: str,
    out_path: str,
    window: int | None = None,
    log_y: bool = False,
) -> None:
    paths = sorted(globlib.glob(file_glob))
    if not paths:
        raise PlotError(f"no files match {file_glob!r}")
    window = default_window(metric) if window is None else window

    groups: dict[str, list[pd.DataFrame]] = {}
    for path in paths:
        groups.setdefault(criterion_label(path), []).append(read_metrics(path))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, frames in sorted(groups.items()):
        agg = aggregate(frames, metric)
        if agg.empty:
            raise PlotError(f"no data rows for {metric!r} in group {label!r}")
        epochs = agg.index.to_numpy()
        mean = sliding_mean(agg["mean"].to_numpy(), window)
        std = sliding_mean(agg["std"].to_numpy(), window)
        ax.plot(epochs, mean, label=label)
        ax.fill_between(epochs, mean - std, mean + std, alpha=0.2)
    if log_y:
        ax.set_yscale("log")
    if metric == "reduction_ratio":
        ax.axhline(1.0, color="gray", linestyle="--", linewidth=0.8)
    ax.set_xlabel("epoch")
    ax.set_ylabel(metric)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="evgrad-plot", description="Plot evgrad metrics CSVs."
    )
    parser.add_argument("--glob", required=True, help="metrics file glob")
    parser.add_argument("--metric", required=True)
    parser.add_argument(
        "--window",
        type=int,
        default=None,
        help="smoothing window (default 25 for reward metrics, 5 otherwise)",
    )
    parser.add_argument("--log-y", action="store_true")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        render(args.glob, args.metric, args.out, window=args.window, log_y=args.log_y)
    except (PlotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
