"""Command-line surface: train / probe / gradcheck / oracle."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import echo_config, load_config
from .errors import EvgradError
from .gradcheck import run_gradcheck
from .metrics import MetricsRecord, MetricsWriter
from .oracle import run_oracle_suite
from .envs import rollout
from .nets import init_params
from .policy import SoftmaxPolicy
from .probes import reduction_ratio
from .trainer import EpochSummary, TrainConfig, run_experiment, substream


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


def _record_from_summary(seed: int, s: EpochSummary) -> MetricsRecord:
    probe = s.probe
    return MetricsRecord(
        run_seed=seed,
        epoch=s.epoch,
        mean_reward=s.mean_reward,
        std_reward=s.std_reward,
        a2c_loss=s.a2c_loss,
        evm_loss=s.evm_loss,
        evv_loss=s.evv_loss,
        grad_var_biased=probe.v_evv if probe else None,
        grad_var_unbiased=probe.v_unbiased if probe else None,
        grad_var_no_baseline=probe.baseline_off_variance if probe else None,
        reduction_ratio=probe.reduction_ratio if probe else None,
        c_hat_l=probe.c_hat_l if probe else None,
        c_hat_r=probe.c_hat_r if probe else None,
        wall_ms=s.wall_ms,
    )


def run_one_seed(cfg: TrainConfig, seed: int, out_dir: str) -> None:
    """Train one seed, writing metrics, timing, and final parameters."""
    from dataclasses import replace

    cfg = replace(cfg, master_seed=seed)
    metrics_path = os.path.join(out_dir, f"metrics_{seed}.csv")
    timing_path = os.path.join(out_dir, f"timing_{seed}.csv")
    with open(metrics_path, "w", newline="\n") as mfh, open(
        timing_path, "w", newline="\n"
    ) as tfh:
        writer = MetricsWriter(mfh)
        tfh.write("epoch,wall_ms\n")

        def sink(summary: EpochSummary) -> None:
            writer.write(_record_from_summary(seed, summary))
            tfh.write(f"{summary.epoch},{summary.wall_ms}\n")

        state = run_experiment(cfg, sink)
    np.savez(
        os.path.join(out_dir, f"params_{seed}.npz"), theta=state.theta, phi=state.phi
    )


def cmd_train(args) -> int:
    from dataclasses import replace

    cfg, sections = load_config(args.config)
    if args.epochs is not None:
        cfg = replace(cfg, epochs=args.epochs)
        sections["training"]["epochs"] = str(args.epochs)
    if args.criterion is not None:
        cfg = replace(cfg, criterion=args.criterion)
        sections["training"]["criterion"] = args.criterion
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "config.echo"), "w") as fh:
        fh.write(echo_config(sections))
    for seed in _parse_seeds(args.seeds):
        run_one_seed(cfg, seed, args.out)
        print(f"seed {seed}: done -> {args.out}/metrics_{seed}.csv")
    return 0


def cmd_gradcheck(args) -> int:
    report = run_gradcheck(n_instances=args.instances, seed=args.seed)
    for line in report.lines():
        print(line)
    ok = report.max_error < 1e-5
    print(f"gradcheck {'PASS' if ok else 'FAIL'} (max rel err {report.max_error:.3e})")
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    report = run_oracle_suite(n_pairs=args.pairs, seed=args.seed)
    for line in report.lines():
        print(line)
    ok = (
        report.prob_closure_err < 1e-10
        and report.bandit_grad_err < 1e-10
        and report.max_baseline_bias < 1e-10
    )
    print(f"oracle {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_probe(args) -> int:
    cfg, _ = load_config(args.config)
    saved = np.load(args.params)
    policy = SoftmaxPolicy(
        init_params(cfg.policy_layers, cfg.policy_activation, 0).with_params(
            saved["theta"]
        )
    )
    baseline = init_params(
        cfg.baseline_layers, cfg.baseline_activation, 0
    ).with_params(saved["phi"])
    pool = [
        rollout(cfg.env, policy, substream(args.seed, 0, 1, i))
        for i in range(args.pool)
    ]
    report = reduction_ratio(pool, policy, baseline, cfg.gamma)
    print(f"pool size            = {report.pool_size}")
    print(f"grad var (biased)    = {report.v_evv:.17g}")
    print(f"grad var (unbiased)  = {report.v_unbiased:.17g}")
    print(f"grad var, b=0        = {report.baseline_off_variance:.17g}")
    print(f"reduction ratio      = {report.reduction_ratio:.17g}")
    print(f"c_hat_l (empirical)  = {report.c_hat_l:.17g}")
    print(f"c_hat_r (empirical)  = {report.c_hat_r:.17g}")
    if report.degenerate_pool:
        print("warning: degenerate pool (zero baseline-off variance)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evgrad",
        description="Policy-gradient training with variance-minimizing baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one experiment per seed")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", default="0..0", help="range a..b or comma list")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None, help="override config epochs")
    p.add_argument(
        "--criterion",
        choices=("a2c", "evm", "evv", "none"),
        default=None,
        help="override config criterion",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("oracle", help="chain-MDP enumeration exactness checks")
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("probe", help="measure variance for saved parameters")
    p.add_argument("--config", required=True)
    p.add_argument("--params", required=True, help="params_<seed>.npz from train")
    p.add_argument("--pool", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EvgradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
