"""Two-timescale training loop: theta ascends the baselined batch-mean
gradient, phi descends the selected criterion, with separate step sizes."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .criteria import (
    CRITERION_KINDS,
    LOSS_AND_GRAD,
    a2c_loss,
    build_batch_context,
    evm_loss,
    evv_loss,
)
from .envs import EnvSpec, rollout
from .errors import ConfigurationError, ContractError, TrainingAbort
from .estimators import batch_mean_gradient
from .nets import init_params
from .policy import SoftmaxPolicy, action_log_probs, score_gradient
from .probes import reduction_ratio, VarianceReport

_TRAIN_STREAM = 0
_PROBE_STREAM = 1


def substream(master_seed: int, epoch: int, kind: int, i: int) -> np.random.Generator:
    """Independent, deterministically derived RNG substream."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([master_seed, epoch, kind, i]))
    )


@dataclass(frozen=True)
class StepSchedule:
    initial: float
    mode: str = "constant"  # "constant" | "inverse_time"
    half_life: float = 1000.0

    def __post_init__(self):
        if self.initial <= 0:
            raise ConfigurationError("step size must be positive")
        if self.mode not in ("constant", "inverse_time"):
            raise ConfigurationError(f"unknown schedule mode {self.mode!r}")


def step_size(schedule: StepSchedule, n: int) -> float:
    if schedule.mode == "constant":
        return schedule.initial
    return schedule.initial / (1.0 + n / schedule.half_life)


@dataclass(frozen=True)
class TrainConfig:
    env: EnvSpec
    policy_layers: tuple[int, ...]
    policy_activation: str
    policy_seed: int
    baseline_layers: tuple[int, ...]
    baseline_activation: str
    baseline_seed: int
    k: int
    gamma: float
    epochs: int
    alpha: StepSchedule
    beta: StepSchedule
    criterion: str
    probe_every: int = 200
    probe_pool: int = 50
    master_seed: int = 0

    def __post_init__(self):
        if self.criterion not in CRITERION_KINDS:
            raise ConfigurationError(f"unknown criterion {self.criterion!r}")
        if self.k < 1:
            raise ConfigurationError("K must be >= 1")
        if self.criterion == "evv" and self.k < 2:
            raise ConfigurationError("criterion=evv requires K >= 2 (variance needs two samples)")
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigurationError("gamma must be in (0, 1]")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.probe_every < 1 or self.probe_pool < 2:
            raise ConfigurationError("probe_every >= 1 and probe_pool >= 2 required")


@dataclass
class TrainState:
    theta: np.ndarray
    phi: np.ndarray
    epoch: int


@dataclass
class EpochSummary:
    epoch: int
    mean_reward: float
    std_reward: float
    a2c_loss: float
    evm_loss: float
    evv_loss: Optional[float]  # None when K < 2
    wall_ms: int
    probe: Optional[VarianceReport] = None


def init_state(cfg: TrainConfig) -> TrainState:
    policy_net = init_params(cfg.policy_layers, cfg.policy_activation, cfg.policy_seed)
    baseline_net = init_params(
        cfg.baseline_layers, cfg.baseline_activation, cfg.baseline_seed
    )
    return TrainState(theta=policy_net.params, phi=baseline_net.params, epoch=0)


def _nets(cfg: TrainConfig, state: TrainState):
    policy = SoftmaxPolicy(
        init_params(cfg.policy_layers, cfg.policy_activation, 0).with_params(state.theta)
    )
    baseline = init_params(cfg.baseline_layers, cfg.baseline_activation, 0).with_params(
        state.phi
    )
    return policy, baseline


def train_epoch(state: TrainState, cfg: TrainConfig) -> tuple[TrainState, EpochSummary]:
    t0 = time.perf_counter()
    policy, baseline = _nets(cfg, state)
    use_baseline = cfg.criterion != "none"
    trajs = [
        rollout(cfg.env, policy, substream(cfg.master_seed, state.epoch, _TRAIN_STREAM, i))
        for i in range(cfg.k)
    ]
    ctx = build_batch_context(trajs, policy, baseline if use_baseline else None, cfg.gamma)

    theta_grad = batch_mean_gradient([it.estimate for it in ctx.items])
    new_theta = state.theta + step_size(cfg.alpha, state.epoch) * theta_grad
    new_phi = state.phi
    if use_baseline:
        # phi gradient uses this epoch's batch at the pre-update theta
        _, phi_grad = LOSS_AND_GRAD[cfg.criterion](ctx, baseline)
        new_phi = state.phi - step_size(cfg.beta, state.epoch) * phi_grad

    if not (np.all(np.isfinite(new_theta)) and np.all(np.isfinite(new_phi))):
        raise TrainingAbort(
            f"non-finite parameters at epoch {state.epoch} "
            f"(|theta|={np.linalg.norm(state.theta):.3g}, "
            f"|phi|={np.linalg.norm(state.phi):.3g}, seed={cfg.master_seed})"
        )

    rewards = [traj.total_reward for traj in trajs]
    summary = EpochSummary(
        epoch=state.epoch,
        mean_reward=float(np.mean(rewards)),
        std_reward=float(np.std(rewards, ddof=1)) if cfg.k > 1 else 0.0,
        a2c_loss=a2c_loss(ctx),
        evm_loss=evm_loss(ctx),
        evv_loss=evv_loss(ctx) if cfg.k >= 2 else None,
        wall_ms=int(round((time.perf_counter() - t0) * 1000)),
    )
    return TrainState(new_theta, new_phi, state.epoch + 1), summary


def run_probe(state: TrainState, cfg: TrainConfig) -> VarianceReport:
    """Variance measurement on a fresh pool; never influences training."""
    policy, baseline = _nets(cfg, state)
    use_baseline = cfg.criterion != "none"
    pool = [
        rollout(cfg.env, policy, substream(cfg.master_seed, state.epoch, _PROBE_STREAM, i))
        for i in range(cfg.probe_pool)
    ]
    _spot_check_score_identity(policy, pool, cfg, state.epoch)
    return reduction_ratio(pool, policy, baseline if use_baseline else None, cfg.gamma)


def _spot_check_score_identity(policy, pool, cfg: TrainConfig, epoch: int) -> None:
    """Verify sum_a pi(a|s) * score_gradient(a) = 0 on one random pool state."""
    rng = substream(cfg.master_seed, epoch, _PROBE_STREAM, cfg.probe_pool)
    traj = pool[int(rng.integers(len(pool)))]
    state = traj.states[int(rng.integers(len(traj)))]
    probs = np.exp(action_log_probs(policy, state))
    total = sum(
        p * score_gradient(policy, state, a) for a, p in enumerate(probs)
    )
    if np.linalg.norm(total) > 1e-10:
        raise ContractError(
            f"score identity violated at epoch {epoch}: |sum_a pi*u| = "
            f"{np.linalg.norm(total):.3e}"
        )


def run_experiment(
    cfg: TrainConfig,
    sink: Optional[Callable[[EpochSummary], None]] = None,
) -> TrainState:
    """Full training run; probes every probe_every epochs and at the end."""
    state = init_state(cfg)
    for _ in range(cfg.epochs):
        state, summary = train_epoch(state, cfg)
        if state.epoch % cfg.probe_every == 0 or state.epoch == cfg.epochs:
            summary.probe = run_probe(state, cfg)
        if sink is not None:
            sink(summary)
    return state
