"""Discounted returns and per-trajectory policy-gradient estimates.

The baselined estimate is g = sum_t gamma^t (G_t - b(S_t)) u_t with
u_t = grad_theta log pi(A_t | S_t); zero baseline recovers plain REINFORCE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError
from .envs import Trajectory


@dataclass(frozen=True)
class ScoreCache:
    """Per-timestep score vectors and discount weights for one trajectory."""

    u: np.ndarray  # (T, D)
    gamma_weights: np.ndarray  # (T,), gamma**t


@dataclass(frozen=True)
class GradEstimate:
    g: np.ndarray  # (D,)
    trajectory_index: int


def discounted_returns(rewards: Sequence[float], gamma: float) -> np.ndarray:
    """Suffix sums G_t = sum_{t'>=t} gamma^(t'-t) R_t' by backward recursion."""
    if len(rewards) == 0:
        raise ContractError("rewards must be non-empty")
    if not (0.0 <= gamma <= 1.0):
        raise ContractError(f"gamma must be in [0, 1], got {gamma}")
    g = np.zeros(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        g[t] = acc
    return g


def make_score_cache(policy, traj: Trajectory, gamma: float) -> ScoreCache:
    from .policy import score_gradients_batch

    u = score_gradients_batch(policy, traj.states, traj.actions)
    gamma_weights = gamma ** np.arange(len(traj), dtype=np.float64)
    return ScoreCache(u=u, gamma_weights=gamma_weights)


def baselined_gradient(
    traj: Trajectory,
    cache: ScoreCache,
    returns: np.ndarray,
    baseline_values: np.ndarray,
    trajectory_index: int = 0,
) -> GradEstimate:
    t = len(traj)
    if not (len(cache.u) == len(returns) == len(baseline_values) == t):
        raise ContractError(
            f"length mismatch: traj {t}, scores {len(cache.u)}, "
            f"returns {len(returns)}, baseline {len(baseline_values)}"
        )
    coeff = cache.gamma_weights * (np.asarray(returns) - np.asarray(baseline_values))
    # fixed-order accumulation: bit-identical to the textbook REINFORCE sum
    g = np.zeros(cache.u.shape[1])
    for i in range(t):
        g += coeff[i] * cache.u[i]
    return GradEstimate(g=g, trajectory_index=trajectory_index)


def batch_mean_gradient(estimates: Sequence[GradEstimate]) -> np.ndarray:
    if not estimates:
        raise ContractError("need at least one gradient estimate")
    out = np.zeros_like(estimates[0].g)
    for est in estimates:  # fixed-order reduction for determinism
        out += est.g
    return out / len(estimates)
