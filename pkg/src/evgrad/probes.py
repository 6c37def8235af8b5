"""Measurement instruments: gradient variance, reduction ratio, oracles.

Probe pools are read-only with respect to training; the enumeration oracle
gives exact expectations on the chain MDP for unbiasedness checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .envs import EnvSpec, Trajectory, enumerate_trajectories
from .errors import ContractError
from .estimators import (
    GradEstimate,
    baselined_gradient,
    discounted_returns,
    make_score_cache,
)
from .criteria import baseline_values_for
from .nets import Mlp


@dataclass(frozen=True)
class VarianceReport:
    v_evv: float  # biased (1/K, 1/K^2) normalization with baseline
    v_unbiased: float  # 1/(K-1) normalization with baseline
    v_mean_sq: float  # (1/K) sum ||g_k||^2 (the EVm value)
    baseline_off_variance: float  # biased normalization, b = 0
    baseline_off_unbiased: float
    reduction_ratio: float
    pool_size: int
    c_hat_l: float  # empirical max ||u_t||_2 over the pool
    c_hat_r: float  # empirical max |R_t| over the pool
    degenerate_pool: bool


def empirical_grad_variance(
    estimates: Sequence[GradEstimate], normalization: str = "biased_K"
) -> float:
    """Empirical variance of the estimates under the chosen normalization."""
    k = len(estimates)
    if k < 2:
        raise ContractError("variance needs at least 2 estimates")
    g = np.stack([e.g for e in estimates])
    sq = float((g * g).sum()) / k
    mean_sq = float(np.square(g.sum(axis=0)).sum()) / k**2
    biased = sq - mean_sq
    if normalization == "biased_K":
        return biased
    if normalization == "unbiased_Kminus1":
        return biased * k / (k - 1)
    raise ContractError(f"unknown normalization {normalization!r}")


def pool_estimates(
    pool: Sequence[Trajectory],
    policy,
    baseline: Optional[Mlp],
    gamma: float,
):
    """Baselined and zero-baseline estimates on a shared score cache.

    Processes one trajectory at a time so the (T, D) score matrices never
    accumulate across the pool.
    """
    ests_on, ests_off = [], []
    c_hat_l = 0.0
    c_hat_r = 0.0
    for k, traj in enumerate(pool):
        cache = make_score_cache(policy, traj, gamma)
        returns = discounted_returns(traj.rewards, gamma)
        b_vals = baseline_values_for(baseline, traj)
        ests_on.append(baselined_gradient(traj, cache, returns, b_vals, k))
        ests_off.append(baselined_gradient(traj, cache, returns, np.zeros(len(traj)), k))
        c_hat_l = max(c_hat_l, float(np.sqrt((cache.u * cache.u).sum(axis=1).max())))
        c_hat_r = max(c_hat_r, float(np.abs(traj.rewards).max()))
    return ests_on, ests_off, c_hat_l, c_hat_r


def reduction_ratio(
    pool: Sequence[Trajectory],
    policy,
    baseline: Optional[Mlp],
    gamma: float,
) -> VarianceReport:
    """Sample variance with baseline divided by sample variance without."""
    if len(pool) < 2:
        raise ContractError("reduction ratio needs a pool of >= 2 trajectories")
    ests_on, ests_off, c_hat_l, c_hat_r = pool_estimates(pool, policy, baseline, gamma)
    k = len(pool)
    v_on = empirical_grad_variance(ests_on, "biased_K")
    v_off = empirical_grad_variance(ests_off, "biased_K")
    v_mean_sq = float(sum(e.g @ e.g for e in ests_on)) / k
    # zero up to rounding in the (1/K)sum||g||^2 - ||mean||^2 cancellation
    off_scale = float(sum(e.g @ e.g for e in ests_off)) / k
    degenerate = v_off <= 1e-12 * max(1.0, off_scale)
    ratio = 1.0 if degenerate else v_on / v_off
    return VarianceReport(
        v_evv=v_on,
        v_unbiased=v_on * k / (k - 1),
        v_mean_sq=v_mean_sq,
        baseline_off_variance=v_off,
        baseline_off_unbiased=v_off * k / (k - 1),
        reduction_ratio=ratio,
        pool_size=k,
        c_hat_l=c_hat_l,
        c_hat_r=c_hat_r,
        degenerate_pool=degenerate,
    )


def exact_gradient_oracle(
    env: EnvSpec,
    policy,
    baseline: Optional[Mlp],
    gamma: float,
) -> np.ndarray:
    """Exact expectation of the (baselined) estimator by full enumeration.

    With baseline=None this is the exact policy gradient of J.
    """
    total = np.zeros_like(policy.theta)
    for traj, prob in enumerate_trajectories(env, policy):
        cache = make_score_cache(policy, traj, gamma)
        returns = discounted_returns(traj.rewards, gamma)
        b_vals = baseline_values_for(baseline, traj)
        total += prob * baselined_gradient(traj, cache, returns, b_vals).g
    return total


def exact_variance(
    env: EnvSpec,
    policy,
    baseline: Optional[Mlp],
    gamma: float,
) -> float:
    """Exact Tr Cov of the estimator on an enumerable chain MDP."""
    mean = np.zeros_like(policy.theta)
    sq = 0.0
    for traj, prob in enumerate_trajectories(env, policy):
        cache = make_score_cache(policy, traj, gamma)
        returns = discounted_returns(traj.rewards, gamma)
        b_vals = baseline_values_for(baseline, traj)
        g = baselined_gradient(traj, cache, returns, b_vals).g
        mean += prob * g
        sq += prob * float(g @ g)
    return sq - float(mean @ mean)


def reward_stats(epoch_rewards: Sequence[Sequence[float]]):
    """Per-epoch mean and sample std of episode rewards.

    Single-trajectory epochs report std 0 (flagged by the caller's K).
    """
    means, stds = [], []
    for rewards in epoch_rewards:
        r = np.asarray(rewards, dtype=np.float64)
        means.append(float(r.mean()))
        stds.append(float(r.std(ddof=1)) if r.size > 1 else 0.0)
    return np.array(means), np.array(stds)
