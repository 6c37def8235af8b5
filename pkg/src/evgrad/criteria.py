"""Baseline-training criteria: A2C least squares, EVm, and EVv.

Each criterion returns (loss, exact gradient w.r.t. the baseline parameters).
The gradients are closed-form: the per-trajectory estimate g_k is affine in
the baseline outputs b(S_t), so grad_phi ||g_k||^2 reduces to scalar
coefficients gamma^t (g_k . u_t) pushed through one backward sweep of the
baseline net. A finite-difference oracle in the test suite guards this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .envs import Trajectory
from .errors import ConfigurationError, ContractError
from .estimators import (
    GradEstimate,
    ScoreCache,
    baselined_gradient,
    discounted_returns,
    make_score_cache,
)
from .nets import Mlp, backward_weighted_batch, forward_batch

CRITERION_KINDS = ("a2c", "evm", "evv", "none")


@dataclass(frozen=True)
class TrajectoryContext:
    traj: Trajectory
    cache: ScoreCache
    returns: np.ndarray
    baseline_values: np.ndarray
    estimate: GradEstimate


@dataclass(frozen=True)
class BatchContext:
    items: tuple[TrajectoryContext, ...]
    gamma: float

    @property
    def k(self) -> int:
        return len(self.items)

    def mean_gradient(self) -> np.ndarray:
        return sum(it.estimate.g for it in self.items) / self.k


def baseline_values_for(baseline: Optional[Mlp], traj: Trajectory) -> np.ndarray:
    if baseline is None:
        return np.zeros(len(traj))
    return forward_batch(baseline, traj.states)[:, 0]


def build_batch_context(
    trajs: Sequence[Trajectory],
    policy,
    baseline: Optional[Mlp],
    gamma: float,
) -> BatchContext:
    if not trajs:
        raise ContractError("batch must contain at least one trajectory")
    items = []
    for k, traj in enumerate(trajs):
        cache = make_score_cache(policy, traj, gamma)
        returns = discounted_returns(traj.rewards, gamma)
        b_vals = baseline_values_for(baseline, traj)
        est = baselined_gradient(traj, cache, returns, b_vals, trajectory_index=k)
        items.append(TrajectoryContext(traj, cache, returns, b_vals, est))
    return BatchContext(tuple(items), gamma)


def _accumulate_baseline_grad(
    baseline: Mlp, ctx: BatchContext, coeffs: Sequence[np.ndarray]
) -> np.ndarray:
    """Sum over (k, t) of coeffs[k][t] * grad_phi b(S_t^k), fixed order."""
    grad = np.zeros_like(baseline.params)
    for item, c in zip(ctx.items, coeffs):
        grad += backward_weighted_batch(baseline, item.traj.states, c[:, None]).sum(axis=0)
    return grad


def a2c_loss(ctx: BatchContext) -> float:
    return float(
        sum(np.sum((it.returns - it.baseline_values) ** 2) for it in ctx.items) / ctx.k
    )


def evm_loss(ctx: BatchContext) -> float:
    return float(sum(it.estimate.g @ it.estimate.g for it in ctx.items) / ctx.k)


def evv_loss(ctx: BatchContext) -> float:
    g_sum = sum(it.estimate.g for it in ctx.items)
    return evm_loss(ctx) - float(g_sum @ g_sum) / ctx.k**2


def a2c_loss_and_grad(ctx: BatchContext, baseline: Mlp) -> tuple[float, np.ndarray]:
    """Least-squares fit of b to the return targets over all visited states."""
    coeffs = [-(2.0 / ctx.k) * (it.returns - it.baseline_values) for it in ctx.items]
    return a2c_loss(ctx), _accumulate_baseline_grad(baseline, ctx, coeffs)


def evm_loss_and_grad(ctx: BatchContext, baseline: Mlp) -> tuple[float, np.ndarray]:
    """Mean squared norm of the estimates, (1/K) sum ||g_k||^2."""
    coeffs = [
        -(2.0 / ctx.k) * it.cache.gamma_weights * (it.cache.u @ it.estimate.g)
        for it in ctx.items
    ]
    return evm_loss(ctx), _accumulate_baseline_grad(baseline, ctx, coeffs)


def evv_loss_and_grad(ctx: BatchContext, baseline: Mlp) -> tuple[float, np.ndarray]:
    """Empirical variance with the mean term; needs K >= 2."""
    if ctx.k < 2:
        raise ConfigurationError("EVv needs a batch of K >= 2 trajectories")
    g_sum = sum(it.estimate.g for it in ctx.items)
    coeffs = [
        it.cache.gamma_weights
        * (
            -(2.0 / ctx.k) * (it.cache.u @ it.estimate.g)
            + (2.0 / ctx.k**2) * (it.cache.u @ g_sum)
        )
        for it in ctx.items
    ]
    return evv_loss(ctx), _accumulate_baseline_grad(baseline, ctx, coeffs)


LOSS_AND_GRAD = {
    "a2c": a2c_loss_and_grad,
    "evm": evm_loss_and_grad,
    "evv": evv_loss_and_grad,
}


@dataclass(frozen=True)
class InequalityReport:
    v_evv: float
    v_evm: float
    v_a2c: float
    c_hat_l: float  # max_{k,t} ||u_t^k||_2 over the batch
    s_gamma: float  # sum_{t < T_max} gamma^t
    jensen_ok: bool  # V_evv <= V_evm
    cauchy_schwarz_ok: bool  # V_evm <= C_L^2 * S_gamma * V_a2c
    constant_factor_held: bool  # V_evm <= 2 C_L^2 * V_a2c (informational, not asserted)


def criterion_inequality_report(ctx: BatchContext, slack: float = 1e-9) -> InequalityReport:
    if ctx.k < 2:
        raise ConfigurationError("inequality report needs K >= 2")
    v_evv = evv_loss(ctx)
    v_evm = evm_loss(ctx)
    v_a2c = a2c_loss(ctx)
    c_hat_l = max(
        float(np.sqrt((it.cache.u * it.cache.u).sum(axis=1).max())) for it in ctx.items
    )
    t_max = max(len(it.traj) for it in ctx.items)
    s_gamma = float(np.sum(ctx.gamma ** np.arange(t_max)))
    return InequalityReport(
        v_evv=v_evv,
        v_evm=v_evm,
        v_a2c=v_a2c,
        c_hat_l=c_hat_l,
        s_gamma=s_gamma,
        jensen_ok=v_evv <= v_evm + slack,
        cauchy_schwarz_ok=v_evm <= c_hat_l**2 * s_gamma * v_a2c + slack,
        constant_factor_held=v_evm <= 2.0 * c_hat_l**2 * v_a2c + slack,
    )
