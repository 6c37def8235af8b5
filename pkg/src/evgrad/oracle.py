"""Enumeration-based exactness checks on chain MDPs.

Shared by the `oracle` CLI subcommand and the acceptance tests: probability
closure, exact unbiasedness of S-baselines, and the closed-form bandit
gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import enumerate_trajectories, make_chain
from .nets import init_params
from .policy import SoftmaxPolicy
from .probes import exact_gradient_oracle


def bandit_env(reward_0: float = 1.0, reward_1: float = 0.0):
    """1-state 2-action bandit, horizon 1."""
    rewards = np.array([[reward_0, reward_1]])
    transitions = np.ones((1, 2, 1))
    return make_chain(rewards, transitions, horizon_cap=1)


def standard_chain_env(horizon_cap: int = 4):
    """3-state, 2-action stochastic chain used as the standard oracle env."""
    rewards = np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, 1.0]])
    transitions = np.array(
        [
            [[0.7, 0.3, 0.0], [0.1, 0.6, 0.3]],
            [[0.0, 0.5, 0.5], [0.4, 0.4, 0.2]],
            [[0.2, 0.2, 0.6], [0.3, 0.0, 0.7]],
        ]
    )
    return make_chain(rewards, transitions, horizon_cap=horizon_cap)


def bandit_policy_uniform():
    """Linear [1, 2] net with zero params: uniform bandit policy."""
    net = init_params([1, 2], "tanh", 0)
    return SoftmaxPolicy(net.with_params(np.zeros(net.params.size)))


@dataclass
class OracleReport:
    prob_closure_err: float
    bandit_grad_err: float
    max_baseline_bias: float  # worst |E[baseline term]| coordinate over pairs
    n_pairs: int

    def lines(self) -> list[str]:
        return [
            f"probability closure |1 - sum p|     = {self.prob_closure_err:.3e}",
            f"bandit gradient vs closed form      = {self.bandit_grad_err:.3e}",
            f"S-baseline bias (max over {self.n_pairs} pairs) = {self.max_baseline_bias:.3e}",
        ]


def run_oracle_suite(n_pairs: int = 50, seed: int = 0) -> OracleReport:
    rng = np.random.default_rng(seed)
    env = standard_chain_env()

    # probability closure on the standard chain under a random policy
    policy = SoftmaxPolicy(init_params([3, 4, 2], "tanh", 7))
    total = sum(p for _, p in enumerate_trajectories(env, policy))
    closure_err = abs(1.0 - total)

    # uniform bandit: exact grad of J = softmax_0(theta) is (pi0 pi1, -pi0 pi1)
    grad = exact_gradient_oracle(bandit_env(), bandit_policy_uniform(), None, gamma=1.0)
    bandit_err = float(np.max(np.abs(grad[:2] - np.array([0.25, -0.25]))))

    # S-baseline term has exactly zero expectation (tower property)
    worst = 0.0
    for _ in range(n_pairs):
        p_net = init_params([3, 3, 2], "tanh", int(rng.integers(2**31)))
        p_net = p_net.with_params(p_net.params + 0.3 * rng.standard_normal(p_net.params.size))
        pol = SoftmaxPolicy(p_net)
        b_net = init_params([3, 3, 1], "tanh", int(rng.integers(2**31)))
        b_net = b_net.with_params(b_net.params + rng.standard_normal(b_net.params.size))
        gamma = float(rng.uniform(0.5, 1.0))
        with_b = exact_gradient_oracle(env, pol, b_net, gamma)
        without_b = exact_gradient_oracle(env, pol, None, gamma)
        worst = max(worst, float(np.max(np.abs(with_b - without_b))))

    return OracleReport(
        prob_closure_err=closure_err,
        bandit_grad_err=bandit_err,
        max_baseline_bias=worst,
        n_pairs=n_pairs,
    )
