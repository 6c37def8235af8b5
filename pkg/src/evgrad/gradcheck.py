"""Finite-difference verification of every analytic gradient in the package.

Used both by the test suite and the `gradcheck` CLI subcommand. All checks
compare against central differences computed by an independent loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import (
    a2c_loss,
    a2c_loss_and_grad,
    build_batch_context,
    evm_loss,
    evm_loss_and_grad,
    evv_loss,
    evv_loss_and_grad,
)
from .envs import make_chain, rollout
from .nets import ACTIVATIONS, backward_weighted, finite_diff_grad, forward, init_params
from .policy import SoftmaxPolicy, action_log_probs, score_gradient


def rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(numeric)), 1e-8)
    return float(np.linalg.norm(analytic - numeric)) / denom


@dataclass
class GradcheckReport:
    backward: float
    score: float
    a2c: float
    evm: float
    evv: float
    n_instances: int

    @property
    def max_error(self) -> float:
        return max(self.backward, self.score, self.a2c, self.evm, self.evv)

    def lines(self) -> list[str]:
        return [
            f"backward_weighted   max rel err = {self.backward:.3e}",
            f"score_gradient      max rel err = {self.score:.3e}",
            f"a2c phi-gradient    max rel err = {self.a2c:.3e}",
            f"evm phi-gradient    max rel err = {self.evm:.3e}",
            f"evv phi-gradient    max rel err = {self.evv:.3e}",
        ]


def _random_net(rng: np.random.Generator, in_dim: int, out_dim: int):
    hidden = [int(rng.integers(2, 6)) for _ in range(int(rng.integers(1, 3)))]
    activation = ACTIVATIONS[int(rng.integers(len(ACTIVATIONS)))]
    net = init_params([in_dim] + hidden + [out_dim], activation, int(rng.integers(2**31)))
    # non-zero biases so the check exercises every coordinate
    return net.with_params(net.params + 0.1 * rng.standard_normal(net.params.size))


def check_backward(n: int, rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(n):
        net = _random_net(rng, int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        x = rng.standard_normal(net.input_dim)
        w = rng.standard_normal(net.output_dim)
        analytic = backward_weighted(net, x, w)
        numeric = finite_diff_grad(
            lambda p: float(w @ forward(net.with_params(p), x)), net.params, 1e-6
        )
        worst = max(worst, rel_err(analytic, numeric))
    return worst


def check_score(n: int, rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(n):
        net = _random_net(rng, int(rng.integers(1, 5)), int(rng.integers(2, 5)))
        policy = SoftmaxPolicy(net)
        x = rng.standard_normal(net.input_dim)
        a = int(rng.integers(net.output_dim))
        analytic = score_gradient(policy, x, a)
        numeric = finite_diff_grad(
            lambda p: float(
                action_log_probs(SoftmaxPolicy(net.with_params(p)), x)[a]
            ),
            net.params,
            1e-6,
        )
        worst = max(worst, rel_err(analytic, numeric))
    return worst


def _random_batch(rng: np.random.Generator, k: int):
    """Small random chain env, policy, baseline, and a K-trajectory batch."""
    n_states = int(rng.integers(2, 4))
    n_actions = int(rng.integers(2, 4))
    rewards = rng.standard_normal((n_states, n_actions))
    raw = rng.random((n_states, n_actions, n_states)) + 0.1
    transitions = raw / raw.sum(axis=2, keepdims=True)
    env = make_chain(rewards, transitions, horizon_cap=int(rng.integers(2, 5)))
    policy = SoftmaxPolicy(_random_net(rng, n_states, n_actions))
    baseline = _random_net(rng, n_states, 1)
    gamma = float(rng.uniform(0.5, 1.0))
    roll_rng = np.random.default_rng(int(rng.integers(2**31)))
    trajs = [rollout(env, policy, roll_rng) for _ in range(k)]
    return trajs, policy, baseline, gamma


_LOSSES = {"a2c": a2c_loss, "evm": evm_loss, "evv": evv_loss}
_GRADS = {"a2c": a2c_loss_and_grad, "evm": evm_loss_and_grad, "evv": evv_loss_and_grad}


def check_criterion(kind: str, n: int, rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(n):
        k = int(rng.integers(2, 5))
        trajs, policy, baseline, gamma = _random_batch(rng, k)
        ctx = build_batch_context(trajs, policy, baseline, gamma)
        _, analytic = _GRADS[kind](ctx, baseline)

        def loss_at(phi: np.ndarray) -> float:
            b = baseline.with_params(phi)
            return _LOSSES[kind](build_batch_context(trajs, policy, b, gamma))

        numeric = finite_diff_grad(loss_at, baseline.params, 1e-5)
        worst = max(worst, rel_err(analytic, numeric))
    return worst


def run_gradcheck(n_instances: int = 100, seed: int = 0) -> GradcheckReport:
    rng = np.random.default_rng(seed)
    return GradcheckReport(
        backward=check_backward(n_instances, rng),
        score=check_score(n_instances, rng),
        a2c=check_criterion("a2c", n_instances, rng),
        evm=check_criterion("evm", n_instances, rng),
        evv=check_criterion("evv", n_instances, rng),
        n_instances=n_instances,
    )
