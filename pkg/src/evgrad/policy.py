"""Categorical softmax policy over MLP logits with exact score gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .nets import Mlp, backward_weighted_batch, forward, forward_batch


@dataclass(frozen=True)
class SoftmaxPolicy:
    net: Mlp

    @property
    def theta(self) -> np.ndarray:
        return self.net.params

    @property
    def n_actions(self) -> int:
        return self.net.output_dim

    def with_theta(self, theta: np.ndarray) -> "SoftmaxPolicy":
        return SoftmaxPolicy(self.net.with_params(theta))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    # max-shifted log-sum-exp for overflow safety
    m = np.max(logits, axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def action_log_probs(policy: SoftmaxPolicy, state: np.ndarray) -> np.ndarray:
    """log pi(. | state) via stable log-softmax of the network logits."""
    return _log_softmax(forward(policy.net, state))


def sample_action(
    policy: SoftmaxPolicy, state: np.ndarray, rng: np.random.Generator
) -> int:
    """Inverse-CDF draw from pi(. | state)."""
    probs = np.exp(action_log_probs(policy, state))
    idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    return min(idx, policy.n_actions - 1)


def score_gradient(policy: SoftmaxPolicy, state: np.ndarray, action: int) -> np.ndarray:
    """Exact grad_theta log pi(action | state)."""
    if not (0 <= action < policy.n_actions):
        raise ContractError(f"action {action} out of range")
    return score_gradients_batch(policy, np.asarray(state)[None, :], np.array([action]))[0]


def score_gradients_batch(
    policy: SoftmaxPolicy, states: np.ndarray, actions: np.ndarray
) -> np.ndarray:
    """Per-timestep score vectors u_t for a whole trajectory, shape (T, D).

    The log-softmax Jacobian row is onehot(action) - softmax(logits), pushed
    through one batched reverse sweep on the logit network.
    """
    logits = forward_batch(policy.net, states)
    log_probs = _log_softmax(logits)
    weights = -np.exp(log_probs)
    weights[np.arange(len(actions)), actions] += 1.0
    return backward_weighted_batch(policy.net, states, weights)
