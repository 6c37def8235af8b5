"""Episodic MDPs: a faithful CartPole-v1 physics port and an enumerable chain MDP.

Chain states are exposed one-hot so the same MLP interface serves both
environments. The horizon cap truncates with terminal=False; environment
failure / absorption ends with terminal=True.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractError, ResourceError

# CartPole-v1 physics constants (classic control reference values)
GRAVITY = 9.8
MASS_CART = 1.0
MASS_POLE = 0.1
TOTAL_MASS = MASS_CART + MASS_POLE
HALF_LENGTH = 0.5
POLEMASS_LENGTH = MASS_POLE * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_THRESHOLD = 2.4
THETA_THRESHOLD = 12.0 * 2.0 * np.pi / 360.0

ENUM_LEAF_LIMIT = 10**6


@dataclass(frozen=True)
class Transition:
    state: np.ndarray  # observation before the action
    action: int
    reward: float


@dataclass(frozen=True)
class Trajectory:
    transitions: tuple[Transition, ...]
    terminal: bool  # ended by the environment, not the horizon cap

    def __len__(self) -> int:
        return len(self.transitions)

    @property
    def states(self) -> np.ndarray:
        return np.stack([tr.state for tr in self.transitions])

    @property
    def actions(self) -> np.ndarray:
        return np.array([tr.action for tr in self.transitions], dtype=np.int64)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([tr.reward for tr in self.transitions])

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())


@dataclass(frozen=True)
class EnvSpec:
    name: str  # "cartpole" | "chain"
    horizon_cap: int
    # chain-only fields
    n_states: int = 0
    rewards: Optional[np.ndarray] = None  # (S, A)
    transitions: Optional[np.ndarray] = None  # (S, A, S), rows sum to 1
    terminal_states: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.name not in ("cartpole", "chain"):
            raise ConfigurationError(f"unknown environment {self.name!r}")
        if self.horizon_cap < 1:
            raise ConfigurationError("horizon_cap must be >= 1")
        if self.name == "chain":
            if self.rewards is None or self.transitions is None or self.n_states < 1:
                raise ConfigurationError("chain env needs n_states, rewards, transitions")
            p = self.transitions
            if p.shape != (self.n_states, self.n_actions, self.n_states):
                raise ConfigurationError(f"transition table shape {p.shape} invalid")
            if np.any(p < 0) or np.any(np.abs(p.sum(axis=2) - 1.0) > 1e-12):
                raise ConfigurationError("transition rows must be distributions")

    @property
    def n_actions(self) -> int:
        return 2 if self.name == "cartpole" else self.rewards.shape[1]

    @property
    def obs_dim(self) -> int:
        return 4 if self.name == "cartpole" else self.n_states


def make_chain(
    rewards: np.ndarray,
    transitions: np.ndarray,
    horizon_cap: int,
    terminal_states=(),
) -> EnvSpec:
    rewards = np.asarray(rewards, dtype=np.float64)
    transitions = np.asarray(transitions, dtype=np.float64)
    return EnvSpec(
        name="chain",
        horizon_cap=horizon_cap,
        n_states=rewards.shape[0],
        rewards=rewards,
        transitions=transitions,
        terminal_states=frozenset(terminal_states),
    )


def _one_hot(i: int, n: int) -> np.ndarray:
    v = np.zeros(n)
    v[i] = 1.0
    return v


def reset(env: EnvSpec, rng: np.random.Generator) -> np.ndarray:
    if env.name == "cartpole":
        return rng.uniform(-0.05, 0.05, size=4)
    return _one_hot(0, env.n_states)


def _cartpole_step(state: np.ndarray, action: int):
    x, x_dot, theta, theta_dot = state
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    temp = (force + POLEMASS_LENGTH * theta_dot**2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t**2 / TOTAL_MASS)
    )
    x_acc = temp - POLEMASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
    # semi-implicit "euler" kinematics: position first, with the old velocity
    x = x + TAU * x_dot
    x_dot = x_dot + TAU * x_acc
    theta = theta + TAU * theta_dot
    theta_dot = theta_dot + TAU * theta_acc
    next_state = np.array([x, x_dot, theta, theta_dot])
    done = bool(abs(x) > X_THRESHOLD or abs(theta) > THETA_THRESHOLD)
    return next_state, 1.0, done


def step(
    env: EnvSpec, state: np.ndarray, action: int, rng: np.random.Generator
):
    """One environment transition: (next_state, reward, done)."""
    if not (0 <= action < env.n_actions):
        raise ContractError(f"action {action} invalid for {env.name}")
    if env.name == "cartpole":
        return _cartpole_step(state, action)
    s = int(np.argmax(state))
    reward = float(env.rewards[s, action])
    row = env.transitions[s, action]
    s_next = int(np.searchsorted(np.cumsum(row), rng.random(), side="right"))
    s_next = min(s_next, env.n_states - 1)
    done = s_next in env.terminal_states
    return _one_hot(s_next, env.n_states), reward, done


def rollout(env: EnvSpec, policy, rng: np.random.Generator) -> Trajectory:
    """Sample one episode under the given policy, up to the horizon cap."""
    from .policy import sample_action  # local import avoids a cycle

    if policy.net.input_dim != env.obs_dim:
        raise ContractError(
            f"policy input dim {policy.net.input_dim} != obs dim {env.obs_dim}"
        )
    state = reset(env, rng)
    transitions = []
    terminal = False
    for _ in range(env.horizon_cap):
        action = sample_action(policy, state, rng)
        next_state, reward, done = step(env, state, action, rng)
        transitions.append(Transition(state, action, reward))
        state = next_state
        if done:
            terminal = True
            break
    return Trajectory(tuple(transitions), terminal)


def enumerate_trajectories(env: EnvSpec, policy) -> list[tuple[Trajectory, float]]:
    """All (trajectory, probability) pairs for a small chain MDP.

    Branches over actions and stochastic next states; at the final step the
    next-state branch only splits on terminal membership (the state itself is
    never observed), keeping identical trajectories merged.
    """
    from .policy import action_log_probs

    if env.name != "chain":
        raise ContractError("enumeration requires a chain env")
    out: list[tuple[Trajectory, float]] = []
    probs_cache: dict[int, np.ndarray] = {}

    def pi(s: int) -> np.ndarray:
        if s not in probs_cache:
            probs_cache[s] = np.exp(action_log_probs(policy, _one_hot(s, env.n_states)))
        return probs_cache[s]

    def recurse(s: int, t: int, prob: float, prefix: list[Transition]):
        if len(out) > ENUM_LEAF_LIMIT:
            raise ResourceError(f"enumeration exceeds {ENUM_LEAF_LIMIT} leaves")
        action_probs = pi(s)
        last_step = t == env.horizon_cap - 1
        for a in range(env.n_actions):
            pa = prob * float(action_probs[a])
            if pa == 0.0:
                continue
            tr = Transition(_one_hot(s, env.n_states), a, float(env.rewards[s, a]))
            row = env.transitions[s, a]
            if last_step:
                p_term = float(sum(row[list(env.terminal_states)])) if env.terminal_states else 0.0
                if p_term > 0.0:
                    out.append((Trajectory(tuple(prefix + [tr]), True), pa * p_term))
                if 1.0 - p_term > 1e-15:
                    out.append((Trajectory(tuple(prefix + [tr]), False), pa * (1.0 - p_term)))
            else:
                for s_next in range(env.n_states):
                    ps = float(row[s_next])
                    if ps == 0.0:
                        continue
                    if s_next in env.terminal_states:
                        out.append((Trajectory(tuple(prefix + [tr]), True), pa * ps))
                    else:
                        recurse(s_next, t + 1, pa * ps, prefix + [tr])

    recurse(0, 0, 1.0, [])
    return out
