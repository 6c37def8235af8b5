"""Experiment configuration: INI-style files with documented defaults.

Sections: [env], [policy], [baseline], [training]. Unknown keys are errors;
missing keys take the defaults below. The effective (fully materialized)
config is echoed next to the metrics so every run is self-describing.
"""

from __future__ import annotations

import configparser
import io

import numpy as np

from .envs import EnvSpec, make_chain
from .errors import ConfigurationError
from .trainer import StepSchedule, TrainConfig

DEFAULTS = {
    "env": {
        "name": "cartpole",
        "horizon_cap": "500",
        "n_states": "",
        "n_actions": "",
        "rewards": "",
        "transitions": "",
        "terminal_states": "",
    },
    "policy": {
        "hidden": "128,128",
        "activation": "mish",
        "seed": "1",
    },
    "baseline": {
        "hidden": "128",
        "activation": "tanh",
        "seed": "2",
    },
    "training": {
        "criterion": "evm",
        "k": "8",
        "gamma": "0.99",
        "epochs": "1000",
        # desk-calibrated: the criterion gradient in phi is ~30x larger in
        # norm than the policy gradient at init, so beta sits well below alpha
        "alpha": "0.002",
        "alpha_mode": "inverse_time",
        "alpha_half_life": "500",
        "beta": "1e-05",
        "beta_mode": "inverse_time",
        "beta_half_life": "500",
        "probe_every": "200",
        "probe_pool": "50",
        "seed": "0",
    },
}


def _parse_rows(text: str) -> np.ndarray:
    rows = [
        [float(x) for x in row.split(",")] for row in text.split(";") if row.strip()
    ]
    return np.array(rows)


def _merge_defaults(parser: configparser.ConfigParser) -> dict[str, dict[str, str]]:
    merged = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigurationError(f"unknown key {key!r} in section [{section}]")
            merged[section][key] = value.strip()
    return merged


def _build_env(env: dict[str, str]) -> EnvSpec:
    if env["name"] == "cartpole":
        return EnvSpec(name="cartpole", horizon_cap=int(env["horizon_cap"]))
    if env["name"] != "chain":
        raise ConfigurationError(f"unknown env name {env['name']!r}")
    n_states = int(env["n_states"])
    n_actions = int(env["n_actions"])
    rewards = _parse_rows(env["rewards"])
    if rewards.shape != (n_states, n_actions):
        raise ConfigurationError(
            f"rewards table shape {rewards.shape} != ({n_states}, {n_actions})"
        )
    # transition rows are listed (s, a)-major, one row of S probabilities each
    flat = _parse_rows(env["transitions"])
    if flat.shape != (n_states * n_actions, n_states):
        raise ConfigurationError(
            f"transition table needs {n_states * n_actions} rows of {n_states} entries"
        )
    transitions = flat.reshape(n_states, n_actions, n_states)
    terminal = [int(x) for x in env["terminal_states"].split(",") if x.strip()]
    return make_chain(rewards, transitions, int(env["horizon_cap"]), terminal)


def _layers(obs_dim: int, hidden: str, out_dim: int) -> tuple[int, ...]:
    hidden_sizes = [int(x) for x in hidden.split(",") if x.strip()]
    return tuple([obs_dim] + hidden_sizes + [out_dim])


def config_from_sections(sections: dict[str, dict[str, str]]) -> TrainConfig:
    env = _build_env(sections["env"])
    tr = sections["training"]
    try:
        return TrainConfig(
            env=env,
            policy_layers=_layers(env.obs_dim, sections["policy"]["hidden"], env.n_actions),
            policy_activation=sections["policy"]["activation"],
            policy_seed=int(sections["policy"]["seed"]),
            baseline_layers=_layers(env.obs_dim, sections["baseline"]["hidden"], 1),
            baseline_activation=sections["baseline"]["activation"],
            baseline_seed=int(sections["baseline"]["seed"]),
            k=int(tr["k"]),
            gamma=float(tr["gamma"]),
            epochs=int(tr["epochs"]),
            alpha=StepSchedule(float(tr["alpha"]), tr["alpha_mode"], float(tr["alpha_half_life"])),
            beta=StepSchedule(float(tr["beta"]), tr["beta_mode"], float(tr["beta_half_life"])),
            criterion=tr["criterion"],
            probe_every=int(tr["probe_every"]),
            probe_pool=int(tr["probe_pool"]),
            master_seed=int(tr["seed"]),
        )
    except ValueError as exc:
        raise ConfigurationError(f"bad config value: {exc}") from exc


def load_config(path: str) -> tuple[TrainConfig, dict[str, dict[str, str]]]:
    """Parse, validate, and default-complete a config file.

    Returns the TrainConfig plus the effective sections (for echoing).
    """
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error in {path}: {exc}") from exc
    sections = _merge_defaults(parser)
    cfg = config_from_sections(sections)
    return cfg, sections


def echo_config(sections: dict[str, dict[str, str]]) -> str:
    """Serialize the effective config back to INI text (stable key order)."""
    buf = io.StringIO()
    for section in ("env", "policy", "baseline", "training"):
        buf.write(f"[{section}]\n")
        for key in DEFAULTS[section]:
            buf.write(f"{key} = {sections[section][key]}\n")
        buf.write("\n")
    return buf.getvalue()
