"""Acceptance suite: one test per criterion, each printing a PASS line.

P5 trains CartPole for two criteria over five seeds and is by far the
slowest part (tens of minutes on one core). Its outputs are cached under
results/p5/ at the repo root; delete that directory to force a full rerun.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

from evgrad.criteria import build_batch_context, criterion_inequality_report
from evgrad.envs import EnvSpec, enumerate_trajectories, rollout
from evgrad.estimators import discounted_returns, make_score_cache
from evgrad.gradcheck import run_gradcheck
from evgrad.nets import init_params
from evgrad.oracle import run_oracle_suite, standard_chain_env
from evgrad.policy import SoftmaxPolicy
from evgrad.trainer import StepSchedule, TrainConfig, run_experiment

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
P5_DIR = os.path.join(REPO_ROOT, "results", "p5")
P5_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_CONFIG = os.path.join(REPO_ROOT, "configs", "cartpole.ini")


class TestP1Gradcheck:
    def test_gradient_exactness(self, verdicts):
        result = run_gradcheck(n_instances=100, seed=0)
        ok = result.max_error < 1e-5
        verdicts(f"P1 gradient exactness: max rel err {result.max_error:.3e} "
               f"{'PASS' if ok else 'FAIL'}")
        assert ok


class TestP2ExactOracle:
    def test_unbiasedness_and_bandit(self, verdicts):
        result = run_oracle_suite(n_pairs=50, seed=0)
        ok = (
            result.max_baseline_bias < 1e-10
            and result.bandit_grad_err < 1e-10
            and result.prob_closure_err < 1e-10
        )
        verdicts(
            "P2 exact unbiasedness oracle: "
            f"baseline bias {result.max_baseline_bias:.2e}, "
            f"bandit err {result.bandit_grad_err:.2e} {'PASS' if ok else 'FAIL'}"
        )
        assert ok


class TestP3Inequalities:
    def _random_batch(self, rng):
        if rng.random() < 0.5:
            env = standard_chain_env(horizon_cap=int(rng.integers(2, 5)))
            layers = [3, 4, 2]
        else:
            env = EnvSpec(name="cartpole", horizon_cap=int(rng.integers(5, 30)))
            layers = [4, 8, 2]
        policy_net = init_params(layers, "tanh", int(rng.integers(2**31)))
        policy_net = policy_net.with_params(
            policy_net.params + 0.3 * rng.standard_normal(policy_net.params.size)
        )
        policy = SoftmaxPolicy(policy_net)
        baseline = init_params([layers[0], 4, 1], "tanh", int(rng.integers(2**31)))
        baseline = baseline.with_params(
            baseline.params + rng.standard_normal(baseline.params.size)
        )
        k = int(rng.integers(2, 9))
        gamma = float(rng.uniform(0.3, 1.0))
        roll = np.random.default_rng(int(rng.integers(2**31)))
        trajs = [rollout(env, policy, roll) for _ in range(k)]
        return build_batch_context(trajs, policy, baseline, gamma)

    def test_500_random_batches(self, verdicts):
        rng = np.random.default_rng(77)
        jensen_violations = 0
        cs_violations = 0
        constant_bound_held = 0
        for _ in range(500):
            rep = criterion_inequality_report(self._random_batch(rng), slack=1e-9)
            jensen_violations += not rep.jensen_ok
            cs_violations += not rep.cauchy_schwarz_ok
            constant_bound_held += rep.constant_factor_held
        ok = jensen_violations == 0 and cs_violations == 0
        verdicts(
            f"P3 inequality suite: 500 batches, jensen violations {jensen_violations}, "
            f"cauchy-schwarz violations {cs_violations} "
            f"(2*C_L^2 constant-factor form held {constant_bound_held}/500) {'PASS' if ok else 'FAIL'}"
        )
        assert ok


class TestP4NormalizationIdentity:
    def test_identity_on_every_probe_of_a_run(self, verdicts):
        cfg = TrainConfig(
            env=standard_chain_env(),
            policy_layers=(3, 8, 2),
            policy_activation="tanh",
            policy_seed=1,
            baseline_layers=(3, 8, 1),
            baseline_activation="tanh",
            baseline_seed=2,
            k=6,
            gamma=0.9,
            epochs=60,
            alpha=StepSchedule(0.01),
            beta=StepSchedule(0.01),
            criterion="evv",
            probe_every=10,
            probe_pool=12,
            master_seed=3,
        )
        probes = []
        run_experiment(cfg, lambda s: probes.append(s.probe) if s.probe else None)
        assert len(probes) >= 6
        worst = 0.0
        for p in probes:
            expected = p.v_evv * p.pool_size / (p.pool_size - 1)
            if p.v_unbiased != 0.0:
                worst = max(worst, abs(p.v_unbiased - expected) / abs(p.v_unbiased))
        ok = worst <= 1e-12
        verdicts(f"P4 normalization identity: max rel dev {worst:.2e} over "
               f"{len(probes)} probes {'PASS' if ok else 'FAIL'}")
        assert ok


def run_p5_if_needed():
    """Train the P5 grid via the CLI unless cached results exist."""
    jobs = []
    for criterion in ("evm", "a2c"):
        out_dir = os.path.join(P5_DIR, criterion)
        missing = [
            s
            for s in P5_SEEDS
            if not os.path.exists(os.path.join(out_dir, f"metrics_{s}.csv"))
        ]
        if missing:
            jobs.append((criterion, out_dir, missing))
    for criterion, out_dir, missing in jobs:
        seeds = ",".join(str(s) for s in missing)
        subprocess.run(
            [
                sys.executable,
                "-m",
                "evgrad.cli",
                "train",
                "--config",
                DEFAULT_CONFIG,
                "--seeds",
                seeds,
                "--out",
                out_dir,
                "--criterion",
                criterion,
            ],
            check=True,
            cwd=REPO_ROOT,
        )


def load_metrics(path):
    import csv

    with open(path) as fh:
        fh.readline()  # schema comment
        rows = list(csv.DictReader(fh))
    return rows


@pytest.fixture(scope="module")
def p5_metrics():
    run_p5_if_needed()
    out = {}
    for criterion in ("evm", "a2c"):
        out[criterion] = {
            s: load_metrics(os.path.join(P5_DIR, criterion, f"metrics_{s}.csv"))
            for s in P5_SEEDS
        }
    return out


class TestP5CartpoleReproduction:
    def _final_reward(self, rows):
        return np.mean([float(r["mean_reward"]) for r in rows[-100:]])

    def _final_ratio(self, rows):
        ratios = [float(r["reduction_ratio"]) for r in rows if r["reduction_ratio"]]
        return ratios[-1]

    def test_a_reward_threshold(self, p5_metrics, verdicts):
        hits = {c: 0 for c in ("evm", "a2c")}
        for criterion in hits:
            for s in P5_SEEDS:
                if self._final_reward(p5_metrics[criterion][s]) >= 195.0:
                    hits[criterion] += 1
        ok = hits["evm"] >= 4 and hits["a2c"] >= 4
        verdicts(f"P5a mean-last-100 reward >= 195: evm {hits['evm']}/5, "
               f"a2c {hits['a2c']}/5 {'PASS' if ok else 'FAIL'}")
        assert ok

    def test_b_evm_reduction_ratio(self, p5_metrics, verdicts):
        hits = sum(
            self._final_ratio(p5_metrics["evm"][s]) < 0.1 for s in P5_SEEDS
        )
        ok = hits >= 4
        verdicts(f"P5b evm end-of-training reduction ratio < 0.1: {hits}/5 "
               f"{'PASS' if ok else 'FAIL'}")
        assert ok

    def test_c_evm_beats_a2c(self, p5_metrics, verdicts):
        hits = sum(
            self._final_ratio(p5_metrics["evm"][s])
            <= self._final_ratio(p5_metrics["a2c"][s])
            for s in P5_SEEDS
        )
        ok = hits >= 4
        verdicts(f"P5c evm ratio <= a2c ratio per seed: {hits}/5 "
               f"{'PASS' if ok else 'FAIL'}")
        assert ok


class TestP6VarianceVsK:
    """EVv-minimized linear baseline: excess variance shrinks with K."""

    def _design(self, policy, traj, gamma):
        """Per-trajectory affine decomposition g(w) = a - M w."""
        cache = make_score_cache(policy, traj, gamma)
        returns = discounted_returns(traj.rewards, gamma)
        feats = np.hstack([traj.states, np.ones((len(traj), 1))])  # one-hot + bias
        coeff = cache.gamma_weights * returns
        a = coeff @ cache.u
        m = np.einsum("t,td,tp->dp", cache.gamma_weights, cache.u, feats)
        return a, m

    def test_median_excess_variance_non_increasing(self, verdicts):
        env = standard_chain_env(horizon_cap=3)
        policy = SoftmaxPolicy(init_params([3, 3, 2], "tanh", 11))
        gamma = 0.9

        # exact quadratic of the true variance over the linear class
        m2_true = None
        mta_true = None
        mean_grad = None
        for traj, prob in enumerate_trajectories(env, policy):
            a, m = self._design(policy, traj, gamma)
            if m2_true is None:
                m2_true = prob * m.T @ m
                mta_true = prob * m.T @ a
                mean_grad = prob * a
                e_sq = prob * float(a @ a)
            else:
                m2_true += prob * m.T @ m
                mta_true += prob * m.T @ a
                mean_grad += prob * a
                e_sq += prob * float(a @ a)

        def true_variance(w):
            quad = float(w @ m2_true @ w) - 2.0 * float(mta_true @ w) + e_sq
            return quad - float(mean_grad @ mean_grad)

        w_star = np.linalg.lstsq(m2_true, mta_true, rcond=None)[0]
        v_star = true_variance(w_star)

        medians = []
        for k in (8, 32, 128):
            excesses = []
            for seed in range(30):
                rng = np.random.default_rng(1000 + seed)
                pairs = [
                    self._design(policy, rollout(env, policy, rng), gamma)
                    for _ in range(k)
                ]
                a_sum = sum(a for a, _ in pairs)
                m_sum = sum(m for _, m in pairs)
                quad = (
                    sum(m.T @ m for _, m in pairs) / k
                    - m_sum.T @ m_sum / k**2
                )
                lin = (
                    sum(m.T @ a for a, m in pairs) / k
                    - m_sum.T @ a_sum / k**2
                )
                w_hat = np.linalg.lstsq(quad, lin, rcond=None)[0]
                excesses.append(true_variance(w_hat) - v_star)
            medians.append(float(np.median(excesses)))
        ok = medians[0] >= medians[1] >= medians[2] >= -1e-12
        verdicts(
            "P6 variance-vs-K trend: median excess variance "
            f"K=8: {medians[0]:.3e}, K=32: {medians[1]:.3e}, "
            f"K=128: {medians[2]:.3e} {'PASS' if ok else 'FAIL'}"
        )
        assert ok


class TestP7Determinism:
    def test_byte_identical_train_runs(self, tmp_path, verdicts):
        outs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            subprocess.run(
                [
                    sys.executable,
                    "-m",
                    "evgrad.cli",
                    "train",
                    "--config",
                    DEFAULT_CONFIG,
                    "--seeds",
                    "0..0",
                    "--out",
                    out,
                    "--epochs",
                    "25",
                ],
                check=True,
                cwd=REPO_ROOT,
            )
            outs.append(open(os.path.join(out, "metrics_0.csv"), "rb").read())
        ok = outs[0] == outs[1]
        verdicts(f"P7 determinism: metrics byte-identical {'PASS' if ok else 'FAIL'}")
        assert ok
