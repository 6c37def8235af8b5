import os

from evgrad.cli import main

CHAIN_CFG = """
[env]
name = chain
horizon_cap = 3
n_states = 3
n_actions = 2
rewards = 1,0; 0,2; -1,1
transitions = 0.7,0.3,0; 0.1,0.6,0.3; 0,0.5,0.5; 0.4,0.4,0.2; 0.2,0.2,0.6; 0.3,0,0.7

[policy]
hidden = 4
activation = tanh

[baseline]
hidden = 4
activation = tanh

[training]
criterion = evm
k = 4
gamma = 0.9
epochs = 6
alpha = 0.01
beta = 0.05
probe_every = 3
probe_pool = 6
"""


def write_cfg(tmp_path):
    path = tmp_path / "chain.ini"
    path.write_text(CHAIN_CFG)
    return str(path)


class TestTrain:
    def test_writes_metrics_and_params(self, tmp_path):
        out = str(tmp_path / "out")
        rc = main(
            ["train", "--config", write_cfg(tmp_path), "--seeds", "0..1", "--out", out]
        )
        assert rc == 0
        for seed in (0, 1):
            assert os.path.exists(os.path.join(out, f"metrics_{seed}.csv"))
            assert os.path.exists(os.path.join(out, f"params_{seed}.npz"))
            assert os.path.exists(os.path.join(out, f"timing_{seed}.csv"))
        assert os.path.exists(os.path.join(out, "config.echo"))

    def test_zero_epochs_header_only(self, tmp_path):
        out = str(tmp_path / "out")
        rc = main(
            [
                "train",
                "--config",
                write_cfg(tmp_path),
                "--seeds",
                "0..0",
                "--out",
                out,
                "--epochs",
                "0",
            ]
        )
        assert rc == 0
        lines = open(os.path.join(out, "metrics_0.csv")).read().splitlines()
        assert len(lines) == 2  # schema comment + header

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_cfg(tmp_path)
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["train", "--config", cfg, "--seeds", "0..0", "--out", out1]) == 0
        assert main(["train", "--config", cfg, "--seeds", "0..0", "--out", out2]) == 0
        b1 = open(os.path.join(out1, "metrics_0.csv"), "rb").read()
        b2 = open(os.path.join(out2, "metrics_0.csv"), "rb").read()
        assert b1 == b2

    def test_missing_config(self, tmp_path, capsys):
        rc = main(
            ["train", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]
        )
        assert rc == 2
        assert "error" in capsys.readouterr().err


class TestProbe:
    def test_probe_saved_params(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        out = str(tmp_path / "out")
        assert main(["train", "--config", cfg, "--seeds", "3..3", "--out", out]) == 0
        rc = main(
            [
                "probe",
                "--config",
                cfg,
                "--params",
                os.path.join(out, "params_3.npz"),
                "--pool",
                "8",
            ]
        )
        assert rc == 0
        assert "reduction ratio" in capsys.readouterr().out


class TestChecks:
    def test_gradcheck_fast(self, capsys):
        assert main(["gradcheck", "--instances", "5"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_oracle_fast(self, capsys):
        assert main(["oracle", "--pairs", "5"]) == 0
        assert "PASS" in capsys.readouterr().out
