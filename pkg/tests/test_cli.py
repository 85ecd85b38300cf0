import json

import numpy as np
import pytest

from branchkit.cli import main
from branchkit.config import ConfigError, load_config


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


CLASSIFY_TOML = """
[experiment]
model = "classify"
master_seed = 42

[interaction]
kind = "logistic"
theta = 1.0
gamma = 1.0
"""


class TestConfigValidation:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = write(tmp_path, "c.toml", CLASSIFY_TOML + "\nbogus = 1\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(cfg)

    def test_unknown_section_rejected(self, tmp_path):
        cfg = write(tmp_path, "c.toml", CLASSIFY_TOML + "\n[mystery]\nx = 1\n")
        with pytest.raises(ConfigError, match="unknown config section"):
            load_config(cfg)

    def test_missing_required_key(self, tmp_path):
        cfg = write(tmp_path, "c.toml", """
[experiment]
model = "classify"

[interaction]
kind = "zero"
""")
        with pytest.raises(ConfigError, match="master_seed"):
            load_config(cfg)

    def test_wrong_type(self, tmp_path):
        cfg = write(tmp_path, "c.toml", """
[experiment]
model = "classify"
master_seed = "not-an-int"

[interaction]
kind = "zero"
""")
        with pytest.raises(ConfigError, match="wrong type"):
            load_config(cfg)

    def test_section_for_other_model_rejected(self, tmp_path):
        cfg = write(tmp_path, "c.toml", CLASSIFY_TOML + """
[diffusion]
x = 1.0
t_max = 1.0
dt = 0.001
""")
        with pytest.raises(ConfigError, match="not used by model"):
            load_config(cfg)

    def test_custom_interaction_csv(self, tmp_path):
        (tmp_path / "f.csv").write_text("z,f\n0,0\n1,0.5\n2,0.8\n3,0.9\n4,0.95\n")
        cfg = load_config(write(tmp_path, "c.toml", """
[experiment]
model = "classify"
master_seed = 1

[interaction]
kind = "custom"
csv = "f.csv"
beta = 0.5
"""))
        f = cfg.interaction()
        assert f(1.0) == pytest.approx(0.5)
        assert f.beta == 0.5


class TestCliRuns:
    def test_classify_run(self, tmp_path):
        cfg = write(tmp_path, "c.toml", CLASSIFY_TOML)
        out = tmp_path / "run"
        assert main(["classify", "--config", cfg, "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["verdict"] == "Pass"
        payload = json.loads((out / "classification.json").read_text())
        assert payload["classification"] == "Subcritical"

    def test_malformed_config_exits_2_without_artifacts(self, tmp_path):
        cfg = write(tmp_path, "bad.toml", """
[experiment]
model = "diffusion"
master_seed = 1

[interaction]
kind = "zero"

[diffusion]
x = 1.0
t_max = 1.0
dt = -0.001
""")
        out = tmp_path / "runbad"
        assert main(["simulate-sde", "--config", cfg, "--out", str(out)]) == 2
        assert not out.exists()

    def test_model_subcommand_mismatch(self, tmp_path):
        cfg = write(tmp_path, "c.toml", CLASSIFY_TOML)
        assert main(["simulate-sde", "--config", cfg,
                     "--out", str(tmp_path / "x")]) == 2

    def test_forest_run_and_emit_plots(self, tmp_path):
        cfg = write(tmp_path, "f.toml", """
[experiment]
model = "forest"
master_seed = 11

[interaction]
kind = "logistic"
theta = 1.0
gamma = 1.0

[forest]
lam = 1.0
mu = 1.0
m = 5
t_max = 3.0
""")
        out = tmp_path / "forest-run"
        assert main(["explore-forest", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "forest.csv").exists()
        assert (out / "exploration.csv").exists()
        assert main(["emit-plots", "--out", str(out)]) == 0
        assert (out / "plot_forest_segments.csv").exists()
        assert (out / "plot_population_vs_localtime.csv").exists()

    def test_emit_plots_missing_artifacts(self, tmp_path):
        empty = tmp_path / "nothing"
        empty.mkdir()
        assert main(["emit-plots", "--out", str(empty)]) == 2

    def test_renormalized_run_artifacts(self, tmp_path):
        cfg = write(tmp_path, "r.toml", """
[experiment]
model = "renormalized"
master_seed = 5
replicates = 50

[interaction]
kind = "zero"

[renormalized]
x = 1.0
N = 10
t_max = 0.5
""")
        out = tmp_path / "renorm"
        assert main(["simulate-renormalized", "--config", cfg,
                     "--out", str(out)]) == 0
        ledger = np.loadtxt(out / "ledger.csv", delimiter=",", skiprows=1)
        assert ledger.shape[1] == 3
        assert (out / "ensemble.csv").exists()

    def test_convergence_run_verdict(self, tmp_path):
        cfg = write(tmp_path, "conv.toml", """
[experiment]
model = "convergence"
master_seed = 9
replicates = 400

[interaction]
kind = "zero"

[convergence]
N_list = [2, 20]
x = 1.0
t = 0.5
dt = 0.005
""")
        out = tmp_path / "conv"
        code = main(["convergence", "--config", cfg, "--out", str(out)])
        table = np.loadtxt(out / "table.csv", delimiter=",", skiprows=1)
        assert table.shape == (2, 4)
        assert code == 0  # KS shrinks decisively from N=2 to N=20

    def test_compare_coupling(self, tmp_path):
        cfg = write(tmp_path, "cmp.toml", """
[experiment]
model = "compare"
master_seed = 3
replicates = 500

[interaction]
kind = "zero"

[renormalized]
x = 0.5
y = 1.0
N = 10
t_max = 0.5

[compare]
pairing = "coupling"
ks_threshold = 0.12
""")
        out = tmp_path / "cmp"
        assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
        rep = json.loads((out / "comparison.json").read_text())
        assert rep["verdict"] == "Pass"

    def test_ray_knight_run(self, tmp_path):
        cfg = write(tmp_path, "rk.toml", """
[experiment]
model = "rayknight"
master_seed = 21

[interaction]
kind = "zero"

[rayknight]
x_targets = [0.5]
ds = 0.001
dh = 0.05
s_cap_steps = 2000000
""")
        out = tmp_path / "rk"
        assert main(["ray-knight", "--config", cfg, "--out", str(out)]) == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["calibration_constant"] == 2.0
        assert main(["emit-plots", "--out", str(out)]) == 0
        assert (out / "plot_field_vs_diffusion.csv").exists()

    def test_seed_and_replicates_overrides(self, tmp_path):
        cfg = write(tmp_path, "c.toml", CLASSIFY_TOML)
        out = tmp_path / "ovr"
        assert main(["classify", "--config", cfg, "--out", str(out),
                     "--seed", "7", "--replicates-override", "3"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["master_seed"] == 7
        assert manifest["replicates"] == 3


class TestDeterminism:
    def test_sde_ensemble_rerun_is_byte_identical(self, tmp_path):
        cfg = write(tmp_path, "d.toml", """
[experiment]
model = "diffusion"
master_seed = 77
replicates = 200

[interaction]
kind = "logistic"
theta = 1.0
gamma = 1.0

[diffusion]
x = 1.0
t_max = 0.5
dt = 0.001
""")
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["simulate-sde", "--config", cfg, "--out", str(out)]) == 0
            outs.append(out)
        for fname in ("trajectory.csv", "ensemble.csv"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
