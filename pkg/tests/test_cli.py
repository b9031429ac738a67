import json
from pathlib import Path

import pandas as pd
import pytest

import cli
from data.loader import ConfigLoader
from data.schema import dumps
from utils.export import config_hash

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

LINEAR = {
    "domain": {"n_grid": 8},
    "drift": {"psi": {"terms": [[1.0, 1.0]]}},
    "noise": {"sigma0": 0.5, "beta": 0.0, "n_modes": 1},
    "stepper": {"dt": 1e-3, "T": 0.5, "n_modes": 1},
    "run": {"ensemble_size": 100, "master_seed": 3, "save_every": 10},
    "initial": {"shape": "eigenmode", "k": 1, "amplitude": 1.0},
    "initial_alt": {"shape": "eigenmode", "k": 1, "amplitude": -1.0},
    "verify": {"declared_c": -19.5},
}

PME = {
    "domain": {"n_grid": 32},
    "drift": {"psi": {"terms": [[1.0, 2.0]]}},
    "noise": {"sigma0": 0.1, "beta": 2.0, "n_modes": 6},
    "stepper": {"dt": 2e-3, "T": 0.02, "n_modes": 6},
    "run": {"ensemble_size": 4},
    "initial": {"shape": "bump", "center": 0.5, "width": 0.3},
    "verify": {"check_samples": 50},
}


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="exp.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return write


def with_section(base, **sections):
    data = json.loads(json.dumps(base))
    for key, value in sections.items():
        data[key] = {**data.get(key, {}), **value}
    return data


class TestSimulate:
    def test_zero_horizon_single_row(self, write_config, tmp_path):
        path = write_config(with_section(PME, stepper={"T": 0.0}))
        assert cli.run("simulate", path, tmp_path / "out") == cli.EXIT_PASS
        table = pd.read_csv(tmp_path / "out" / "trajectory.csv")
        assert len(table) == 1 and table["t"].iloc[0] == 0.0

    def test_outputs_are_byte_identical(self, write_config, tmp_path):
        path = write_config(PME)
        cli.run("simulate", path, tmp_path / "a", threads=1)
        cli.run("simulate", path, tmp_path / "b", threads=2)
        for name in ("trajectory.csv", "stats.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert b"\r\n" not in (tmp_path / "a" / "stats.csv").read_bytes()

    def test_manifest(self, write_config, tmp_path):
        path = write_config(PME)
        assert cli.run("simulate", path, tmp_path / "out", seed=11) == cli.EXIT_PASS
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["master_seed"] == 11
        assert manifest["subcommand"] == "simulate"
        assert manifest["outputs"] == ["stats.csv", "trajectory.csv"]
        assert manifest["config_sha256"] == config_hash(dumps(ConfigLoader.from_path(path)))

    def test_main_entry_point(self, write_config, tmp_path):
        path = write_config(with_section(PME, run={"ensemble_size": 1}))
        assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
        assert not (tmp_path / "o" / "stats.csv").exists()


class TestExitCodes:
    def test_unknown_key(self, write_config, tmp_path, capsys):
        path = write_config(with_section(PME, noise={"sigma": 1.0}))
        assert cli.run("simulate", path, tmp_path / "out") == cli.EXIT_CONFIG
        assert "noise.sigma" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_missing_file_and_negative_seed(self, write_config, tmp_path):
        assert cli.run("simulate", tmp_path / "nada.json", tmp_path / "out") == cli.EXIT_CONFIG
        assert cli.run("simulate", write_config(PME), tmp_path / "out", seed=-1) == cli.EXIT_CONFIG

    def test_contraction_needs_second_start(self, write_config, tmp_path):
        path = write_config(PME)
        assert cli.run("contraction", path, tmp_path / "out") == cli.EXIT_CONFIG

    def test_stability_violation(self, write_config, tmp_path):
        path = write_config(with_section(PME, stepper={"dt": 1e-2, "T": 0.02, "n_modes": 32}))
        assert cli.run("simulate", path, tmp_path / "out") == cli.EXIT_NUMERIC

    def test_fractional_fast_diffusion_is_reported(self, write_config, tmp_path, capsys):
        data = with_section(PME, domain={"alpha": 0.5}, drift={"psi": {"terms": [[1.0, 0.5]]}},
                            stepper={"scheme": "semi_implicit"}, run={"ensemble_size": 1},
                            initial={"shape": "zero"})
        assert cli.run("simulate", write_config(data), tmp_path / "out") == cli.EXIT_NUMERIC
        assert "difusión rápida fraccionaria no está soportada" in capsys.readouterr().err

    def test_precondition_failure(self, write_config, tmp_path):
        path = write_config(with_section(LINEAR, run={"ensemble_size": 10}))
        assert cli.run("contraction", path, tmp_path / "out") == cli.EXIT_FAIL


class TestVerificationCommands:
    def test_contraction_linear(self, write_config, tmp_path):
        assert cli.run("contraction", write_config(LINEAR), tmp_path / "out") == cli.EXIT_PASS
        table = pd.read_csv(tmp_path / "out" / "contraction.csv")
        assert {"t", "diff_h_norm_sq_mean", "used"} <= set(table.columns)

    def test_false_contraction_claim(self, write_config, tmp_path):
        path = write_config(with_section(LINEAR, verify={"declared_c": -40.0}))
        assert cli.run("contraction", path, tmp_path / "out") == cli.EXIT_FAIL

    def test_ou_oracle(self, write_config, tmp_path):
        data = with_section(LINEAR, noise={"sigma0": 1.0, "n_modes": 2},
                            stepper={"n_modes": 2}, run={"ensemble_size": 2000},
                            verify={"check_times": [0.1, 0.5], "n_check_modes": 2})
        assert cli.run("ou-oracle", write_config(data), tmp_path / "out") == cli.EXIT_PASS
        assert len(pd.read_csv(tmp_path / "out" / "ou_oracle.csv")) == 4

    def test_deterministic_ito_check(self, write_config, tmp_path):
        data = with_section(PME, noise={"sigma0": 0.0}, stepper={"dt": 1e-4, "T": 0.01})
        assert cli.run("ito-check", write_config(data), tmp_path / "out") == cli.EXIT_PASS
        ledger = pd.read_csv(tmp_path / "out" / "ito_ledger.csv")
        assert len(ledger) == 101

    def test_extinction_of_zero_start(self, write_config, tmp_path, capsys):
        data = with_section(PME, initial={"shape": "zero"})
        assert cli.run("extinction", write_config(data), tmp_path / "out") == cli.EXIT_PASS
        assert "t=0" in capsys.readouterr().out

    def test_check_conditions_passes_for_porous_medium(self, tmp_path, capsys):
        code = cli.run("check-conditions", CONFIGS / "pme.json", tmp_path / "out")
        assert code == cli.EXIT_PASS
        table = pd.read_csv(tmp_path / "out" / "conditions.csv")
        assert table["condition"].tolist() == ["A1", "K", "H"]
        assert table["passed"].all()
        out = capsys.readouterr().out
        for name in ("A1", "K", "H"):
            assert f"PASS {name} " in out
