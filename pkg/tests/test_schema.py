import json
from pathlib import Path

import pytest

import config
from data.loader import ConfigLoader
from data.schema import (build_domain, build_drift, build_initial, build_noise, build_stepper,
                         dumps, loads, parse_config, resolve_seed)
from utils.exceptions import ConfigError

CONFIG_DIR = Path(__file__).resolve().parents[1] / config.CONFIG_DIR


def minimal(**sections):
    data = {"domain": {"n_grid": 16}, "stepper": {"dt": 1e-3, "T": 0.01, "n_modes": 4}}
    data.update(sections)
    return data


def key_path_of(data) -> str:
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    return info.value.key_path


class TestParsing:
    def test_minimal_defaults(self):
        cfg = parse_config(minimal())
        assert cfg.drift.mode == "A1"
        assert cfg.noise.sigma0 == 0.0
        assert cfg.run.ensemble_size == 2
        assert cfg.initial_alt is None

    def test_integers_promoted_to_float(self):
        cfg = parse_config(minimal(stepper={"dt": 1, "T": 0, "n_modes": 4}))
        assert isinstance(cfg.stepper.dt, float)

    def test_unknown_key_reports_path(self):
        assert key_path_of(minimal(noise={"sigma": 0.1})) == "noise.sigma"
        assert key_path_of(minimal(extra=1)) == "extra"

    def test_wrong_type_reports_path(self):
        assert key_path_of(minimal(domain={"n_grid": "16"})) == "domain.n_grid"
        assert key_path_of(minimal(domain={"n_grid": 16.0})) == "domain.n_grid"
        assert key_path_of(minimal(stepper={"dt": True, "T": 1.0, "n_modes": 4})) == "stepper.dt"

    def test_nested_tuple_paths(self):
        data = minimal(drift={"psi": {"terms": [[1.0, 2.0], [1.0]]}})
        assert key_path_of(data) == "drift.psi.terms[1]"

    def test_missing_required_key(self):
        data = minimal()
        del data["stepper"]["dt"]
        assert key_path_of(data) == "stepper.dt"

    def test_invalid_json(self):
        with pytest.raises(ConfigError) as info:
            loads("{\"domain\": ")
        assert info.value.key_path == "<json>"

    def test_canonical_dump_is_order_independent(self):
        a = parse_config(minimal(noise={"sigma0": 0.1, "beta": 2.0}))
        b = loads(json.dumps({"noise": {"beta": 2.0, "sigma0": 0.1},
                              "stepper": {"n_modes": 4, "T": 0.01, "dt": 1e-3},
                              "domain": {"n_grid": 16}}))
        assert dumps(a) == dumps(b)


class TestBuilders:
    @pytest.mark.parametrize("section, expected", [
        ({"domain": {"n_grid": 0}}, "domain"),
        ({"domain": {"n_grid": 16, "alpha": 0.0}}, "domain"),
        ({"stepper": {"dt": -1e-3, "T": 0.01, "n_modes": 4}}, "stepper"),
        ({"stepper": {"dt": 1e-3, "T": 0.01, "n_modes": 32}}, "stepper.n_modes"),
        ({"noise": {"sigma0": -0.1}}, "noise"),
        ({"noise": {"n_modes": 0}}, "noise.n_modes"),
        ({"drift": {"psi": {"terms": [[1.0, -1.0]]}}}, "drift.psi"),
        ({"drift": {"mode": "A3"}}, "drift"),
        ({"initial": {"shape": "triangle"}}, "initial.shape"),
        ({"initial": {"shape": "eigenmode", "k": 99}}, "initial.k"),
        ({"run": {"master_seed": -4}}, "run.master_seed"),
        ({"verify": {"eps": 0.0}}, "verify.eps"),
    ])
    def test_build_errors_become_config_errors(self, section, expected):
        data = minimal()
        for key, value in section.items():
            data[key] = {**data.get(key, {}), **value}
        assert key_path_of(data) == expected

    def test_a2_requires_exponents_at_least_one(self):
        data = minimal(drift={"mode": "A2", "psi": {"terms": [[1.0, 0.5]]}})
        assert key_path_of(data) == "drift"

    def test_compliant_phi_excludes_explicit_terms(self):
        data = minimal(drift={"mode": "A2", "psi": {"terms": [[1.0, 1.0]]},
                              "phi": {"compliant_eps": 0.5, "phi0_terms": [[0.1, 1.0]]}})
        assert key_path_of(data) == "drift.phi.compliant_eps"

    def test_objects_follow_sections(self):
        cfg = parse_config(minimal(noise={"sigma0": 0.2, "beta": 1.0, "n_modes": 3},
                                   run={"save_every": 5},
                                   drift={"psi": {"terms": [[2.0, 1.0]]}}))
        assert build_noise(cfg).n_modes == 3
        stepper = build_stepper(cfg, record_ito=True)
        assert stepper.save_every == 5 and stepper.record_ito
        assert build_drift(cfg).linear_rate == 2.0

    def test_random_initial_is_seeded(self):
        cfg = parse_config(minimal(initial={"shape": "random", "seed": 5}))
        dom = build_domain(cfg)
        a = build_initial(dom, cfg.initial)
        b = build_initial(dom, cfg.initial)
        assert (a.coefficients == b.coefficients).all()


class TestSeed:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv(config.SEED_ENV_VAR, "9")
        cfg = parse_config(minimal(run={"master_seed": 4}))
        assert resolve_seed(cfg, 1) == 1
        assert resolve_seed(cfg) == 4

    def test_environment_then_zero(self, monkeypatch):
        cfg = parse_config(minimal())
        monkeypatch.setenv(config.SEED_ENV_VAR, "9")
        assert resolve_seed(cfg) == 9
        monkeypatch.delenv(config.SEED_ENV_VAR)
        assert resolve_seed(cfg) == 0

    def test_bad_environment_seed(self, monkeypatch):
        monkeypatch.setenv(config.SEED_ENV_VAR, "abc")
        with pytest.raises(ConfigError):
            resolve_seed(parse_config(minimal()))


class TestLoader:
    def test_reference_configs_load(self):
        paths = ConfigLoader.reference_configs(CONFIG_DIR)
        assert len(paths) >= 8
        for path in paths:
            ConfigLoader.from_path(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            ConfigLoader.from_path(tmp_path / "nada.json")
        assert info.value.key_path == "<archivo>"
