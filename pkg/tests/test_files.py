import json

import numpy as np
import pytest

from noreg.errors import ScenarioFormatError
from noreg.files import (
    gains_to_dict,
    load_gains,
    load_scenario,
    save_gains,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from noreg import mupal

from conftest import random_passing_scenario


class TestScenarioRoundTrip:
    def test_reference_scenario(self, tmp_path, mupal_scenario):
        path = tmp_path / "scenario.json"
        save_scenario(mupal_scenario, path)
        loaded = load_scenario(path)
        assert scenario_to_dict(loaded) == scenario_to_dict(mupal_scenario)
        for a, b in zip(loaded.x0, mupal_scenario.x0):
            assert np.array_equal(a, b)
        assert np.array_equal(loaded.agents[0].E, mupal_scenario.agents[0].E)

    def test_random_scenario(self, tmp_path):
        rng = np.random.default_rng(34)
        scenario = random_passing_scenario(rng)
        path = tmp_path / "scenario.json"
        save_scenario(scenario, path)
        assert scenario_to_dict(load_scenario(path)) == scenario_to_dict(scenario)

    def test_explicit_estimator_round_trip(self, tmp_path, mupal_scenario):
        from noreg import EstimatorInit

        rng = np.random.default_rng(35)
        xi = tuple(rng.normal(size=6) for _ in range(4))
        eta = tuple(rng.normal(size=5) for _ in range(4))
        scenario = mupal_scenario.with_estimator_init(
            EstimatorInit(kind="explicit", xi=xi, eta=eta)
        )
        path = tmp_path / "scenario.json"
        save_scenario(scenario, path)
        loaded = load_scenario(path)
        for a, b in zip(loaded.estimator_init.xi, xi):
            assert np.array_equal(a, b)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ScenarioFormatError):
            load_scenario(path)

    def test_missing_keys(self):
        with pytest.raises(ScenarioFormatError):
            scenario_from_dict({"agents": []})

    def test_invalid_structure_reported_as_format_error(self, mupal_scenario):
        doc = scenario_to_dict(mupal_scenario)
        doc["informed"] = 9
        with pytest.raises(ScenarioFormatError):
            scenario_from_dict(doc)


class TestGainsRoundTrip:
    def test_bit_identical(self, tmp_path, mupal_scenario, mupal_design):
        gains = mupal_design.gains
        path = tmp_path / "gains.json"
        save_gains(gains, path)
        loaded = load_gains(path)
        assert gains_to_dict(loaded) == gains_to_dict(gains)
        for a, b in zip(loaded.agents, gains.agents):
            assert np.array_equal(a.F, b.F)
            assert np.array_equal(a.G, b.G)
            if b.informed:
                assert np.array_equal(a.L1, b.L1)
                assert np.array_equal(a.L2, b.L2)
            else:
                assert np.array_equal(a.L, b.L)
        assert loaded.gamma == gains.gamma
        assert loaded.lambda0 == gains.lambda0
        assert loaded.mu0 == gains.mu0

    def test_malformed_gains(self, tmp_path):
        path = tmp_path / "gains.json"
        path.write_text(json.dumps({"gamma": 1.0}))
        with pytest.raises(ScenarioFormatError):
            load_gains(path)


class TestSchemaShape:
    def test_documented_keys_present(self, mupal_scenario):
        doc = scenario_to_dict(mupal_scenario)
        assert set(doc) == {
            "agents", "exosystem", "graph", "informed", "x0",
            "estimator_init", "synthesis",
        }
        assert set(doc["agents"][0]) == {"A", "B", "E", "Cy", "Dy", "Hy", "Ce", "De", "He"}
        assert set(doc["exosystem"]) == {"S", "w0"}
        assert set(doc["graph"]) == {"nodes", "edges"}
        assert doc["graph"]["nodes"] == 5
        assert doc["informed"] == 1
