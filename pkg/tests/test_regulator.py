import numpy as np
import pytest

from noreg import Exosystem, feedforward_gain, solve_regulator
from noreg.errors import DimensionMismatch, RegulatorInfeasible
from noreg import mupal

from conftest import make_plant


@pytest.fixture
def aircraft():
    return mupal.aircraft_plant(informed=True)


@pytest.fixture
def exo():
    return Exosystem(S=mupal.S_EXO, w0=mupal.W0_EXO)


class TestSolve:
    def test_homogeneous(self, aircraft, exo):
        import dataclasses

        plant = dataclasses.replace(
            aircraft, E=np.zeros_like(aircraft.E), He=np.zeros_like(aircraft.He),
        )
        sol = solve_regulator(plant, exo)
        assert np.abs(sol.Pi).max() < 1e-10
        assert np.abs(sol.Gamma).max() < 1e-10

    def test_reference_aircraft_reproduces_steady_state(self, aircraft, exo):
        sol = solve_regulator(aircraft, exo)
        assert np.abs(sol.Pi - mupal.PI_STEADY).max() < 5e-3
        assert np.abs(sol.Gamma - mupal.GAMMA_STEADY).max() < 5e-3
        assert sol.residual_state <= 1e-10
        assert sol.residual_output <= 1e-10
        assert sol.unique

    def test_scalar_plant_by_hand(self):
        # 0 = -Pi + Gamma + 1 together with Pi - 1 = 0 gives Pi = 1, Gamma = 0
        plant = make_plant([[-1.0]], [[1.0]], e=[[1.0]], cy=[[1.0]], he=[[-1.0]])
        sol = solve_regulator(plant, Exosystem(S=[[0.0]], w0=[0.0]))
        assert abs(sol.Pi[0, 0] - 1.0) < 1e-12
        assert abs(sol.Gamma[0, 0]) < 1e-12

    def test_residual_invariant(self, aircraft, exo):
        sol = solve_regulator(aircraft, exo)
        scale = 1.0 + max(np.abs(m).max() for m in
                          (aircraft.A, aircraft.B, aircraft.E, aircraft.Ce,
                           aircraft.De, aircraft.He, exo.S))
        assert sol.residual_state <= 1e-8 * scale
        assert sol.residual_output <= 1e-8 * scale

    def test_inconsistent_raises(self):
        # zero dynamics cannot absorb a direct disturbance feed
        plant = make_plant([[0.0]], [[0.0]], e=[[1.0]], cy=[[0.0]], he=[[0.0]])
        with pytest.raises(RegulatorInfeasible):
            solve_regulator(plant, Exosystem(S=[[0.0]], w0=[0.0]))

    def test_consistent_rank_deficient_min_norm(self):
        # Gamma is pinned by the output equation, Pi is free: minimum norm -> 0
        plant = make_plant([[0.0]], [[1.0]], e=[[0.0]], cy=[[0.0]], de=[[1.0]], he=[[0.0]])
        sol = solve_regulator(plant, Exosystem(S=[[0.0]], w0=[0.0]))
        assert not sol.unique
        assert abs(sol.Pi[0, 0]) < 1e-12
        assert abs(sol.Gamma[0, 0]) < 1e-12

    def test_uniqueness_matches_zero_separation(self, aircraft, exo):
        # regulated-channel zeros and exosystem spectrum are disjoint here
        sol = solve_regulator(aircraft, exo)
        assert sol.unique


class TestFeedforward:
    def test_zero_feedback(self, aircraft, exo):
        sol = solve_regulator(aircraft, exo)
        g = feedforward_gain(sol, np.zeros((2, 6)))
        assert np.array_equal(g, sol.Gamma)

    def test_zero_steady_state(self):
        plant = make_plant([[-1.0]], [[1.0]])
        sol = solve_regulator(plant, Exosystem(S=[[0.0]], w0=[0.0]))
        g = feedforward_gain(sol, np.array([[2.0]]))
        assert np.array_equal(g, sol.Gamma)

    def test_round_trip(self, aircraft, exo):
        rng = np.random.default_rng(17)
        sol = solve_regulator(aircraft, exo)
        f = rng.normal(size=(2, 6))
        g = feedforward_gain(sol, f)
        assert np.abs(sol.Gamma - (g + f @ sol.Pi)).max() < 1e-10

    def test_dimension_check(self, aircraft, exo):
        sol = solve_regulator(aircraft, exo)
        with pytest.raises(DimensionMismatch):
            feedforward_gain(sol, np.zeros((2, 5)))
