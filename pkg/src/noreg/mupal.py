"""Bundled demo: four networked MuPAL-alpha research aircraft.

Four identical aircraft track a commanded sideways velocity and roll
angle generated, together with roll-channel sensor noise, by a
five-state marginally stable exosystem.  Aircraft 1 measures the
exosystem directly (informed); aircraft 2-4 learn it over the network.
Regulated outputs are the two tracking errors per aircraft.

The disturbance input matrix is recovered from the known steady-state
solution (PI_STEADY, GAMMA_STEADY) of the regulator equations, which
makes those matrices exact fixed points of the solver up to their
four-decimal rounding.
"""

from __future__ import annotations

import numpy as np

from .graph import Digraph
from .model import AgentPlant, EstimatorInit, Exosystem, Scenario, SynthesisOptions

A_AIRCRAFT = np.array([
    [-0.178,  6.079,  9.763, -65.623,   0.0,    2.890],
    [-0.057, -3.810,  0.0,     1.343, -10.750,  1.187],
    [ 0.0,    1.000,  0.0,     0.094,   0.0,    0.0],
    [ 0.025, -0.062,  0.0,    -0.475,   0.345, -2.220],
    [ 0.0,    0.0,    0.0,     0.0,   -11.111,  0.0],
    [ 0.0,    0.0,    0.0,     0.0,     0.0,  -11.111],
])

B_AIRCRAFT = np.array([
    [ 0.0,    -2.8900],
    [10.7500, -1.1870],
    [ 0.0,     0.0],
    [-0.3450,  2.2200],
    [22.2222,  0.0],
    [ 0.0,    22.2222],
])

C_MEASURED = np.array([
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
])

H_ERROR = np.array([
    [-1.0, 0.0,  0.0, 0.0, 0.0],
    [ 0.0, 0.0, -1.0, 0.0, 0.0],
])

H_MEASURED_INFORMED = np.array([
    [1.0, -1.0, 0.0, 0.0, 0.0],
    [1.0, -1.0, 0.0, 0.0, 0.0],
])

S_EXO = np.array([
    [0.0, 0.0,      0.0, 0.0,  0.0],
    [0.0, 0.0, -2.0 / 3.0, 0.0, -0.1],
    [0.0, 0.25,     0.0, 0.0,  0.0],
    [0.0, 0.0,      0.0, 0.0,  1.0],
    [0.0, 0.0,      0.0, -1.0, 0.0],
])

#: Known steady-state solution of the regulator equations (4-decimal print).
GAMMA_STEADY = np.array([
    [-0.0045, -0.0877,  0.0472, -0.0145,  0.0327],
    [ 0.0112, -0.0427, -0.0139, -0.0065,  0.0100],
])

PI_STEADY = np.array([
    [ 1.0000,  0.0,     0.0,     0.0,     0.0],
    [ 0.0002,  0.2480, -0.0138,  0.0000, -0.0866],
    [ 0.0,     0.0,     1.0000,  0.0,     0.0],
    [-0.0022,  0.0211,  0.1467, -0.0002, -0.0076],
    [-0.0089, -0.1773,  0.0837, -0.0231,  0.0659],
    [ 0.0223, -0.0847, -0.0329, -0.011,   0.0203],
])

#: Disturbance input recovered from the steady-state identity
#: E = Pi S - A Pi - B Gamma.
E_AIRCRAFT = PI_STEADY @ S_EXO - A_AIRCRAFT @ PI_STEADY - B_AIRCRAFT @ GAMMA_STEADY

X0_AIRCRAFT = (
    np.array([-1.0,  0.0, -1.0, 1.0,  0.0,  0.0]),
    np.array([ 0.0, -1.0, -1.0, 0.0, -1.0, -1.0]),
    np.array([-1.0,  0.0, -1.0, 1.0,  0.0, -1.0]),
    np.array([-1.0,  1.0, -1.0, 1.0,  0.0, -1.0]),
)

W0_EXO = np.array([1.0, 1.0, 0.0, 0.0, 0.0])

#: Network: exosystem -> 1, 1 -> 2, 2 -> 3, 2 -> 4, 3 -> 4, 4 -> 1.
NETWORK_EDGES = (
    (0, 1, 2.0),
    (4, 1, 1.0),
    (1, 2, 2.0),
    (2, 3, 2.0),
    (2, 4, 0.7),
    (3, 4, 0.5),
)

LAPLACIAN_EXPECTED = np.array([
    [ 0.0,  0.0,  0.0,  0.0,  0.0],
    [-2.0,  3.0,  0.0,  0.0, -1.0],
    [ 0.0, -2.0,  2.0,  0.0,  0.0],
    [ 0.0,  0.0, -2.0,  2.0,  0.0],
    [ 0.0,  0.0, -0.7, -0.5,  1.2],
])

ZEROS_EXPECTED = (-50.54, 11.11, 11.11)

INTERVAL_DEFAULT = (-2.5, -0.3)
MU0_DEFAULT = -12.0
GAMMA_MARGIN_DEFAULT = 2.4  # reproduces the reference coupling gain 24


def aircraft_plant(informed: bool) -> AgentPlant:
    q = S_EXO.shape[0]
    p, m = 2, 2
    return AgentPlant(
        A=A_AIRCRAFT,
        B=B_AIRCRAFT,
        E=E_AIRCRAFT,
        Cy=C_MEASURED,
        Dy=np.zeros((p, m)),
        Hy=H_MEASURED_INFORMED if informed else np.zeros((p, q)),
        Ce=C_MEASURED,
        De=np.zeros((2, m)),
        He=H_ERROR,
    )


def mupal_scenario(
    seed: int = 0,
    estimator_factor: float = 1.01,
    mu0: float | None = MU0_DEFAULT,
    gamma_margin: float = GAMMA_MARGIN_DEFAULT,
    interval=INTERVAL_DEFAULT,
    max_candidates: int = 500,
) -> Scenario:
    """The four-aircraft scenario; defaults mirror the reference setup."""
    agents = tuple(aircraft_plant(i == 0) for i in range(4))
    graph = Digraph(node_count=5, edges=NETWORK_EDGES)
    if estimator_factor == 1.0:
        policy = EstimatorInit(kind="exact")
    else:
        policy = EstimatorInit(kind="relative_perturbation", factor=estimator_factor)
    return Scenario(
        agents=agents,
        exosystem=Exosystem(S=S_EXO, w0=W0_EXO),
        graph=graph,
        informed_count=1,
        x0=X0_AIRCRAFT,
        estimator_init=policy,
        synthesis=SynthesisOptions(
            interval=tuple(interval),
            mu0=mu0,
            gamma_margin=gamma_margin,
            seed=seed,
            max_candidates=max_candidates,
        ),
    )
