import numpy as np
import pytest

from noreg import (
    AgentPlant,
    Digraph,
    EstimatorInit,
    Exosystem,
    Scenario,
    SynthesisOptions,
    check_assumptions,
    design_controller,
)
from noreg import mupal


@pytest.fixture(scope="session")
def mupal_scenario():
    return mupal.mupal_scenario()


@pytest.fixture(scope="session")
def mupal_design(mupal_scenario):
    """Verified demo design (mu0 = -12, gamma = 24); reused across tests."""
    return design_controller(mupal_scenario)


@pytest.fixture(scope="session")
def mupal_separation_setup():
    """Milder observer speed for the spectral-identity checks.

    At the demo's mu0 = -12 the informed observer needs gains around 1e6;
    storing A_cl entries like A + B F + L1 Cy then rounds at the 1e-10
    level, which the observer cluster's eigenvalue conditioning amplifies
    past 1e-5 no matter how the spectrum is computed.  mu0 = -4 keeps the
    identity decidable in double precision.
    """
    scenario = mupal.mupal_scenario(mu0=-4.0, gamma_margin=2.0)
    report = design_controller(scenario, verify=False)
    return scenario, report


def single_agent_scenario(plant, s=None, w0=None, x0=None, informed=True, **syn):
    """One-agent scenario wrapper for structural-check tests."""
    q = plant.q
    s = np.zeros((q, q)) if s is None else np.asarray(s, dtype=float)
    w0 = np.zeros(q) if w0 is None else np.asarray(w0, dtype=float)
    x0 = np.zeros(plant.n) if x0 is None else np.asarray(x0, dtype=float)
    edges = ((0, 1, 1.0),) if informed else ()
    return Scenario(
        agents=(plant,),
        exosystem=Exosystem(S=s, w0=w0),
        graph=Digraph(node_count=2, edges=edges),
        informed_count=1 if informed else 0,
        x0=(x0,),
        synthesis=SynthesisOptions(**syn) if syn else SynthesisOptions(),
    )


def make_plant(a, b, e=None, cy=None, dy=None, hy=None, ce=None, de=None, he=None, q=1):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n, m = b.shape
    cy = np.eye(n)[:1] if cy is None else np.atleast_2d(np.asarray(cy, dtype=float))
    p = cy.shape[0]
    ce = cy if ce is None else np.atleast_2d(np.asarray(ce, dtype=float))
    rho = ce.shape[0]
    return AgentPlant(
        A=a,
        B=b,
        E=np.zeros((n, q)) if e is None else np.atleast_2d(np.asarray(e, dtype=float)),
        Cy=cy,
        Dy=np.zeros((p, m)) if dy is None else np.atleast_2d(np.asarray(dy, dtype=float)),
        Hy=(np.ones((p, q)) if hy is None else np.atleast_2d(np.asarray(hy, dtype=float))),
        Ce=ce,
        De=np.zeros((rho, m)) if de is None else np.atleast_2d(np.asarray(de, dtype=float)),
        He=np.zeros((rho, q)) if he is None else np.atleast_2d(np.asarray(he, dtype=float)),
    )


def random_passing_scenario(rng, n_agents=None, informed=None):
    """Random scenario satisfying the structural assumptions.

    Agents are generically controllable/observable random plants; the
    exosystem spectrum sits on the imaginary axis; the graph is a chain
    rooted at the exosystem with occasional extra agent-to-agent edges.
    Overshoot flags are off (these scenarios exercise the gain pipeline
    and the closed-loop algebra, not the sign-constancy search).
    """
    while True:
        n_agents = n_agents or int(rng.integers(2, 4))
        informed = informed or 1
        q = int(rng.integers(1, 3))
        if q == 2:
            w = float(rng.uniform(0.3, 2.0))
            s = np.array([[0.0, w], [-w, 0.0]])
        else:
            s = np.zeros((1, 1))
        agents = []
        x0 = []
        for i in range(n_agents):
            n = int(rng.integers(2, 4))
            m = int(rng.integers(1, 3))
            rho = m  # square regulated channel keeps the steady-state equations generic
            a = rng.normal(0.0, 1.0, (n, n))
            b = rng.normal(0.0, 1.0, (n, m))
            e = rng.normal(0.0, 0.3, (n, q))
            p = int(rng.integers(1, n + 1))
            cy = rng.normal(0.0, 1.0, (p, n))
            hy = rng.normal(0.0, 1.0, (p, q)) if i < informed else np.zeros((p, q))
            ce = rng.normal(0.0, 1.0, (rho, n))
            agents.append(AgentPlant(
                A=a, B=b, E=e, Cy=cy, Dy=np.zeros((p, m)), Hy=hy,
                Ce=ce, De=np.zeros((rho, m)), He=rng.normal(0.0, 1.0, (rho, q)),
            ))
            x0.append(rng.normal(0.0, 1.0, n))
        edges = [(0, 1, float(rng.uniform(0.5, 2.0)))]
        for i in range(2, n_agents + 1):
            edges.append((i - 1, i, float(rng.uniform(0.5, 2.0))))
        if n_agents >= 3 and rng.random() < 0.5:
            edges.append((n_agents, 2, float(rng.uniform(0.2, 1.0))))
        flags = tuple(tuple(False for _ in range(ag.rho)) for ag in agents)
        scenario = Scenario(
            agents=tuple(agents),
            exosystem=Exosystem(S=s, w0=rng.normal(0.0, 1.0, q)),
            graph=Digraph(node_count=n_agents + 1, edges=tuple(edges)),
            informed_count=informed,
            x0=tuple(x0),
            estimator_init=EstimatorInit(kind="relative_perturbation", factor=1.01),
            synthesis=SynthesisOptions(overshoot_flags=flags),
        )
        if check_assumptions(scenario).all_passed:
            return scenario
