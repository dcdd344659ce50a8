"""Data model: agent plants, exosystem, scenarios, and structural checks.

Each agent is a nine-matrix LTI plant

    dx/dt = A x + B u + E w
    y     = Cy x + Dy u + Hy w      (measured output)
    e     = Ce x + De u + He w      (regulated output)

driven by the autonomous exosystem dw/dt = S w.  Agents 1..l are
"informed" (Hy nonzero, they sense the exosystem directly); the rest are
uninformed (Hy identically zero) and must rely on the network.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as _sla

from .errors import DegeneratePencil, DimensionMismatch, RegulatorInfeasible
from .graph import Digraph, rooted_spanning_tree_exists
from .numerics import as_matrix, matrix_rank, spectrum

#: Boundary tolerance for "no eigenvalue with negative real part" style
#: tests; the reference exosystem has purely imaginary spectrum and must
#: pass despite rounding.
STABILITY_TOL = 1e-9


@dataclass(frozen=True)
class AgentPlant:
    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    Cy: np.ndarray
    Dy: np.ndarray
    Hy: np.ndarray
    Ce: np.ndarray
    De: np.ndarray
    He: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "E", "Cy", "Dy", "Hy", "Ce", "De", "He"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        n, m, q, p, rho = self.n, self.m, self.q, self.p, self.rho
        expect = {
            "A": (n, n), "B": (n, m), "E": (n, q),
            "Cy": (p, n), "Dy": (p, m), "Hy": (p, q),
            "Ce": (rho, n), "De": (rho, m), "He": (rho, q),
        }
        for name, shape in expect.items():
            got = getattr(self, name).shape
            if got != shape:
                raise DimensionMismatch(f"{name} has shape {got}, expected {shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def q(self) -> int:
        return self.E.shape[1]

    @property
    def p(self) -> int:
        return self.Cy.shape[0]

    @property
    def rho(self) -> int:
        return self.Ce.shape[0]

    def is_informed(self) -> bool:
        return bool(np.any(self.Hy != 0.0))


@dataclass(frozen=True)
class Exosystem:
    S: np.ndarray
    w0: np.ndarray

    def __post_init__(self):
        s = as_matrix(self.S, "S")
        if s.shape[0] != s.shape[1]:
            raise DimensionMismatch(f"S must be square, got {s.shape}")
        w = np.asarray(self.w0, dtype=float).reshape(-1)
        if w.shape[0] != s.shape[0]:
            raise DimensionMismatch("w0 length must match S")
        if not np.all(np.isfinite(w)):
            raise ValueError("w0 contains non-finite entries")
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "w0", w)

    @property
    def q(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True)
class EstimatorInit:
    """Initialization policy for the per-agent estimator states.

    kind     -- "exact" | "relative_perturbation" | "explicit"
    factor   -- scale applied to the true initial values (perturbation)
    xi, eta  -- explicit per-agent vectors (explicit policy only)
    """

    kind: str = "exact"
    factor: float = 1.0
    xi: tuple = ()
    eta: tuple = ()

    def __post_init__(self):
        if self.kind not in ("exact", "relative_perturbation", "explicit"):
            raise ValueError(f"unknown estimator init policy {self.kind!r}")
        object.__setattr__(self, "xi", tuple(np.asarray(v, float).reshape(-1) for v in self.xi))
        object.__setattr__(self, "eta", tuple(np.asarray(v, float).reshape(-1) for v in self.eta))


@dataclass(frozen=True)
class SynthesisOptions:
    interval: tuple = (-2.5, -0.3)
    mu0: float | None = None
    gamma_margin: float = 2.0
    seed: int = 0
    max_candidates: int = 500
    overshoot_flags: tuple | None = None  # per agent, per regulated output

    def __post_init__(self):
        a, b = float(self.interval[0]), float(self.interval[1])
        if not (a < b < 0):
            raise ValueError(f"interval must satisfy a < b < 0, got ({a}, {b})")
        object.__setattr__(self, "interval", (a, b))
        if self.mu0 is not None and float(self.mu0) >= 0:
            raise ValueError("mu0 must be negative")
        if self.gamma_margin < 1:
            raise ValueError("gamma_margin must be at least 1")
        if self.overshoot_flags is not None:
            object.__setattr__(
                self, "overshoot_flags",
                tuple(tuple(bool(x) for x in row) for row in self.overshoot_flags),
            )

    def flags_for(self, scenario: "Scenario") -> tuple:
        if self.overshoot_flags is not None:
            return self.overshoot_flags
        return tuple(tuple(True for _ in range(ag.rho)) for ag in scenario.agents)


@dataclass(frozen=True)
class Scenario:
    agents: tuple
    exosystem: Exosystem
    graph: Digraph
    informed_count: int
    x0: tuple
    estimator_init: EstimatorInit = field(default_factory=EstimatorInit)
    synthesis: SynthesisOptions = field(default_factory=SynthesisOptions)

    def __post_init__(self):
        agents = tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        x0 = tuple(np.asarray(v, float).reshape(-1) for v in self.x0)
        object.__setattr__(self, "x0", x0)
        n_agents = len(agents)
        l = self.informed_count
        if n_agents == 0:
            raise ValueError("scenario needs at least one agent")
        if self.graph.agent_count != n_agents:
            raise DimensionMismatch(
                f"graph has {self.graph.agent_count} agents, scenario has {n_agents}"
            )
        if not 0 <= l <= n_agents:
            raise ValueError(f"informed count {l} out of range")
        if len(x0) != n_agents:
            raise DimensionMismatch("one initial state vector required per agent")
        q = self.exosystem.q
        for i, (ag, x) in enumerate(zip(agents, x0), start=1):
            if ag.q != q:
                raise DimensionMismatch(f"agent {i} expects exosystem dimension {ag.q}, got {q}")
            if x.shape[0] != ag.n:
                raise DimensionMismatch(f"x0[{i}] has length {x.shape[0]}, expected {ag.n}")
            informed = i <= l
            if informed and not ag.is_informed():
                raise ValueError(f"agent {i} is in the informed group but Hy is zero")
            if not informed and ag.is_informed():
                raise ValueError(f"agent {i} is uninformed but has nonzero Hy")
        for tail, head, _ in self.graph.edges:
            if tail == 0 and head > l:
                raise ValueError(
                    f"edge (0,{head}) feeds an uninformed agent; leader edges must "
                    f"head into the informed group 1..{l}"
                )

    @property
    def agent_count(self) -> int:
        return len(self.agents)

    def with_estimator_init(self, policy: EstimatorInit) -> "Scenario":
        return replace(self, estimator_init=policy)


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _pbh_stabilizable(a, b, tol=STABILITY_TOL):
    """Rank test [A - lam I, B] at every eigenvalue with Re >= -tol."""
    n = a.shape[0]
    for lam in spectrum(a):
        if lam.real >= -tol:
            m = np.hstack([a - lam * np.eye(n), b]).astype(complex)
            if matrix_rank(m) < n:
                return False, lam
    return True, None


def _pbh_detectable(c, a, tol=STABILITY_TOL):
    return _pbh_stabilizable(a.conj().T, c.conj().T, tol)


def check_assumptions(scenario: Scenario) -> AssumptionReport:
    """Verify the six structural conditions the synthesis relies on.

    A.1 exosystem has no eigenvalue with negative real part;
    A.2 every (A_i, B_i) stabilizable;
    A.3 the steady-state matrix equations are solvable for every agent;
    A.4 composite pair ([Cy Hy], [[A, E], [0, S]]) detectable (informed);
    A.5 (Cy_i, A_i) detectable (uninformed);
    A.6 the digraph has a spanning tree rooted at the exosystem node.
    """
    from .regulator import solve_regulator  # local import avoids a cycle

    checks = []
    s_eigs = spectrum(scenario.exosystem.S)
    bad = [z for z in s_eigs if z.real < -STABILITY_TOL]
    checks.append(AssumptionCheck(
        "A.1", not bad,
        "" if not bad else f"exosystem eigenvalue {bad[0]:.6g} has negative real part",
    ))

    ok_all, det = True, ""
    for i, ag in enumerate(scenario.agents, start=1):
        ok, lam = _pbh_stabilizable(ag.A, ag.B)
        if not ok:
            ok_all, det = False, f"agent {i}: uncontrollable unstable mode at {lam:.6g}"
            break
    checks.append(AssumptionCheck("A.2", ok_all, det))

    ok_all, det = True, ""
    for i, ag in enumerate(scenario.agents, start=1):
        try:
            solve_regulator(ag, scenario.exosystem)
        except RegulatorInfeasible as exc:
            ok_all, det = False, f"agent {i}: {exc}"
            break
    checks.append(AssumptionCheck("A.3", ok_all, det))

    l = scenario.informed_count
    q = scenario.exosystem.q
    ok_all, det = True, ""
    for i, ag in enumerate(scenario.agents[:l], start=1):
        a_comp = np.block([
            [ag.A, ag.E],
            [np.zeros((q, ag.n)), scenario.exosystem.S],
        ])
        c_comp = np.hstack([ag.Cy, ag.Hy])
        ok, lam = _pbh_detectable(c_comp, a_comp)
        if not ok:
            ok_all, det = False, f"agent {i}: undetectable composite mode at {lam:.6g}"
            break
    checks.append(AssumptionCheck("A.4", ok_all, det))

    ok_all, det = True, ""
    for i, ag in enumerate(scenario.agents[l:], start=l + 1):
        ok, lam = _pbh_detectable(ag.Cy, ag.A)
        if not ok:
            ok_all, det = False, f"agent {i}: undetectable mode at {lam:.6g}"
            break
    checks.append(AssumptionCheck("A.5", ok_all, det))

    reachable = rooted_spanning_tree_exists(scenario.graph)
    checks.append(AssumptionCheck(
        "A.6", reachable,
        "" if reachable else "not every agent is reachable from the exosystem node",
    ))
    return AssumptionReport(tuple(checks))


def invariant_zeros(a, b, c, d) -> np.ndarray:
    """Invariant zeros: frequencies where the system pencil drops rank.

    Computed as the finite generalized eigenvalues of
    ``[[A, B], [C, D]] - lambda [[I, 0], [0, 0]]`` via the QZ algorithm.
    The pencil must be square (inputs = outputs); an identically
    rank-deficient pencil is reported as degenerate.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    c = as_matrix(c, "C")
    d = as_matrix(d, "D")
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionMismatch("A must be square")
    if b.shape[0] != n or c.shape[1] != n or d.shape != (c.shape[0], b.shape[1]):
        raise DimensionMismatch("inconsistent system matrices")
    if c.shape[0] != b.shape[1]:
        raise DimensionMismatch(
            "zeros are computed for square pencils only (inputs = outputs); "
            f"got {b.shape[1]} inputs, {c.shape[0]} outputs"
        )
    pencil = np.block([[a, b], [c, d]])
    weight = np.zeros_like(pencil)
    weight[:n, :n] = np.eye(n)
    # a singular pencil is rank deficient at (almost) every frequency;
    # probe two fixed generic points before trusting the QZ sweep
    full = pencil.shape[0]
    probes = (0.7548776662 + 1.3247179572j, -1.6180339887 + 0.5772156649j)
    if all(matrix_rank(pencil - lam * weight) < full for lam in probes):
        raise DegeneratePencil("system pencil is rank deficient at every frequency")
    alpha, beta = _sla.eig(pencil, weight, right=False, homogeneous_eigvals=True)
    finite = np.abs(beta) > 1e-10
    zeros = alpha[finite] / beta[finite]
    return zeros[np.argsort(zeros.real + 1e-9 * zeros.imag)]


@dataclass(frozen=True)
class FeasibilityReport:
    """Advisory search-difficulty heuristic: states - 3*channels >= slow zeros."""

    n: int
    p: int
    z: int | None
    satisfied: bool | None
    note: str


def feasibility_heuristic(plant: AgentPlant) -> FeasibilityReport:
    """Advisory indicator of how likely the eigenstructure search succeeds.

    Reports n (states), p (input/output channel count) and z (number of
    zeros with negative real part) together with the raw verdict of
    ``n - 3p >= z``.  Never blocks synthesis.
    """
    n = plant.n
    p = plant.m
    if plant.m != plant.p:
        return FeasibilityReport(
            n=n, p=p, z=None, satisfied=None,
            note="heuristic undefined for plants with inputs != measured outputs (advisory)",
        )
    try:
        zs = invariant_zeros(plant.A, plant.B, plant.Cy, np.zeros((plant.p, plant.m)))
    except DegeneratePencil:
        return FeasibilityReport(
            n=n, p=p, z=None, satisfied=None,
            note="degenerate pencil; zero count unavailable (advisory)",
        )
    z = int(np.sum(zs.real < 0))
    ok = (n - 3 * p) >= z
    note = "heuristic met (advisory)" if ok else "heuristic not met (advisory)"
    return FeasibilityReport(n=n, p=p, z=z, satisfied=ok, note=note)
