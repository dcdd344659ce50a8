"""Steady-state (regulator) equations and the feedforward gain.

For each agent the pair

    Pi S = A Pi + B Gamma + E
    0    = Ce Pi + De Gamma + He

defines the steady-state manifold x = Pi w and input u = Gamma w on
which the regulated output vanishes.  Both equations are vectorized with
vec(A X B) = (B^T kron A) vec(X) into one linear system in
(vec Pi, vec Gamma) and solved directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RegulatorInfeasible
from .model import AgentPlant, Exosystem

#: Relative residual bound every returned solution satisfies.
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class RegulatorSolution:
    Pi: np.ndarray
    Gamma: np.ndarray
    residual_state: float
    residual_output: float
    unique: bool


def solve_regulator(plant: AgentPlant, exo: Exosystem) -> RegulatorSolution:
    """Solve the steady-state equations for (Pi, Gamma).

    Returns the exact solution when the vectorized system has full rank.
    A consistent but rank-deficient system yields the minimum-norm
    solution with ``unique=False``.  Inconsistency raises
    RegulatorInfeasible (assumption A.3 fails).
    """
    if plant.q != exo.q:
        raise DimensionMismatch("plant and exosystem disagree on w dimension")
    a, b, e = plant.A, plant.B, plant.E
    ce, de, he = plant.Ce, plant.De, plant.He
    s = exo.S
    n, m, q = plant.n, plant.m, plant.q
    eye_q = np.eye(q)
    # unknown x = [vec Pi; vec Gamma] in column-major (Fortran) order
    top = np.hstack([np.kron(s.T, np.eye(n)) - np.kron(eye_q, a), -np.kron(eye_q, b)])
    bot = np.hstack([np.kron(eye_q, ce), np.kron(eye_q, de)])
    lhs = np.vstack([top, bot])
    rhs = np.concatenate([e.flatten(order="F"), -he.flatten(order="F")])
    sol, _, rank, _ = np.linalg.lstsq(lhs, rhs, rcond=None)
    scale = 1.0 + max(
        np.abs(x).max() if x.size else 0.0
        for x in (a, b, e, ce, de, he, s)
    )
    residual = np.linalg.norm(lhs @ sol - rhs)
    if residual > RESIDUAL_TOL * scale:
        raise RegulatorInfeasible(
            f"steady-state equations are inconsistent (residual {residual:.3e})"
        )
    pi = sol[: n * q].reshape((n, q), order="F")
    gamma = sol[n * q:].reshape((m, q), order="F")
    res_state = float(np.linalg.norm(pi @ s - a @ pi - b @ gamma - e))
    res_output = float(np.linalg.norm(ce @ pi + de @ gamma + he))
    return RegulatorSolution(
        Pi=pi,
        Gamma=gamma,
        residual_state=res_state,
        residual_output=res_output,
        unique=(rank == (n + m) * q),
    )


def feedforward_gain(sol: RegulatorSolution, f: np.ndarray) -> np.ndarray:
    """Feedforward gain G = Gamma - F Pi for a state-feedback gain F."""
    f = np.asarray(f, dtype=float)
    if f.shape != (sol.Gamma.shape[0], sol.Pi.shape[0]):
        raise DimensionMismatch(
            f"F has shape {f.shape}, expected {(sol.Gamma.shape[0], sol.Pi.shape[0])}"
        )
    return sol.Gamma - f @ sol.Pi
