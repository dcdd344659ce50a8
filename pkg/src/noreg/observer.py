"""Observer gain design and selection of the consensus coupling gain.

Informed agents run a full-order estimator of the joint (plant state,
exosystem state) pair; its error matrix is

    A_cc = [[A + L1 Cy,  E + L1 Hy],
            [L2 Cy,      S + L2 Hy]]

Uninformed agents run a local state estimator with error matrix
A + L Cy, and their exosystem estimates are coupled through the network
with gain gamma.  All observer spectra must be distinct with real parts
at or below mu0, which itself lies below the slowest state-feedback
eigenvalue lambda0 so estimator transients die out faster than the
regulated outputs they perturb.

Gains are obtained by eigenstructure assignment on the transposed pair.
Several deterministic target patterns are tried - a real geometric
spread over [3 mu0, 1.05 mu0] first, then conjugate "fans" spreading the
targets in the imaginary direction - and the pattern whose error matrix
shows the smallest worst-case transient amplification is kept.  For
well-conditioned pairs the real spread wins; for weakly observable
composites (exosystem modes seen through a near-rank-one channel) the
fans avoid the violent estimator peaking that real clustered targets
produce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GammaInfeasible, NoregError, PlacementFailed
from .model import AgentPlant, STABILITY_TOL
from .numerics import expm as _expm
from .numerics import kron, matrix_rank, spectrum
from .synthesis import place_spectrum

#: Tolerance on the spectral bound Re <= mu0.
SPECTRAL_SLACK = 1e-6


@dataclass(frozen=True)
class AgentGains:
    """Per-agent controller gains; L1/L2 for informed agents, L otherwise."""

    F: np.ndarray
    G: np.ndarray
    L1: np.ndarray | None = None
    L2: np.ndarray | None = None
    L: np.ndarray | None = None

    @property
    def informed(self) -> bool:
        return self.L1 is not None


@dataclass(frozen=True)
class ControllerGains:
    agents: tuple          # AgentGains per agent, informed first
    gamma: float
    lambda0: float
    mu0: float

    def __post_init__(self):
        if not (self.mu0 < self.lambda0 < 0):
            raise ValueError(
                f"needs mu0 < lambda0 < 0, got mu0={self.mu0}, lambda0={self.lambda0}"
            )
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def compute_lambda0(f_gains, plants) -> float:
    """Slowest closed-loop eigenvalue min rho(A_i + B_i F_i) over agents.

    Raises if any closed-loop eigenvalue is not real (the synthesis
    contract guarantees real spectra).
    """
    lo = None
    for f, plant in zip(f_gains, plants):
        eigs = spectrum(plant.A + plant.B @ np.asarray(f, dtype=float))
        if np.abs(eigs.imag).max(initial=0.0) > 1e-7 * max(1.0, np.abs(eigs).max()):
            raise NoregError(f"closed-loop spectrum is not real: {eigs}")
        lo = eigs.real.min() if lo is None else min(lo, eigs.real.min())
    if lo is None:
        raise ValueError("need at least one agent")
    return float(lo)


def composite_estimator_matrix(plant: AgentPlant, s, l1, l2) -> np.ndarray:
    """Error matrix of the joint (state, exosystem) estimator."""
    s = np.asarray(s, dtype=float)
    q = s.shape[0]
    return np.block([
        [plant.A + l1 @ plant.Cy, plant.E + l1 @ plant.Hy],
        [l2 @ plant.Cy, s + l2 @ plant.Hy],
    ])


def observer_target_patterns(dim: int, mu0: float):
    """Deterministic candidate spectra, all with Re <= 1.05 mu0.

    Yields (name, targets): a real geometric spread over [3 mu0,
    1.05 mu0], then conjugate fans with increasing imaginary spread.
    """
    yield "real-geometric", -np.sort(np.geomspace(1.05 * abs(mu0), 3.0 * abs(mu0), dim))[::-1]
    npairs = dim // 2
    if npairs == 0:
        return
    for re_lo in (1.3, 1.5, 1.8):
        for im_span in (0.3, 0.6, 0.9, 1.2):
            reals = np.linspace(1.05 * mu0, re_lo * mu0, npairs)
            targets = []
            for j, re in enumerate(reals):
                im = im_span * abs(mu0) * (j + 1) / npairs
                targets.extend([re + 1j * im, re - 1j * im])
            if dim % 2:
                targets.append((re_lo + 0.1) * mu0)
            yield f"fan-{re_lo}-{im_span}", np.asarray(targets)


def transient_amplification(m, horizon: float, steps: int = 200) -> float:
    """Peak of ||exp(m t)||_2 over (0, horizon]; 1.0 means no peaking."""
    step = _expm(np.asarray(m, dtype=float) * (horizon / steps))
    x = np.eye(m.shape[0])
    peak = 1.0
    for _ in range(steps):
        x = step @ x
        peak = max(peak, float(np.linalg.norm(x, 2)))
    return peak


def _detectability_defect(a, c, mu0):
    """Eigenvalue of a that no output injection can move left of mu0."""
    nn = a.shape[0]
    for lam in spectrum(a):
        if lam.real > mu0:
            pencil = np.vstack([a - lam * np.eye(nn), c]).astype(complex)
            if matrix_rank(pencil) < nn:
                return lam
    return None


def _observer_gain_options(a, c, mu0: float, stagger: float = 0.0):
    """Valid gains for every target pattern, least transient peaking first.

    ``stagger`` scales the target patterns away from mu0; giving every
    agent a slightly different value keeps observer spectra from
    coinciding across agents, which would make the assembled closed loop
    defective and its spectrum needlessly ill conditioned.
    """
    defect = _detectability_defect(a, c, mu0)
    if defect is not None:
        raise PlacementFailed(
            f"mode at {defect:.6g} is unobservable and lies right of mu0 = {mu0}"
        )
    nn = a.shape[0]
    options = []
    for name, targets in observer_target_patterns(nn, mu0 * (1.0 + stagger)):
        try:
            gain = place_spectrum(a.T, c.T, targets).T
        except NoregError:
            continue
        eigs = spectrum(a + gain @ c)
        if eigs.real.max() > mu0 + SPECTRAL_SLACK:
            continue
        gap = np.abs(eigs[:, None] - eigs[None, :]) + np.eye(nn)
        if gap.min() < 1e-8 * max(1.0, np.abs(eigs).max()):
            continue  # not distinct
        score = transient_amplification(a + gain @ c, 5.0 / abs(mu0))
        options.append((score, name, gain))
    if not options:
        raise PlacementFailed("no target pattern produced a valid observer gain")
    options.sort(key=lambda item: item[0])
    return options


def _place_best_observer(a, c, mu0: float, stagger: float = 0.0):
    return _observer_gain_options(a, c, mu0, stagger)[0][2]


def informed_observer_gains(plant: AgentPlant, s, mu0: float, stagger: float = 0.0):
    """Gains (L1, L2) placing the composite estimator spectrum left of mu0."""
    return informed_observer_gain_options(plant, s, mu0, stagger)[0][1]


def informed_observer_gain_options(plant: AgentPlant, s, mu0: float, stagger: float = 0.0):
    """All valid (name, (L1, L2)) pairs, ordered by transient amplification.

    Every entry meets the spectral contract; callers that can judge the
    estimator transient in closed loop may prefer a later entry.
    """
    if mu0 >= 0:
        raise ValueError("mu0 must be negative")
    s = np.asarray(s, dtype=float)
    q = s.shape[0]
    a_comp = np.block([[plant.A, plant.E], [np.zeros((q, plant.n)), s]])
    c_comp = np.hstack([plant.Cy, plant.Hy])
    return tuple(
        (name, (gain[: plant.n, :], gain[plant.n:, :]))
        for _, name, gain in _observer_gain_options(a_comp, c_comp, mu0, stagger)
    )


def uninformed_observer_gain(plant: AgentPlant, mu0: float, stagger: float = 0.0) -> np.ndarray:
    """Gain L placing spectrum(A + L Cy) left of mu0, distinct."""
    if mu0 >= 0:
        raise ValueError("mu0 must be negative")
    return _place_best_observer(plant.A, plant.Cy, mu0, stagger)


def expected_coupling_spectrum(s, l33, gamma: float) -> np.ndarray:
    """Pairwise differences lam_i(S) - gamma lam_j(L33) as a multiset."""
    s_eigs = spectrum(s)
    l_eigs = spectrum(l33)
    return (s_eigs[:, None] - gamma * l_eigs[None, :]).reshape(-1)


def coupling_error_matrix(s, l33, gamma: float) -> np.ndarray:
    """Consensus error matrix (I kron S) - gamma (L33 kron I)."""
    s = np.asarray(s, dtype=float)
    l33 = np.asarray(l33, dtype=float)
    q = s.shape[0]
    k = l33.shape[0]
    return kron(np.eye(k), s) - gamma * kron(l33, np.eye(q))


def select_gamma(s, l33, mu0: float, margin: float = 2.0):
    """Smallest coupling gain meeting the consensus spectral bound, scaled.

    gamma_min is the least gamma with
    max Re(lam_i(S) - gamma lam_j(L33)) <= mu0; the closed form per pair
    is polished by bisection on the max expression.  Returns
    (gamma, gamma_min) with gamma = margin * gamma_min.

    With no uninformed agents (empty L33) any positive gamma works;
    gamma_min is 0 and gamma falls back to 1.
    """
    if margin < 1:
        raise ValueError("margin must be at least 1")
    s_eigs = spectrum(s)
    l_eigs = spectrum(l33)
    if l_eigs.size == 0:
        return 1.0, 0.0
    if l_eigs.real.min() <= 0:
        raise GammaInfeasible(
            f"follower block eigenvalue {l_eigs[np.argmin(l_eigs.real)]:.6g} "
            "has non-positive real part"
        )

    def worst(gamma):
        return float((s_eigs.real[:, None] - gamma * l_eigs.real[None, :]).max())

    gamma_min = max(
        (re_s - mu0) / re_l
        for re_s in s_eigs.real
        for re_l in l_eigs.real
    )
    if gamma_min <= 0:
        return max(margin * 0.0, 1.0), 0.0
    # bisection polish: worst() is continuous and decreasing in gamma
    lo, hi = 0.0, gamma_min
    while worst(hi) > mu0 + STABILITY_TOL:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if worst(mid) <= mu0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    gamma_min = hi
    return margin * gamma_min, gamma_min
