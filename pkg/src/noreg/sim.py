"""Assembly and exact simulation of the networked closed loop.

The full interconnection - N plants, the exosystem, per-agent estimator
states (xi_i, eta_i), the informed output-injection terms and the
uninformed consensus coupling - is one autonomous LTI system in the
stacked state (x_1..x_N, w, xi_1..xi_N, eta_1..eta_N).  Assembly writes
those raw coupled dynamics directly; no error-coordinate transform is
involved, so the block-triangular spectral structure is available as an
independent consistency check rather than baked in.

Simulation steps the autonomous system exactly: x_{k+1} = expm(A dt) x_k
with the exponential computed once, so stiff estimator dynamics cost
nothing in accuracy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .graph import adjacency, laplacian, partition
from .model import EstimatorInit, Scenario
from .numerics import expm, kron, spectrum
from .observer import ControllerGains

#: Relative sign-change tolerance and the absolute floor below which a
#: component counts as identically zero.
OVERSHOOT_TOL_REL = 1e-6
OVERSHOOT_FLOOR = 1e-12

#: Settling threshold relative to the initial magnitude.
SETTLE_REL = 1e-3


@dataclass(frozen=True)
class ClosedLoopSystem:
    a_cl: np.ndarray
    c_cl: np.ndarray
    x_slices: tuple        # per agent: slice of the plant state
    w_slice: slice
    xi_slices: tuple
    eta_slices: tuple
    output_slices: tuple   # per agent: slice of the stacked regulated output
    state_labels: tuple
    output_labels: tuple

    @property
    def dim(self) -> int:
        return self.a_cl.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.c_cl.shape[0]


@dataclass(frozen=True)
class Trace:
    times: np.ndarray       # (K+1,), uniform step
    outputs: np.ndarray     # (K+1, n_outputs)
    output_labels: tuple
    states: np.ndarray | None = None
    state_labels: tuple = ()

    def write_csv(self, path, digits: int = 15) -> None:
        """Delimited export: header t, e_1_1, ... with Unix newlines."""
        cols = ["t"] + list(self.output_labels)
        if self.states is not None:
            cols += list(self.state_labels)
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for k in range(self.times.shape[0]):
                row = [f"{self.times[k]:.{digits}g}"]
                row += [f"{v:.{digits}g}" for v in self.outputs[k]]
                if self.states is not None:
                    row += [f"{v:.{digits}g}" for v in self.states[k]]
                writer.writerow(row)


@dataclass(frozen=True)
class OvershootEntry:
    component: int
    label: str
    nonovershooting: bool
    first_crossing: float | None
    peak: float
    settling_time: float | None


def assemble_closed_loop(scenario: Scenario, gains: ControllerGains) -> ClosedLoopSystem:
    """Build the autonomous closed-loop matrix and output map.

    Plant rows use u_i = F_i xi_i + G_i eta_i; informed estimators carry
    the output-injection term, uninformed estimators the local injection
    plus the consensus sum gamma * sum_j a_ij (eta_j - eta_i) over agent
    neighbours.  Estimator initial values are not fixed here; they come
    from the estimator-init policy at simulation time.
    """
    agents = scenario.agents
    n_agents = scenario.agent_count
    l = scenario.informed_count
    q = scenario.exosystem.q
    s = scenario.exosystem.S
    if len(gains.agents) != n_agents:
        raise DimensionMismatch("gain count does not match agent count")
    adj = adjacency(scenario.graph)

    x_off, xi_off, eta_off = [], [], []
    pos = 0
    for ag in agents:
        x_off.append(pos)
        pos += ag.n
    w_pos = pos
    pos += q
    for ag in agents:
        xi_off.append(pos)
        pos += ag.n
    for _ in agents:
        eta_off.append(pos)
        pos += q
    dim = pos
    rho_total = sum(ag.rho for ag in agents)

    a_cl = np.zeros((dim, dim))
    c_cl = np.zeros((rho_total, dim))
    x_slices, xi_slices, eta_slices, out_slices = [], [], [], []
    output_labels = []
    w_slice = slice(w_pos, w_pos + q)
    a_cl[w_slice, w_slice] = s

    row = 0
    for i, ag in enumerate(agents):
        g = gains.agents[i]
        if g.F.shape != (ag.m, ag.n) or g.G.shape != (ag.m, ag.q):
            raise DimensionMismatch(f"agent {i + 1}: gain dimensions do not fit the plant")
        sx = slice(x_off[i], x_off[i] + ag.n)
        sxi = slice(xi_off[i], xi_off[i] + ag.n)
        seta = slice(eta_off[i], eta_off[i] + q)
        x_slices.append(sx)
        xi_slices.append(sxi)
        eta_slices.append(seta)

        bf, bg = ag.B @ g.F, ag.B @ g.G
        a_cl[sx, sx] = ag.A
        a_cl[sx, sxi] = bf
        a_cl[sx, seta] = bg
        a_cl[sx, w_slice] = ag.E

        so = slice(row, row + ag.rho)
        out_slices.append(so)
        c_cl[so, sx] = ag.Ce
        c_cl[so, sxi] = ag.De @ g.F
        c_cl[so, seta] = ag.De @ g.G
        c_cl[so, w_slice] = ag.He
        row += ag.rho

        if i < l:
            if g.L1 is None or g.L2 is None:
                raise DimensionMismatch(f"agent {i + 1} is informed but lacks L1/L2")
            l1c, l1h = g.L1 @ ag.Cy, g.L1 @ ag.Hy
            l2c, l2h = g.L2 @ ag.Cy, g.L2 @ ag.Hy
            a_cl[sxi, sxi] = ag.A + bf + l1c
            a_cl[sxi, seta] = ag.E + bg + l1h
            a_cl[sxi, sx] = -l1c
            a_cl[sxi, w_slice] = -l1h
            a_cl[seta, sxi] = l2c
            a_cl[seta, seta] = s + l2h
            a_cl[seta, sx] = -l2c
            a_cl[seta, w_slice] = -l2h
        else:
            if g.L is None:
                raise DimensionMismatch(f"agent {i + 1} is uninformed but lacks L")
            lc = g.L @ ag.Cy
            a_cl[sxi, sxi] = ag.A + bf + lc
            a_cl[sxi, seta] = ag.E + bg
            a_cl[sxi, sx] = -lc
            degree = adj[i + 1, 1:].sum()  # agent neighbours only
            a_cl[seta, seta] = s - gains.gamma * degree * np.eye(q)
            for j in range(n_agents):
                weight = adj[i + 1, j + 1]
                if j != i and weight != 0.0:
                    a_cl[seta, slice(eta_off[j], eta_off[j] + q)] += (
                        gains.gamma * weight * np.eye(q)
                    )

        output_labels += [f"e_{i + 1}_{k + 1}" for k in range(ag.rho)]
    labels = []
    for i, ag in enumerate(agents):
        labels += [f"x_{i + 1}_{k + 1}" for k in range(ag.n)]
    labels += [f"w_{k + 1}" for k in range(q)]
    for i, ag in enumerate(agents):
        labels += [f"xi_{i + 1}_{k + 1}" for k in range(ag.n)]
    for i in range(n_agents):
        labels += [f"eta_{i + 1}_{k + 1}" for k in range(q)]

    return ClosedLoopSystem(
        a_cl=a_cl,
        c_cl=c_cl,
        x_slices=tuple(x_slices),
        w_slice=w_slice,
        xi_slices=tuple(xi_slices),
        eta_slices=tuple(eta_slices),
        output_slices=tuple(out_slices),
        state_labels=tuple(labels),
        output_labels=tuple(output_labels),
    )


def estimator_init(scenario: Scenario, policy: EstimatorInit | None = None) -> np.ndarray:
    """Stacked initial state vector under the estimator-init policy.

    exact sets xi_i(0) = x_i(0) and eta_i(0) = w(0) (zero estimator
    error); relative_perturbation scales those by the policy factor;
    explicit copies the supplied vectors verbatim.
    """
    pol = policy if policy is not None else scenario.estimator_init
    agents = scenario.agents
    q = scenario.exosystem.q
    dim = sum(ag.n for ag in agents) * 2 + q + q * len(agents)
    x = np.zeros(dim)
    pos = 0
    for ag, x0 in zip(agents, scenario.x0):
        x[pos: pos + ag.n] = x0
        pos += ag.n
    x[pos: pos + q] = scenario.exosystem.w0
    pos += q
    if pol.kind == "explicit":
        if len(pol.xi) != len(agents) or len(pol.eta) != len(agents):
            raise DimensionMismatch("explicit policy needs one xi and eta vector per agent")
    for i, ag in enumerate(agents):
        if pol.kind == "exact":
            val = scenario.x0[i]
        elif pol.kind == "relative_perturbation":
            val = pol.factor * scenario.x0[i]
        else:
            val = pol.xi[i]
            if val.shape[0] != ag.n:
                raise DimensionMismatch(f"xi[{i}] has wrong length")
        x[pos: pos + ag.n] = val
        pos += ag.n
    for i in range(len(agents)):
        if pol.kind == "exact":
            val = scenario.exosystem.w0
        elif pol.kind == "relative_perturbation":
            val = pol.factor * scenario.exosystem.w0
        else:
            val = pol.eta[i]
            if val.shape[0] != q:
                raise DimensionMismatch(f"eta[{i}] has wrong length")
        x[pos: pos + q] = val
        pos += q
    return x


def simulate(
    cls: ClosedLoopSystem,
    x_init,
    t_end: float,
    dt: float = 1e-3,
    store_states: bool = False,
) -> Trace:
    """Exact discrete stepping of the autonomous closed loop.

    One matrix exponential is computed for the step dt; every sample then
    satisfies x(t_k) = expm(A t_k) x(0) up to that single approximation,
    so halving dt only adds sample points.
    """
    if dt <= 0 or t_end < dt:
        raise ValueError("need dt > 0 and t_end >= dt")
    x_init = np.asarray(x_init, dtype=float).reshape(-1)
    if x_init.shape[0] != cls.dim:
        raise DimensionMismatch(f"x_init has length {x_init.shape[0]}, expected {cls.dim}")
    steps = int(round(t_end / dt))
    stepper = expm(cls.a_cl * dt)
    times = np.arange(steps + 1) * dt
    outputs = np.empty((steps + 1, cls.n_outputs))
    states = np.empty((steps + 1, cls.dim)) if store_states else None
    x = x_init.copy()
    outputs[0] = cls.c_cl @ x
    if store_states:
        states[0] = x
    for k in range(steps):
        x = stepper @ x
        outputs[k + 1] = cls.c_cl @ x
        if store_states:
            states[k + 1] = x
    return Trace(
        times=times,
        outputs=outputs,
        output_labels=cls.output_labels,
        states=states,
        state_labels=cls.state_labels if store_states else (),
    )


def detect_overshoot(trace: Trace, component: int, tol_rel: float = OVERSHOOT_TOL_REL) -> OvershootEntry:
    """Classify one regulated-output component of a trace.

    A sign change requires samples beyond +tau and beyond -tau with
    tau = tol_rel * max |e|; components never exceeding the absolute
    floor are trivially nonovershooting.
    """
    if tol_rel <= 0:
        raise ValueError("tol_rel must be positive")
    col = trace.outputs[:, component]
    label = trace.output_labels[component]
    peak = float(np.abs(col).max())
    if peak <= OVERSHOOT_FLOOR:
        return OvershootEntry(component, label, True, None, peak, 0.0)
    tau = tol_rel * peak
    pos = col > tau
    neg = col < -tau
    crossing = None
    if pos.any() and neg.any():
        first_pos = int(np.argmax(pos))
        first_neg = int(np.argmax(neg))
        later = max(first_pos, first_neg)
        crossing = float(trace.times[later])
    settle_ref = abs(col[0]) if abs(col[0]) > OVERSHOOT_FLOOR else peak
    threshold = SETTLE_REL * settle_ref
    above = np.abs(col) > threshold
    if not above.any():
        settling = 0.0
    elif above[-1]:
        settling = None  # never settles inside the trace
    else:
        settling = float(trace.times[int(np.nonzero(above)[0].max()) + 1])
    return OvershootEntry(
        component=component,
        label=label,
        nonovershooting=crossing is None,
        first_crossing=crossing,
        peak=peak,
        settling_time=settling,
    )


def detect_overshoot_all(trace: Trace, tol_rel: float = OVERSHOOT_TOL_REL) -> list:
    return [detect_overshoot(trace, j, tol_rel) for j in range(trace.outputs.shape[1])]


def block_spectrum_union(scenario: Scenario, gains: ControllerGains) -> np.ndarray:
    """Expected closed-loop spectrum from the designed blocks.

    The union (as a multiset) of the state-feedback spectra, the informed
    composite estimator spectra, the uninformed local estimator spectra,
    the consensus error spectrum and the exosystem spectrum.  Equality
    with spectrum(a_cl) is the computable content of the closed loop's
    block-triangular error structure.
    """
    agents = scenario.agents
    l = scenario.informed_count
    s = scenario.exosystem.S
    q = scenario.exosystem.q
    parts = []
    for i, ag in enumerate(agents):
        parts.append(spectrum(ag.A + ag.B @ gains.agents[i].F))
    for i in range(l):
        ag, g = agents[i], gains.agents[i]
        a_cc = np.block([
            [ag.A + g.L1 @ ag.Cy, ag.E + g.L1 @ ag.Hy],
            [g.L2 @ ag.Cy, s + g.L2 @ ag.Hy],
        ])
        parts.append(spectrum(a_cc))
    for i in range(l, len(agents)):
        ag, g = agents[i], gains.agents[i]
        parts.append(spectrum(ag.A + g.L @ ag.Cy))
    n_uninformed = len(agents) - l
    if n_uninformed:
        l33 = partition(laplacian(scenario.graph), l).L33
        parts.append(spectrum(kron(np.eye(n_uninformed), s) - gains.gamma * kron(l33, np.eye(q))))
    parts.append(spectrum(s))
    return np.concatenate(parts)


def multiset_distance(a, b) -> float:
    """Greedy nearest-pair matching distance between two eigenvalue multisets."""
    a = list(np.asarray(a, dtype=complex))
    b = list(np.asarray(b, dtype=complex))
    if len(a) != len(b):
        raise ValueError(f"multisets differ in size: {len(a)} vs {len(b)}")
    worst = 0.0
    for z in sorted(a, key=lambda v: (v.real, v.imag)):
        k = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b[k]))
        b.pop(k)
    return worst
