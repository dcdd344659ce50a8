"""Nonovershooting state-feedback synthesis by eigenstructure assignment.

The nominal problem: choose F so that A + B F has distinct negative real
eigenvalues inside a user interval and the regulated output

    e(t) = (Ce + De F) exp((A + B F) t) x0

decays to zero without changing sign in any component.  The search draws
candidate eigenvalue sets from a scrambled low-discrepancy sequence over
the interval, couples each eigenvalue to a small subset of the outputs
(a round-robin split, so each output is driven by only a few modes),
solves the constrained kernel problem

    (A - lam I) v + B w = 0,   Ce_J v + De_J w = 0

for the eigenvector/input-direction pair of every mode (J = outputs the
mode must stay invisible in), forms F = W V^{-1}, expands the output in
closed form, and applies an exact sign-constancy test per component.
The first candidate passing every flagged output wins; callers that need
an alternative (for example because estimator transients disturb a
particular agent) can skip ahead in the same deterministic stream.

Everything is deterministic for a fixed seed.  Candidate evaluation is
embarrassingly parallel; when the NOREG_THREADS environment variable
allows more than one worker, batches are evaluated concurrently and
merged by lowest candidate index so scheduling cannot change the result.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import SearchFailed, SingularEigenvectorMatrix
from .model import AgentPlant, SynthesisOptions
from .numerics import kernel_basis
from .seds import exponential_sum_roots, sed_sign_constant

#: Residual bound on (A - lam I) v + B w for accepted directions.
DIRECTION_TOL = 1e-9

#: Condition-number ceiling for the eigenvector matrix.
COND_LIMIT = 1e12


def worker_count() -> int:
    """Parallelism bound from NOREG_THREADS (0 = auto, unset = serial)."""
    raw = os.environ.get("NOREG_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        return 1
    if k == 0:
        return os.cpu_count() or 1
    return max(1, k)


@dataclass(frozen=True)
class SignConstancyVerdict:
    constant_sign: bool
    crossing_time: float | None

    def __bool__(self) -> bool:
        return self.constant_sign


@dataclass(frozen=True)
class ModeAssignment:
    """Eigenvalues with their eigenvector/input-direction pairs.

    output_modes[j] lists the mode indices allowed to appear in output j;
    every other mode is constrained to be invisible there.
    """

    eigenvalues: np.ndarray      # (n,) ascending negative reals
    eigenvectors: np.ndarray     # V, n x n
    input_directions: np.ndarray  # W, m x n
    output_modes: tuple          # per output: tuple of mode indices


@dataclass(frozen=True)
class ModalErrorExpansion:
    """Closed-form regulated output: e_j(t) = sum_k coefficients[j,k] exp(rates[k] t)."""

    coefficients: np.ndarray  # rho x n
    rates: np.ndarray         # (n,)


@dataclass(frozen=True)
class SynthesisResult:
    F: np.ndarray
    assignment: ModeAssignment
    expansion: ModalErrorExpansion
    candidate_index: int
    peak_ratio: float


def sign_constancy_test(coeffs, rates) -> SignConstancyVerdict:
    """Exact decision: does sum c_k exp(lam_k t) keep one sign on t >= 0?

    Two terms reduce to a closed-form crossing time; longer sums use root
    isolation based on the derivative recursion.
    """
    rates = np.asarray(rates, dtype=float)
    if np.any(rates >= 0):
        raise ValueError("rates must be negative")
    constant, crossing = sed_sign_constant(coeffs, rates)
    return SignConstancyVerdict(constant_sign=constant, crossing_time=crossing)


def candidate_directions(plant: AgentPlant, lam: float, zero_rows=()) -> np.ndarray:
    """Orthonormal basis of admissible (v, w) pairs at eigenvalue lam.

    Solves (A - lam I) v + B w = 0 with rows ``zero_rows`` of the
    regulated output forced to zero: Ce_J v + De_J w = 0.  Columns are
    stacked (v; w) of length n + m; the basis may be empty.
    """
    n, m = plant.n, plant.m
    top = np.hstack([plant.A - lam * np.eye(n), plant.B])
    rows = sorted(set(int(j) for j in zero_rows))
    if any(j < 0 or j >= plant.rho for j in rows):
        raise ValueError(f"zero_rows out of range for {plant.rho} outputs")
    if rows:
        bot = np.hstack([plant.Ce[rows, :], plant.De[rows, :]])
        return kernel_basis(np.vstack([top, bot]))
    return kernel_basis(top)


def build_feedback(assignment: ModeAssignment) -> np.ndarray:
    """Feedback F = W V^{-1} realizing the assigned eigenstructure."""
    v = assignment.eigenvectors
    w = assignment.input_directions
    if np.linalg.cond(v) > COND_LIMIT:
        raise SingularEigenvectorMatrix(
            f"eigenvector matrix condition {np.linalg.cond(v):.3g} exceeds {COND_LIMIT:.0e}"
        )
    f = w @ np.linalg.inv(v)
    return np.real(f) if np.abs(np.imag(f)).max() < 1e-9 else f


def place_spectrum(a, b, targets) -> np.ndarray:
    """Pole placement returning F with spectrum(a + b F) = targets.

    Supports complex-conjugate target pairs (directions are conjugated so
    the gain is real).  Direction choice within each kernel basis is
    greedy: maximize the component orthogonal to the span of previously
    chosen eigenvectors, which keeps V well conditioned.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    nn = a.shape[0]
    targets = np.asarray(targets, dtype=complex)
    if targets.shape[0] != nn:
        raise ValueError(f"need {nn} targets, got {targets.shape[0]}")
    v = np.zeros((nn, nn), dtype=complex)
    w = np.zeros((b.shape[1], nn), dtype=complex)
    placed: dict = {}
    for k, lam in enumerate(targets):
        if lam.imag != 0 and np.conj(lam) in placed:
            j = placed[np.conj(lam)]
            v[:, k] = np.conj(v[:, j])
            w[:, k] = np.conj(w[:, j])
            placed[lam] = k
            continue
        basis = kernel_basis(np.hstack([a - lam * np.eye(nn), b]))
        if basis.shape[1] == 0:
            raise SingularEigenvectorMatrix(f"no assignable direction at {lam}")
        vb = basis[:nn, :]
        if k == 0:
            x = np.zeros(basis.shape[1])
            x[int(np.argmax(np.linalg.norm(vb, axis=0)))] = 1.0
        else:
            q, _ = np.linalg.qr(v[:, :k])
            resid = vb - q @ (q.conj().T @ vb)
            _, _, vt = np.linalg.svd(resid)
            x = vt[0].conj()
        vec = basis @ x
        scale = np.linalg.norm(vec[:nn])
        if scale == 0:
            raise SingularEigenvectorMatrix(f"degenerate direction at {lam}")
        vec = vec / scale
        v[:, k] = vec[:nn]
        w[:, k] = vec[nn:]
        placed[lam] = k
    if np.linalg.cond(v) > COND_LIMIT:
        raise SingularEigenvectorMatrix("eigenvector matrix numerically singular")
    f = w @ np.linalg.inv(v)
    if np.abs(f.imag).max() > 1e-8 * max(1.0, np.abs(f.real).max()):
        raise SingularEigenvectorMatrix("placement produced a non-real gain")
    return np.real(f)


def modal_error_expansion(f, plant: AgentPlant, x0) -> ModalErrorExpansion:
    """Expand the closed-loop regulated output over the modes of A + B F.

    Requires distinct eigenvalues.  Coefficients below 1e-12 of the
    largest magnitude are flushed to exact zero.
    """
    f = np.asarray(f, dtype=float)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    acl = plant.A + plant.B @ f
    lam, v = np.linalg.eig(acl)
    n = plant.n
    if np.min(np.abs(lam[:, None] - lam[None, :]) + np.eye(n)) < 1e-9 * max(1.0, np.abs(lam).max()):
        raise SingularEigenvectorMatrix("closed-loop matrix has (nearly) repeated eigenvalues")
    alpha = np.linalg.solve(v, x0)
    gains = (plant.Ce + plant.De @ f) @ v  # rho x n output content per mode
    coeffs = gains * alpha[None, :]
    order = np.argsort(lam.real)
    lam, coeffs = lam[order], coeffs[:, order]
    coeffs = np.real_if_close(coeffs, tol=1e6)
    top = np.abs(coeffs).max() if coeffs.size else 0.0
    if top > 0:
        coeffs = np.where(np.abs(coeffs) < 1e-12 * top, 0.0, coeffs)
    return ModalErrorExpansion(coefficients=np.real(coeffs), rates=np.real(lam))


def _mode_ownership(n: int, rho: int, m: int):
    """Round-robin split of modes over outputs.

    Each mode may be forced invisible in at most m-1 outputs, so it is
    allowed to appear in s = max(1, rho - (m - 1)) consecutive outputs.
    """
    s = max(1, rho - (m - 1))
    allowed = []
    for k in range(n):
        allowed.append(tuple(sorted((k + i) % rho for i in range(s))))
    output_modes = tuple(
        tuple(k for k in range(n) if j in allowed[k]) for j in range(rho)
    )
    return allowed, output_modes


def _evaluate_candidate(plant, x0, lams, allowed, output_modes, flags):
    """Assess one eigenvalue set; returns (assignment, expansion, peak_ratio) or None."""
    n, m, rho = plant.n, plant.m, plant.rho
    v = np.zeros((n, n))
    w = np.zeros((m, n))
    for k, lam in enumerate(lams):
        zero_rows = [j for j in range(rho) if j not in allowed[k]]
        basis = candidate_directions(plant, lam, zero_rows)
        if basis.shape[1] == 0:
            return None
        v[:, k] = basis[:n, 0]
        w[:, k] = basis[n:, 0]
    if np.linalg.cond(v) > COND_LIMIT:
        return None
    alpha = np.linalg.solve(v, x0)
    gains = plant.Ce @ v + plant.De @ w
    coeffs = gains * alpha[None, :]
    top = np.abs(coeffs).max() if coeffs.size else 0.0
    if top > 0:
        coeffs = np.where(np.abs(coeffs) < 1e-12 * top, 0.0, coeffs)
    peak_ratio = 0.0
    failing = []
    for j in range(rho):
        ks = list(output_modes[j])
        cj, rj = coeffs[j, ks], lams[ks]
        if flags[j]:
            constant, _ = sed_sign_constant(cj, rj)
            if not constant:
                failing.append(j)
                continue
        e0 = abs(cj.sum())
        live = cj[cj != 0.0]
        if live.size and e0 > 0:
            vals = [e0] + [
                abs(float(np.dot(cj, np.exp(rj * t))))
                for t in exponential_sum_roots(cj * rj, rj)
            ]
            peak_ratio = max(peak_ratio, max(vals) / e0)
    if failing:
        return ("fail", tuple(failing))
    assignment = ModeAssignment(
        eigenvalues=lams.copy(), eigenvectors=v, input_directions=w,
        output_modes=output_modes,
    )
    expansion = ModalErrorExpansion(coefficients=coeffs, rates=lams.copy())
    return (assignment, expansion, peak_ratio)


def synthesize_nonovershooting_F(
    plant: AgentPlant,
    x0,
    interval,
    options: SynthesisOptions | None = None,
    flags=None,
    skip: int = 0,
) -> SynthesisResult:
    """Search for a nonovershooting state feedback on the nominal plant.

    x0 is the nominal initial state (for regulation problems,
    x(0) - Pi w(0)).  flags selects which regulated outputs must pass the
    sign-constancy test (default: all).  skip discards the first ``skip``
    admissible candidates, which lets a caller walk the deterministic
    candidate stream for design iteration.

    Raises SearchFailed after ``options.max_candidates`` candidate sets,
    reporting the output components that kept failing.
    """
    options = options or SynthesisOptions(interval=tuple(interval))
    a_lo, b_hi = float(interval[0]), float(interval[1])
    if not (a_lo < b_hi < 0):
        raise ValueError(f"interval must satisfy a < b < 0, got ({a_lo}, {b_hi})")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != plant.n:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {plant.n}")
    n, rho = plant.n, plant.rho
    flags = tuple(bool(b) for b in (flags if flags is not None else (True,) * rho))
    if len(flags) != rho:
        raise ValueError(f"need {rho} overshoot flags, got {len(flags)}")
    allowed, output_modes = _mode_ownership(n, rho, plant.m)
    sep_min = (b_hi - a_lo) / (10.0 * n)
    sampler = qmc.Sobol(d=n, scramble=True, seed=options.seed)

    def make_candidate():
        u = sampler.random(1)[0]
        lams = np.sort(a_lo + (b_hi - a_lo) * u)
        if n > 1 and np.min(np.diff(lams)) < sep_min:
            return None
        return lams

    to_skip = skip
    fail_counts: dict = {}
    workers = worker_count()
    budget = options.max_candidates
    drawn = 0
    batch = max(1, workers * 4) if workers > 1 else 1
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while drawn < budget:
            size = min(batch, budget - drawn)
            cands = []
            for _ in range(size):
                lams = make_candidate()
                cands.append((drawn, lams))
                drawn += 1
            todo = [(idx, lams) for idx, lams in cands if lams is not None]
            if pool is not None:
                results = list(pool.map(
                    lambda item: (item[0], item[1], _evaluate_candidate(
                        plant, x0, item[1], allowed, output_modes, flags)),
                    todo,
                ))
            else:
                results = [
                    (idx, lams, _evaluate_candidate(plant, x0, lams, allowed, output_modes, flags))
                    for idx, lams in todo
                ]
            for idx, lams, res in sorted(results, key=lambda r: r[0]):
                if res is None:
                    continue
                if res[0] == "fail":
                    for j in res[1]:
                        fail_counts[j] = fail_counts.get(j, 0) + 1
                    continue
                assignment, expansion, peak_ratio = res
                if to_skip > 0:
                    to_skip -= 1
                    continue
                return SynthesisResult(
                    F=build_feedback(assignment),
                    assignment=assignment,
                    expansion=expansion,
                    candidate_index=idx,
                    peak_ratio=peak_ratio,
                )
    finally:
        if pool is not None:
            pool.shutdown(wait=False)
    worst = sorted(fail_counts, key=fail_counts.get, reverse=True)
    raise SearchFailed(
        f"no admissible candidate within {budget} sets"
        + (f"; outputs failing most often: {worst}" if worst else ""),
        failing_outputs=worst,
    )
