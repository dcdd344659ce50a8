"""Calculus of sums of exponentially decaying sinusoids.

A SEDS function is a finite sum of terms ``exp(mu*t) * (alpha*sin(omega*t)
+ beta*cos(omega*t))`` with every decay exponent ``mu < 0``.  When all
frequencies vanish the function is a plain exponential sum (SED).  The
class is closed under addition and multiplication, the rate (largest
decay exponent) adds under products, and a strictly signed exponential
sum dominated by faster-decaying noise stays signed for a computable
perturbation size delta - the constructive fact this module implements.

Root isolation for exponential sums exploits that a sum of k real
exponentials has at most k-1 real zeros: the derivative is again such a
sum, so recursion yields brackets in which plain bisection is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionViolated

#: Terms whose combined amplitude falls below this fraction of the largest
#: are flushed after products to keep term counts bounded.
FLUSH_REL = 1e-14

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SedsFunction:
    """Sum of exponentially decaying sinusoids.

    terms: tuple of (mu, omega, alpha, beta), mu < 0, omega >= 0.
    """

    terms: tuple

    def __post_init__(self):
        norm = []
        for mu, omega, alpha, beta in self.terms:
            mu, omega, alpha, beta = float(mu), float(omega), float(alpha), float(beta)
            if mu >= 0:
                raise ValueError(f"decay exponent must be negative, got {mu}")
            if omega < 0:
                raise ValueError(f"frequency must be nonnegative, got {omega}")
            norm.append((mu, omega, alpha, beta))
        object.__setattr__(self, "terms", tuple(norm))

    def rate(self) -> float | None:
        """Largest decay exponent among terms with nonzero amplitude."""
        live = [mu for (mu, _, a, b) in self.terms if a != 0.0 or b != 0.0]
        return max(live) if live else None


@dataclass(frozen=True)
class SedFunction:
    """Pure exponential sum: terms (lam, beta) with distinct negative lam."""

    terms: tuple

    def __post_init__(self):
        norm = []
        for lam, beta in self.terms:
            lam, beta = float(lam), float(beta)
            if lam >= 0:
                raise ValueError(f"rate must be negative, got {lam}")
            norm.append((lam, beta))
        rates = [lam for lam, _ in norm]
        if len(set(rates)) != len(rates):
            raise ValueError("rates must be distinct")
        object.__setattr__(self, "terms", tuple(norm))

    def rate(self) -> float | None:
        live = [lam for (lam, b) in self.terms if b != 0.0]
        return max(live) if live else None

    def coefficients(self):
        lam = np.array([t[0] for t in self.terms])
        beta = np.array([t[1] for t in self.terms])
        return beta, lam


def evaluate(f: SedsFunction, t):
    """Pointwise value at scalar or array times t >= 0."""
    ts = np.asarray(t, dtype=float)
    out = np.zeros_like(ts, dtype=float)
    for mu, omega, alpha, beta in f.terms:
        out = out + np.exp(mu * ts) * (alpha * np.sin(omega * ts) + beta * np.cos(omega * ts))
    return float(out) if np.isscalar(t) or ts.ndim == 0 else out


def evaluate_sed(g: SedFunction, t):
    ts = np.asarray(t, dtype=float)
    out = np.zeros_like(ts, dtype=float)
    for lam, beta in g.terms:
        out = out + beta * np.exp(lam * ts)
    return float(out) if np.isscalar(t) or ts.ndim == 0 else out


def _merge(terms):
    acc = {}
    for mu, omega, alpha, beta in terms:
        key = (mu, omega)
        a0, b0 = acc.get(key, (0.0, 0.0))
        acc[key] = (a0 + alpha, b0 + beta)
    return tuple((mu, om, a, b) for (mu, om), (a, b) in sorted(acc.items()))


def add(f: SedsFunction, g: SedsFunction) -> SedsFunction:
    """Sum; matching (decay, frequency) pairs are merged."""
    return SedsFunction(_merge(f.terms + g.terms))


def multiply(f: SedsFunction, g: SedsFunction) -> SedsFunction:
    """Product, expanded back into SEDS form.

    Uses the product-to-sum identities, so each pair of terms produces
    components at the sum and difference frequencies with decay mu1+mu2.
    """
    raw = []
    for mu1, om1, a1, b1 in f.terms:
        for mu2, om2, a2, b2 in g.terms:
            mu = mu1 + mu2
            om_sum = om1 + om2
            om_dif = om1 - om2
            # sum frequency
            raw.append((mu, om_sum, (a1 * b2 + b1 * a2) / 2.0, (b1 * b2 - a1 * a2) / 2.0))
            # difference frequency, normalized to omega >= 0
            a_d = (a1 * b2 - b1 * a2) / 2.0
            b_d = (a1 * a2 + b1 * b2) / 2.0
            if om_dif < 0:
                raw.append((mu, -om_dif, -a_d, b_d))
            else:
                raw.append((mu, om_dif, a_d, b_d))
    merged = _merge(raw)
    top = max((abs(a) + abs(b) for (_, _, a, b) in merged), default=0.0)
    if top > 0:
        merged = tuple(t for t in merged if abs(t[2]) + abs(t[3]) >= FLUSH_REL * top)
    return SedsFunction(merged)


# ---------------------------------------------------------------------------
# exponential-sum root isolation
# ---------------------------------------------------------------------------

def _drop_zero(coeffs, rates):
    coeffs = np.asarray(coeffs, dtype=float)
    rates = np.asarray(rates, dtype=float)
    keep = coeffs != 0.0
    return coeffs[keep], rates[keep]


def exponential_sum_roots(coeffs, rates) -> list:
    """All roots of ``sum c_k exp(r_k t)`` in the open interval (0, inf).

    The rates must be distinct.  The sum is normalized by the dominant
    exponential so every evaluation stays bounded, the critical points
    come from recursing on the derivative, and each bracket is bisected.
    """
    c, r = _drop_zero(coeffs, rates)
    if len(c) <= 1:
        return []
    order = np.argsort(r)
    c, r = c[order], r[order]
    if len(c) == 2:
        if c[0] * c[1] < 0:
            t = math.log(-c[0] / c[1]) / (r[1] - r[0])
            if t > 0:
                return [t]
        return []
    rr = r - r[-1]  # exponents <= 0, value at +inf is c[-1]

    def psi(t):
        return float(np.dot(c, np.exp(rr * t)))

    def bisect(a, b, fa):
        lo, hi, flo = a, b, fa
        while hi - lo > 1e-13 * (1.0 + abs(hi)):
            mid = 0.5 * (lo + hi)
            fm = psi(mid)
            if flo * fm <= 0:
                hi = mid
            else:
                lo, flo = mid, fm
        return 0.5 * (lo + hi)

    crit = exponential_sum_roots(c * rr, rr)
    pts = [0.0] + crit
    roots = []
    for a, b in zip(pts[:-1], pts[1:]):
        fa, fb = psi(a), psi(b)
        if fa * fb < 0:
            roots.append(bisect(a, b, fa))
    # tail: psi is monotone beyond its last critical point
    a = pts[-1]
    fa = psi(a)
    limit = c[-1]
    if fa * limit < 0:
        b = max(2.0 * a, 1.0)
        while psi(b) * limit < 0 and b < 1e12:
            b *= 2.0
        roots.append(bisect(a, b, fa))
    return sorted(roots)


def sed_sign_constant(coeffs, rates, flush_rel: float = 1e-12):
    """Decide whether ``sum c_k exp(r_k t)`` keeps one sign on t >= 0.

    Returns (constant_sign, first_crossing).  Coefficients below
    ``flush_rel`` times the largest magnitude are treated as zero.  A
    tangential zero without an actual sign change does not count as a
    crossing.
    """
    c = np.asarray(coeffs, dtype=float)
    r = np.asarray(rates, dtype=float)
    if c.shape != r.shape:
        raise ValueError("coeffs and rates must have equal length")
    top = np.abs(c).max() if c.size else 0.0
    if top == 0.0:
        return True, None
    keep = np.abs(c) > flush_rel * top
    c, r = c[keep], r[keep]
    if len(set(r.tolist())) != len(r):
        raise ValueError("rates must be distinct")
    roots = exponential_sum_roots(c, r)
    if not roots:
        return True, None
    order = np.argsort(r)
    c, r = c[order], r[order]
    rr = r - r[-1]

    def psi(t):
        return float(np.dot(c, np.exp(rr * t)))

    pts = [0.0] + roots
    signs = [math.copysign(1.0, psi(0.5 * (a + b))) for a, b in zip(pts[:-1], pts[1:])]
    signs.append(math.copysign(1.0, c[-1]))  # sign past the last root
    for i, s in enumerate(signs):
        if s != signs[0]:
            # the sign flips across the root bounding this interval on the left
            return False, pts[i]
    return True, None


def _golden_max(fun, a, b, tol=1e-10):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol * (1.0 + abs(a) + abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def delta_for_sign_preservation(g: SedFunction, f: SedsFunction) -> float:
    """Constructive perturbation bound delta > 0 with g + delta*f signed.

    Requires every decay exponent of f to lie strictly below every rate
    of g, and g itself to be nonzero on t >= 0.  The construction builds
    the monotone envelope f1(t) = -sum exp(mu_i t)(|alpha_i|+|beta_i|),
    picks t_bar past the last extremum of g, bounds -f1/g on [0, t_bar]
    by a grid plus golden-section refinement, and on the tail compares g
    against its positive-term subsum.  The result also works for every
    smaller positive delta.
    """
    gc, gr = g.coefficients()
    gc, gr = _drop_zero(gc, gr)
    if gc.size == 0:
        raise PreconditionViolated("g is identically zero")
    f_rate = f.rate()
    if f_rate is None:
        return 1.0
    if f_rate >= gr.min():
        raise PreconditionViolated(
            f"perturbation rate {f_rate} must lie below every rate of g (min {gr.min()})"
        )
    constant, crossing = sed_sign_constant(gc, gr, flush_rel=0.0)
    if not constant:
        raise PreconditionViolated(f"g changes sign at t = {crossing}")
    if math.copysign(1.0, float(gc.sum())) < 0:
        gc = -gc  # mirror the negative case

    f1c = np.array([-(abs(a) + abs(b)) for (_, _, a, b) in f.terms])
    f1r = np.array([mu for (mu, _, _, _) in f.terms])
    f1c, f1r = _drop_zero(f1c, f1r)
    if f1c.size == 0:
        return 1.0
    # f1 is monotone increasing, so only g's extrema matter for t_bar
    extrema = exponential_sum_roots(gc * gr, gr)
    t_bar = 1.0 + (max(extrema) if extrema else 0.0)

    def ratio(t):
        g_val = float(np.dot(gc, np.exp(gr * t)))
        f_val = float(np.dot(f1c, np.exp(f1r * t)))
        return -f_val / g_val

    grid = np.linspace(0.0, t_bar, 10001)
    vals = np.array([ratio(t) for t in grid])
    k = int(np.argmax(vals))
    t_star = _golden_max(ratio, grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)])
    sup1 = max(float(vals[k]), ratio(t_star)) * (1.0 + 1e-6)
    delta1 = math.inf if sup1 <= 0 else 1.0 / sup1

    # tail bound: gamma0 = inf of g/g1 past t_bar, g1 the positive subsum
    pos = gc > 0
    g1c, g1r = gc[pos], gr[pos]
    num = {}
    for ci, ri in zip(gc, gr):
        for cj, rj in zip(g1c, g1r):
            key = ri + rj
            num[key] = num.get(key, 0.0) + ci * cj * (ri - rj)  # (g' g1 - g g1')
    nc = np.array(list(num.values()))
    nr = np.array(list(num.keys()))
    top = np.abs(nc).max() if nc.size else 0.0
    if top > 0:
        keep = np.abs(nc) > 1e-14 * top
        nc, nr = nc[keep], nr[keep]
    crits = [t for t in exponential_sum_roots(nc, nr) if t > t_bar] if nc.size else []

    def g_over_g1(t):
        return float(np.dot(gc, np.exp(gr * t)) / np.dot(g1c, np.exp(g1r * t)))

    gamma0 = min([g_over_g1(t_bar), 1.0] + [g_over_g1(t) for t in crits]) * (1.0 - 1e-9)
    f1_tb = float(np.dot(f1c, np.exp(f1r * t_bar)))
    g1_tb = float(np.dot(g1c, np.exp(g1r * t_bar)))
    delta2 = math.inf if f1_tb == 0 else gamma0 * g1_tb / abs(f1_tb)

    delta = min(delta1, delta2)
    if not math.isfinite(delta):
        return 1.0
    return delta
