"""Norms, envelopes, and inequality monitors for rescaled-flow runs.

All radial integrals go through one trapezoid quadrature so that the
contraction budget (distance plus dissipation against initial distance)
is internally consistent.  The power-law weight (C*/r^2)^{p0/(1-m)} is
singular at the origin but integrable; the first cell is integrated in
closed form against the local power law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    GridMismatch,
    InsufficientSamples,
    NoFeasibleLambda,
    RegimeError,
)
from .profile import Profile, ProfileFamily, evaluate
from .regimes import ParamSet, classify


def shell_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def radial_l1(grid: np.ndarray, values: np.ndarray, n: int) -> float:
    """Plain L^1 norm with the radial measure omega r^{n-1} dr."""
    return shell_area(n) * float(np.trapezoid(np.abs(values) * grid ** (n - 1), grid))


def _values_on(grid: np.ndarray, obj) -> np.ndarray:
    if isinstance(obj, Profile):
        return evaluate(obj, grid)
    if hasattr(obj, "u") and hasattr(obj, "grid"):
        if obj.grid.shape != grid.shape or not np.array_equal(obj.grid, grid):
            raise GridMismatch("states live on different grids")
        return obj.u
    return np.asarray(obj, dtype=float)


def weighted_l1_distance(a, b, p0: float, p: Optional[ParamSet] = None) -> float:
    """L^1 distance weighted by (C*/r^2)^{p0/(1-m)}.

    a is a radial state; b may be a state on the same grid, a Profile, or a
    plain array.  The weight blows up at r = 0 like r^{-2p0/(1-m)} but the
    integrand stays integrable; the first cell uses the closed-form
    power-law integral with the difference frozen at its innermost value.
    """
    if p is None:
        p = a.params
    grid = a.grid
    ua = _values_on(grid, a)
    ub = _values_on(grid, b)
    if not (0.0 < p0 < 0.5 * (1.0 - p.m) * (p.n - 2.0)):
        raise RegimeError(f"p0 = {p0!r} outside (0, (1-m)(n-2)/2)")
    d = np.abs(ua - ub)
    wexp = p0 / (1.0 - p.m)
    r_pos = grid[1:]
    integrand = d[1:] * (p.c_star / r_pos**2) ** wexp * r_pos ** (p.n - 1)
    total = float(np.trapezoid(integrand, r_pos))
    # first cell: integrand ~ d(0) C*^{wexp} r^{q}, q = n-1-2p0/(1-m) > 0
    q = p.n - 1.0 - 2.0 * p0 / (1.0 - p.m)
    total += d[1] * p.c_star**wexp * r_pos[0] ** (q + 1.0) / (q + 1.0)
    return shell_area(p.n) * total


def lambda_envelope(st, family: ProfileFamily, lam_lo: float, lam_hi: float,
                    tol: float = 1e-4, n_scan: int = 80) -> float:
    """Infimum of lambda such that the state sits below f_lambda node-wise.

    Scans a geometric lambda-grid, records the full feasibility mask (the
    feasible set need not be an interval in the non-monotone case), then
    bisects the lower boundary of the lowest feasible run down to tol.
    """
    grid = st.grid
    u = st.u
    p = family.params
    slack = 1e-12 * max(1.0, float(np.max(u)))

    def feasible(lam: float) -> bool:
        return bool(np.all(family.values(lam, grid) >= u - slack))

    lams = np.geomspace(lam_lo, lam_hi, n_scan)
    # the center value caps lambda from below (f_lam(0) = lam^{2/(1-m)} must
    # dominate u(0)); inserting that bound keeps the touching case
    # u = f_{lam*}, whose feasible set is a single point, findable
    lam_center = float(u[0]) ** (0.5 * (1.0 - p.m))
    if lam_lo <= lam_center <= lam_hi:
        lams = np.sort(np.append(lams, lam_center))
    mask = np.array([feasible(l) for l in lams])
    if not mask.any():
        raise NoFeasibleLambda(f"no feasible lambda in [{lam_lo!r}, {lam_hi!r}]")
    first = int(np.argmax(mask))
    if first == 0:
        return float(lams[0])
    lo, hi = float(lams[first - 1]), float(lams[first])
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class ContractionRecord:
    taus: np.ndarray
    wl1_pair_dist: np.ndarray
    dissipation: np.ndarray   # running a*-weighted double integral

    def budget_excess(self) -> float:
        """max over samples of (distance + dissipation - initial distance)/initial."""
        w0 = self.wl1_pair_dist[0]
        return float(np.max(self.wl1_pair_dist + self.dissipation - w0) / w0)


@dataclass(frozen=True)
class EnvelopeRecord:
    taus: np.ndarray
    lambda_env: np.ndarray
    feasibility_grid: np.ndarray


def contraction_monitor(run_a, run_b, p: ParamSet, f_upper: Profile) -> ContractionRecord:
    """Weighted L^1 contraction between two sampled runs in the monotone case.

    run_a/run_b are EvolutionReports that kept their sampled states on one
    grid; f_upper is the upper sandwich profile.  The dissipation integrand
    is a* |u - v| |(C/f_upper)^{1-m} - 1| C^{p0}, accumulated by trapezoid
    over the sample times.
    """
    reg = classify(p)
    if reg.label not in ("C1i", "C1ii"):
        raise RegimeError(f"contraction monitor is defined in C1 only, got {reg.label}")
    if p.p0 is None or p.a_star is None:
        raise RegimeError("ParamSet carries no p0/a_star")
    sa, sb = run_a.states, run_b.states
    if sa is None or sb is None:
        raise InsufficientSamples("runs must retain sampled states")
    if len(sa) != len(sb):
        raise GridMismatch("runs sampled at different times")
    grid = sa[0].grid
    if not np.array_equal(grid, sb[0].grid):
        raise GridMismatch("runs live on different grids")

    n, m = p.n, p.m
    wexp = p.p0 / (1.0 - m)
    r_pos = grid[1:]
    cpow = (p.c_star / r_pos**2) ** wexp
    fup = evaluate(f_upper, grid)
    csing = (p.c_star / r_pos**2) ** (1.0 / (1.0 - m))
    dweight = np.abs((csing / fup[1:]) ** (1.0 - m) - 1.0) * cpow
    area = shell_area(n)
    # first-cell exponents: plain q0, dissipation q1 (extra r^-2 from C^{1-m})
    q0 = n - 1.0 - 2.0 * p.p0 / (1.0 - m)
    q1 = q0 - 2.0

    taus = np.array([s.tau for s in sa])
    dist = np.empty_like(taus)
    rate = np.empty_like(taus)
    for i, (a, b) in enumerate(zip(sa, sb)):
        d = np.abs(a.u - b.u)
        dist[i] = weighted_l1_distance(a, b, p.p0, p)
        integ = float(np.trapezoid(d[1:] * dweight * r_pos ** (n - 1), r_pos))
        amp = d[1] * p.c_star**wexp * p.c_star / fup[0] ** (1.0 - m)
        integ += amp * r_pos[0] ** (q1 + 1.0) / (q1 + 1.0)
        rate[i] = p.a_star * area * integ
    diss = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(taus) * (rate[1:] + rate[:-1]))])
    return ContractionRecord(taus=taus, wl1_pair_dist=dist, dissipation=diss)


@dataclass(frozen=True)
class OriginalSlice:
    """One reconstructed original-variable snapshot u(|x|, t)."""

    x: np.ndarray
    u: np.ndarray
    t: float


def aronson_benilan_check(slices: Sequence[OriginalSlice], T: float, m: float) -> float:
    """Worst relative excess of u_t over u/((1-m)t) across the middle slice.

    Takes at least three consecutive reconstructed slices; u_t comes from
    the three-point nonuniform finite difference at the middle time, with
    the neighbors interpolated onto the middle grid in log-log coordinates.
    Negative return values mean the inequality holds with margin.
    """
    if len(slices) < 3:
        raise InsufficientSamples("need >= 3 consecutive slices")
    k = len(slices) // 2
    s0, s1, s2 = slices[k - 1], slices[k], slices[k + 1]
    if not (0.0 < s0.t < s1.t < s2.t < T):
        raise InsufficientSamples("slice times must be strictly increasing inside (0, T)")

    x_hi = min(s0.x[-1], s2.x[-1])
    sel = (s1.x > 0.0) & (s1.x <= x_hi)
    x = s1.x[sel]

    def interp_log(sl: OriginalSlice) -> np.ndarray:
        return np.exp(np.interp(np.log(x), np.log(sl.x[1:]), np.log(sl.u[1:])))

    u0, u2 = interp_log(s0), interp_log(s2)
    u1 = s1.u[sel]
    # nonuniform 3-point first derivative at t1
    h1 = s1.t - s0.t
    h2 = s2.t - s1.t
    ut = (-h2 / (h1 * (h1 + h2)) * u0
          + (h2 - h1) / (h1 * h2) * u1
          + h1 / (h2 * (h1 + h2)) * u2)
    rhs = u1 / ((1.0 - m) * s1.t)
    return float(np.max((ut - rhs) / rhs))
