"""Log-variable diagnostics and second-order tail extraction.

A solved profile is transformed to s = log r via
g(s) = [C*^{-1/(1-m)} r^{2/(1-m)} f(r)]^m and w = g - 1, which decays like
e^{-gamma s} with gamma a characteristic root.  This module builds those
traces, fits the decay (coefficient and exponent), and verifies the two
first-integral identities and the limit laws that tie w to the truncated
integrals I_i = int e^{gamma_i t} Phi(t) dt, Phi = phi(w),
phi(z) = (1+z)^{1/m} - 1 - z/m.

Truncation of the integrals at the lower end uses the exact power-law form
of g below the series-start radius (g = c e^{2ms/(1-m)} with
c = [C*^{-1/(1-m)} f(0)]^m there), so the trace effectively reaches
s = -infinity: every tail moment has a closed form on that segment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (
    DivergentIntegral,
    InsufficientRange,
    SignMismatch,
    SlopeMismatch,
)
from .profile import Profile
from .regimes import C3I, C3II, UNSUPPORTED, ParamSet, Regime

WINDOW_HI = 1e-3   # |w| above this feels the next-order correction
WINDOW_LO = 1e-8   # |w| below this approaches integration noise
MIN_WINDOW_POINTS = 30


@dataclass(frozen=True)
class WTrace:
    """Log-variable fields of one profile on a uniform s-grid.

    The grid extends below the solver's innermost radius by the exact
    power-law segment, far enough that e^{gamma_1 s_lo} sup Phi < 1e-10.
    """

    params: ParamSet
    lam: float
    s: np.ndarray
    g: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    h: np.ndarray
    wprime: np.ndarray
    ds: float
    s_series_end: float   # below this s the power-law segment was used
    c_amp: float          # g = c_amp * exp(q s) on the power-law segment
    q: float

    @property
    def s_max(self) -> float:
        return float(self.s[-1])


@dataclass(frozen=True)
class AsymptoticFit:
    gamma_used: float
    b_lambda: float
    window: Tuple[float, float]
    residual: float
    i1: float
    i2: float

    def to_dict(self) -> dict:
        return {
            "gamma_used": self.gamma_used,
            "b_lambda": self.b_lambda,
            "window": list(self.window),
            "residual": self.residual,
            "i1": self.i1,
            "i2": self.i2,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def phi_of_w(w, m: float):
    """phi(w) = (1+w)^{1/m} - 1 - w/m, stable down to |w| ~ 1e-13.

    Near zero the expm1 route cancels, so a quartic Taylor polynomial
    takes over below |w| = 1e-3 (relative truncation there ~ (1/m)^5 w^3).
    """
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    inv = 1.0 / m
    small = np.abs(w) < 1e-3
    a2 = inv * (inv - 1.0) / 2.0
    a3 = a2 * (inv - 2.0) / 3.0
    a4 = a3 * (inv - 3.0) / 4.0
    ws = w[small]
    out[small] = ws * ws * (a2 + ws * (a3 + ws * a4))
    wb = w[~small]
    out[~small] = np.expm1(np.log1p(wb) * inv) - wb * inv
    return out


def _dphi_dw(w, m: float):
    # phi'(w) = [(1+w)^{1/m - 1} - 1]/m
    return np.expm1(np.log1p(w) * (1.0 / m - 1.0)) / m


def _deriv4(y: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered first derivative on a uniform grid."""
    d = np.empty_like(y)
    d[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * h)
    # one-sided 2nd order at the edges; fit windows never reach them
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
    d[1] = (y[2] - y[0]) / (2.0 * h)
    d[-2] = (y[-1] - y[-3]) / (2.0 * h)
    d[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
    return d


def to_log_trace(prof: Profile, s_lo: Optional[float] = None) -> WTrace:
    """Build the log-variable trace of a solved profile.

    Requires r_max >= 1e3 so the w -> 0 tail is at least partly resolved.
    The grid keeps the profile's per-decade density; w' comes from
    fourth-order centered differences on that grid.
    """
    p = prof.params
    m = p.m
    if prof.r_max < 0.999e3:
        raise InsufficientRange(f"trace needs r_max >= 1e3, profile stops at {prof.r_max!r}")

    ds = float(prof.s_tail[1] - prof.s_tail[0])
    s_series_end = math.log(prof.grid[1])  # innermost positive node
    c_amp = p.c_star ** (-m / (1.0 - m)) * prof.center_value**m
    q = 2.0 * m / (1.0 - m)

    if s_lo is None:
        gamma = p.gamma_1 if p.gamma_1 else 1.0
        phi_sup = (1.0 - m) / m
        s_lo = min(-(math.log(1e10 * phi_sup)) / gamma - 2.0, s_series_end)
    s_max = float(prof.s_tail[-1])
    n_total = int(math.ceil((s_max - s_lo) / ds))
    s = s_max - ds * np.arange(n_total + 1)[::-1]

    w = np.empty_like(s)
    series = s < s_series_end
    mid = (~series) & (s < prof.s_tail[0] - 0.5 * ds)
    tail = ~series & ~mid

    w[series] = c_amp * np.exp(q * s[series]) - 1.0
    if mid.any():
        # inner-phase radii: recompute g from the stored profile values
        from .profile import evaluate
        r_mid = np.exp(s[mid])
        f_mid = evaluate(prof, r_mid)
        w[mid] = p.c_star ** (-m / (1.0 - m)) * np.exp(q * s[mid]) * f_mid**m - 1.0
    n_tail = int(tail.sum())
    w[tail] = prof.w_tail[-n_tail:]

    g = 1.0 + w
    phi = phi_of_w(w, m)
    wprime = _deriv4(w, ds)
    h = -p.c_star * (p.beta * _dphi_dw(w, m) * wprime + phi / (1.0 - m))
    for arr in (s, g, w, phi, h, wprime):
        arr.setflags(write=False)
    return WTrace(params=p, lam=prof.lam, s=s, g=g, w=w, phi=phi, h=h,
                  wprime=wprime, ds=ds, s_series_end=s_series_end,
                  c_amp=c_amp, q=q)


def _tail_moment(tr: WTrace, gamma: float, s0: float) -> float:
    """Exact int_{-inf}^{s0} e^{gamma t} Phi(t) dt on the power-law segment."""
    m = tr.params.m
    c, q = tr.c_amp, tr.q
    t1 = (1.0 - m) / (m * gamma) * math.exp(gamma * s0)
    t2 = -(c / m) * math.exp((gamma + q) * s0) / (gamma + q)
    t3 = c ** (1.0 / m) * math.exp((gamma + q / m) * s0) / (gamma + q / m)
    return t1 + t2 + t3


def _cumulative_moment(tr: WTrace, gamma: float) -> np.ndarray:
    """J(s) = int_{-inf}^{s} e^{gamma t} Phi(t) dt on the whole trace grid."""
    integrand = np.exp(gamma * tr.s) * tr.phi
    J = cumulative_trapezoid(integrand, tr.s, initial=0.0)
    return J + _tail_moment(tr, gamma, float(tr.s[0]))


def _fit_window(tr: WTrace) -> slice:
    """Grid window where 1e-8 < |w| < 1e-3, taken after the last 1e-3 crossing."""
    aw = np.abs(tr.w)
    above_hi = np.nonzero(aw >= WINDOW_HI)[0]
    above_lo = np.nonzero(aw >= WINDOW_LO)[0]
    if above_hi.size == 0 or above_lo.size == 0:
        raise InsufficientRange("no tail window: |w| never reaches the fit band")
    start = int(above_hi[-1]) + 1
    stop = int(above_lo[-1]) + 1
    if stop - start < MIN_WINDOW_POINTS:
        raise InsufficientRange(
            f"tail window has {stop - start} points; extend r_max to resolve |w| down to 1e-8"
        )
    return slice(start, stop)


def _gamma_for(reg: Regime, p: ParamSet) -> float:
    return p.gamma_2 if reg.label in (C3I, C3II) else p.gamma_1


def fit_second_order(tr: WTrace, p: ParamSet, reg: Regime) -> AsymptoticFit:
    """Least-squares fit of the tail decay of w and the coefficient B_lambda.

    log|w| is fitted linearly in s over the window; the slope must land
    within 5% of -gamma (gamma_1 for C1/C2, gamma_2 = 2 for C3) and the
    sign of w must match the regime.  B_lambda is |w| e^{gamma s}/m
    extrapolated to s = infinity against the next correction mode.
    """
    if reg.label == UNSUPPORTED:
        raise SignMismatch("no second-order expansion outside C1/C2/C3")
    gamma = _gamma_for(reg, p)
    win = _fit_window(tr)
    s_w = tr.s[win]
    w_w = tr.w[win]

    want_negative = reg.sign_a1 in ("positive", "zero")
    if want_negative and np.any(w_w >= 0.0):
        raise SignMismatch("w must be negative on the tail in the monotone cases")
    if not want_negative and np.any(w_w <= 0.0):
        raise SignMismatch("w must be positive on the tail in the non-monotone case")

    log_aw = np.log(np.abs(w_w))
    slope, intercept = np.polyfit(s_w, log_aw, 1)
    if abs(slope + gamma) > 0.05 * gamma:
        raise SlopeMismatch(f"fitted slope {slope!r} vs required {-gamma!r} (5% band)")
    residual = float(np.max(np.abs(log_aw - (slope * s_w + intercept))))

    # extrapolate b(s) = |w| e^{gamma s}/m against the next decaying mode:
    # relative correction e^{-(gamma_2-gamma_1)s} off the C3 line, e^{-gamma_2 s} on it
    delta = p.gamma_2 if reg.label in (C3I, C3II) else p.gamma_2 - p.gamma_1
    b = np.abs(w_w) * np.exp(gamma * s_w) / p.m
    x = np.exp(-delta * (s_w - s_w[0]))
    _, b_inf = np.polyfit(x, b, 1)

    i1 = float(_cumulative_moment(tr, p.gamma_1)[-1])
    i2 = float(_cumulative_moment(tr, p.gamma_2)[-1])
    return AsymptoticFit(gamma_used=float(gamma), b_lambda=float(b_inf),
                         window=(float(s_w[0]), float(s_w[-1])),
                         residual=residual, i1=i1, i2=i2)


def verify_integral_identity(tr: WTrace, p: ParamSet) -> float:
    """Residual of the two first-integral identities for w.

    Checks w' + gamma_2 w = -C* A_1 e^{-gamma_1 s} J_1(s) - C* beta Phi and
    the companion with indices swapped, by trapezoid quadrature of
    J_i(s) = int_{-inf}^s e^{gamma_i t} Phi dt on the trace grid.  Returns
    the worst relative residual over the upper half of the fit window.
    """
    if np.max(np.abs(tr.w)) < 1e-12:
        return 0.0
    if p.gamma_1 is None:
        raise InsufficientRange("identities need real characteristic roots")
    win = _fit_window(tr)
    mid = (win.start + win.stop) // 2
    sl = slice(mid, win.stop)

    worst = 0.0
    for g_fast, g_slow, a_coef in ((p.gamma_2, p.gamma_1, p.a1), (p.gamma_1, p.gamma_2, p.a2)):
        J = _cumulative_moment(tr, g_slow)
        mem = p.c_star * a_coef * np.exp(-g_slow * tr.s) * J
        local = p.c_star * p.beta * tr.phi
        lhs = tr.wprime + g_fast * tr.w
        resid = np.abs(lhs + mem + local)[sl]
        scale = np.maximum.reduce([
            np.abs(tr.wprime[sl]), np.abs(g_fast * tr.w[sl]),
            np.abs(mem[sl]), np.abs(local[sl]),
        ])
        worst = max(worst, float(np.max(resid / np.maximum(scale, 1e-300))))
    return worst


def compute_limits(tr: WTrace, p: ParamSet) -> Tuple[float, float]:
    """Tail limit of e^{gamma s} w against its integral representation.

    Returns (extrapolated limit of e^{gamma s} w, -C0 A_1 I_1) in the
    generic case, or (..., C0 A_2 I_2) when A_1 = 0.  The truncated
    integral must be stable to three digits over the last decade.
    """
    if np.max(np.abs(tr.w)) < 1e-12:
        return 0.0, 0.0
    if p.gamma_1 is None or p.a1 is None:
        raise InsufficientRange("limits need real characteristic roots")
    degenerate = abs(p.a1) <= 1e-9 * max(1.0, p.beta * p.gamma_1)
    gamma = p.gamma_2 if degenerate else p.gamma_1
    J = _cumulative_moment(tr, gamma)
    i_full = float(J[-1])
    back = np.searchsorted(tr.s, tr.s[-1] - math.log(10.0))
    i_back = float(J[back])
    if abs(i_full - i_back) > 1e-3 * abs(i_full):
        raise DivergentIntegral(
            f"I changed by {abs(i_full - i_back) / abs(i_full):.2e} over the last decade"
        )
    rhs = p.c0_lin * p.a2 * i_full if degenerate else -p.c0_lin * p.a1 * i_full

    win = _fit_window(tr)
    s_w = tr.s[win]
    E = tr.w[win] * np.exp(gamma * s_w)
    delta = p.gamma_2 if degenerate else p.gamma_2 - p.gamma_1
    x = np.exp(-delta * (s_w - s_w[0]))
    _, e_inf = np.polyfit(x, E, 1)
    return float(e_inf), float(rhs)


def write_trace_csv(tr: WTrace, path) -> None:
    """Trace CSV: s, g, w, phi, h with 16 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("s,g,w,phi,h\n")
        for row in zip(tr.s, tr.g, tr.w, tr.phi, tr.h):
            fh.write(",".join(f"{v:.15e}" for v in row) + "\n")
