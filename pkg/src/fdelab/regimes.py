"""Closed-form parameter algebra for the subcritical fast diffusion equation.

Everything here is exact arithmetic on (n, m, beta): the self-similar
exponents, the constant of the singular power-law solution, the quadratic
characteristic roots of the far-field linearization, and the case label
that decides whether profiles stabilize or collapse.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import DomainError, FdeLabError, SubcriticalBetaError, UnsupportedRegime

# Relative tolerance for detecting the exact case boundaries (beta = beta_1,
# beta = beta_0, m = (n-4)/(n-2)).  Closed-form evaluation keeps these
# quantities accurate to ~1e-15, so 1e-9 separates "on the boundary" from
# "near it" unambiguously.
BOUNDARY_RTOL = 1e-9

C1I, C1II, C2I, C2II, C3I, C3II, UNSUPPORTED = (
    "C1i", "C1ii", "C2i", "C2ii", "C3i", "C3ii", "Unsupported",
)


@dataclass(frozen=True)
class ParamSet:
    """All derived constants of an (n, m, beta) triple.

    Fields that only exist for part of the parameter range (characteristic
    roots below the oscillatory threshold, the weight exponent outside the
    monotone case) are None when absent.
    """

    n: int
    m: float
    beta: float
    alpha: float
    c_star: float
    beta_e: float
    beta_1: float
    beta_2: float
    beta_0: float
    a0: float
    gamma_1: Optional[float]
    gamma_2: Optional[float]
    a1: Optional[float]
    a2: Optional[float]
    c0_lin: Optional[float]
    p0: Optional[float]
    a_star: Optional[float]
    decay_rate: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass(frozen=True)
class Regime:
    """Case label plus the sign of A_1 it implies."""

    label: str
    sign_a1: str

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= BOUNDARY_RTOL * max(1.0, abs(a), abs(b))


def _label(n: int, m: float, beta: float, beta_0: float, beta_1: float) -> str:
    """Case table deciding the sign of A_1 across the parameter plane."""
    m_crit = (n - 4.0) / (n - 2.0)
    on_beta1 = _close(beta, beta_1)
    on_m_crit = n > 4 and _close(m, m_crit)
    if on_beta1:
        if n <= 4:
            return C3I
        if on_m_crit:
            # double root, beta_0 = beta_1; excluded from all three cases
            return UNSUPPORTED
        return C1II if m < m_crit else C3II
    if beta > beta_1:
        return C1I
    if beta > beta_0 and not _close(beta, beta_0):
        if n <= 4:
            return C2I
        if on_m_crit:
            return UNSUPPORTED
        return C1II if m < m_crit else C2II
    return UNSUPPORTED


def derive_params(n: int, m: float, beta: float) -> ParamSet:
    """Evaluate every derived constant of an (n, m, beta) triple.

    Raises DomainError outside n >= 3, 0 < m < (n-2)/n and
    SubcriticalBetaError below the existence threshold beta_e = m/(n-2-nm).
    Characteristic roots are populated only where they are real and
    relevant (beta > beta_0, or beta = beta_1); the weight exponent p0 and
    the contraction constant a_star only in the monotone case (C1).
    """
    if int(n) != n or n < 3:
        raise DomainError(f"dimension n must be an integer >= 3, got {n}")
    n = int(n)
    if not (0.0 < m < (n - 2.0) / n):
        raise DomainError(f"need 0 < m < (n-2)/n = {(n - 2.0) / n!r}, got m = {m!r}")
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")

    kdm = n - 2.0 - n * m  # n - 2 - nm > 0 in the subcritical range
    c_star = 2.0 * m * kdm / (1.0 - m)
    beta_e = m / kdm
    beta_1 = 1.0 / kdm
    beta_2 = math.sqrt(2.0 * (1.0 - m) / kdm) + ((n + 2.0) * m - (n - 2.0)) / (2.0 * kdm)
    beta_0 = max(beta_2, beta_e)
    if beta < beta_e and not _close(beta, beta_e):
        raise SubcriticalBetaError(f"beta = {beta!r} below beta_e = {beta_e!r}")

    alpha = (2.0 * beta + 1.0) / (1.0 - m)
    a0 = n - 2.0 - (n + 2.0) * m + 2.0 * beta * kdm
    decay_rate = n * beta - alpha

    label = _label(n, m, beta, beta_0, beta_1)
    # roots are reported above the oscillatory threshold and on the
    # explicit-solution line beta = beta_1, nowhere else
    want_gammas = (beta > beta_0 and not _close(beta, beta_0)) or _close(beta, beta_1)
    disc = a0 * a0 - 8.0 * kdm * (1.0 - m)

    gamma_1 = gamma_2 = a1 = a2 = c0_lin = p0 = a_star = None
    if want_gammas and disc >= -BOUNDARY_RTOL * a0 * a0:
        sq = math.sqrt(max(disc, 0.0))
        gamma_1 = (a0 - sq) / (2.0 * (1.0 - m))
        gamma_2 = (a0 + sq) / (2.0 * (1.0 - m))
        a1 = 1.0 / (1.0 - m) - beta * gamma_1
        a2 = 1.0 / (1.0 - m) - beta * gamma_2
        if gamma_2 - gamma_1 > BOUNDARY_RTOL:
            c0_lin = c_star / (gamma_2 - gamma_1)
        if label in (C1I, C1II):
            tail = n - 2.0 / (1.0 - m) - gamma_1
            if tail > 0.0:
                p0 = 0.5 * (1.0 - m) * tail
                a_star = (2.0 * m * p0 / (c_star * (1.0 - m))) * (gamma_1 + 2.0 * m / (1.0 - m))

    return ParamSet(
        n=n, m=m, beta=beta, alpha=alpha, c_star=c_star,
        beta_e=beta_e, beta_1=beta_1, beta_2=beta_2, beta_0=beta_0, a0=a0,
        gamma_1=gamma_1, gamma_2=gamma_2, a1=a1, a2=a2, c0_lin=c0_lin,
        p0=p0, a_star=a_star, decay_rate=decay_rate,
    )


def classify(p: ParamSet) -> Regime:
    """Map a ParamSet onto its case label.

    The label is decided by the exact case table, not by the floating-point
    sign of the computed A_1; the computed value is cross-checked against
    the table within 1e-9 because the boundary case is an exact zero.
    """
    label = _label(p.n, p.m, p.beta, p.beta_0, p.beta_1)
    sign = {
        C1I: "positive", C1II: "positive",
        C2I: "negative", C2II: "negative",
        C3I: "zero", C3II: "zero",
        UNSUPPORTED: "zero",
    }[label]
    if label != UNSUPPORTED and p.a1 is not None:
        scale = max(1.0, abs(p.beta * (p.gamma_1 or 0.0)))
        if sign == "zero" and abs(p.a1) > 1e-9 * scale:
            raise FdeLabError(f"label {label} implies A_1 = 0 but A_1 = {p.a1!r}")
        if sign == "positive" and p.a1 < -1e-9 * scale:
            raise FdeLabError(f"label {label} implies A_1 > 0 but A_1 = {p.a1!r}")
        if sign == "negative" and p.a1 > 1e-9 * scale:
            raise FdeLabError(f"label {label} implies A_1 < 0 but A_1 = {p.a1!r}")
    return Regime(label=label, sign_a1=sign)


def tail_exponent(p: ParamSet) -> float:
    """Radial integrability exponent of a profile-pair difference.

    Returns n - 2/(1-m) - gamma with gamma = gamma_1 in the C1/C2 cases and
    gamma = gamma_2 = 2 in the C3 case.  Nonnegative values mean the
    difference of two profiles is not integrable; negative values mean it is.
    """
    reg = classify(p)
    if reg.label == UNSUPPORTED:
        raise UnsupportedRegime(f"no tail exponent outside C1/C2/C3: {p.beta!r}")
    gamma = p.gamma_2 if reg.label in (C3I, C3II) else p.gamma_1
    return p.n - 2.0 / (1.0 - p.m) - gamma
