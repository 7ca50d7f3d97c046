"""Shared fixtures: solved profiles, traces, and the desk-scale runs.

Everything heavy is session-scoped; the acceptance module and the unit
tests read from the same solves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List

import numpy as np
import pytest

import fdelab as F

N, M = 3, 0.2
BETA_C3, BETA_C1, BETA_C2 = 2.5, 3.0, 2.2
LAMS = (0.5, 1.0, 2.0)

# r_max per regime: far enough that |w| resolves down to 1e-8 for every
# lambda in LAMS (slower gamma_1 needs exponentially more range)
RMAX = {BETA_C3: 1e5, BETA_C1: 1e19, BETA_C2: 1e13}


@pytest.fixture(scope="session")
def ps_c3():
    return F.derive_params(N, M, BETA_C3)


@pytest.fixture(scope="session")
def ps_c1():
    return F.derive_params(N, M, BETA_C1)


@pytest.fixture(scope="session")
def ps_c2():
    return F.derive_params(N, M, BETA_C2)


@pytest.fixture(scope="session")
def profiles(ps_c3, ps_c1, ps_c2) -> Dict[float, Dict[float, F.Profile]]:
    """Independently solved profiles, keyed [beta][lambda]."""
    out: Dict[float, Dict[float, F.Profile]] = {}
    for p in (ps_c3, ps_c1, ps_c2):
        spec = F.GridSpec(r_max=RMAX[p.beta], nodes_per_decade=128)
        out[p.beta] = {lam: F.solve_profile(p, lam, spec) for lam in LAMS}
    return out


@pytest.fixture(scope="session")
def traces(profiles) -> Dict[float, Dict[float, F.WTrace]]:
    return {beta: {lam: F.to_log_trace(prof) for lam, prof in by_lam.items()}
            for beta, by_lam in profiles.items()}


@pytest.fixture(scope="session")
def fits(traces, ps_c3, ps_c1, ps_c2) -> Dict[float, Dict[float, F.AsymptoticFit]]:
    ps = {p.beta: p for p in (ps_c3, ps_c1, ps_c2)}
    out: Dict[float, Dict[float, F.AsymptoticFit]] = {}
    for beta, by_lam in traces.items():
        p = ps[beta]
        reg = F.classify(p)
        out[beta] = {lam: F.fit_second_order(tr, p, reg) for lam, tr in by_lam.items()}
    return out


@dataclass
class C1Desk:
    """Stabilization-run set: blend, stationary, and lower-bound runs."""

    p: F.ParamSet
    base: F.Profile
    grid: np.ndarray
    f1: np.ndarray
    flo: np.ndarray
    fhi: np.ndarray
    blend_run: F.EvolutionReport
    f1_run: F.EvolutionReport
    flo_run: F.EvolutionReport


@pytest.fixture(scope="session")
def c1_desk(ps_c1) -> C1Desk:
    p = ps_c1
    lam_lo, lam_hi, lam0 = 0.8, 1.25, 1.0
    grid = F.make_radial_grid(50.0 / lam_lo, nodes_per_decade=256)
    base = F.solve_profile(p, 1.0, F.GridSpec(r_max=lam_hi * grid[-1] * 1.01,
                                              nodes_per_decade=128))
    fam = F.ProfileFamily(base)
    f1 = fam.values(lam0, grid)
    flo = fam.values(lam_lo, grid)
    fhi = fam.values(lam_hi, grid)

    kw = dict(tau_end=20.0, sample_every=0.5, reference=base,
              weight_p0=p.p0, sup_radius=5.0, keep_states=True)
    blend = F.build_initial("sandwich_blend", p, [lam_lo, lam_hi, lam0],
                            blend={"weights": (0.5, 0.5), "r_lo": 2.0, "r_hi": 3.0},
                            grid=grid, base_profile=base)
    exact = F.build_initial("profile_exact", p, [lam0], grid=grid, base_profile=base)
    lower = F.build_initial("profile_exact", p, [lam_lo], grid=grid, base_profile=base)
    blend_run = F.evolve(blend, ab_tau=2.0, **kw)
    f1_run = F.evolve(exact, **kw)
    flo_run = F.evolve(lower, **kw)
    return C1Desk(p=p, base=base, grid=grid, f1=f1, flo=flo, fhi=fhi,
                  blend_run=blend_run, f1_run=f1_run, flo_run=flo_run)


@dataclass
class C2Desk:
    p: F.ParamSet
    base: F.Profile
    grid: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    run: F.EvolutionReport


@pytest.fixture(scope="session")
def c2_desk(ps_c2) -> C2Desk:
    p = ps_c2
    grid = F.make_radial_grid(50.0, nodes_per_decade=256)
    base = F.solve_profile(p, 1.0, F.GridSpec(r_max=2.0 * grid[-1] * 1.01,
                                              nodes_per_decade=128))
    fam = F.ProfileFamily(base)
    init = F.build_initial("min_profiles", p, [1.0, 2.0], grid=grid, base_profile=base)
    env = F.EnvelopeSettings(family=fam, lam_lo=0.02, lam_hi=1.02, tol=1e-4)
    run = F.evolve(init, tau_end=30.0, sample_every=1.0, envelope=env, keep_states=True)
    return C2Desk(p=p, base=base, grid=grid, f1=fam.values(1.0, grid),
                  f2=fam.values(2.0, grid), run=run)


@dataclass
class StationarityPair:
    drift_base: float
    drift_fine: float
    report_base: F.EvolutionReport


@pytest.fixture(scope="session")
def stationarity(ps_c1) -> StationarityPair:
    p = ps_c1
    base = F.solve_profile(p, 1.0, F.GridSpec(r_max=1e3, nodes_per_decade=128))
    drifts = {}
    rep_base = None
    for npd in (256, 512):
        grid = F.make_radial_grid(50.0, nodes_per_decade=npd)
        st = F.build_initial("profile_exact", p, [1.0], grid=grid, base_profile=base)
        rep = F.evolve(st, tau_end=1e9, sample_every=1e9, reference=base,
                       sup_radius=grid[-1], max_steps=1000)
        drifts[npd] = float(rep.sup_dist[-1])
        if npd == 256:
            rep_base = rep
    return StationarityPair(drift_base=drifts[256], drift_fine=drifts[512],
                            report_base=rep_base)
