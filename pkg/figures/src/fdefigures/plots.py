"""The five figure kinds rendered from fdelab CSV outputs.

Guide-line slopes and rates are read from the CLI's parameter JSON, never
recomputed here.  Each renderer writes both PNG and SVG next to the
requested stem and returns the written paths plus the guide values used.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    CONTRACTION_COLUMNS,
    PROFILE_COLUMNS,
    REPORT_COLUMNS,
    TRACE_COLUMNS,
    SchemaMismatch,
    read_csv,
    read_params_json,
)


def _save(fig, out_base):
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    paths = [out_base.with_suffix(".png"), out_base.with_suffix(".svg")]
    for p in paths:
        fig.savefig(p, bbox_inches="tight", dpi=150)
    plt.close(fig)
    return [str(p) for p in paths]


def _gamma_from_params(doc):
    label = doc["regime"]["label"]
    params = doc["params"]
    gamma = params["gamma_2"] if label.startswith("C3") else params["gamma_1"]
    if gamma is None:
        raise SchemaMismatch("params JSON carries no characteristic root")
    return float(gamma)


def render_profiles(csv_paths, out_base, params_json=None):
    """Profile family f_lambda(r) on log-log axes, with the singular envelope."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    r_hi = 0.0
    for path in csv_paths:
        cols = read_csv(path, PROFILE_COLUMNS)
        pos = cols["r"] > 0
        ax.loglog(cols["r"][pos], cols["f"][pos], label=Path(path).stem)
        r_hi = max(r_hi, cols["r"][-1])
    meta = {}
    if params_json:
        doc = read_params_json(params_json)
        c_star, m = doc["params"]["c_star"], doc["params"]["m"]
        rr = np.geomspace(1e-2, r_hi, 200)
        ax.loglog(rr, (c_star / rr**2) ** (1 / (1 - m)), "k--", lw=1,
                  label=r"$(C_*/r^2)^{1/(1-m)}$")
        meta["c_star"] = c_star
    ax.set_xlabel(r"$r$")
    ax.set_ylabel(r"$f_\lambda(r)$")
    ax.legend(fontsize=8)
    return {"files": _save(fig, out_base), **meta}


def render_w_decay(csv_paths, out_base, params_json):
    """|w(s)| on a log axis with the characteristic-root guide line."""
    doc = read_params_json(params_json)
    gamma = _gamma_from_params(doc)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    s_anchor = w_anchor = None
    for path in csv_paths:
        cols = read_csv(path, TRACE_COLUMNS)
        aw = np.abs(cols["w"])
        keep = aw > 1e-14
        ax.semilogy(cols["s"][keep], aw[keep], label=Path(path).stem)
        tail = aw > 1e-6
        if tail.any() and s_anchor is None:
            idx = np.nonzero(tail)[0][-1]
            s_anchor, w_anchor = cols["s"][idx], aw[idx]
    if s_anchor is not None:
        ss = np.linspace(s_anchor - 12.0, s_anchor + 2.0, 50)
        ax.semilogy(ss, w_anchor * np.exp(-gamma * (ss - s_anchor)), "k--", lw=1,
                    label=rf"slope $-\gamma = {-gamma:.4f}$")
    ax.set_xlabel(r"$s = \log r$")
    ax.set_ylabel(r"$|w(s)|$")
    ax.legend(fontsize=8)
    return {"files": _save(fig, out_base), "guide_slope": -gamma}


def render_envelope(csv_paths, out_base, params_json=None):
    """lambda(tau) from an evolution report."""
    (path,) = csv_paths
    cols = read_csv(path, REPORT_COLUMNS)
    lam = cols["lambda_env"]
    if np.all(np.isnan(lam)):
        raise SchemaMismatch(f"{path}: lambda_env column is empty")
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(cols["tau"], lam, marker="o", ms=3)
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$\lambda(\tau)$")
    return {"files": _save(fig, out_base)}


def render_norm_decay(csv_paths, out_base, params_json):
    """L^1 distance decay with the e^{-(n beta - alpha) tau} reference line."""
    doc = read_params_json(params_json)
    rate = float(doc["params"]["decay_rate"])
    (path,) = csv_paths
    cols = read_csv(path, REPORT_COLUMNS)
    tau, l1 = cols["tau"], cols["l1_dist"]
    keep = ~np.isnan(l1) & (l1 > 0)
    if not keep.any():
        raise SchemaMismatch(f"{path}: l1_dist column is empty")
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.semilogy(tau[keep], l1[keep], label=r"$\|\tilde u - f_{\lambda_0}\|_{L^1}$")
    t0, v0 = tau[keep][0], l1[keep][0]
    ax.semilogy(tau[keep], v0 * np.exp(-rate * (tau[keep] - t0)), "k--", lw=1,
                label=rf"$e^{{-{rate:.3g}\,\tau}}$")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel("distance")
    ax.legend(fontsize=8)
    return {"files": _save(fig, out_base), "guide_rate": rate}


def render_contraction_budget(csv_paths, out_base, params_json=None):
    """Pair distance, dissipation, and their sum against the initial level."""
    (path,) = csv_paths
    cols = read_csv(path, CONTRACTION_COLUMNS)
    tau = cols["tau"]
    dist = cols["wl1_pair_dist"]
    diss = cols["dissipation"]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(tau, dist, label=r"$\|\tilde u - \tilde v\|_{L^1(\mathcal{C}^{p_0})}$")
    ax.plot(tau, diss, label=r"$a_*\int\!\!\int$ dissipation")
    ax.plot(tau, dist + diss, label="sum")
    ax.axhline(dist[0], color="k", ls="--", lw=1, label="initial distance")
    ax.set_xlabel(r"$\tau$")
    ax.legend(fontsize=8)
    return {"files": _save(fig, out_base)}


RENDERERS = {
    "profiles": render_profiles,
    "w_decay": render_w_decay,
    "envelope": render_envelope,
    "norm_decay": render_norm_decay,
    "contraction_budget": render_contraction_budget,
}

NEEDS_PARAMS = {"w_decay", "norm_decay"}


def render(kind, csv_paths, out_base, params_json=None):
    if kind not in RENDERERS:
        raise SchemaMismatch(f"unknown figure kind {kind!r}")
    if kind in NEEDS_PARAMS and params_json is None:
        raise SchemaMismatch(f"figure kind {kind!r} needs --params for its guide line")
    return RENDERERS[kind](csv_paths, out_base, params_json)
