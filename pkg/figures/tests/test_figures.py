"""Figure rendering from synthetic files in the published schemas."""

import json
import math

import numpy as np
import pytest

from fdefigures import SchemaMismatch, render
from fdefigures.cli import main


@pytest.fixture()
def params_json(tmp_path):
    doc = {
        "params": {"n": 3, "m": 0.2, "beta": 3.0, "alpha": 8.75, "c_star": 0.2,
                   "beta_e": 0.5, "beta_1": 2.5, "beta_2": 2.0, "beta_0": 2.0,
                   "a0": 2.4, "gamma_1": 0.3819660112501051,
                   "gamma_2": 2.618033988749894, "a1": 0.104, "a2": -6.604,
                   "c0_lin": 0.0894, "p0": 0.0472, "a_star": 0.1041,
                   "decay_rate": 0.25},
        "regime": {"label": "C1i", "sign_a1": "positive"},
    }
    path = tmp_path / "params.json"
    path.write_text(json.dumps(doc))
    return path


def _write_profile_csv(path, lam=1.0):
    r = np.concatenate([[0.0], np.geomspace(1e-4, 1e3, 300)])
    f = lam**2.5 * (0.2 / (0.2 + (lam * r) ** 2)) ** 1.25
    fp = np.gradient(f, r + 1e-30)
    with open(path, "w") as fh:
        fh.write("r,f,fprime,r2f1m\n")
        for row in zip(r, f, fp, r**2 * f**0.8):
            fh.write(",".join(f"{v:.15e}" for v in row) + "\n")


def _write_trace_csv(path, gamma=0.3819660112501051):
    s = np.linspace(-5, 30, 500)
    w = -0.05 * np.exp(-gamma * s) / (1 + np.exp(-2 * (s + 3)))
    with open(path, "w") as fh:
        fh.write("s,g,w,phi,h\n")
        for si, wi in zip(s, w):
            fh.write(f"{si:.15e},{1 + wi:.15e},{wi:.15e},{12.5 * wi * wi:.15e},{0.0:.15e}\n")


def _write_report_csv(path, with_env=False):
    taus = np.linspace(0, 20, 41)
    l1 = 0.02 * np.exp(-0.25 * taus)
    lam = 1.0 / (1.0 + taus) if with_env else None
    with open(path, "w") as fh:
        fh.write("tau,sup_dist,l1_dist,wl1_dist,center_value,lambda_env\n")
        for i, t in enumerate(taus):
            env = f"{lam[i]:.15e}" if with_env else ""
            fh.write(f"{t:.15e},{0.1 * l1[i]:.15e},{l1[i]:.15e},,{1.0:.15e},{env}\n")


def _write_contraction_csv(path):
    taus = np.linspace(0, 20, 41)
    dist = 0.01 * np.exp(-0.3 * taus)
    diss = 0.01 - dist
    with open(path, "w") as fh:
        fh.write("tau,wl1_pair_dist,dissipation\n")
        for row in zip(taus, dist, diss):
            fh.write(",".join(f"{v:.15e}" for v in row) + "\n")


def test_profiles_kind(tmp_path, params_json):
    csvs = []
    for lam in (0.5, 1.0, 2.0):
        p = tmp_path / f"prof{lam}.csv"
        _write_profile_csv(p, lam)
        csvs.append(str(p))
    result = render("profiles", csvs, tmp_path / "fig-prof", str(params_json))
    for f in result["files"]:
        assert (tmp_path / f).exists() or f.startswith(str(tmp_path))


def test_w_decay_guide_slope_from_json(tmp_path, params_json):
    p = tmp_path / "trace.csv"
    _write_trace_csv(p)
    result = render("w_decay", [str(p)], tmp_path / "fig-w", str(params_json))
    # the guide slope is the JSON's gamma_1, not a refit
    assert result["guide_slope"] == pytest.approx(-0.3819660112501051, rel=1e-12)
    assert len(result["files"]) == 2
    assert result["files"][0].endswith(".png") and result["files"][1].endswith(".svg")


def test_norm_decay_guide_rate_from_json(tmp_path, params_json):
    p = tmp_path / "rep.csv"
    _write_report_csv(p)
    result = render("norm_decay", [str(p)], tmp_path / "fig-n", str(params_json))
    assert result["guide_rate"] == pytest.approx(0.25, rel=1e-12)


def test_envelope_kind(tmp_path):
    p = tmp_path / "rep.csv"
    _write_report_csv(p, with_env=True)
    result = render("envelope", [str(p)], tmp_path / "fig-env")
    assert len(result["files"]) == 2


def test_envelope_requires_column(tmp_path):
    p = tmp_path / "rep.csv"
    _write_report_csv(p, with_env=False)
    with pytest.raises(SchemaMismatch):
        render("envelope", [str(p)], tmp_path / "fig-env")


def test_contraction_budget_kind(tmp_path):
    p = tmp_path / "con.csv"
    _write_contraction_csv(p)
    result = render("contraction_budget", [str(p)], tmp_path / "fig-c")
    assert len(result["files"]) == 2


def test_rerender_idempotent(tmp_path):
    p = tmp_path / "con.csv"
    _write_contraction_csv(p)
    r1 = render("contraction_budget", [str(p)], tmp_path / "fig-c")
    r2 = render("contraction_budget", [str(p)], tmp_path / "fig-c")
    assert r1["files"] == r2["files"]


def test_schema_mismatch_wrong_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(SchemaMismatch):
        render("profiles", [str(p)], tmp_path / "fig")


def test_empty_csv_clean_error(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(SchemaMismatch):
        render("profiles", [str(p)], tmp_path / "fig")
    assert not (tmp_path / "fig.png").exists()


def test_cli_success_and_exit_codes(tmp_path, params_json, capsys):
    p = tmp_path / "trace.csv"
    _write_trace_csv(p)
    code = main(["w_decay", str(p), "--params", str(params_json),
                 "--out", str(tmp_path / "cli-fig")])
    assert code == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 2 and out[0].endswith(".png")

    bad = tmp_path / "bad.csv"
    bad.write_text("x\n")
    assert main(["w_decay", str(bad), "--params", str(params_json),
                 "--out", str(tmp_path / "nope")]) == 2
    # guide-line kinds refuse to run without the params JSON
    assert main(["w_decay", str(p), "--out", str(tmp_path / "nope2")]) == 2


def test_missing_file_exit_2(tmp_path):
    assert main(["profiles", str(tmp_path / "absent.csv"),
                 "--out", str(tmp_path / "f")]) == 2
