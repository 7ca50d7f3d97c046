"""Command-line surface: params, profile, evolve, sweep.

All computation is configured through JSON documents (schema-validated,
unknown keys rejected) so runs are reproducible byte for byte.  Exit codes:
2 for domain/validation errors, 3 for solver failures.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import asymptotics, diagnostics, evolver, profile, regimes
from .errors import FdeLabError, SchemaError

_EXIT_DOMAIN = 2
_EXIT_SOLVER = 3

_DOMAIN_ERRORS = (
    SchemaError,
    regimes.DomainError,
    regimes.SubcriticalBetaError,
)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv_atomic(write_fn, obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        write_fn(obj, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_schema(doc: dict, schema: dict, where: str) -> None:
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected an object")
    for key in doc:
        if key not in schema:
            raise SchemaError(f"{where}: unknown key {key!r}")
    for key, rule in schema.items():
        required, kind = rule[0], rule[1]
        if key not in doc:
            if required:
                raise SchemaError(f"{where}: missing required key {key!r}")
            continue
        val = doc[key]
        if kind == "object":
            _check_schema(val, rule[2], f"{where}.{key}")
        elif kind == "number":
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise SchemaError(f"{where}.{key}: expected a number")
        elif kind == "int":
            if not isinstance(val, int) or isinstance(val, bool):
                raise SchemaError(f"{where}.{key}: expected an integer")
        elif kind == "string":
            if not isinstance(val, str):
                raise SchemaError(f"{where}.{key}: expected a string")
        elif kind == "bool":
            if not isinstance(val, bool):
                raise SchemaError(f"{where}.{key}: expected a boolean")
        elif kind == "number_list":
            if (not isinstance(val, list) or not val
                    or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in val)):
                raise SchemaError(f"{where}.{key}: expected a non-empty list of numbers")
        else:  # pragma: no cover
            raise AssertionError(kind)


_PARAMS_SCHEMA = {"n": (True, "int"), "m": (True, "number"), "beta": (True, "number")}
_GRID_SCHEMA = {
    "r_inner": (False, "number"), "r_max": (False, "number"),
    "nodes_per_decade": (False, "int"), "rtol": (False, "number"), "atol": (False, "number"),
}
_PROFILE_SCHEMA = {
    "params": (True, "object", _PARAMS_SCHEMA),
    "lambda": (False, "number"),
    "lambdas": (False, "number_list"),
    "grid": (False, "object", _GRID_SCHEMA),
    "fit": (False, "bool"),
    "identities": (False, "bool"),
    "prefix": (False, "string"),
}
_INITIAL_SCHEMA = {
    "kind": (True, "string"),
    "lambdas": (True, "number_list"),
    "blend": (False, "object", {
        "weights": (False, "number_list"), "r_lo": (False, "number"), "r_hi": (False, "number"),
    }),
}
_EVOLVE_SCHEMA = {
    "params": (True, "object", _PARAMS_SCHEMA),
    "grid": (False, "object", {
        "R": (False, "number"), "nodes_per_decade": (False, "int"),
        "core_scale": (False, "number"),
    }),
    "initial": (True, "object", _INITIAL_SCHEMA),
    "tau_end": (True, "number"),
    "sample_every": (True, "number"),
    "max_steps": (False, "int"),
    "reference_lambda": (False, "number"),
    "weighted": (False, "bool"),
    "sup_radius": (False, "number"),
    "envelope": (False, "object", {
        "lam_lo": (True, "number"), "lam_hi": (True, "number"),
        "tol": (False, "number"), }),
    "contraction_partner": (False, "object", _INITIAL_SCHEMA),
    "ab_tau": (False, "number"),
    "prefix": (False, "string"),
}


def _load_config(path_arg: str) -> dict:
    path = Path(path_arg)
    if path.exists():
        text = path.read_text(encoding="utf-8")
    else:
        name = path_arg if path_arg.endswith(".json") else path_arg + ".json"
        resource = importlib.resources.files("fdelab").joinpath("configs", name)
        if not resource.is_file():
            raise SchemaError(f"config not found: {path_arg!r} (no file, no bundled config)")
        text = resource.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from exc


def _derive(doc: dict) -> regimes.ParamSet:
    return regimes.derive_params(doc["n"], doc["m"], doc["beta"])


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_params(args) -> int:
    p = regimes.derive_params(args.n, args.m, args.beta)
    reg = regimes.classify(p)
    sys.stdout.write(_json_dumps({"params": p.to_dict(), "regime": reg.to_dict()}))
    return 0


def _profile_bundle(p, reg, lam, spec, want_fit, want_identities, out, prefix):
    prof = profile.solve_profile(p, lam, spec)
    tag = f"{prefix}-lam{lam:g}"
    _write_csv_atomic(profile.write_profile_csv, prof, out / f"{tag}.csv")
    result = {"lambda": lam, "profile_csv": f"{tag}.csv"}
    if want_fit:
        tr = asymptotics.to_log_trace(prof)
        _write_csv_atomic(asymptotics.write_trace_csv, tr, out / f"{tag}-trace.csv")
        fit = asymptotics.fit_second_order(tr, p, reg)
        fit_doc = fit.to_dict()
        if want_identities:
            fit_doc["identity_residual"] = asymptotics.verify_integral_identity(tr, p)
            lim, rhs = asymptotics.compute_limits(tr, p)
            fit_doc["limit_lhs"] = lim
            fit_doc["limit_rhs"] = rhs
            fit_doc["limit_gap"] = abs(lim - rhs) / abs(rhs) if rhs else 0.0
        _atomic_write(out / f"{tag}-fit.json", _json_dumps(fit_doc))
        result["fit"] = fit_doc
    return result


def _run_profile_config(doc: dict, out: Path, threads: int, multi: bool) -> int:
    _check_schema(doc, _PROFILE_SCHEMA, "config")
    p = _derive(doc["params"])
    reg = regimes.classify(p)
    grid_doc = doc.get("grid", {})
    spec = profile.GridSpec(**grid_doc)
    prefix = doc.get("prefix", "profile")
    want_fit = doc.get("fit", True)
    want_id = doc.get("identities", False)
    if multi:
        lams = doc.get("lambdas")
        if not lams:
            raise SchemaError("sweep config needs 'lambdas'")
    else:
        if "lambda" not in doc:
            raise SchemaError("profile config needs 'lambda'")
        lams = [doc["lambda"]]

    def job(lam):
        return _profile_bundle(p, reg, lam, spec, want_fit, want_id, out, prefix)

    if threads > 1 and len(lams) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, lams))
    else:
        results = [job(lam) for lam in lams]

    summary = {"params": p.to_dict(), "regime": reg.to_dict(), "runs": results}
    if want_fit and len(lams) > 1:
        gamma = results[0]["fit"]["gamma_used"]
        collapsed = [r["fit"]["b_lambda"] * r["lambda"] ** gamma for r in results]
        ref = collapsed[0]
        summary["scaling_check"] = {
            "gamma": gamma,
            "b_collapsed": collapsed,
            "max_collapse_deviation": max(abs(c / ref - 1.0) for c in collapsed),
        }
    _atomic_write(out / f"{prefix}-params.json", _json_dumps(summary))
    return 0


def cmd_profile(args) -> int:
    return _run_profile_config(_load_config(args.config), Path(args.out), args.threads, multi=False)


def cmd_sweep(args) -> int:
    return _run_profile_config(_load_config(args.config), Path(args.out), args.threads, multi=True)


def cmd_evolve(args) -> int:
    doc = _load_config(args.config)
    _check_schema(doc, _EVOLVE_SCHEMA, "config")
    out = Path(args.out)
    p = _derive(doc["params"])
    prefix = doc.get("prefix", "run")

    init_doc = doc["initial"]
    lams = list(init_doc["lambdas"])
    grid_doc = doc.get("grid", {})
    R = grid_doc.get("R", 50.0 / min(lams))
    npd = grid_doc.get("nodes_per_decade", 256)
    core = grid_doc.get("core_scale", 0.1)
    grid = evolver.make_radial_grid(R, npd, core)

    need = set(lams) | {init_doc["lambdas"][0]}
    ref_lam = doc.get("reference_lambda")
    if ref_lam is not None:
        need.add(ref_lam)
    partner = doc.get("contraction_partner")
    if partner is not None:
        need |= set(partner["lambdas"])
    env_doc = doc.get("envelope")
    lam_reach = max(max(need), env_doc["lam_hi"] if env_doc else 0.0)
    spec = profile.GridSpec(r_max=max(lam_reach * R * 1.0001, 1e3), nodes_per_decade=128)
    base = profile.solve_profile(p, 1.0, spec)
    fam = profile.ProfileFamily(base)

    def make_state(idoc):
        return evolver.build_initial(idoc["kind"], p, list(idoc["lambdas"]),
                                     blend=idoc.get("blend"), grid=grid,
                                     base_profile=base)

    init = make_state(init_doc)
    reference = profile.rescale_profile(base, ref_lam) if ref_lam is not None else None
    weight_p0 = p.p0 if doc.get("weighted", False) else None
    env = None
    if env_doc is not None:
        env = evolver.EnvelopeSettings(family=fam, lam_lo=env_doc["lam_lo"],
                                       lam_hi=env_doc["lam_hi"],
                                       tol=env_doc.get("tol", 1e-4))
    keep = partner is not None
    rep = evolver.evolve(init, doc["tau_end"], doc["sample_every"],
                         reference=reference, weight_p0=weight_p0,
                         sup_radius=doc.get("sup_radius"), envelope=env,
                         max_steps=doc.get("max_steps"), keep_states=keep,
                         ab_tau=doc.get("ab_tau"))
    _write_csv_atomic(evolver.write_report_csv, rep, out / f"{prefix}-report.csv")
    _atomic_write(out / f"{prefix}-params.json",
                  _json_dumps({"params": p.to_dict(), "regime": regimes.classify(p).to_dict()}))

    if partner is not None:
        other = make_state(partner)
        rep_b = evolver.evolve(other, doc["tau_end"], doc["sample_every"],
                               reference=reference, weight_p0=weight_p0,
                               sup_radius=doc.get("sup_radius"),
                               max_steps=doc.get("max_steps"), keep_states=True)
        f_upper = profile.rescale_profile(base, max(lams))
        rec = diagnostics.contraction_monitor(rep, rep_b, p, f_upper)
        _write_csv_atomic(evolver.write_contraction_csv, rec, out / f"{prefix}-contraction.csv")

    if doc.get("ab_tau") is not None and rep.ab_slices:
        T = 1.0
        slices = [evolver.reconstruct_original(s, T, T * (1.0 - np.exp(-s.tau)))
                  for s in rep.ab_slices]
        violation = diagnostics.aronson_benilan_check(slices, T, p.m)
        _atomic_write(out / f"{prefix}-ab.json",
                      _json_dumps({"max_relative_violation": violation}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fdelab",
                                 description="fast diffusion extinction laboratory")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="parallel solves for sweeps")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("params", help="derived constants and regime label as JSON")
    sp.add_argument("n", type=int)
    sp.add_argument("m", type=float)
    sp.add_argument("beta", type=float)
    sp.set_defaults(fn=cmd_params)

    for name, fn, hlp in (("profile", cmd_profile, "solve one profile, export CSV and fit"),
                          ("sweep", cmd_sweep, "solve a lambda sweep with scaling check"),
                          ("evolve", cmd_evolve, "run the rescaled flow from a JSON config")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--config", required=True, help="JSON config path or bundled name")
        sp.set_defaults(fn=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _DOMAIN_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _EXIT_DOMAIN
    except FdeLabError as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return _EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
