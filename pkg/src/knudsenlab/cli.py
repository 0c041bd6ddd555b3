"""Experiment runner.

Subcommands: verify, simulate, decay-sweep, branches, hydro-sweep.
Configuration is an INI file with sections [model], [epsilon], [experiment],
[runtime]; command-line flags --output, --threads, --seed override.  Every
experiment writes machine-readable artifacts into the output directory: CSV
files with a fixed column order plus a result.json summary.  Exit codes:
0 all configured assertions pass, 1 an assertion failed, 2 configuration
error, 3 numerical failure.

CSV schemas (column orders are part of the interface):

  decay.csv     eps,t,norm_L2,norm_Hk,norm_HypEps,norm_HypPerp
  branches.csv  zeta,branch,re_lambda,im_lambda
  hydro.csv     eps,err_timeavg,err_L2t,err_sup

Floats are written with repr (shortest round-trip); at threads=1 reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .spectral import build_basis
from .models import constants_ledger, make_model, verify_hypotheses
from .hypnorm import build_hk_coefficients, dissipation_monitor
from .evolve import IntegratorConfig, fit_decay_rate, propagate
from .branches import fit_dispersion
from .hydro import build_initial_data, convergence_study

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "model": {"kind": "hydro_bgk", "dim": "2", "order": "10", "mx": "16",
              "delta_q": "0.1", "kappa_inf": "1.0"},
    "epsilon": {"grid": "1.0, 0.5, 0.2, 0.1, 0.05"},
    "experiment": {"kind": "", "k": "1", "t_end": "2.0", "dt": "0.01",
                   "data": "well_prepared", "amplitude": "0.05",
                   "max_mode": "2", "T": "1.0", "zeta_min": "0.02",
                   "zeta_max": "0.3", "zeta_points": "15", "samples": "41"},
    "runtime": {"threads": "1", "seed": "1"},
}


class ConfigError(Exception):
    pass


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str        # keys are case-sensitive (e.g. T)
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path!r}")
        for sec in parser.sections():
            if sec not in cfg:
                raise ConfigError(f"unknown config section [{sec}]")
            for key, val in parser.items(sec):
                if key not in cfg[sec]:
                    raise ConfigError(f"unknown key {key!r} in section [{sec}]")
                cfg[sec][key] = val
    for (sec, key), val in overrides.items():
        if val is not None:
            cfg[sec][key] = str(val)
    return cfg


def parse_eps_grid(cfg: dict) -> list:
    raw = cfg["epsilon"]["grid"].strip()
    if not raw:
        raise ConfigError("missing key: [epsilon] grid is empty")
    try:
        grid = [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"bad [epsilon] grid: {exc}") from exc
    if not grid or any(e <= 0 or e > 1 for e in grid):
        raise ConfigError("[epsilon] grid values must lie in (0, 1]")
    return grid


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def header_line(cfg: dict) -> str:
    return (f"# knudsenlab={__version__} numpy={np.__version__} "
            f"config_sha256={config_hash(cfg)}")


def fmt(x) -> str:
    return repr(float(x))


def write_csv(path: str, cfg: dict, schema: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header_line(cfg) + "\n")
        fh.write(schema + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def build_model_from_config(cfg: dict):
    m = cfg["model"]
    basis = build_basis(int(m["dim"]), int(m["order"]))
    model = make_model(m["kind"], basis, delta_q=float(m["delta_q"]),
                       kappa_inf=float(m["kappa_inf"]))
    return model, int(m["mx"])


def _check(name, value, tol, op="le"):
    passed = (value <= tol) if op == "le" else (value >= tol)
    return {"name": name, "value": float(value), "tol": float(tol),
            "op": op, "passed": bool(passed)}


# ---------------------------------------------------------------------------
# experiment families


def run_verify(cfg: dict, outdir: str) -> dict:
    model, _ = build_model_from_config(cfg)
    k = int(cfg["experiment"]["k"])
    report = verify_hypotheses(model, tol=1e-10, k_max=max(k, 2))
    checks = [
        {"name": c["name"], "value": c["value"], "tol": c["tol"],
         "passed": c["passed"] or not c["required"], "required": c["required"]}
        for c in report["checks"]
    ]
    return {"checks": checks, "outputs": [], "details": {"model": model.kind}}


def run_simulate(cfg: dict, outdir: str) -> dict:
    model, mx = build_model_from_config(cfg)
    exp = cfg["experiment"]
    eps = parse_eps_grid(cfg)[0]
    k = int(exp["k"])
    consts = constants_ledger(model, k_max=max(k, 1))
    coeffs = build_hk_coefficients(consts, k)
    coeffs_perp = build_hk_coefficients(consts, k, "perp")
    h_in = build_initial_data(model.basis, mx, exp["data"],
                              seed=int(cfg["runtime"]["seed"]),
                              amplitude=float(exp["amplitude"]),
                              model=model, max_mode=int(exp["max_mode"]))
    scheme = "strang_imex" if model.has_gamma else "exact_linear"
    dt = float(exp["dt"])
    if scheme == "exact_linear":
        dt = min(dt, 0.01, eps**2 / 4.0)
    rec = propagate(h_in, model, eps, IntegratorConfig(
        scheme=scheme, dt=dt, t_end=float(exp["t_end"])), k=k,
        coeffs_std=coeffs if eps <= coeffs.eps_max else None,
        coeffs_perp=coeffs_perp if eps <= coeffs_perp.eps_max else None)
    rows = [
        (fmt(eps), fmt(t), fmt(rec.norms["L2"][i]), fmt(rec.norms["Hk"][i]),
         fmt(rec.norms["HypEps"][i]), fmt(rec.norms["HypPerp"][i]))
        for i, t in enumerate(rec.times)
    ]
    path = os.path.join(outdir, "decay.csv")
    write_csv(path, cfg, "eps,t,norm_L2,norm_Hk,norm_HypEps,norm_HypPerp", rows)
    drift = float(np.max(np.abs(rec.kernel_moments - rec.kernel_moments[0]))) \
        if len(rec.times) else 0.0
    checks = [_check("conservation.kernel_moments", drift,
                     1e-10 * max(1.0, float(rec.norms["L2"][0])))]
    return {"checks": checks, "outputs": [path],
            "details": {"eps": eps, "scheme": scheme}}


def _decay_one(model, mx, cfg, eps, k, consts, coeffs, coeffs_perp):
    exp = cfg["experiment"]
    h_in = build_initial_data(model.basis, mx, exp["data"],
                              seed=int(cfg["runtime"]["seed"]),
                              amplitude=float(exp["amplitude"]),
                              model=model, max_mode=int(exp["max_mode"]))
    scheme = "strang_imex" if model.has_gamma else "exact_linear"
    dt = float(exp["dt"])
    if scheme == "exact_linear":
        dt = min(dt, 0.01, eps**2 / 4.0)
    t_end = float(exp["t_end"])
    rec = propagate(h_in, model, eps, IntegratorConfig(
        scheme=scheme, dt=dt, t_end=t_end, sample_every=1), k=k,
        coeffs_std=coeffs, coeffs_perp=coeffs_perp)
    tau, resid = fit_decay_rate(rec, "HypEps", (0.4 * t_end, t_end))
    monitor = dissipation_monitor(rec, coeffs, consts)
    hyp2 = rec.norms["HypEps"] ** 2
    mono = float(np.max(np.append(np.diff(hyp2), 0.0)) / hyp2[0])
    perp_ok = True
    if eps <= coeffs_perp.eps_max:
        perp2 = rec.norms["HypPerp"] ** 2
        perp_ok = bool(np.all(np.diff(perp2) <= 1e-10 * perp2[0]))
    return rec, tau, resid, monitor, mono, perp_ok


def run_decay_sweep(cfg: dict, outdir: str) -> dict:
    model, mx = build_model_from_config(cfg)
    eps_grid = parse_eps_grid(cfg)
    k = int(cfg["experiment"]["k"])
    consts = constants_ledger(model, k_max=max(k, 1))
    coeffs = build_hk_coefficients(consts, k)
    coeffs_perp = build_hk_coefficients(consts, k, "perp")
    threads = int(cfg["runtime"]["threads"])

    results = [None] * len(eps_grid)

    def work(i):
        results[i] = _decay_one(model, mx, cfg, eps_grid[i], k,
                                consts, coeffs, coeffs_perp)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(len(eps_grid))))
    else:
        for i in range(len(eps_grid)):
            work(i)

    rows = []
    taus = []
    checks = []
    for eps, res in zip(eps_grid, results):
        rec, tau, resid, monitor, mono, perp_ok = res
        taus.append(tau)
        for i, t in enumerate(rec.times):
            rows.append((fmt(eps), fmt(t), fmt(rec.norms["L2"][i]),
                         fmt(rec.norms["Hk"][i]), fmt(rec.norms["HypEps"][i]),
                         fmt(rec.norms["HypPerp"][i])))
        checks.append(_check(f"decay.monotone[eps={eps}]", mono, 1e-10))
        checks.append(_check(f"monitor.violations[eps={eps}]",
                             len(monitor.violations), 0))
        checks.append(_check(f"decay.tau_positive[eps={eps}]", tau, 1e-6, op="ge"))
        checks.append(_check(f"decay.perp_monotone[eps={eps}]",
                             0.0 if perp_ok else 1.0, 0.5))
    checks.append(_check("decay.tau_band", max(taus) / min(taus), 4.0))
    path = os.path.join(outdir, "decay.csv")
    write_csv(path, cfg, "eps,t,norm_L2,norm_Hk,norm_HypEps,norm_HypPerp", rows)
    return {"checks": checks, "outputs": [path],
            "details": {"tau": dict(zip(map(str, eps_grid), taus))}}


def run_branches(cfg: dict, outdir: str) -> dict:
    model, _ = build_model_from_config(cfg)
    exp = cfg["experiment"]
    grid = np.linspace(float(exp["zeta_min"]), float(exp["zeta_max"]),
                       int(exp["zeta_points"]))
    omega = tuple([1.0] + [0.0] * (model.dim - 1))
    fit = fit_dispersion(model, omega, grid)
    rows = []
    for j in (-1, 0, 1, 2):
        for zeta, lam in zip(fit.zeta_grid, fit.branch_values[j]):
            rows.append((fmt(zeta), str(j), fmt(lam.real), fmt(lam.imag)))
    path = os.path.join(outdir, "branches.csv")
    write_csv(path, cfg, "zeta,branch,re_lambda,im_lambda", rows)
    conj_gap = float(np.max(np.abs(
        fit.branch_values[1] - np.conj(fit.branch_values[-1]))))
    checks = [
        _check("branches.alpha0", abs(fit.alpha[0]), 1e-6),
        _check("branches.alpha2", abs(fit.alpha[2]), 1e-6),
        _check("branches.conjugate_pair", conj_gap, 1e-10),
        _check("branches.sigma", fit.sigma, 0.5, op="ge"),
        _check("branches.acoustic_collinearity", fit.acoustic_collinearity,
               0.999, op="ge"),
    ]
    details = {
        "alpha": {str(j): fit.alpha[j] for j in fit.alpha},
        "beta": {str(j): fit.beta[j] for j in fit.beta},
        "sigma": fit.sigma, "n0": fit.n0, "gamma_bound": fit.gamma_bound,
    }
    return {"checks": checks, "outputs": [path], "details": details}


def run_hydro_sweep(cfg: dict, outdir: str) -> dict:
    model, mx = build_model_from_config(cfg)
    exp = cfg["experiment"]
    eps_grid = parse_eps_grid(cfg)
    if len(eps_grid) < 2:
        raise ConfigError("[epsilon] grid needs at least 2 values for hydro-sweep")
    res = convergence_study(
        model, eps_grid, exp["data"], T=float(exp["T"]),
        k=int(exp["k"]), mx=mx, seed=int(cfg["runtime"]["seed"]),
        amplitude=float(exp["amplitude"]), n_samples=int(exp["samples"]))
    rows = [(fmt(r["eps"]), fmt(r["err_timeavg"]), fmt(r["err_L2t"]),
             fmt(r["err_sup"])) for r in res["rows"]]
    path = os.path.join(outdir, "hydro.csv")
    write_csv(path, cfg, "eps,err_timeavg,err_L2t,err_sup", rows)
    checks = [_check("hydro.slope_timeavg", res["slopes"]["err_timeavg"],
                     0.35, op="ge")]
    if exp["data"] == "well_prepared":
        checks.append(_check("hydro.slope_sup", res["slopes"]["err_sup"],
                             0.35, op="ge"))
    else:
        ratio = min(r["early_sup"] for r in res["rows"]) \
            / max(res["acoustic_norm"], 1e-300)
        checks.append(_check("hydro.acoustic_retained", ratio, 0.5, op="ge"))
        checks.append(_check("hydro.acoustic_avg_slope",
                             res["slopes"]["acoustic_avg_sq"], 1.7, op="ge"))
    return {"checks": checks, "outputs": [path],
            "details": {"slopes": res["slopes"], "nu": res["nu"],
                        "kappa": res["kappa"]}}


RUNNERS = {
    "verify": run_verify,
    "simulate": run_simulate,
    "decay-sweep": run_decay_sweep,
    "branches": run_branches,
    "hydro-sweep": run_hydro_sweep,
}


def run_experiment(cfg: dict, outdir: str, experiment: str) -> int:
    """Dispatch one experiment family; writes result.json; returns exit code."""
    if experiment not in RUNNERS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    os.makedirs(outdir, exist_ok=True)
    np.seterr(over="raise", invalid="raise", divide="ignore", under="ignore")
    try:
        payload = RUNNERS[experiment](cfg, outdir)
    except ConfigError:
        raise
    except (FloatingPointError, RuntimeError) as exc:
        result = {"experiment": experiment, "config_sha256": config_hash(cfg),
                  "versions": {"knudsenlab": __version__, "numpy": np.__version__},
                  "error": str(exc), "passed": False}
        with open(os.path.join(outdir, "result.json"), "w") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
        return EXIT_NUMERIC
    finally:
        np.seterr(all="warn")
    passed = all(c["passed"] for c in payload["checks"])
    result = {
        "experiment": experiment,
        "config_sha256": config_hash(cfg),
        "versions": {"knudsenlab": __version__, "numpy": np.__version__},
        "model": cfg["model"]["kind"],
        "checks": payload["checks"],
        "details": payload.get("details", {}),
        "outputs": [os.path.basename(p) for p in payload["outputs"]],
        "passed": passed,
    }
    if not passed:
        result["failing"] = [c["name"] for c in payload["checks"]
                             if not c["passed"]]
    with open(os.path.join(outdir, "result.json"), "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
    return EXIT_OK if passed else EXIT_ASSERT


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="knudsenlab",
        description="kinetic-equation spectral experiments on the torus")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--output", default="out")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        threads = os.environ.get("KNUDSENLAB_THREADS")
        threads = int(threads) if threads else None
    overrides = {("runtime", "threads"): threads, ("runtime", "seed"): args.seed,
                 ("experiment", "kind"): args.command}
    try:
        cfg = load_config(args.config, overrides)
        parse_eps_grid(cfg)
        return run_experiment(cfg, args.output, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
