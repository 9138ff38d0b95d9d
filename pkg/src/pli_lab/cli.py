"""
``pli-lab``: run one experiment and write CSV, SVG and a manifest.

    pli-lab <experiment> [--config file.json] [--key value ...] [--out dir]

Parameters may also be given as ``key=value``. Precedence for parameters is
flag > config file > default; for the seed it is flag > file >
``PLI_LAB_SEED`` > 0. Exit codes: 0 success, 2 invalid configuration,
3 numerical failure (an error JSON is printed to stderr and written to
``error.json`` in the output directory).
"""

import argparse
import json
import os
import platform
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__, flow, highgain, lqr, pli, scalar
from .artifacts import atomic_write, csv_text, sha256_file, svg_plot
from .errors import PliLabError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
SEED_ENV = "PLI_LAB_SEED"


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # report usage errors through the error JSON instead of exiting
    def error(self, message):
        raise ConfigError(message)


@dataclass
class Output:
    """Files produced by an experiment: name -> text."""

    files: dict


# -- experiments ---------------------------------------------------------------

def _scalar_sys(p):
    return scalar.ScalarCt(a=p["a"], q=p["q"], r=p["r"])


def run_scalar_profile(p, seed):
    sys_ = _scalar_sys(p)
    if p["n"] < 2:
        raise ConfigError("n must be at least 2")
    if not p["kmin"] < p["kmax"]:
        raise ConfigError("kmin must be below kmax")
    grid = (np.geomspace if p["logk"] else np.linspace)(p["kmin"], p["kmax"], p["n"])
    prof = scalar.rate_profile(sys_, grid)
    rows = zip(prof.k, prof.grad_sq, prof.m)
    svg = svg_plot([
        {"title": "squared gradient", "xlabel": "k", "ylabel": "dJ^2",
         "series": [("dJ(k)^2", prof.k, prof.grad_sq)], "xlog": p["logk"], "ylog": True},
        {"title": "exponential rate m(k)", "xlabel": "k", "ylabel": "m",
         "series": [("m(k)", prof.k, prof.m)], "xlog": p["logk"], "ylog": True},
    ])
    return Output({"ScalarProfile.csv": csv_text(["k", "grad_sq", "m"], rows),
                   "ScalarProfile.svg": svg})


def _cert_dict(traj):
    try:
        c = pli.certify_trajectory(traj)
    except PliLabError as exc:
        return {"error": str(exc)}
    return {"t_split": c.t_split, "gap_split": c.gap_split, "slope": c.slope,
            "rate": c.rate, "max_violation": c.max_violation, "valid": c.valid}


def run_flow(p, seed):
    sys_ = _scalar_sys(p)
    prob = lqr.LqrProblem.scalar(p["a"], p["q"], p["r"])
    cfg = flow.FlowConfig(max_time=p["maxTime"], record_every=p["recordEvery"],
                          rel_step_tol=p["relStepTol"])
    starts = {"Flow": p["k0"]}
    if p["mirror"]:
        starts["Flow_mirror"] = scalar.mirror_gain(sys_, p["k0"])
    files, series, side = {}, [], {}
    for name, k0 in starts.items():
        traj = flow.integrate_gradient_flow(prob, [[k0]], cfg)
        files[f"{name}.csv"] = traj.to_csv()
        series.append((f"k0={k0:.6g}", traj.t, traj.gap))
        side[name] = {"k0": k0, "gap0": float(traj.gap[0]), "terminal": traj.terminal.value,
                      "time_to_gap_1e-6": traj.first_time_below(1e-6),
                      "gles": _cert_dict(traj)}
    files["Flow.gles.json"] = json.dumps(side, indent=2, sort_keys=True) + "\n"
    files["Flow.svg"] = svg_plot([{"title": "gap along gradient flow", "xlabel": "t",
                                   "ylabel": "J - J*", "series": series, "ylog": True}])
    return Output(files)


_SYSTEMS = {
    "scalar": ([[1.0]], [[1.0]]),
    "double_integrator": ([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]]),
    "oscillator": ([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]]),
}


def run_high_gain(p, seed):
    if p["system"] not in _SYSTEMS:
        raise ConfigError(f"system must be one of {sorted(_SYSTEMS)}")
    A, B = _SYSTEMS[p["system"]]
    n, m = len(A), len(B[0])
    prob = lqr.LqrProblem(A, B, np.eye(n), np.eye(m))
    if p["curve"] == "ackermann":
        curve = highgain.HighGainCurve.build(prob, seed=seed, offset=p["offset"])
    elif p["curve"] == "ray":
        d = np.asarray(p["direction"], dtype=float)
        if d.size != m * n:
            raise ConfigError(f"direction needs {m * n} entries")
        curve = highgain.RayCurve(prob, d.reshape(m, n))
    else:
        raise ConfigError("curve must be 'ackermann' or 'ray'")
    if not 0 < p["rhoMin"] < p["rhoMax"] or p["num"] < 2:
        raise ConfigError("need 0 < rhoMin < rhoMax and num >= 2")
    study = highgain.curve_limit_study(curve, np.geomspace(p["rhoMin"], p["rhoMax"], p["num"]))
    svg = svg_plot([{"title": f"{p['curve']} curve, {p['system']}", "xlabel": "rho",
                     "series": [("gap", study.rho, study.gap),
                                ("|grad|_F", study.rho, study.grad_fro),
                                ("|grad|/sqrt(gap)", study.rho, study.ratio)],
                     "xlog": True, "ylog": True}])
    return Output({"HighGain.csv": csv_text(["rho", "gap", "grad_fro", "ratio"], study.rows()),
                   "HighGain.svg": svg})


def run_dt_sweep(p, seed):
    sweep = scalar.dt_rate_sweep(_scalar_sys(p), p["hs"])
    rows = zip(sweep.h, sweep.kd_min, sweep.md_min)
    svg = svg_plot([
        {"title": "smallest DT rate", "xlabel": "h", "ylabel": "min m_d",
         "series": [("min m_d", sweep.h, sweep.md_min)], "xlog": True, "ylog": True},
        {"title": "minimizing gain", "xlabel": "h", "ylabel": "k_d",
         "series": [("argmin k_d", sweep.h, sweep.kd_min)], "xlog": True, "ylog": True},
    ])
    return Output({"DtSweep.csv": csv_text(["h", "kd_min", "md_min"], rows), "DtSweep.svg": svg})


def _scalar_lqr_samples(p):
    sys_ = _scalar_sys(p)
    ks = sys_.kstar + np.geomspace(1e-4, 1e3, p["n"])
    gaps = np.array([sys_.gap(k) for k in ks])
    grads = np.array([abs(scalar.ct_closed_forms(sys_, k).grad) for k in ks])
    return gaps, grads


def run_pli_diagnose(p, seed):
    zoo = pli.zoo_examples()
    zoo["quadratic"] = pli.quadratic(p["mu"])
    if p["cost"] == "scalar_lqr":
        gaps, grads = _scalar_lqr_samples(p)
    elif p["cost"] in zoo:
        span = p["span"] if p["span"] > 0 else None
        _, gaps, grads = zoo[p["cost"]].sample(p["n"], span)
    else:
        raise ConfigError(f"cost must be one of {sorted(zoo) + ['scalar_lqr']}")
    rep = pli.diagnose(gaps, grads)
    side = rep.sidecar()
    side["tail_slope"] = rep.tail_slope
    series = [("empirical lower envelope", rep.envelope_gap, rep.envelope_grad)]
    if rep.ksat is not None:
        series.append(("K_SAT fit", rep.envelope_gap, rep.ksat.alpha(rep.envelope_gap)))
    svg = svg_plot([
        {"title": "best PLI constant per sublevel set", "xlabel": "eps", "ylabel": "mu_hat",
         "series": [("mu_hat", rep.eps_grid, rep.mu_hat)], "xlog": True, "ylog": True},
        {"title": f"gradient lower bound: {rep.verdict.value}", "xlabel": "gap",
         "ylabel": "|grad|", "series": series, "xlog": True, "ylog": True},
    ])
    return Output({"PliDiagnose.csv": rep.to_csv(),
                   "PliDiagnose.json": json.dumps(side, indent=2, sort_keys=True) + "\n",
                   "PliDiagnose.svg": svg})


def run_prox(p, seed):
    cfg = flow.FlowConfig(max_time=p["maxTime"])
    rows, series, side = [], [], {}
    for c in p["centers"]:
        def gradf(x, c=c):
            return x - c

        def f(x, c=c):
            return 0.5 * (x - c) ** 2

        # minimizer of (x - c)^2 / 2 + |x| is the soft-threshold of c
        x_opt = float(flow.soft_threshold(c))
        traj = flow.integrate_prox_flow_scalar(gradf, p["x0"], cfg, f=f,
                                               f_opt=f(x_opt) + abs(x_opt))
        xs = traj.params[:, 0]
        rows += [(c, t, g, r, x) for t, g, r, x in zip(traj.t, traj.gap, traj.grad_norm, xs)]
        series.append((f"center={c:g}", traj.t, xs))
        side[format(c, "g")] = {"equilibrium": x_opt, "final_x": float(xs[-1]),
                                "residual": float(traj.grad_norm[-1]),
                                "terminal": traj.terminal.value}
    svg = svg_plot([{"title": "proximal gradient flow", "xlabel": "t", "ylabel": "x",
                     "series": series}])
    return Output({"Prox.csv": csv_text(["center", "t", "gap", "grad_norm", "x"], rows),
                   "Prox.json": json.dumps(side, indent=2, sort_keys=True) + "\n",
                   "Prox.svg": svg})


_SCALAR = {"a": 1.0, "q": 1.0, "r": 1.0}

EXPERIMENTS = {
    "ScalarProfile": (run_scalar_profile,
                      {**_SCALAR, "kmin": 1.05, "kmax": 8.0, "n": 400, "logk": False}),
    "Flow": (run_flow, {**_SCALAR, "k0": 19.72, "maxTime": 100.0, "recordEvery": 0.01,
                        "relStepTol": 1e-8, "mirror": True}),
    "HighGain": (run_high_gain, {"system": "double_integrator", "curve": "ackermann",
                                 "rhoMin": 10.0, "rhoMax": 1e4, "num": 12, "offset": False,
                                 "direction": [1.0, 1.0]}),
    "DtSweep": (run_dt_sweep, {**_SCALAR, "hs": [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]}),
    "PliDiagnose": (run_pli_diagnose, {**_SCALAR, "cost": "quadratic", "mu": 1.0, "n": 4001,
                                       "span": 0.0}),
    "Prox": (run_prox, {"centers": [0.0, 3.0, 0.5], "x0": 5.0, "maxTime": 50.0}),
}


# -- configuration -------------------------------------------------------------

def _coerce(key, value, default):
    """Convert ``value`` (string from the command line or JSON value) to the type of ``default``."""
    try:
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            s = str(value).strip().lower()
            if s in ("true", "1", "yes"):
                return True
            if s in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(default, float):
            if isinstance(value, bool):
                raise ValueError(value)
            out = float(value)
            if not np.isfinite(out):
                raise ValueError(value)
            return out
        if isinstance(default, list):
            items = value if isinstance(value, list) else [v for v in str(value).split(",") if v]
            return [_coerce(key, v, 0.0) for v in items]
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key!r}: {value!r}") from None


def _parse_seed(value, source):
    try:
        seed = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"seed from {source} is not an integer: {value!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed from {source} must be a 64-bit unsigned integer")
    return seed


def _experiment_name(name):
    for key in EXPERIMENTS:
        if key.lower() == name.lower():
            return key
    raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")


def build_config(argv, environ=None):
    """Parse arguments into ``(experiment, params, seed, out_dir)``."""
    environ = os.environ if environ is None else environ
    ap = _Parser(prog="pli-lab", add_help=True)
    ap.add_argument("experiment")
    ap.add_argument("--config")
    ap.add_argument("--out", default=".")
    ap.add_argument("--seed")
    ns, rest = ap.parse_known_args(argv)
    exp = _experiment_name(ns.experiment)
    defaults = EXPERIMENTS[exp][1]

    overrides = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if tok.startswith("--"):
            key = tok[2:]
            if "=" in key:
                key, val = key.split("=", 1)
            elif i + 1 < len(rest):
                i += 1
                val = rest[i]
            else:
                raise ConfigError(f"missing value for {tok}")
        elif "=" in tok:
            key, val = tok.split("=", 1)
        else:
            raise ConfigError(f"unexpected argument {tok!r}")
        overrides[key] = val
        i += 1

    file_params, file_seed = {}, None
    if ns.config:
        try:
            data = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data = dict(data)
        if "experiment" in data and _experiment_name(str(data.pop("experiment"))) != exp:
            raise ConfigError("config file names a different experiment")
        file_seed = data.pop("seed", None)
        if "params" in data:
            file_params = data.pop("params")
            if data:
                raise ConfigError("config file mixes 'params' with other top-level keys")
        else:
            file_params = data
        if not isinstance(file_params, dict):
            raise ConfigError("'params' must be a JSON object")

    params = dict(defaults)
    for source in (file_params, overrides):
        for key, val in source.items():
            if key not in defaults:
                raise ConfigError(f"unknown key {key!r} for {exp}; allowed: {', '.join(defaults)}")
            params[key] = _coerce(key, val, defaults[key])

    if ns.seed is not None:
        seed = _parse_seed(ns.seed, "--seed")
    elif file_seed is not None:
        seed = _parse_seed(file_seed, "config file")
    elif environ.get(SEED_ENV):
        seed = _parse_seed(environ[SEED_ENV], SEED_ENV)
    else:
        seed = 0
    return exp, params, seed, Path(ns.out)


# -- entry point -----------------------------------------------------------------

def _error_payload(exc, kind):
    return {"error": type(exc).__name__, "kind": kind, "message": str(exc),
            "module": type(exc).__module__}


def _fail(out_dir, exc, kind, code):
    payload = _error_payload(exc, kind)
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            atomic_write(out_dir / "error.json", text + "\n")
        except OSError:
            pass
    return code


def _out_dir_hint(argv):
    ap = argparse.ArgumentParser(add_help=False)
    ap.add_argument("--out", default=".")
    try:
        return Path(ap.parse_known_args(argv)[0].out)
    except SystemExit:
        return None


def main(argv=None, environ=None):
    argv = sys.argv[1:] if argv is None else argv
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    out_dir = _out_dir_hint(argv)
    try:
        exp, params, seed, out_dir = build_config(argv, environ)
        runner = EXPERIMENTS[exp][0]
        result = runner(params, seed)
    except ConfigError as exc:
        return _fail(out_dir, exc, "config", EXIT_CONFIG)
    except (PliLabError, ArithmeticError) as exc:
        return _fail(out_dir, exc, "numerical", EXIT_NUMERICAL)
    except ValueError as exc:
        # parameter values rejected by a constructor (e.g. q <= 0)
        return _fail(out_dir, exc, "config", EXIT_CONFIG)

    outputs = []
    for name in sorted(result.files):
        path = atomic_write(out_dir / name, result.files[name])
        outputs.append({"path": name, "sha256": sha256_file(path)})
    manifest = {
        "config": {"experiment": exp, "params": params, "seed": seed},
        "outputs": outputs,
        "started": started.isoformat(),
        "elapsed_s": time.perf_counter() - t0,
        "versions": {"pli_lab": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
    }
    atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    print(json.dumps({"experiment": exp, "outputs": [o["path"] for o in outputs]}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
