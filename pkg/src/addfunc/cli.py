"""Command line interface.

Subcommands: estimate, approx, verify-phi, lower-bound, bench. Options can
come from a JSON file (``--config``); flags given on the command line win.
Every output embeds the resolved configuration. Errors are reported as JSON
with a nonzero exit status.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .estimator import TUNED_C1, TUNED_C2, EstimatorConfig, estimate_request
from .phi_models import get_spec, verify_divergence_speed
from .poly_approx import best_approx
from .risk_eval import ESTIMATORS, lecam_two_point_bound, run_grid
from .sampling import (DEFAULT_FAMILIES, DistributionParseError, Histogram,
                       read_samples, samples_to_histogram)

OUTPUT_DIR_ENV = "ADDFUNC_OUTPUT_DIR"

DEFAULTS = {
    "estimate": {"spec": "power:0.5", "c1": TUNED_C1, "c2": TUNED_C2, "mode": "tuned", "seed": 0,
                 "input": None, "k": None, "format": "json"},
    "approx": {"spec": "power:0.5", "L": 4, "delta": 1.0, "basis": "chebyshev", "format": "json"},
    "verify-phi": {"spec": "power:0.5", "format": "json"},
    "lower-bound": {"spec": "power:0.5", "n": 1000, "k": 100, "eps": None, "format": "json"},
    "bench": {"spec": "power:0.5", "n": [1000], "k": [100], "estimators": ["hybrid", "plugin"],
              "family": list(DEFAULT_FAMILIES), "trials": 200, "max_trials": None, "seed": 0,
              "c1": TUNED_C1, "c2": TUNED_C2, "mode": "tuned", "alpha": None, "workers": 1,
              "format": "csv"},
}


class CliError(Exception):
    pass


def _common(p, fmt=("json",)):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--spec", help='phi catalog name, e.g. "power:0.5" or "cos_power:1:0.5"')
    p.add_argument("--out", help="output file (default: stdout or $%s)" % OUTPUT_DIR_ENV)
    p.add_argument("--format", choices=fmt)


def _estimator_flags(p):
    p.add_argument("--c1", type=float, help="degree constant, L = floor(C1 ln n)")
    p.add_argument("--c2", type=float, help="threshold constant, Delta = C2 ln n")
    p.add_argument("--mode", choices=("tuned", "theory"))
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="addfunc", description="Estimate additive functionals of discrete distributions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate theta from a histogram or raw samples")
    _common(p)
    _estimator_flags(p)
    p.add_argument("input", nargs="?", help="histogram (.json/.csv) or whitespace separated samples")
    p.add_argument("--k", type=int, help="alphabet size for raw samples (default: largest symbol)")

    p = sub.add_parser("approx", help="best polynomial approximation on [0, delta]")
    _common(p)
    p.add_argument("--L", type=int, help="degree")
    p.add_argument("--delta", type=float, help="right end of the interval")
    p.add_argument("--basis", choices=("chebyshev", "monomial"))

    p = sub.add_parser("verify-phi", help="check the divergence-speed certificate")
    _common(p)

    p = sub.add_parser("lower-bound", help="Le Cam two-point lower bound")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float, help="perturbation (default 1/sqrt(n))")

    p = sub.add_parser("bench", help="Monte Carlo risk over a grid of (n, k)")
    _common(p, fmt=("csv", "json"))
    _estimator_flags(p)
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--estimators", nargs="+", choices=ESTIMATORS)
    p.add_argument("--family", nargs="+", help="distribution families")
    p.add_argument("--trials", type=int)
    p.add_argument("--max-trials", dest="max_trials", type=int,
                   help="extend runs until the CI is within 10%% of the mse")
    p.add_argument("--alpha", type=float, help="fit the rate law with this alpha")
    p.add_argument("--workers", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise CliError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["out"] = args.out
    return cfg


# ---------------------------------------------------------------------------
# commands


def _load_histogram(path: str, k):
    text = Path(path).read_text()
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        d = json.loads(text) if text.strip() else {}
        if "first" in d and "second" in d:
            return {"split": d}
        return {"histogram": Histogram.from_dict(d).to_dict()}
    if suffix == ".csv":
        return {"histogram": Histogram.from_csv(text).to_dict()}
    return {"histogram": samples_to_histogram(read_samples(text), k).to_dict()}


def cmd_estimate(cfg: dict):
    if not cfg["input"]:
        raise CliError("estimate needs an input file")
    request = _load_histogram(cfg["input"], cfg["k"])
    request["spec"] = cfg["spec"]
    request["config"] = {"C1": cfg["c1"], "C2": cfg["c2"], "mode": cfg["mode"], "seed": cfg["seed"]}
    result = estimate_request(request)
    return result, (0 if result.get("theta_hat") is not None else 1)


def cmd_approx(cfg: dict):
    spec = get_spec(cfg["spec"])
    poly = best_approx(spec, int(cfg["L"]), float(cfg["delta"]))
    out = json.loads(poly.to_json(cfg["basis"]))
    out.update({"uniform_error": poly.uniform_error, "alternations": poly.alternation_count(),
                "iterations": poly.iterations, "spec": spec.name})
    return out, 0


def cmd_verify_phi(cfg: dict):
    spec = get_spec(cfg["spec"])
    report = verify_divergence_speed(spec)
    out = {"spec": spec.name, "class": spec.class_tag, "alpha": spec.alpha, "W": spec.W,
           "c": list(spec.c), "c_prime": list(spec.c_prime), "ok": report.ok(),
           "orders": report.as_dict()}
    return out, 0 if out["ok"] else 1


def cmd_lower_bound(cfg: dict):
    spec = get_spec(cfg["spec"])
    lb = lecam_two_point_bound(spec, int(cfg["n"]), int(cfg["k"]), cfg["eps"])
    return {"spec": spec.name, **asdict(lb)}, 0


def cmd_bench(cfg: dict):
    spec = get_spec(cfg["spec"])
    est_cfg = EstimatorConfig(cfg["c1"], cfg["c2"], cfg["mode"], cfg["seed"])
    if not cfg["n"] or not cfg["k"] or not cfg["estimators"] or not cfg["family"]:
        raise CliError("bench grid is empty")
    report = run_grid(cfg["n"], cfg["k"], cfg["estimators"], cfg["family"], spec,
                      trials=int(cfg["trials"]), seed=int(cfg["seed"]), cfg=est_cfg,
                      alpha=cfg["alpha"], max_trials=cfg["max_trials"], workers=int(cfg["workers"]))
    return report, 0


COMMANDS = {"estimate": cmd_estimate, "approx": cmd_approx, "verify-phi": cmd_verify_phi,
            "lower-bound": cmd_lower_bound, "bench": cmd_bench}


# ---------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def render(command: str, result, cfg: dict) -> str:
    echo = {k: v for k, v in cfg.items() if k != "out"}
    if command == "bench":
        if cfg["format"] == "csv":
            return "# config=" + json.dumps(echo, sort_keys=True) + "\n" + result.to_csv()
        d = json.loads(result.to_json())
        d["resolved_config"] = echo
        return json.dumps(d, indent=2, sort_keys=True) + "\n"
    result = dict(result)
    result["resolved_config"] = echo
    return json.dumps(result, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _destination(command: str, cfg: dict):
    if cfg.get("out"):
        return Path(cfg["out"])
    outdir = os.environ.get(OUTPUT_DIR_ENV)
    if outdir:
        return Path(outdir) / f"{command}.{cfg.get('format') or 'json'}"
    return None


def _emit(text: str, dest):
    if dest is None:
        sys.stdout.write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = None
    try:
        cfg = resolve_config(args)
        result, code = COMMANDS[args.command](cfg)
        _emit(render(args.command, result, cfg), _destination(args.command, cfg))
        return code
    except (CliError, DistributionParseError, ValueError, KeyError, ArithmeticError,
            RuntimeError, OSError) as exc:
        err = {"error": str(exc), "type": type(exc).__name__, "command": args.command}
        if isinstance(exc, DistributionParseError) and exc.line is not None:
            err["line"] = exc.line
        if cfg is not None:
            err["resolved_config"] = {k: v for k, v in cfg.items() if k != "out"}
        sys.stdout.write(json.dumps(err, sort_keys=True, default=_jsonable) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
