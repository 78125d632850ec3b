"""Command-line front end.

    vhjlab simulate --config run.toml [--out DIR]
    vhjlab classify --config run.toml [--out DIR]
    vhjlab vss-profile --q 1.3 [--N 1] [--tol 1e-10] [--out DIR]
    vhjlab eval qc N=2
    vhjlab verify hopf-cole-q2 [more suites | all] [--threads K]

Exit codes: 0 success, 1 input error, 2 run left its validity window
(boundary contamination, or the Z front estimate reaches the grid edge),
3 numerical failure (non-finite value or scheme breakdown).  All
diagnostics go to standard error; stdout carries results only.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import closed_forms as cf
from . import suites
from .config import ConfigError, ScenarioConfig, load_config
from .diagnostics import (SERIES_COLUMNS, NormSeries, RegimeReport, estimate_monitors,
                          regime_classify, rescaled_heat_error, rescaled_vss_error, z_error)
from .solver import SchemeError, Trajectory, solve
from .vss import VSSError, find_vss

log = logging.getLogger("vhjlab")

EXIT_OK, EXIT_INPUT, EXIT_VALIDITY, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_OUT = "vhjlab-out"


class NonFinite(RuntimeError):
    """A value bound for an artifact is NaN or infinite."""


# --------------------------------------------------------------------------- artifacts

def _fmt(x: float) -> str:
    if not math.isfinite(x):
        raise NonFinite(f"non-finite value {x!r} in output")
    return repr(float(x))


def write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(args, cfg: ScenarioConfig = None) -> Path:
    out = Path(args.out or (cfg.output_dir if cfg else None) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------- runs

def _run(cfg: ScenarioConfig):
    spec = cfg.problem()
    traj = solve(spec, cfg.scheme, cfg.output_times())
    profile = None
    if "vss_error" in cfg.diagnostics:
        profile = find_vss(cfg.q, cfg.N)
    report = regime_classify(spec, traj, profile)
    return spec, traj, report, profile


def _validity_exit(report: RegimeReport) -> int:
    v = report.validity
    if v["contaminated_at"] is not None:
        log.error("boundary contamination from t = %.4g; enlarge the grid", v["contaminated_at"])
        return EXIT_VALIDITY
    if v["front_inside_grid"] is False:
        log.error("front estimate %.4g reaches the grid radius %.4g", v["front_estimate"],
                  v["grid_radius"])
        return EXIT_VALIDITY
    return EXIT_OK


def _error_rows(t, value, gradient=None):
    for i in range(len(t)):
        row = {"t": t[i], "value": value[i]}
        if gradient is not None:
            row["gradient"] = gradient[i]
        yield row


def _write_diagnostics(out: Path, cfg: ScenarioConfig, traj: Trajectory, report: RegimeReport,
                       profile) -> None:
    if "heat_error" in cfg.diagnostics:
        err = rescaled_heat_error(traj, math.inf, report.i_infty["value"])
        write_csv(out / "heat_error.csv", ("t", "value", "gradient"),
                  _error_rows(err.t, err.value, err.gradient))
    if "vss_error" in cfg.diagnostics:
        err = rescaled_vss_error(traj, 1.0, profile)
        write_csv(out / "vss_error.csv", ("t", "value", "gradient"),
                  _error_rows(err.t, err.value, err.gradient))
    if "z_error" in cfg.diagnostics:
        M = report.m_infty["value"] if report.m_infty else 0.0
        if M > 0:
            t, e = z_error(traj, M, cfg.q)
            write_csv(out / "z_error.csv", ("t", "value"), _error_rows(t, e))
        else:
            log.warning("z_error skipped: M_inf estimate is not positive")
    if "monitors" in cfg.diagnostics:
        write_json(out / "monitors.json", estimate_monitors(traj, cfg.q).to_json())


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    spec, traj, report, profile = _run(cfg)
    out = _out_dir(args, cfg)
    series = NormSeries.from_trajectory(traj)
    write_csv(out / "series.csv", SERIES_COLUMNS, series.rows())
    write_json(out / "report.json", report.to_json())
    _write_diagnostics(out, cfg, traj, report, profile)
    print(f"{report.verdict} {out}")
    return _validity_exit(report)


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    _, _, report, _ = _run(cfg)
    payload = report.to_json()
    if args.out:
        write_json(_out_dir(args) / "report.json", payload)
    print(json.dumps({"verdict": report.verdict, "checks": payload["checks"]}, sort_keys=True))
    return _validity_exit(report)


def cmd_vss_profile(args) -> int:
    profile = find_vss(args.q, args.N, tol=args.tol)
    out = _out_dir(args)
    rows = ({"eta": e, "f": f, "f_prime": g}
            for e, f, g in zip(profile.eta_nodes, profile.f, profile.f_prime))
    write_csv(out / "vss_profile.csv", ("eta", "f", "f_prime"), rows)
    summary = profile.summary()
    write_json(out / "vss_summary.json", summary)
    print(json.dumps({"alpha_star": summary["alpha_star"], "norm_1": summary["norm_1"]}))
    return EXIT_OK


# name -> (function, parameter names); integers are coerced where the formula needs them
FORMULAS = {
    "qc": (lambda N: cf.critical_exponent(int(N)), ("N",)),
    "a": (cf.decay_exponent_a, ("q",)),
    "gamma": (cf.gamma_q, ("q",)),
    "z": (cf.z_profile, ("r", "t", "M", "q")),
    "heat": (lambda r, t, N: cf.heat_kernel(r, t, int(N)), ("r", "t", "N")),
    "sigma": (cf.sigma_source, ("y", "t", "M", "q")),
    "zedge": (cf.z_edge_radius, ("t", "M", "q")),
    "front": (cf.sigma_front, ("t", "M", "q")),
    "barrier": (cf.gamma_barrier, ("r", "q")),
}


def _parse_assignments(items) -> dict:
    values = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ValueError(f"expected key=value, got {item!r}")
        try:
            values[key] = float(raw)
        except ValueError:
            raise ValueError(f"{key} must be a number, got {raw!r}") from None
    return values


def cmd_eval(args) -> int:
    if args.formula not in FORMULAS:
        raise ValueError(f"unknown formula {args.formula!r}; choose from {sorted(FORMULAS)}")
    fn, params = FORMULAS[args.formula]
    values = _parse_assignments(args.params)
    missing = [p for p in params if p not in values]
    extra = sorted(set(values) - set(params))
    if missing or extra:
        raise ValueError(f"{args.formula} takes {', '.join(params)}"
                         + (f"; missing {missing}" if missing else "")
                         + (f"; unexpected {extra}" if extra else ""))
    result = float(np.asarray(fn(*(values[p] for p in params))))
    if math.isnan(result):
        raise NonFinite(f"{args.formula} evaluated to NaN")
    print("%.11g" % result)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = sorted(suites.SUITES) if args.suites == ["all"] else args.suites
    unknown = [n for n in names if n not in suites.SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; choose from {sorted(suites.SUITES)} or 'all'")
    suites.SCAN_WORKERS = max(1, args.threads)
    ok = True
    for name in names:
        result = suites.run_suite(name)
        for check in result.checks:
            print(check.line(), flush=True)
        ok &= result.passed
    return EXIT_OK if ok else 1


# --------------------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vhjlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (("simulate", cmd_simulate, "run one scenario, write CSV and JSON"),
                            ("classify", cmd_classify, "run one scenario, print its verdict")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.set_defaults(func=fn)

    p = sub.add_parser("vss-profile", help="shoot for the fast-decay self-similar profile")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-10, help="relative bisection tolerance")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_vss_profile)

    p = sub.add_parser("eval", help="evaluate a closed-form expression")
    p.add_argument("formula", help=f"one of {', '.join(FORMULAS)}")
    p.add_argument("params", nargs="*", help="key=value arguments")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="run named acceptance suites")
    p.add_argument("suites", nargs="+", help=f"suite names ({', '.join(suites.SUITES)}) or 'all'")
    p.add_argument("--threads", type=int, default=1, help="worker processes for amplitude scans")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SchemeError, NonFinite, VSSError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
