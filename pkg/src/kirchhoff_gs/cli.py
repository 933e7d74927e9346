"""Command-line front end: ground states, mass curves, normalized solutions, validation."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (LAMBDA_TO_0, LAMBDA_TO_INF, NotCovered, extrapolate_constant,
                          fit_power_law, mass_limits, predict)
from .core import DEFAULT_CONTROLS, Controls, KirchhoffError, ParameterError, validate_params
from .curve import count_normalized, solve_normalized, trace
from .kirchhoff import exact_pq_solution, ground_state

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VALIDATION = 0, 2, 3, 4
PROFILE_HEADER = ("r", "W", "Wprime")


class InputError(Exception):
    """Flag-level problem detected after argparse (bad file, bad combination)."""


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON with repr-exact floats; non-finite values become null."""
    return json.dumps(_finite(obj), indent=2, default=_json_default, allow_nan=False)


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def read_controls(path) -> Controls:
    """Flat key=value file; '#' starts a comment."""
    if path is None:
        return DEFAULT_CONTROLS
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read controls file: {exc}")
    mapping = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"controls line {n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        mapping[key] = val
    return Controls.from_mapping(mapping)


def _progress(done: int, total: int) -> None:
    print(f"\r{done}/{total}", end="" if done < total else "\n", file=sys.stderr, flush=True)


def _params(args, lam=1.0):
    return validate_params(args.dim, args.a, args.b, args.q, args.p, lam)


def _side_path(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def profile_csv(sol) -> str:
    """Local profile w and w' on the solver grid."""
    prof = sol.profile
    lines = [",".join(PROFILE_HEADER)]
    lines += [f"{x!r},{w!r},{s!r}" for x, w, s in
              zip(map(float, prof.r), map(float, prof.W), map(float, prof.dW))]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- commands

def cmd_ground_state(args, controls: Controls) -> tuple:
    P = _params(args, args.lam)
    sol = ground_state(P, controls)
    report = sol.report()
    report["controls"] = asdict(controls)
    if args.format == "json":
        main, side = args.out, _side_path(args.out, ".profile.csv")
        _write(main, dumps(report))
        _write(side, profile_csv(sol))
    else:
        main, side = args.out, _side_path(args.out, ".report.json")
        _write(main, profile_csv(sol))
        _write(side, dumps(report))
    return main, EXIT_OK


def _end_fit(curve, window, quantity):
    pts = [(s.lam, s.M if quantity == "mass" else s.norms.A) for s in curve.samples]
    try:
        fit = fit_power_law(pts, window)
    except ParameterError as exc:
        return {"omitted": str(exc)}
    return fit.as_dict()


def mass_curve_summary(curve, controls: Controls) -> dict:
    P = curve.params
    lo, hi = curve.lam_min, curve.lam_max
    windows = {LAMBDA_TO_0: (lo, min(hi, 10 * lo)), LAMBDA_TO_INF: (max(lo, hi / 10), hi)}
    ends = {}
    for regime, window in windows.items():
        end = {"window": list(window)}
        for quantity in ("mass", "grad"):
            if window[0] >= window[1]:
                entry = {"fit": {"omitted": "grid has a single point"}}
            else:
                entry = {"fit": _end_fit(curve, window, quantity)}
            try:
                law = predict(P, quantity, regime, controls)
            except NotCovered as exc:
                entry["law"] = {"omitted": str(exc)}
            else:
                entry["law"] = law.as_dict()
                fit = entry["fit"]
                if "exponent" in fit and law.exponent != 0:
                    entry["exponent_ratio"] = fit["exponent"] / float(law.exponent)
                if not law.ratio_only:
                    inside = [(s.lam, s.M if quantity == "mass" else s.norms.A)
                              for s in curve.samples if window[0] <= s.lam <= window[1]]
                    if len(inside) >= 2:
                        ext = extrapolate_constant(inside, law)
                        entry["extrapolated_constant"] = ext.constant
                        entry["constant_ratio"] = ext.constant / law.constant
            end[quantity] = entry
        ends[regime] = end
    limits = mass_limits(P, controls)
    s_lo, s_hi = curve.end_signs()
    checks = {}
    for regime, observed, eb in ((LAMBDA_TO_0, s_lo, limits.small),
                                 (LAMBDA_TO_INF, s_hi, limits.large)):
        checks[regime] = {"observed": observed, "predicted": eb.sign, "row": eb.row,
                          "match": None if observed is None or eb.sign == "open"
                          else observed == eb.sign}
    out = {"params": curve.as_dict()["params"], "grid": curve.as_dict()["grid"],
           "n_samples": len(curve.samples), "n_failures": len(curve.failures),
           "failures": curve.as_dict()["failures"], "ends": ends,
           "mass_limits": limits.as_dict(), "sign_checks": checks,
           "turning_values": curve.turning_values(), "controls": asdict(controls)}
    if P.pq_equal and P.b == 0 and P.N == 3:
        dev = 0.0
        for s in curve.samples:
            exact = exact_pq_solution(P.with_lambda(s.lam), controls).norms.B
            dev = max(dev, abs(s.M - exact) / exact)
        out["pq_closed_form_max_deviation"] = dev
    return out


def cmd_mass_curve(args, controls: Controls) -> tuple:
    P = _params(args)
    curve = trace(P, args.lambda_min, args.lambda_max, args.points, controls, args.workers,
                  progress=_progress)
    summary = mass_curve_summary(curve, controls)
    if args.format == "csv":
        _write(args.out, curve.to_csv())
        _write(_side_path(args.out, ".summary.json"), dumps(summary))
    else:
        summary["samples"] = curve.as_dict()["samples"]
        _write(args.out, dumps(summary))
    return args.out, EXIT_OK


def cmd_normalized(args, controls: Controls) -> tuple:
    if not args.c > 0:
        raise InputError("--c must be positive")
    P = _params(args)
    curve = trace(P, args.lambda_min, args.lambda_max, args.points, controls, args.workers,
                  progress=_progress)
    count = count_normalized(curve, args.c, controls)
    sols = solve_normalized(P, args.c, count, controls)
    report = sols.as_dict()
    report["turning_values"] = curve.turning_values()
    report["controls"] = asdict(controls)
    if args.format == "csv":
        rows = [["lambda_c", "mass", "relative_mass_error", "peak"]]
        rows += [[repr(r.lam), repr(r.solution.norms.B), repr(r.mass_error),
                  repr(r.solution.peak)] for r in sols.roots]
        _write(args.out, "".join(",".join(r) + "\n" for r in rows))
        _write(_side_path(args.out, ".report.json"), dumps(report))
    else:
        _write(args.out, dumps(report))
    return args.out, EXIT_OK


def cmd_validate(args, controls: Controls) -> tuple:
    from .validation import run_suite

    report = run_suite(args.suite, controls)
    report["controls"] = asdict(controls)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']:.3e} "
              f"(tol {c['tolerance']:.0e})", file=sys.stderr)
    if args.format == "csv":
        lines = ["name,passed,value,tolerance,seconds"]
        lines += [f"\"{c['name']}\",{c['passed']},{c['value']!r},{c['tolerance']!r},"
                  f"{c['seconds']!r}" for c in report["checks"]]
        _write(args.out, "\n".join(lines) + "\n")
    else:
        _write(args.out, dumps(report))
    return args.out, EXIT_OK if report["passed"] else EXIT_VALIDATION


# ---------------------------------------------------------------- parser

def _problem_flags(p: argparse.ArgumentParser, with_lambda: bool) -> None:
    p.add_argument("--dim", type=int, required=True, help="space dimension N (3 or 4)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    if with_lambda:
        p.add_argument("--lambda", dest="lam", type=float, required=True)


def _common(p: argparse.ArgumentParser, default_out: str) -> None:
    p.add_argument("--out", type=Path, default=Path(default_out), help="report path")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--controls", type=Path, default=None, help="key=value tolerance file")


def _grid_flags(p, lam_min, lam_max, points) -> None:
    p.add_argument("--lambda-min", type=float, default=lam_min)
    p.add_argument("--lambda-max", type=float, default=lam_max)
    p.add_argument("--points", type=int, default=points)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kirchhoff-gs",
                                     description="Ground states and normalized solutions of "
                                                 "Kirchhoff equations with combined powers.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gs = sub.add_parser("ground-state", help="solve u_lambda and write profile + report")
    _problem_flags(gs, True)
    _common(gs, "ground_state.json")
    gs.set_defaults(func=cmd_ground_state)

    mc = sub.add_parser("mass-curve", help="trace M(lambda) on a log grid")
    _problem_flags(mc, False)
    _common(mc, "mass_curve.csv")
    _grid_flags(mc, 1e-4, 1e4, 81)
    mc.set_defaults(func=cmd_mass_curve)

    nm = sub.add_parser("normalized", help="count and solve ||u||_2 = c")
    _problem_flags(nm, False)
    nm.add_argument("--c", type=float, required=True)
    _common(nm, "normalized.json")
    _grid_flags(nm, 1e-6, 1e6, 49)
    nm.set_defaults(func=cmd_normalized)

    va = sub.add_parser("validate", help="run the invariant suites")
    va.add_argument("--suite", choices=("quick", "full"), default="quick")
    _common(va, "validation.json")
    va.set_defaults(func=cmd_validate)
    return parser


def _fail(payload: dict, code: int) -> int:
    print(json.dumps(_finite({**payload, "exit_code": code}), default=_json_default),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        controls = read_controls(args.controls)
        path, code = args.func(args, controls)
    except InputError as exc:
        return _fail({"error": "invalid-input", "message": str(exc)}, EXIT_INPUT)
    except ParameterError as exc:
        return _fail(exc.to_dict(), EXIT_INPUT)
    except KirchhoffError as exc:
        payload = exc.to_dict() if hasattr(exc, "to_dict") else {"error": str(exc)}
        return _fail(payload, EXIT_SOLVER)
    print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
