"""Invariant suites behind `kirchhoff-gs validate`."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .asymptotics import ROW_IDS, all_laws
from .core import DEFAULT_CONTROLS, LARGE, SMALL, Controls, validate_params
from .kirchhoff import exact_pq_solution, ground_state
from .quadrature import (best_sobolev_S, dilate_profile, identity_residuals, norm_bundle,
                         sobolev_S_closed_form)
from .radial_ode import evaluate_profile, solve_scalar_field, soliton_1d

# parameter sets whose law tables jointly produce every row id
COVERAGE_PARAMS = (
    (3, 1.0, 1.0, 5.0, 6.0), (4, 1.0, 0.0, 2.5, 4.0), (3, 1.0, 1.0, 4.0, 4.0),
    (3, 1.0, 0.0, 4.0, 4.0), (3, 1.0, 1.0, 3.0, 4.0), (3, 1.0, 1.0, 10 / 3, 4.0),
    (3, 1.0, 1.0, 3.0, 14 / 3), (3, 1.0, 0.0, 3.0, 4.0),
)

IDENTITY_GRID_QUICK = ((1, 4, 4, 0.0, 1.0), (3, 3, 4, 1.0, 0.5), (3, 5, 6, 0.1, 1.0),
                       (4, 3, 4, 1.0, 0.1))
IDENTITY_GRID_FULL = (
    (1, 3, 3, 0.0, 1.0), (1, 4, 4, 0.0, 1.0), (1, 6, 6, 0.0, 1.0),
    (3, 3, 3, 0.0, 1.0), (3, 4, 4, 0.0, 1.0), (3, 4, 4, 0.0, 2.0),
    (3, 3, 4, 1.0, 0.5), (3, 3.5, 4.5, 0.3, 1.0), (3, 5, 6, 1.0, 0.1), (3, 5, 6, 1.0, 1.0),
    (4, 3, 4, 1.0, 0.1), (4, 3, 4, 1.0, 1.0),
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": self.value,
                "tolerance": self.tolerance, "seconds": self.seconds}


def _check(name, fn, tol):
    t0 = time.perf_counter()
    try:
        value = float(fn())
        passed = bool(value < tol)
    except Exception as exc:   # a crashing check is a failed check
        return Check(f"{name} ({type(exc).__name__}: {exc})", False, math.nan, tol,
                     time.perf_counter() - t0)
    return Check(name, passed, value, tol, time.perf_counter() - t0)


def soliton_error(p: float, controls: Controls = DEFAULT_CONTROLS) -> float:
    prof = solve_scalar_field(1, p, p, 0.0, 1.0, controls)
    r = np.linspace(0.0, 30.0, 3001)
    return float(np.max(np.abs(evaluate_profile(prof, r) - soliton_1d(r, p))))


def soliton_norm_error(controls: Controls = DEFAULT_CONTROLS) -> float:
    prof = solve_scalar_field(1, 4, 4, 0.0, 1.0, controls)
    b = norm_bundle(prof, 1, 4, 4, 0.0, 1.0, controls.refine)
    return max(abs(b.B - 4) / 4, abs(b.D - 16 / 3) / (16 / 3), abs(b.A - 4 / 3) / (4 / 3))


def identity_residual(case, controls: Controls = DEFAULT_CONTROLS) -> float:
    d, q, p, mu_q, mu_p = case
    prof = solve_scalar_field(d, q, p, mu_q, mu_p, controls)
    b = norm_bundle(prof, d, q, p, mu_q, mu_p, controls.refine)
    return identity_residuals(b, d, q, p, mu_q, mu_p).max()


def talenti_error(N: int) -> float:
    S = sobolev_S_closed_form(N)
    return abs(best_sobolev_S(N) - S) / S


def dilation_error(controls: Controls = DEFAULT_CONTROLS) -> float:
    """Worst deviation from A -> t^{d-2} A, B -> t^d B under r -> r/t."""
    worst = 0.0
    for d, q, p in ((3, 4, 4), (4, 3, 3)):
        prof = solve_scalar_field(d, q, p, 0.0, 1.0, controls)
        base = norm_bundle(prof, d, q, p, 0.0, 1.0, controls.refine)
        for t in (0.5, 2.0):
            b = norm_bundle(dilate_profile(prof, t), d, q, p, 0.0, 1.0, controls.refine)
            worst = max(worst, abs(b.A - t ** (d - 2) * base.A) / base.A,
                        abs(b.B - t ** d * base.B) / base.B)
    return worst


def pq_oracle_error(lams=(1.0,), controls: Controls = DEFAULT_CONTROLS) -> float:
    worst = 0.0
    for b in (1.0, 0.0):
        for lam in lams:
            P = validate_params(3, 1.0, b, 4.0, 4.0, lam)
            g = ground_state(P, controls)
            e = exact_pq_solution(P, controls)
            for x, y in ((g.varpi, e.varpi), (g.peak, e.peak), (g.norms.A, e.norms.A),
                         (g.norms.B, e.norms.B), (g.norms.D, e.norms.D)):
                worst = max(worst, abs(x - y) / abs(y))
    return worst


def tag_independence_error(lams=(1.0,), controls: Controls = DEFAULT_CONTROLS) -> float:
    worst = 0.0
    for lam in lams:
        P = validate_params(3, 1.0, 1.0, 3.0, 4.0, lam)
        s, l = ground_state(P, controls, SMALL), ground_state(P, controls, LARGE)
        for k in ("A", "B", "C", "D"):
            x, y = getattr(s.norms, k), getattr(l.norms, k)
            worst = max(worst, abs(x - y) / abs(y))
    return worst


def coverage_mismatch() -> float:
    seen = set()
    for args in COVERAGE_PARAMS:
        rows = [l.row for l in all_laws(validate_params(*args))]
        if len(rows) != len(set(rows)):
            return 1.0
        seen.update(rows)
    return float(len(seen ^ set(ROW_IDS)))


def run_suite(suite: str = "quick", controls: Controls = DEFAULT_CONTROLS) -> dict:
    if suite not in ("quick", "full"):
        raise ValueError("suite must be quick or full")
    full = suite == "full"
    checks = []
    for p in ((3, 4, 6) if full else (4,)):
        checks.append(_check(f"1D soliton sup error p={p}", lambda p=p: soliton_error(p, controls),
                             1e-8))
    checks.append(_check("1D soliton norms", lambda: soliton_norm_error(controls), 1e-8))
    for case in (IDENTITY_GRID_FULL if full else IDENTITY_GRID_QUICK):
        checks.append(_check(f"Nehari/Pohozaev {case}",
                             lambda c=case: identity_residual(c, controls), 1e-6))
    for N in (3, 4):
        checks.append(_check(f"Talenti S N={N}", lambda N=N: talenti_error(N), 1e-6))
    checks.append(_check("dilation covariance", lambda: dilation_error(controls), 1e-8))
    lams = (1e-3, 1e-1, 1.0, 10.0, 1e3) if full else (1.0,)
    checks.append(_check("p=q exact solution", lambda: pq_oracle_error(lams, controls), 1e-6))
    tl = (0.01, 1.0, 100.0) if full else (1.0,)
    checks.append(_check("normalization independence",
                         lambda: tag_independence_error(tl, controls), 1e-6))
    checks.append(_check("law table coverage", coverage_mismatch, 0.5))
    return {"suite": suite, "passed": all(c.passed for c in checks),
            "checks": [c.as_dict() for c in checks]}


__all__ = ["run_suite", "Check", "COVERAGE_PARAMS"]
