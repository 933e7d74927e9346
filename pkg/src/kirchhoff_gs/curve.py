"""Mass curve M(lambda) = ||u_lambda||_2^2 and normalized solutions M(lambda_c) = c^2."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .asymptotics import (NotCovered, count_row, mass_limits, normalized_laws,
                          predicted_counts)
from .core import (DEFAULT_CONTROLS, Controls, GroundStateSolution, KirchhoffError,
                   NormBundle, ParameterError, ProblemParams, SolverError)
from .kirchhoff import ground_state

CSV_HEADER = ("lambda", "M", "gradA", "Lq", "Lp", "energy", "varpi", "peak")
ROOT_TOL = 1e-8
MASS_TOL = 1e-6
UNRELIABLE = "unreliable: near threshold"
RELIABLE = "reliable"


@dataclass(frozen=True)
class CurveSample:
    lam: float
    M: float
    norms: NormBundle
    energy: float
    varpi: float
    peak: float

    def row(self) -> tuple:
        n = self.norms
        return (self.lam, self.M, n.A, n.C, n.D, self.energy, self.varpi, self.peak)


@dataclass(frozen=True)
class CurveFailure:
    lam: float
    kind: str
    reason: str


@dataclass(frozen=True)
class MassCurve:
    params: ProblemParams
    samples: tuple
    failures: tuple
    lam_min: float
    lam_max: float
    n_points: int

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples])

    @property
    def masses(self) -> np.ndarray:
        return np.array([s.M for s in self.samples])

    def turning_values(self) -> list:
        """M at interior local extrema of the sampled curve."""
        M = self.masses
        return [float(M[i]) for i in range(1, len(M) - 1)
                if (M[i] - M[i - 1]) * (M[i + 1] - M[i]) < 0]

    def end_signs(self):
        """Finite-difference signs of M' at the first and last pair of samples."""
        M = self.masses
        if len(M) < 2:
            return None, None
        return int(np.sign(M[1] - M[0])), int(np.sign(M[-1] - M[-2]))

    def to_csv(self, fh=None) -> str:
        buf = fh or io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in self.samples:
            w.writerow([repr(float(v)) for v in s.row()])
        return buf.getvalue() if fh is None else ""

    def as_dict(self) -> dict:
        return {
            "params": {k: v for k, v in self.params.as_dict().items() if k != "lambda"},
            "grid": {"lambda_min": self.lam_min, "lambda_max": self.lam_max,
                     "points": self.n_points, "spacing": "log"},
            "samples": [dict(zip(CSV_HEADER, map(float, s.row()))) for s in self.samples],
            "failures": [{"lambda": f.lam, "kind": f.kind, "reason": f.reason}
                         for f in self.failures],
        }


def log_grid(lam_min: float, lam_max: float, n_points: int) -> np.ndarray:
    if n_points < 1:
        raise ParameterError("points", "need at least one point")
    if n_points == 1:
        return np.array([float(lam_min)])
    if not 0 < lam_min < lam_max:
        raise ParameterError("0<lambda_min<lambda_max", "need 0 < lambda_min < lambda_max")
    return np.geomspace(lam_min, lam_max, n_points)


def _sample(params: ProblemParams, lam: float, controls: Controls):
    try:
        sol = ground_state(params.with_lambda(lam), controls)
    except KirchhoffError as exc:
        return CurveFailure(float(lam), getattr(exc, "kind", type(exc).__name__), str(exc))
    return CurveSample(float(lam), sol.norms.B, sol.norms, sol.norms.energy, sol.varpi,
                       sol.peak)


def _sample_chunk(args):
    params, lams, controls = args
    return [_sample(params, lam, controls) for lam in lams]


def trace(params: ProblemParams, lam_min: float, lam_max: float, n_points: int,
          controls: Controls = DEFAULT_CONTROLS, workers: int = 1,
          progress=None) -> MassCurve:
    """Solve ground states on a log-spaced grid; failed points are recorded."""
    grid = log_grid(lam_min, lam_max, n_points)
    if workers <= 1:
        results = []
        for i, lam in enumerate(grid):
            results.append(_sample(params, lam, controls))
            if progress:
                progress(i + 1, len(grid))
    else:
        chunks = np.array_split(grid, min(workers * 4, len(grid)))
        tasks = [(params, list(map(float, c)), controls) for c in chunks if len(c)]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_sample_chunk, tasks):
                results.extend(part)
                if progress:
                    progress(len(results), len(grid))
    samples = tuple(r for r in results if isinstance(r, CurveSample))
    failures = tuple(r for r in results if isinstance(r, CurveFailure))
    if not samples:
        raise SolverError("all-failed", "every point of the curve failed",
                          first=failures[0].reason if failures else "")
    return MassCurve(params, samples, failures, float(grid[0]), float(grid[-1]), len(grid))


# ---------------------------------------------------------------- counting

@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    kind: str          # grid, zero-width, extrapolated-left, extrapolated-right


@dataclass(frozen=True)
class NormalizedCount:
    c: float
    count: int
    brackets: tuple
    label: str
    thresholds: tuple
    notes: tuple = ()
    reference: Optional[float] = None   # mass at the grid centre, for threshold-free curves

    def as_dict(self) -> dict:
        return {"c": self.c, "count": self.count, "label": self.label,
                "brackets": [{"lo": b.lo, "hi": b.hi, "kind": b.kind} for b in self.brackets],
                "thresholds": list(self.thresholds), "reference": self.reference,
                "notes": list(self.notes)}


def _limit_value(end) -> Optional[float]:
    if end.limit == "0":
        return 0.0
    if end.limit == "inf":
        return math.inf
    if end.limit == "finite":
        return end.value
    return None


def threshold_values(curve: MassCurve, controls: Controls = DEFAULT_CONTROLS) -> list:
    """Mass levels where the count changes: turning values and finite end limits."""
    vals = curve.turning_values()
    limits = mass_limits(curve.params, controls)
    for end in (limits.small, limits.large):
        if end.limit == "finite":
            vals.append(float(end.value))
    return sorted(vals)


def guard_label(c: float, levels, controls: Controls = DEFAULT_CONTROLS) -> str:
    c2 = c * c
    lo, hi = controls.guard_low ** 2, controls.guard_high ** 2
    for T in levels:
        if lo * T <= c2 <= hi * T:
            return UNRELIABLE
    return RELIABLE


def _refine_plateaus(curve: MassCurve, c2: float, controls: Controls) -> MassCurve:
    """Insert geometric midpoints next to samples with M within MASS_TOL of c^2."""
    lams = list(curve.lambdas)
    M = curve.masses
    extra = []
    for i, m in enumerate(M):
        if m != c2 and abs(m - c2) < MASS_TOL * c2:
            if i > 0:
                extra.append(math.sqrt(lams[i - 1] * lams[i]))
            if i + 1 < len(lams):
                extra.append(math.sqrt(lams[i] * lams[i + 1]))
    if not extra:
        return curve
    new = [_sample(curve.params, lam, controls) for lam in extra]
    samples = sorted(curve.samples + tuple(s for s in new if isinstance(s, CurveSample)),
                     key=lambda s: s.lam)
    failures = curve.failures + tuple(s for s in new if isinstance(s, CurveFailure))
    return MassCurve(curve.params, tuple(samples), failures, curve.lam_min, curve.lam_max,
                     len(samples))


def count_normalized(curve: MassCurve, c: float, controls: Controls = DEFAULT_CONTROLS,
                     refine: bool = True) -> NormalizedCount:
    """Sign changes of M - c^2 on the grid plus monotone-tail extrapolation."""
    if c <= 0 or not math.isfinite(c):
        raise ParameterError("c>0", "c must be a positive finite number")
    if not curve.samples:
        raise ParameterError("curve", "empty curve")
    c2 = c * c
    if refine:
        curve = _refine_plateaus(curve, c2, controls)
    lam = curve.lambdas
    f = curve.masses - c2
    brackets = []
    for i in range(len(f)):
        if f[i] == 0:
            brackets.append(Bracket(float(lam[i]), float(lam[i]), "zero-width"))
        elif i + 1 < len(f) and f[i + 1] != 0 and f[i] * f[i + 1] < 0:
            brackets.append(Bracket(float(lam[i]), float(lam[i + 1]), "grid"))
    notes = []
    limits = mass_limits(curve.params, controls)
    left, right = _limit_value(limits.small), _limit_value(limits.large)
    if left is None:
        notes.append("lambda->0 limit of M is open; no extrapolation below the grid")
    elif f[0] != 0 and (left - c2) * f[0] < 0:
        brackets.insert(0, Bracket(0.0, float(lam[0]), "extrapolated-left"))
    if right is None:
        notes.append("lambda->inf limit of M is open; no extrapolation above the grid")
    elif f[-1] != 0 and (right - c2) * f[-1] < 0:
        brackets.append(Bracket(float(lam[-1]), math.inf, "extrapolated-right"))
    levels = threshold_values(curve, controls)
    reference = float(curve.masses[len(f) // 2])
    return NormalizedCount(c, len(brackets), tuple(brackets), guard_label(c, levels, controls),
                           tuple(levels), tuple(notes), reference)


# ---------------------------------------------------------------- roots

@dataclass(frozen=True, eq=False)
class NormalizedRoot:
    lam: float
    solution: GroundStateSolution
    mass_error: float
    comparisons: tuple = ()

    def as_dict(self) -> dict:
        return {"lambda_c": self.lam, "mass": self.solution.norms.B,
                "relative_mass_error": self.mass_error, "peak": self.solution.peak,
                "norms": self.solution.norms.as_dict(), "varpi": self.solution.varpi,
                "predictions": [dict(c) for c in self.comparisons]}


@dataclass(frozen=True, eq=False)
class NormalizedSolutionSet:
    params: ProblemParams
    c: float
    roots: tuple
    predicted_count: Optional[int]
    count_row: Optional[str]
    c_regime: Optional[str]
    label: str
    brackets: tuple
    diagnostics: tuple = field(default=())

    def as_dict(self) -> dict:
        return {
            "params": {k: v for k, v in self.params.as_dict().items() if k != "lambda"},
            "c": self.c,
            "count": len(self.roots),
            "predicted_count": self.predicted_count,
            "count_row": self.count_row,
            "c_regime": self.c_regime,
            "label": self.label,
            "brackets": [{"lo": b.lo, "hi": b.hi, "kind": b.kind} for b in self.brackets],
            "roots": [r.as_dict() for r in self.roots],
            "diagnostics": list(self.diagnostics),
        }


def _mass(params: ProblemParams, lam: float, controls: Controls) -> float:
    return ground_state(params.with_lambda(lam), controls).norms.B


def _expand(params, c2, lo, hi, kind, controls, guess):
    """Move the open end of an extrapolated bracket until M - c^2 changes sign."""
    fixed = hi if kind == "extrapolated-left" else lo
    f_fixed = _mass(params, fixed, controls) - c2
    step = 10.0
    probe = fixed
    if guess is not None and math.isfinite(guess) and guess > 0:
        if (kind == "extrapolated-left" and guess < fixed) or (
                kind == "extrapolated-right" and guess > fixed):
            probe = guess
    for _ in range(controls.max_expand):
        probe = probe / step if kind == "extrapolated-left" else probe * step
        f_probe = _mass(params, probe, controls) - c2
        if f_probe == 0:
            return probe, probe
        if f_probe * f_fixed < 0:
            return (probe, fixed) if kind == "extrapolated-left" else (fixed, probe)
        fixed, f_fixed = probe, f_probe
    raise SolverError("root-lost", "no sign change while extending the bracket; "
                      "extend the lambda range", kind=kind)


def _lambda_c_predictions(params, c, controls):
    try:
        laws = normalized_laws(params, controls)
    except KirchhoffError:
        return []
    return [l for l in laws if l.quantity == "lambda_c"]


def _compare(lam_c: float, c: float, laws) -> list:
    out = []
    for law in laws:
        if law.ratio_only:
            continue
        try:
            pred = law.evaluate(c, lam_c)
        except (ValueError, OverflowError, ZeroDivisionError):
            continue
        out.append({"row": law.row, "regime": law.regime, "predicted": pred,
                    "ratio": lam_c / pred})
    # closest prediction first
    out.sort(key=lambda d: abs(math.log(d["ratio"])) if d["ratio"] > 0 else math.inf)
    return out


def c_regime(c: float, levels, controls: Controls = DEFAULT_CONTROLS,
             reference: Optional[float] = None) -> Optional[str]:
    """'small' below every guard band, 'large' above every one, else None.

    Without threshold levels the guard band is placed around `reference`;
    with neither, every c counts as small.
    """
    levels = list(levels) or ([reference] if reference else [])
    if not levels:
        return "small"
    c2 = c * c
    if c2 < controls.guard_low ** 2 * min(levels):
        return "small"
    if c2 > controls.guard_high ** 2 * max(levels):
        return "large"
    return None


def solve_normalized(params: ProblemParams, c: float, count: NormalizedCount,
                     controls: Controls = DEFAULT_CONTROLS) -> NormalizedSolutionSet:
    """Refine every bracket of `count` to |d lambda / lambda| <= 1e-8."""
    c2 = c * c
    laws = _lambda_c_predictions(params, c, controls)
    guesses = {}
    for law in laws:
        if law.ratio_only:
            continue
        try:
            guesses[law.row] = law.evaluate(c)
        except (ValueError, OverflowError, ZeroDivisionError):
            pass
    roots, diags = [], []
    for br in count.brackets:
        if br.kind == "zero-width":
            lam_c = br.lo
        else:
            lo, hi = br.lo, br.hi
            if br.kind.startswith("extrapolated"):
                guess = _guess_for(br, guesses)
                lo, hi = _expand(params, c2, lo, hi, br.kind, controls, guess)
            if lo == hi:
                lam_c = lo
            else:
                g = lambda t: _mass(params, math.exp(t), controls) - c2
                try:
                    t = brentq(g, math.log(lo), math.log(hi), xtol=ROOT_TOL, rtol=1e-15,
                               maxiter=200)
                except ValueError as exc:
                    raise SolverError("root-lost", f"bracket [{lo!r}, {hi!r}] has no sign "
                                      "change; refine the curve", cause=str(exc))
                lam_c = math.exp(t)
        sol = ground_state(params.with_lambda(lam_c), controls)
        err = abs(sol.norms.B - c2) / c2
        if err >= MASS_TOL:
            diags.append(f"root at lambda={lam_c!r} has relative mass error {err!r}")
        roots.append(NormalizedRoot(lam_c, sol, err, tuple(_compare(lam_c, c, laws))))
    roots.sort(key=lambda r: r.lam)
    regime = c_regime(c, count.thresholds, controls, count.reference)
    pred, row = None, None
    try:
        row = count_row(params)
        small, large = predicted_counts(params)
        pred = {"small": small, "large": large}.get(regime)
    except NotCovered:
        pass
    return NormalizedSolutionSet(params, c, tuple(roots), pred, row, regime, count.label,
                                 count.brackets, tuple(diags) + count.notes)


def _guess_for(br: Bracket, guesses: dict) -> Optional[float]:
    # an extrapolated-left bracket follows the lambda -> 0 branch, and vice versa
    branch = "small-lambda" if br.kind == "extrapolated-left" else "large-lambda"
    for row, val in guesses.items():
        if branch in row or "/pq/" in row:
            if (br.kind == "extrapolated-left" and val < br.hi) or (
                    br.kind == "extrapolated-right" and val > br.lo):
                return val
    return None


def normalized_solutions(params: ProblemParams, c: float, lam_min: float = 1e-6,
                         lam_max: float = 1e6, n_points: int = 49,
                         controls: Controls = DEFAULT_CONTROLS, workers: int = 1):
    """Trace, count and refine in one call; returns (curve, count, solution set)."""
    curve = trace(params, lam_min, lam_max, n_points, controls, workers)
    count = count_normalized(curve, c, controls)
    return curve, count, solve_normalized(params, c, count, controls)
