"""Shared domain types, solver controls and parameter validation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

CRITICAL_TOL = 1e-12

SMALL = "small-lambda"
LARGE = "large-lambda"
EXACT_PQ = "exact-pq"


class KirchhoffError(Exception):
    """Base class for all errors raised by the package."""

    code = 3


class ParameterError(KirchhoffError, ValueError):
    """Rejected input; `constraint` names the violated condition."""

    code = 2

    def __init__(self, constraint: str, message: str, **details):
        super().__init__(message)
        self.constraint = constraint
        self.details = details

    def to_dict(self) -> dict:
        return {"error": "invalid-input", "constraint": self.constraint,
                "message": str(self), **self.details}


class SolverError(KirchhoffError, RuntimeError):
    """Numerical failure (bracketing, integration, identity check)."""

    code = 3

    def __init__(self, kind: str, message: str, **details):
        super().__init__(message)
        self.kind = kind
        self.details = details

    def to_dict(self) -> dict:
        return {"error": "solver-failure", "kind": self.kind,
                "message": str(self), **self.details}


class ConcentrationRegime(SolverError):
    """Shooting lost conditioning on a concentrating critical profile."""


@dataclass(frozen=True)
class Controls:
    """Numerical tolerances; hashable so it can key profile caches."""

    ode_tol: float = 1e-10
    ode_atol: float = 1e-12
    max_step: float = 0.02
    shoot_tol: float = 1e-15
    tail_threshold: float = 1e-8
    tail_tol: float = 1e-3
    match_tol: float = 1e-9
    r_start: float = 1e-4
    r_max: float = 60.0
    max_expand: int = 60
    refine: int = 4
    identity_tol: float = 1e-6
    guard_low: float = 0.5
    guard_high: float = 2.0

    def replace(self, **changes) -> "Controls":
        data = asdict(self)
        data.update(changes)
        return Controls(**data)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "Controls":
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for key, raw in mapping.items():
            if key not in known:
                raise ParameterError("controls", f"unknown control {key!r}", key=key)
            default = getattr(cls(), key)
            try:
                values[key] = type(default)(raw)
            except (TypeError, ValueError):
                raise ParameterError("controls", f"bad value for {key}: {raw!r}", key=key)
        ctl = cls(**values)
        if ctl.refine < 2 or ctl.refine % 2:
            raise ParameterError("controls", "refine must be an even integer >= 2")
        return ctl


DEFAULT_CONTROLS = Controls()


def critical_exponent(N: int) -> float:
    return 2.0 * N / (N - 2)


@dataclass(frozen=True)
class ProblemParams:
    N: int
    a: float
    b: float
    q: float
    p: float
    lam: float = 1.0

    @property
    def two_star(self) -> float:
        return critical_exponent(self.N)

    @property
    def critical(self) -> bool:
        return abs(self.p - self.two_star) < CRITICAL_TOL

    @property
    def pq_equal(self) -> bool:
        return self.p == self.q

    @property
    def case(self) -> str:
        if self.critical:
            return "critical"
        if self.pq_equal:
            return "pq-equal"
        return "subcritical"

    def with_lambda(self, lam: float) -> "ProblemParams":
        return ProblemParams(self.N, self.a, self.b, self.q, self.p, float(lam))

    def as_dict(self) -> dict:
        return {"N": self.N, "a": self.a, "b": self.b, "q": self.q, "p": self.p,
                "lambda": self.lam}


def validate_params(N, a, b, q, p, lam=1.0, *, check_sobolev: bool = True) -> ProblemParams:
    """Return a validated ProblemParams or raise ParameterError.

    For N=4 critical problems with b>0 the hypothesis b*S^2 < 1 is checked
    against the Talenti constant S (skippable for callers that do it later).
    """
    values = {"a": a, "b": b, "q": q, "p": p, "lambda": lam}
    for name, v in values.items():
        if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
            raise ParameterError("finite", f"{name} must be a finite real", name=name)
    if int(N) != N or int(N) not in (3, 4):
        raise ParameterError("dimension", f"N must be 3 or 4, got {N}", N=N)
    N = int(N)
    if a <= 0:
        raise ParameterError("a>0", f"a must be positive, got {a}")
    if b < 0:
        raise ParameterError("b>=0", f"b must be nonnegative, got {b}")
    if lam <= 0:
        raise ParameterError("lambda>0", f"lambda must be positive, got {lam}")
    two_star = critical_exponent(N)
    if not (2 < q <= p):
        raise ParameterError("2<q<=p", f"need 2 < q <= p, got q={q}, p={p}")
    if p > two_star + CRITICAL_TOL:
        raise ParameterError("p<=2*", f"need p <= 2* = {two_star}, got p={p}")
    if abs(p - two_star) < CRITICAL_TOL:
        p = two_star
        if q == p:
            raise ParameterError("q<2*", "critical case needs q < 2*")
    params = ProblemParams(N, float(a), float(b), float(q), float(p), float(lam))
    if check_sobolev and params.critical and N == 4 and b > 0:
        from .quadrature import best_sobolev_S

        S = best_sobolev_S(4)
        if b * S * S >= 1:
            raise ParameterError("b*S^2<1", f"N=4 critical case needs b*S^2 < 1 (S={S!r})",
                                 S=S, bS2=b * S * S)
    return params


def classify_regime(params: ProblemParams) -> str:
    """Normalization tag: exact-pq if p=q, else small-lambda for lam<=1."""
    if params.pq_equal:
        return EXACT_PQ
    return SMALL if params.lam <= 1.0 else LARGE


@dataclass(frozen=True)
class TailModel:
    """Far-field model attached beyond r_match.

    kind "exp":      W ~ amplitude * r^{-(d-1)/2} * exp(-rate * r)
    kind "algebraic": W = amplitude * (1 + r^2)^{-rate/2}  (Talenti profile)
    """

    kind: str
    r_match: float
    amplitude: float
    rate: float

    def value(self, r, d: int):
        r = np.asarray(r, dtype=float)
        if self.kind == "exp":
            return self.amplitude * r ** (-(d - 1) / 2.0) * np.exp(-self.rate * r)
        return self.amplitude * (1.0 + r * r) ** (-self.rate / 2.0)

    def slope(self, r, d: int):
        r = np.asarray(r, dtype=float)
        w = self.value(r, d)
        if self.kind == "exp":
            return -w * (self.rate + (d - 1) / (2.0 * r))
        return -self.rate * r * w / (1.0 + r * r)


@dataclass(frozen=True, eq=False)
class LocalProfile:
    """Radial profile on a grid with an analytic far field.

    `r`, `W`, `dW`, `d2W` are the grid, values, first and second
    derivatives.  `tail` takes over beyond the last grid point.  For ODE
    profiles `equation` is (q, p, mu_q, mu_p) and `r_shoot` is the radius
    where the shooting trajectory was handed over to the far-field model.
    """

    d: int
    r: np.ndarray
    W: np.ndarray
    dW: np.ndarray
    d2W: np.ndarray
    tail: TailModel
    shoot_value: float
    equation: Optional[tuple] = None
    r_shoot: float = float("nan")

    @property
    def n_core(self) -> int:
        """Number of grid points up to and including r_match."""
        return int(np.searchsorted(self.r, self.tail.r_match, side="right"))


@dataclass(frozen=True)
class NormBundle:
    A: float
    B: float
    C: float
    D: float
    energy: float

    def as_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "C": self.C, "D": self.D, "energy": self.energy}


@dataclass(frozen=True)
class ScalingDescriptor:
    """u(x) = lam^alpha * w(x / ell)."""

    alpha: float
    ell: float
    tag: str
    sigma: Optional[float] = None

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "ell": self.ell, "tag": self.tag, "sigma": self.sigma}


@dataclass(frozen=True)
class IdentityResiduals:
    nehari: float
    pohozaev: float

    def max(self) -> float:
        return max(self.nehari, self.pohozaev)


@dataclass(frozen=True, eq=False)
class GroundStateSolution:
    params: ProblemParams
    profile: LocalProfile
    scaling: ScalingDescriptor
    varpi: float
    norms: NormBundle
    peak: float
    local_norms: NormBundle
    residuals: IdentityResiduals

    @property
    def mass(self) -> float:
        return self.norms.B

    def u(self, x):
        """Evaluate u_lambda at radius |x|."""
        from .radial_ode import evaluate_profile

        s = self.scaling
        return self.params.lam ** s.alpha * evaluate_profile(self.profile, np.asarray(x) / s.ell)

    def report(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "case": self.params.case,
            "varpi": self.varpi,
            "peak": self.peak,
            "norms": self.norms.as_dict(),
            "energy": self.norms.energy,
            "local_norms": self.local_norms.as_dict(),
            "residuals": {"nehari": self.residuals.nehari, "pohozaev": self.residuals.pohozaev},
            "scaling": self.scaling.as_dict(),
            "local_equation": list(self.profile.equation) if self.profile.equation else None,
            "shoot_value": self.profile.shoot_value,
        }


def relative_residual(lhs: float, rhs: float) -> float:
    den = abs(lhs) + abs(rhs)
    return abs(lhs - rhs) / den if den > 0 else 0.0
