"""Ground states of the Kirchhoff problem via reduction to a local equation.

A solution is stored in rescaled form u(x) = lam^alpha w(x/ell) with
ell = sqrt(varpi/lam) and varpi = a + b ||grad u||^2.  Depending on the tag,
w solves

    small-lambda:  -Delta w + w = w^{q-1} + eps w^{p-1},    eps = lam^{(p-q)/(q-2)}
    large-lambda:  -Delta w + w = delta w^{q-1} + w^{p-1},  delta = lam^{-(p-q)/(p-2)}

and every u-norm follows from the w-norms by exact scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core import (DEFAULT_CONTROLS, EXACT_PQ, LARGE, SMALL, ConcentrationRegime, Controls,
                   GroundStateSolution, IdentityResiduals, LocalProfile, NormBundle,
                   ParameterError, ProblemParams, ScalingDescriptor, SolverError, TailModel,
                   classify_regime, relative_residual)
from .quadrature import best_sobolev_S, norm_bundle, single_power_profile, sobolev_constant
from .radial_ode import solve_scalar_field


@dataclass(frozen=True)
class VarpiEquation:
    """varpi = a + coupling * varpi^{(N-2)/2}."""

    N: int
    a: float
    coupling: float


def solve_varpi(eq: VarpiEquation) -> float:
    if eq.coupling < 0 or eq.a <= 0:
        raise ValueError("need a > 0 and coupling >= 0")
    if eq.coupling == 0:
        return float(eq.a)
    if eq.N == 3:
        k = eq.coupling
        root = (k + math.sqrt(k * k + 4 * eq.a)) / 2
        return root * root
    if eq.N == 4:
        if eq.coupling >= 1:
            raise SolverError("varpi", "no varpi for N=4 with coupling >= 1",
                              coupling=eq.coupling)
        return eq.a / (1 - eq.coupling)
    raise ValueError("N must be 3 or 4")


def local_equation(params: ProblemParams, tag: str):
    """(alpha, mu_q, mu_p) of the reduced equation for a normalization tag."""
    q, p, lam = params.q, params.p, params.lam
    if tag == EXACT_PQ:
        if not params.pq_equal:
            raise ValueError("exact-pq tag needs p = q")
        return 1.0 / (p - 2), 1.0, 1.0
    if tag == SMALL:
        return 1.0 / (q - 2), 1.0, lam ** ((p - q) / (q - 2))
    if tag == LARGE:
        return 1.0 / (p - 2), lam ** (-(p - q) / (p - 2)), 1.0
    raise ValueError(f"unknown tag {tag!r}")


def coupling_exponent(N: int, alpha: float) -> float:
    """Power of lam in the varpi coupling: A_u = lam^{2 alpha - (N-2)/2} varpi^{(N-2)/2} A_w."""
    return 2 * alpha - (N - 2) / 2.0


def scale_bundle(params: ProblemParams, alpha: float, ell: float, local: NormBundle) -> NormBundle:
    """u-level (A, B, C, D) from the local bundle of w, plus the action."""
    N, q, p, lam = params.N, params.q, params.p, params.lam
    try:
        la = math.log(lam)
        le = math.log(ell)
        A = math.exp(2 * alpha * la + (N - 2) * le) * local.A
        B = math.exp(2 * alpha * la + N * le) * local.B
        C = math.exp(q * alpha * la + N * le) * local.C
        D = math.exp(p * alpha * la + N * le) * local.D
    except OverflowError:
        raise SolverError("overflow", "u-level norms overflow at this lambda", lam=lam)
    partial = NormBundle(A, B, C, D, 0.0)
    return replace(partial, energy=kirchhoff_energy(params, partial))


def kirchhoff_energy(params: ProblemParams, bundle: NormBundle) -> float:
    """(a/2)A + (lam/2)B + (b/4)A^2 - C/q - D/p."""
    a, b, q, p, lam = params.a, params.b, params.q, params.p, params.lam
    A, B, C, D = bundle.A, bundle.B, bundle.C, bundle.D
    return a / 2 * A + lam / 2 * B + b / 4 * A * A - C / q - D / p


def kirchhoff_residuals(params: ProblemParams, bundle: NormBundle) -> IdentityResiduals:
    """Nehari and Pohozaev residuals of the nonlocal problem."""
    N, a, b, q, p, lam = params.N, params.a, params.b, params.q, params.p, params.lam
    A, B, C, D = bundle.A, bundle.B, bundle.C, bundle.D
    ts = 2.0 * N / (N - 2)
    nehari = relative_residual(a * A + lam * B + b * A * A, C + D)
    pohozaev = relative_residual(a / ts * A + lam / 2 * B + b / ts * A * A, C / q + D / p)
    return IdentityResiduals(nehari, pohozaev)


def critical_pohozaev_residual(local: NormBundle, d: int, q: float, mu_q: float) -> float:
    """(1/2 - 1/2*) B = mu_q (1/q - 1/2*) C for critical local equations."""
    ts = 2.0 * d / (d - 2)
    return relative_residual((0.5 - 1 / ts) * local.B, mu_q * (1 / q - 1 / ts) * local.C)


def ground_state(params: ProblemParams, controls: Controls = DEFAULT_CONTROLS,
                 tag: str | None = None, check: bool = True) -> GroundStateSolution:
    """Positive radial solution u_lambda assembled from the reduced local equation."""
    tag = tag or classify_regime(params)
    N, a, b, q, p, lam = params.N, params.a, params.b, params.q, params.p, params.lam
    alpha, mu_q, mu_p = local_equation(params, tag)
    try:
        profile = solve_scalar_field(N, q, p, mu_q, mu_p, controls)
    except SolverError as exc:
        if params.critical and tag == LARGE:
            raise ConcentrationRegime("concentration", "shooting lost conditioning on the "
                                      "concentrating critical profile", lam=lam,
                                      cause=str(exc))
        raise
    local = norm_bundle(profile, N, q, p, mu_q, mu_p, controls.refine)
    coupling = b * lam ** coupling_exponent(N, alpha) * local.A if b > 0 else 0.0
    varpi = solve_varpi(VarpiEquation(N, a, coupling))
    ell = math.sqrt(varpi / lam)
    norms = scale_bundle(params, alpha, ell, local)
    residuals = kirchhoff_residuals(params, norms)
    sigma = (params.two_star - q) / (q - 2) if params.critical else None
    sol = GroundStateSolution(params, profile, ScalingDescriptor(alpha, ell, tag, sigma), varpi,
                              norms, lam ** alpha * profile.shoot_value, local, residuals)
    if check and residuals.max() > controls.identity_tol:
        raise SolverError("identity", "Nehari/Pohozaev residual above tolerance",
                          lam=lam, nehari=residuals.nehari, pohozaev=residuals.pohozaev)
    return sol


def _scaled_profile(profile: LocalProfile, factor: float, equation) -> LocalProfile:
    t = profile.tail
    return LocalProfile(profile.d, profile.r, factor * profile.W, factor * profile.dW,
                        factor * profile.d2W, TailModel(t.kind, t.r_match, factor * t.amplitude,
                                                        t.rate),
                        factor * profile.shoot_value, equation, profile.r_shoot)


def pq_sqrt_varpi(params: ProblemParams, S_p: float) -> float:
    """Closed-form sqrt(varpi) for p = q, the positive root of s(s - bK) = a."""
    p, a, b, lam = params.p, params.a, params.b, params.lam
    K = (S_p / 2) ** (p / (p - 2))
    X = lam ** ((6 - p) / (2 * (p - 2)))
    half = 3 * b * (p - 2) / (2 * p) * X * K
    return half + math.sqrt(half * half + a)


def printed_pq_sqrt_varpi(params: ProblemParams, S_p: float) -> float:
    """Variant with coefficients 3b(p-2)/(4p), 9b^2(p-2)^2/(16p^2).

    Kept to document that it does not satisfy varpi = a + b||grad u||^2 when b > 0.
    """
    p, a, b, lam = params.p, params.a, params.b, params.lam
    K = (S_p / 2) ** (p / (p - 2))
    X = lam ** ((6 - p) / (2 * (p - 2)))
    c = 3 * b * (p - 2) / (4 * p) * X * K
    return c + math.sqrt(9 * b * b * (p - 2) ** 2 / (16 * p * p) * X * X * K * K + a)


def exact_pq_solution(params: ProblemParams,
                      controls: Controls = DEFAULT_CONTROLS) -> GroundStateSolution:
    """u(x) = (lam/2)^{1/(p-2)} W0(sqrt(lam/varpi) x) with closed-form norms (N=3, p=q)."""
    if params.N != 3:
        raise ParameterError("N=3", "exact p=q solution is only available for N=3")
    if not params.pq_equal:
        raise ParameterError("p=q", "exact solution needs p = q")
    p, lam = params.p, params.lam
    W0 = single_power_profile(3, p, controls)
    S_p = sobolev_constant(3, p, controls)
    sv = pq_sqrt_varpi(params, S_p)
    varpi = sv * sv
    K = (S_p / 2) ** (p / (p - 2))
    X = lam ** ((6 - p) / (2 * (p - 2)))
    A = X * 3 * (p - 2) / p * sv * K
    B = lam ** ((10 - 3 * p) / (2 * (p - 2))) * (6 - p) / p * sv ** 3 * K
    D = X * sv ** 3 * K
    bundle = NormBundle(A, B, D, D, 0.0)
    bundle = replace(bundle, energy=kirchhoff_energy(params, bundle))
    alpha = 1.0 / (p - 2)
    factor = 2.0 ** (-alpha)
    w = _scaled_profile(W0, factor, (p, p, 1.0, 1.0))
    local = norm_bundle(w, 3, p, p, 1.0, 1.0, controls.refine)
    return GroundStateSolution(params, w, ScalingDescriptor(alpha, math.sqrt(varpi / lam),
                                                            EXACT_PQ),
                               varpi, bundle, (lam / 2) ** alpha * W0.shoot_value, local,
                               kirchhoff_residuals(params, bundle))


@dataclass(frozen=True)
class CriticalLimits:
    gamma: float
    m_infinity: float
    limit_grad: float
    limit_2star: float
    S: float


def critical_limits(N: int, a: float, b: float) -> CriticalLimits:
    """Limits of the critical problem as lambda -> infinity."""
    S = best_sobolev_S(N)
    if N == 4:
        if b * S * S >= 1:
            raise ParameterError("b*S^2<1", f"needs b*S^2 < 1 (S={S!r})", S=S)
        one = 1 - b * S * S
        return CriticalLimits(math.sqrt(one / a), a * a * S * S / (4 * one), a * S * S / one,
                              a * a * S * S / one ** 2, S)
    if N == 3:
        root = math.sqrt(b * b * S ** 3 + 4 * a)
        X = b * S ** 3 + S ** 1.5 * root
        return CriticalLimits(2 / (b * S ** 1.5 + root), a / 6 * X + b / 48 * X * X, X / 2,
                              (b * S * S + math.sqrt(S) * root) ** 3 / 8, S)
    raise ParameterError("dimension", "N must be 3 or 4")


def local_peak_bound(s: float, q: float, p: float, mu_q: float, mu_p: float) -> float:
    """mu_q s^{q-2} + mu_p s^{p-2}; at least 1 at the peak of a positive solution."""
    return mu_q * s ** (q - 2) + mu_p * s ** (p - 2)


