"""Norms of radial profiles, Nehari/Pohozaev residuals and Sobolev constants."""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

from .core import (DEFAULT_CONTROLS, Controls, IdentityResiduals, LocalProfile, NormBundle,
                   SolverError, TailModel, relative_residual)

DIVERGENT = math.inf


def sphere_measure(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 for d=1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _simpson_nodes(m: int):
    t = np.arange(m + 1) / m
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return t, w / (3.0 * m)


def _hermite(y0, y1, s0, s1, h, t):
    """Cubic Hermite values on each interval at fractional positions t."""
    t = t[None, :]
    h = h[:, None]
    t2, t3 = t * t, t * t * t
    return ((2 * t3 - 3 * t2 + 1) * y0[:, None] + (t3 - 2 * t2 + t) * h * s0[:, None]
            + (-2 * t3 + 3 * t2) * y1[:, None] + (t3 - t2) * h * s1[:, None])


def _grid_integral(profile: LocalProfile, which: str, s: float, refine: int) -> float:
    r, W, dW, d2W = profile.r, profile.W, profile.dW, profile.d2W
    h = np.diff(r)
    t, wts = _simpson_nodes(refine)
    rr = r[:-1, None] + h[:, None] * t[None, :]
    if which == "grad":
        vals = _hermite(dW[:-1], dW[1:], d2W[:-1], d2W[1:], h, t) ** 2
    else:
        vals = np.abs(_hermite(W[:-1], W[1:], dW[:-1], dW[1:], h, t)) ** s
    integrand = vals * rr ** (profile.d - 1)
    return float(np.sum((integrand @ wts) * h))


def _exp_tail_power(tail: TailModel, s: float, d: int) -> float:
    # int_R^inf (A r^{-(d-1)/2} e^{-r})^s r^{d-1} dr = A^s s^{-(k+1)} Gamma(k+1, sR)
    k = (d - 1) * (1.0 - s / 2.0)
    R = tail.r_match
    val = mpmath.gammainc(k + 1.0, s * tail.rate * R) * (s * tail.rate) ** (-(k + 1.0))
    return float(tail.amplitude ** s * val)


def _exp_tail_grad(tail: TailModel, d: int) -> float:
    # W' = -A e^{-cr} r^{-m}(c + m/r), m=(d-1)/2, so W'^2 r^{d-1} = A^2 e^{-2cr}(c+m/r)^2
    m = (d - 1) / 2.0
    c = tail.rate
    R = tail.r_match

    def moment(j):
        return mpmath.gammainc(j + 1.0, 2.0 * c * R) * (2.0 * c) ** (-(j + 1.0))

    val = c * c * moment(0)
    if m:
        val += 2 * c * m * moment(-1) + m * m * moment(-2)
    return float(tail.amplitude ** 2 * val)


def _power_tail(R: float, m: float, k: float) -> float:
    """int_R^inf r^m (1+r^2)^{-k} dr, or inf when it diverges."""
    a = k - (m + 1.0) / 2.0
    b = (m + 1.0) / 2.0
    if a <= 0:
        return DIVERGENT
    x = 1.0 / (1.0 + R * R)
    return 0.5 * special.beta(a, b) * special.betainc(a, b, x)


def _algebraic_tail_power(tail: TailModel, s: float, d: int) -> float:
    val = _power_tail(tail.r_match, d - 1.0, s * tail.rate / 2.0)
    return tail.amplitude ** s * val


def _algebraic_tail_grad(tail: TailModel, d: int) -> float:
    # W' = -rate A r (1+r^2)^{-rate/2-1}
    val = _power_tail(tail.r_match, d + 1.0, tail.rate + 2.0)
    return (tail.rate * tail.amplitude) ** 2 * val


def lp_power_integral(profile: LocalProfile, s: float, d: int | None = None,
                      refine: int = DEFAULT_CONTROLS.refine) -> float:
    """omega_{d-1} * int_0^inf W^s r^{d-1} dr (grid quadrature + closed-form tail)."""
    d = profile.d if d is None else d
    if s <= 0:
        raise ValueError("s must be positive")
    if profile.tail.kind == "exp":
        tail = _exp_tail_power(profile.tail, s, d)
    else:
        tail = _algebraic_tail_power(profile.tail, s, d)
    if math.isinf(tail):
        return DIVERGENT
    return sphere_measure(d) * (_grid_integral(profile, "power", s, refine) + tail)


def grad_integral(profile: LocalProfile, d: int | None = None,
                  refine: int = DEFAULT_CONTROLS.refine) -> float:
    """omega_{d-1} * int_0^inf W'(r)^2 r^{d-1} dr."""
    d = profile.d if d is None else d
    if profile.tail.kind == "exp":
        tail = _exp_tail_grad(profile.tail, d)
    else:
        tail = _algebraic_tail_grad(profile.tail, d)
    return sphere_measure(d) * (_grid_integral(profile, "grad", 2.0, refine) + tail)


def norm_bundle(profile: LocalProfile, d, q, p, mu_q, mu_p,
                refine: int = DEFAULT_CONTROLS.refine) -> NormBundle:
    """(A, B, C, D) and the local energy A/2 + B/2 - mu_q C/q - mu_p D/p."""
    A = grad_integral(profile, d, refine)
    B = lp_power_integral(profile, 2.0, d, refine)
    C = lp_power_integral(profile, q, d, refine)
    D = C if p == q else lp_power_integral(profile, p, d, refine)
    energy = A / 2 + B / 2 - mu_q * C / q - mu_p * D / p
    return NormBundle(A, B, C, D, energy)


def dilate_profile(profile: LocalProfile, t: float) -> LocalProfile:
    """The profile r -> W(r/t), exact on the grid and in the exponential tail."""
    if t <= 0:
        raise ValueError("t must be positive")
    tl = profile.tail
    if tl.kind != "exp":
        raise ValueError("only exponential tails dilate in closed form")
    m = (profile.d - 1) / 2.0
    tail = TailModel("exp", tl.r_match * t, tl.amplitude * t ** m, tl.rate / t)
    return LocalProfile(profile.d, profile.r * t, profile.W, profile.dW / t, profile.d2W / t ** 2,
                        tail, profile.shoot_value, profile.equation,
                        profile.r_shoot * t)


def identity_residuals(bundle: NormBundle, d, q, p, mu_q, mu_p) -> IdentityResiduals:
    """Relative Nehari and Pohozaev residuals of the local equation."""
    A, B, C, D = bundle.A, bundle.B, bundle.C, bundle.D
    nehari = relative_residual(A + B, mu_q * C + mu_p * D)
    pohozaev = relative_residual((d - 2) / (2 * d) * A + B / 2, mu_q * C / q + mu_p * D / p)
    return IdentityResiduals(nehari, pohozaev)


def sobolev_Sq(profile: LocalProfile, q: float, check: bool = True) -> float:
    """S_q = ||W||_q^{q-2} for the single-power ground state W.

    Cross-checked against the quotient (A+B)/C^{2/q}.
    """
    C = lp_power_integral(profile, q)
    S = C ** ((q - 2) / q)
    if check:
        A = grad_integral(profile)
        B = lp_power_integral(profile, 2.0)
        quotient = (A + B) / C ** (2 / q)
        if abs(quotient - S) > 1e-6 * S:
            raise SolverError("sobolev-mismatch", "S_q formulas disagree",
                              S=S, quotient=quotient)
    return S


@lru_cache(maxsize=64)
def single_power_profile(N: int, q: float, controls: Controls = DEFAULT_CONTROLS) -> LocalProfile:
    """Ground state of -Delta W + W = W^{q-1} in R^N."""
    from .radial_ode import solve_scalar_field

    return solve_scalar_field(N, q, q, 0.0, 1.0, controls)


@lru_cache(maxsize=64)
def sobolev_constant(N: int, q: float, controls: Controls = DEFAULT_CONTROLS) -> float:
    """S_q computed from the single-power ground state (cached)."""
    return sobolev_Sq(single_power_profile(N, q, controls), q)


def talenti_profile(N: int, r_inner: float = 2.0, r_outer: float = 2e4) -> LocalProfile:
    """W_1 = [N(N-2)]^{(N-2)/4} (1+r^2)^{-(N-2)/2} tabulated with an algebraic tail."""
    if N not in (3, 4):
        raise ValueError("N must be 3 or 4")
    c = (N * (N - 2)) ** ((N - 2) / 4.0)
    k = (N - 2) / 2.0
    r = np.concatenate([np.linspace(0.0, r_inner, 801)[:-1],
                        np.geomspace(r_inner, r_outer, 4001)])
    base = 1.0 + r * r
    W = c * base ** (-k)
    dW = -2 * k * c * r * base ** (-k - 1)
    d2W = -2 * k * c * base ** (-k - 1) + 4 * k * (k + 1) * c * r * r * base ** (-k - 2)
    tail = TailModel("algebraic", float(r[-1]), c, float(N - 2))
    for arr in (r, W, dW, d2W):
        arr.setflags(write=False)
    return LocalProfile(N, r, W, dW, d2W, tail, c)


def talenti_peak(N: int) -> float:
    return (N * (N - 2)) ** ((N - 2) / 4.0)


def sobolev_S_closed_form(N: int) -> float:
    """pi N (N-2) (Gamma(N/2)/Gamma(N))^{2/N}."""
    return math.pi * N * (N - 2) * (math.gamma(N / 2) / math.gamma(N)) ** (2.0 / N)


@lru_cache(maxsize=4)
def best_sobolev_S(N: int) -> float:
    """S from quadrature of the Talenti profile: A / (int W^{2*})^{2/2*}."""
    prof = talenti_profile(N)
    two_star = 2.0 * N / (N - 2)
    A = grad_integral(prof)
    D = lp_power_integral(prof, two_star)
    return A / D ** (2.0 / two_star)
