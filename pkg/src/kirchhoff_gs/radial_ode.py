"""Shooting solver for -W'' - (d-1)/r W' + W = mu_q W^{q-1} + mu_p W^{p-1}.

Each shot integrates from the origin with a Dormand-Prince 5(4) pair and is
classified as an overshoot (W crosses zero), an undershoot (W turns back up)
or converged (W decays into the linear tail).  Bisection on s = W(0) then
pins the ground state between the two behaviours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy import special
from scipy.integrate import cumulative_simpson
from scipy.interpolate import BPoly, CubicHermiteSpline

from .core import DEFAULT_CONTROLS, Controls, LocalProfile, SolverError, TailModel

INCONCLUSIVE, OVERSHOOT, UNDERSHOOT, CONVERGED, FAILED = 0, 1, 2, 3, -1
_NAMES = {INCONCLUSIVE: "inconclusive", OVERSHOOT: "overshoot", UNDERSHOOT: "undershoot",
          CONVERGED: "converged", FAILED: "failed"}

_MAX_STEPS = 200_000


@njit(cache=True)
def _nonlin(w, q, p, mu_q, mu_p):
    aw = abs(w)
    f = 0.0
    if mu_q != 0.0:
        f += mu_q * aw ** (q - 1.0)
    if mu_p != 0.0:
        f += mu_p * aw ** (p - 1.0)
    return f if w >= 0.0 else -f


@njit(cache=True)
def _accel(r, w, v, d, q, p, mu_q, mu_p):
    return -(d - 1.0) / r * v + w - _nonlin(w, q, p, mu_q, mu_p)


@njit(cache=True)
def _integrate(d, q, p, mu_q, mu_p, s, r0, w0, v0, r_max, rtol, atol, max_step,
               tail_threshold, tail_tol, out_r, out_w, out_v):
    """Integrate one shot, recording accepted steps.

    Returns (status, turning radius, number of recorded points).
    """
    c2, c3, c4, c5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
    a21 = 1 / 5
    a31, a32 = 3 / 40, 9 / 40
    a41, a42, a43 = 44 / 45, -56 / 15, 32 / 9
    a51, a52, a53, a54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
    a61, a62, a63, a64, a65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
    b1, b3, b4, b5, b6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
    e1, e3, e4, e5, e6, e7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                              22 / 525, -1 / 40)
    nmax = out_r.shape[0]
    out_r[0] = 0.0
    out_w[0] = s
    out_v[0] = 0.0
    out_r[1] = r0
    out_w[1] = w0
    out_v[1] = v0
    n = 2
    r, w, v = r0, w0, v0
    if v > 0.0:
        return 2, r, n
    h = min(max_step, 10.0 * r0)
    kw1 = v
    kv1 = _accel(r, w, v, d, q, p, mu_q, mu_p)
    tail_checked = False
    while True:
        if r >= r_max:
            return 0, r, n
        if r + h > r_max:
            h = r_max - r
        w2 = w + h * a21 * kw1
        v2 = v + h * a21 * kv1
        kw2 = v2
        kv2 = _accel(r + c2 * h, w2, v2, d, q, p, mu_q, mu_p)
        w3 = w + h * (a31 * kw1 + a32 * kw2)
        v3 = v + h * (a31 * kv1 + a32 * kv2)
        kw3 = v3
        kv3 = _accel(r + c3 * h, w3, v3, d, q, p, mu_q, mu_p)
        w4 = w + h * (a41 * kw1 + a42 * kw2 + a43 * kw3)
        v4 = v + h * (a41 * kv1 + a42 * kv2 + a43 * kv3)
        kw4 = v4
        kv4 = _accel(r + c4 * h, w4, v4, d, q, p, mu_q, mu_p)
        w5 = w + h * (a51 * kw1 + a52 * kw2 + a53 * kw3 + a54 * kw4)
        v5 = v + h * (a51 * kv1 + a52 * kv2 + a53 * kv3 + a54 * kv4)
        kw5 = v5
        kv5 = _accel(r + c5 * h, w5, v5, d, q, p, mu_q, mu_p)
        w6 = w + h * (a61 * kw1 + a62 * kw2 + a63 * kw3 + a64 * kw4 + a65 * kw5)
        v6 = v + h * (a61 * kv1 + a62 * kv2 + a63 * kv3 + a64 * kv4 + a65 * kv5)
        kw6 = v6
        kv6 = _accel(r + h, w6, v6, d, q, p, mu_q, mu_p)
        wn = w + h * (b1 * kw1 + b3 * kw3 + b4 * kw4 + b5 * kw5 + b6 * kw6)
        vn = v + h * (b1 * kv1 + b3 * kv3 + b4 * kv4 + b5 * kv5 + b6 * kv6)
        kw7 = vn
        kv7 = _accel(r + h, wn, vn, d, q, p, mu_q, mu_p)
        ew = h * (e1 * kw1 + e3 * kw3 + e4 * kw4 + e5 * kw5 + e6 * kw6 + e7 * kw7)
        ev = h * (e1 * kv1 + e3 * kv3 + e4 * kv4 + e5 * kv5 + e6 * kv6 + e7 * kv7)
        sw = atol + rtol * max(abs(w), abs(wn))
        sv = atol + rtol * max(abs(v), abs(vn))
        err = math.sqrt(0.5 * ((ew / sw) ** 2 + (ev / sv) ** 2))
        if not (err == err) or not math.isfinite(wn) or not math.isfinite(vn):
            h *= 0.2
            if h < 1e-14 * max(r, 1e-300):
                return -1, r, n
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < 1e-14 * r:
                return -1, r, n
            continue
        rn = r + h
        if n >= nmax:
            return -1, rn, n
        out_r[n] = rn
        out_w[n] = wn
        out_v[n] = vn
        n += 1
        if wn <= 0.0:
            return 1, r + h * w / (w - wn), n
        if vn > 0.0:
            if wn > tail_threshold or tail_checked:
                return 2, r - h * v / (vn - v), n
        if wn < tail_threshold and not tail_checked:
            tail_checked = True
            target = -1.0 - (d - 1.0) / (2.0 * rn)
            if abs(vn / wn - target) <= tail_tol * abs(target):
                return 3, rn, n
            if vn > 0.0:
                return 2, rn, n
        r, w, v = rn, wn, vn
        kw1, kv1 = kw7, kv7
        fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        h = min(h * fac, max_step)


def _series_start(d, q, p, mu_q, mu_p, s, controls):
    """Regular expansion W = s + c2 r^2 + c4 r^4 at the origin."""
    g = s - mu_q * s ** (q - 1) - mu_p * s ** (p - 1)
    dg = 1.0 - mu_q * (q - 1) * s ** (q - 2) - mu_p * (p - 1) * s ** (p - 2)
    c2 = g / (2.0 * d)
    c4 = dg * c2 / (4.0 * (d + 2))
    width = 1.0 / math.sqrt(max(1.0, abs(g) / s, abs(dg)))
    r0 = controls.r_start * width
    w0 = s + c2 * r0 ** 2 + c4 * r0 ** 4
    v0 = 2 * c2 * r0 + 4 * c4 * r0 ** 3
    return r0, w0, v0


@dataclass(frozen=True, eq=False)
class ShotOutcome:
    classification: str
    turning_radius: float
    s: float
    r: np.ndarray
    W: np.ndarray
    dW: np.ndarray

    @property
    def status(self) -> int:
        return {v: k for k, v in _NAMES.items()}[self.classification]


def _check_args(d, q, p, mu_q, mu_p):
    if d < 1 or int(d) != d:
        raise ValueError("dimension must be a positive integer")
    if not (2 < q <= p):
        raise ValueError("need 2 < q <= p")
    if mu_q < 0 or mu_p < 0 or (mu_q == 0 and mu_p == 0):
        raise ValueError("need nonnegative mu_q, mu_p, not both zero")


def shoot(d, q, p, mu_q, mu_p, s, controls: Controls = DEFAULT_CONTROLS) -> ShotOutcome:
    """Integrate one trajectory with W(0)=s, W'(0)=0 and classify it."""
    _check_args(d, q, p, mu_q, mu_p)
    if not s > 0:
        raise ValueError("s must be positive")
    r0, w0, v0 = _series_start(d, q, p, mu_q, mu_p, s, controls)
    out_r = np.empty(_MAX_STEPS)
    out_w = np.empty(_MAX_STEPS)
    out_v = np.empty(_MAX_STEPS)
    status, turn, n = _integrate(float(d), float(q), float(p), float(mu_q), float(mu_p),
                                 float(s), r0, w0, v0, controls.r_max, controls.ode_tol,
                                 controls.ode_atol, controls.max_step,
                                 controls.tail_threshold, controls.tail_tol,
                                 out_r, out_w, out_v)
    return ShotOutcome(_NAMES[status], float(turn), float(s),
                       out_r[:n].copy(), out_w[:n].copy(), out_v[:n].copy())


def _second_derivative(r, w, v, d, q, p, mu_q, mu_p):
    f = mu_q * np.abs(w) ** (q - 1) + mu_p * np.abs(w) ** (p - 1)
    g = w - np.sign(w) * f
    out = np.empty_like(r)
    out[1:] = -(d - 1) / r[1:] * v[1:] + g[1:]
    out[0] = g[0] / d
    return out


def _bracket(d, q, p, mu_q, mu_p, controls):
    lo, hi = 1.0, 2.0
    shot_lo = shoot(d, q, p, mu_q, mu_p, lo, controls)
    for _ in range(controls.max_expand):
        if shot_lo.classification in ("undershoot", "converged"):
            break
        lo *= 0.5
        shot_lo = shoot(d, q, p, mu_q, mu_p, lo, controls)
    else:
        raise SolverError("bracket", "no undershoot found while halving s",
                          s_lo=lo)
    if shot_lo.classification == "converged":
        return shot_lo, None
    hi = max(hi, 2.0 * lo)
    shot_hi = shoot(d, q, p, mu_q, mu_p, hi, controls)
    for _ in range(controls.max_expand):
        if shot_hi.classification in ("overshoot", "converged"):
            break
        if shot_hi.classification == "undershoot":
            lo, shot_lo = hi, shot_hi
        hi *= 2.0
        shot_hi = shoot(d, q, p, mu_q, mu_p, hi, controls)
    else:
        raise SolverError("bracket", "no overshoot found while doubling s "
                          "(no positive decaying solution at these parameters?)", s_hi=hi)
    if shot_hi.classification == "converged":
        return shot_hi, None
    return shot_lo, shot_hi


def _bisect(d, q, p, mu_q, mu_p, controls):
    shot_lo, shot_hi = _bracket(d, q, p, mu_q, mu_p, controls)
    if shot_hi is None:
        return shot_lo, None
    lo, hi = shot_lo.s, shot_hi.s
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= controls.shoot_tol * hi:
            break
        shot = shoot(d, q, p, mu_q, mu_p, mid, controls)
        cls = shot.classification
        if cls == "converged":
            return shot, None
        if cls == "undershoot":
            lo, shot_lo = mid, shot
        elif cls == "overshoot":
            hi, shot_hi = mid, shot
        else:
            raise SolverError("shot-" + cls, f"shot at s={mid!r} was {cls}", s=mid)
    if shot_lo.classification != "undershoot" or shot_hi.classification != "overshoot":
        raise SolverError("stagnation", "bisection bracket lost its sign change")
    return shot_lo, shot_hi


def _match_index(lo: ShotOutcome, hi: ShotOutcome, match_tol: float) -> int:
    """Last index of `lo` where the bracketing trajectories still agree."""
    spline_hi = CubicHermiteSpline(hi.r, hi.W, hi.dW)
    r_lo = lo.r
    inside = r_lo <= hi.r[-1]
    w_hi = np.where(inside, spline_hi(np.minimum(r_lo, hi.r[-1])), -np.inf)
    ok = (np.abs(w_hi - lo.W) <= match_tol * np.abs(lo.W)) & (lo.W > 0)
    ok[1:] &= lo.dW[1:] < 0
    bad = np.flatnonzero(~ok)
    k = (bad[0] - 1) if bad.size else len(r_lo) - 1
    return int(k)


def _radial_bessel(d, r):
    """Scaled radial solutions of -Delta w + w = 0.

    With nu = d/2 - 1, K = r^-nu K_nu(r) decays and I = r^-nu I_nu(r) grows;
    their Wronskian is I K' - I' K = -r^{1-d}.  Returned as
    (K e^r, K' e^r, I e^-r, I' e^-r) to stay finite.
    """
    nu = d / 2.0 - 1.0
    rn = r ** (-nu)
    return (rn * special.kve(nu, r), -rn * special.kve(nu + 1.0, r),
            rn * special.ive(nu, r), rn * special.ive(nu + 1.0, r))


def _tail_extension(r_m, w_m, d, q, p, mu_q, mu_p, controls, h=0.02):
    """Decaying far field from r_m including the leading nonlinear correction.

    W = A K + sum_j mu_j A^{P_j} G[K^{P_j}] with the decaying Green operator
    G[f](r) = I(r) int_r^inf t^{d-1} K f dt - K(r) int_r^inf t^{d-1} I f dt,
    and A fixed by W(r_m) = w_m.  The neglected terms are O(W^{2q-3}).
    """
    k_m = _radial_bessel(d, np.array([r_m]))[0][0] * math.exp(-r_m)
    amp0 = w_m / k_m
    r_end = r_m + 1.0
    while (amp0 * _radial_bessel(d, np.array([r_end]))[0][0] * math.exp(-r_end)
           > 1e-4 * controls.tail_threshold and r_end < r_m + 200.0):
        r_end += 1.0
    n = int(math.ceil((r_end - r_m) / h))
    r = r_m + h * np.arange(n + 1)
    ks, dks, is_, dis = _radial_bessel(d, r)
    weight = r ** (d - 1)
    big_k = ks * np.exp(-r)

    def green(power):
        g_i = weight * is_ * ks ** power * np.exp(-(power - 1.0) * (r - r_m))
        g_k = weight * ks ** (power + 1.0) * np.exp(-(power + 1.0) * (r - r_m))
        j_i = cumulative_simpson(g_i[::-1], dx=h, initial=0.0)[::-1]
        j_k = cumulative_simpson(g_k[::-1], dx=h, initial=0.0)[::-1]
        e_i = np.exp(-r + (1.0 - power) * r_m)
        e_k = np.exp(r - (power + 1.0) * r_m)
        return (is_ * e_k * j_k - ks * e_i * j_i, dis * e_k * j_k - dks * e_i * j_i)

    terms = [(mu, power, *green(power)) for mu, power in ((mu_q, q - 1.0), (mu_p, p - 1.0))
             if mu != 0.0]
    amp = amp0
    for _ in range(50):
        f = amp * big_k[0] + sum(mu * amp ** pw * g[0] for mu, pw, g, _ in terms) - w_m
        df = big_k[0] + sum(mu * pw * amp ** (pw - 1) * g[0] for mu, pw, g, _ in terms)
        step = f / df
        amp -= step
        if abs(step) <= 1e-15 * abs(amp):
            break
    w = amp * big_k + sum(mu * amp ** pw * g for mu, pw, g, _ in terms)
    v = amp * dks * np.exp(-r) + sum(mu * amp ** pw * dg for mu, pw, _, dg in terms)
    return r, w, v


def _far_tail(r_k, w_k, d):
    amp = w_k * r_k ** ((d - 1) / 2.0) * math.exp(r_k)
    return TailModel("exp", float(r_k), float(amp), 1.0)


def solve_scalar_field(d, q, p, mu_q, mu_p, controls: Controls = DEFAULT_CONTROLS) -> LocalProfile:
    """Ground state of the local two-power equation by shooting and bisection.

    Returns the first bracketed positive decaying solution above s=1 (with
    the bracket auto-expanded by halving/doubling).
    """
    _check_args(d, q, p, mu_q, mu_p)
    key = (int(d), float(q), float(p), float(mu_q), float(mu_p), controls)
    return _solve_cached(*key)


@lru_cache(maxsize=256)
def _solve_cached(d, q, p, mu_q, mu_p, controls):
    shot_lo, shot_hi = _bisect(d, q, p, mu_q, mu_p, controls)
    if shot_hi is None:
        k = len(shot_lo.r) - 1
    else:
        k = _match_index(shot_lo, shot_hi, controls.match_tol)
    if k < 4:
        raise SolverError("match", "bracketing trajectories separated too early; "
                          "the profile is not resolved", r=float(shot_lo.r[k]))
    r = shot_lo.r[: k + 1]
    w = shot_lo.W[: k + 1]
    v = shot_lo.dW[: k + 1]
    r_ext, w_ext, v_ext = _tail_extension(float(r[-1]), float(w[-1]), d, q, p, mu_q, mu_p,
                                          controls)
    keep = w_ext > 0
    r_all = np.concatenate([r, r_ext[1:][keep[1:]]])
    w_all = np.concatenate([w, w_ext[1:][keep[1:]]])
    v_all = np.concatenate([v, v_ext[1:][keep[1:]]])
    tail = _far_tail(r_all[-1], w_all[-1], d)
    d2 = _second_derivative(r_all, w_all, v_all, d, q, p, mu_q, mu_p)
    for arr in (r_all, w_all, v_all, d2):
        arr.setflags(write=False)
    return LocalProfile(d, r_all, w_all, v_all, d2, tail, float(shot_lo.s),
                        (q, p, mu_q, mu_p), float(r[-1]))


def evaluate_profile(profile: LocalProfile, r):
    """W(r): quintic Hermite (W, W', W'') on the grid up to r_match, tail formula beyond."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("r must be nonnegative")
    k = profile.n_core
    spline = BPoly.from_derivatives(
        profile.r[:k], np.column_stack([profile.W[:k], profile.dW[:k], profile.d2W[:k]]))
    inner = r_arr <= profile.tail.r_match
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.where(inner, spline(np.minimum(r_arr, profile.tail.r_match)),
                       profile.tail.value(np.maximum(r_arr, profile.tail.r_match), profile.d))
    out = np.where(np.isfinite(out), out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def soliton_1d(r, p):
    """Closed-form ground state of -W'' + W = W^{p-1} on the line."""
    r = np.asarray(r, dtype=float)
    return (p / 2.0) ** (1.0 / (p - 2)) / np.cosh((p - 2) * r / 2.0) ** (2.0 / (p - 2))
