"""Asymptotic laws for ground states and normalized solutions, and power-law fits.

Every law is a record `value ~ constant * x^exponent * (ln y)^log_power` where
x is lambda (or the mass parameter c) and y is lambda or lambda_c.  Exponents
are exact rationals.  Rows whose leading coefficient is not known carry no
constant ("ratio-only").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .core import DEFAULT_CONTROLS, Controls, ParameterError, ProblemParams

LAMBDA_TO_0 = "lambda->0"
LAMBDA_TO_INF = "lambda->inf"
ALL_LAMBDA = "all-lambda"
C_TO_0 = "c->0"
C_TO_INF = "c->inf"
ALL_C = "all-c"

EXACT = "="            # identity for every lambda
ASYMPTOTIC = "~="      # ratio to the leading term tends to 1
ORDER = "~"            # bounded above and below, no constant

_REGIME_ALIASES = {
    "small": LAMBDA_TO_0, "small-lambda": LAMBDA_TO_0, "lambda->0": LAMBDA_TO_0,
    "large": LAMBDA_TO_INF, "large-lambda": LAMBDA_TO_INF, "lambda->inf": LAMBDA_TO_INF,
    "all": ALL_LAMBDA, "all-lambda": ALL_LAMBDA,
    "c->0": C_TO_0, "small-c": C_TO_0, "c->inf": C_TO_INF, "large-c": C_TO_INF,
    "all-c": ALL_C,
}

# Every row id the table can produce; the coverage test checks this list.
ROW_IDS = (
    # critical, lambda -> 0 (N = 3, 4)
    "critical/small-lambda/peak", "critical/small-lambda/grad", "critical/small-lambda/mass",
    "critical/small-lambda/Lq", "critical/small-lambda/L2star", "critical/small-lambda/energy",
    # critical, lambda -> infinity
    "critical/large-lambda/N3/peak", "critical/large-lambda/N3/grad-gap",
    "critical/large-lambda/N3/L2star", "critical/large-lambda/N3/mass",
    "critical/large-lambda/N3/Lq", "critical/large-lambda/N3/energy-gap",
    "critical/large-lambda/N4/peak", "critical/large-lambda/N4/grad-gap",
    "critical/large-lambda/N4/L2star", "critical/large-lambda/N4/mass",
    "critical/large-lambda/N4/Lq", "critical/large-lambda/N4/energy-gap",
    # p = q, N = 3
    "pq/all-lambda/peak", "pq/all-lambda/grad", "pq/all-lambda/mass", "pq/all-lambda/Lp",
    "pq/all-lambda/sqrt-varpi",
    "pq/large-lambda/grad", "pq/large-lambda/mass", "pq/large-lambda/Lp",
    "pq/small-lambda/grad", "pq/small-lambda/mass", "pq/small-lambda/Lp",
    # q < p < 6, N = 3
    "subcritical/small-lambda/peak", "subcritical/small-lambda/grad",
    "subcritical/small-lambda/mass", "subcritical/small-lambda/Lq",
    "subcritical/large-lambda/peak", "subcritical/large-lambda/grad",
    "subcritical/large-lambda/mass", "subcritical/large-lambda/Lp",
    "subcritical-b0/large-lambda/peak", "subcritical-b0/large-lambda/grad",
    "subcritical-b0/large-lambda/mass", "subcritical-b0/large-lambda/Lp",
    # normalized solutions, critical
    "normalized/critical/small-lambda/lambda_c", "normalized/critical/small-lambda/peak",
    "normalized/critical/small-lambda/grad", "normalized/critical/small-lambda/L2star",
    "normalized/critical/small-lambda/Lq",
    "normalized/critical/large-lambda/N3/lambda_c", "normalized/critical/large-lambda/N3/peak",
    "normalized/critical/large-lambda/N3/grad-gap",
    "normalized/critical/large-lambda/N3/L2star", "normalized/critical/large-lambda/N3/Lq",
    "normalized/critical/large-lambda/N4/lambda_c", "normalized/critical/large-lambda/N4/peak",
    "normalized/critical/large-lambda/N4/grad-gap",
    "normalized/critical/large-lambda/N4/L2star", "normalized/critical/large-lambda/N4/Lq",
    # normalized solutions, q < p < 6, b > 0
    "normalized/subcritical/small-lambda/lambda_c", "normalized/subcritical/small-lambda/peak",
    "normalized/subcritical/small-lambda/grad", "normalized/subcritical/small-lambda/Lq",
    "normalized/subcritical/large-lambda/lambda_c", "normalized/subcritical/large-lambda/peak",
    "normalized/subcritical/large-lambda/grad", "normalized/subcritical/large-lambda/Lp",
    "normalized/subcritical/c-limit/m1", "normalized/subcritical/c-limit/m2",
    # normalized solutions, b = 0
    "normalized/b0/pq/lambda_c", "normalized/b0/pq/grad", "normalized/b0/pq/Lp",
    "normalized/b0/large-lambda/lambda_c", "normalized/b0/large-lambda/grad",
    "normalized/b0/large-lambda/Lp",
    "normalized/b0/small-lambda/lambda_c", "normalized/b0/small-lambda/grad",
    "normalized/b0/small-lambda/Lq",
)


class NotCovered(ParameterError):
    """No table row applies to the requested parameters, quantity and regime."""


def frac(x) -> Fraction:
    """Exact rational for an exponent given as float (10/3 -> Fraction(10, 3))."""
    if isinstance(x, Fraction):
        return x
    return Fraction(x).limit_denominator(10 ** 6)


def fstr(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _default_eval(law: "AsymptoticLaw", x: float, log_arg: Optional[float]) -> float:
    if law.constant is None:
        raise ValueError(f"{law.row} is ratio-only")
    val = law.constant * x ** float(law.exponent)
    if law.log_power:
        y = x if log_arg is None else log_arg
        val *= math.log(y) ** float(law.log_power)
    return val


@dataclass(frozen=True)
class AsymptoticLaw:
    """One table row: quantity ~ constant * var^exponent * (ln log_argument)^log_power.

    Gap rows (quantity ending in "-gap") describe limit - quantity, with the
    limit value in `limit`.  `correction_exponent` is the power of the
    variable in the next-order term relative to the leading one.
    """

    row: str
    quantity: str
    regime: str
    variable: str
    exponent: Fraction
    constant: Optional[float]
    relation: str
    correction: str
    hypotheses: str
    constant_formula: str = ""
    correction_exponent: Optional[Fraction] = None
    log_power: Fraction = Fraction(0)
    log_argument: str = ""
    limit: Optional[float] = None
    printed_exponent: Optional[Fraction] = None
    note: str = ""
    evaluator: Optional[Callable] = field(default=None, compare=False, repr=False)

    @property
    def ratio_only(self) -> bool:
        return self.constant is None

    def evaluate(self, x: float, log_arg: Optional[float] = None) -> float:
        """Leading term at x (lambda or c); `log_arg` is lambda_c for c-rows with logs."""
        if self.evaluator is not None:
            return self.evaluator(x)
        return _default_eval(self, x, log_arg)

    def as_dict(self) -> dict:
        return {
            "row": self.row,
            "quantity": self.quantity,
            "regime": self.regime,
            "variable": self.variable,
            "hypotheses": self.hypotheses,
            "exponent": fstr(self.exponent),
            "exponent_value": float(self.exponent),
            "constant": "ratio-only" if self.constant is None else self.constant,
            "constant_formula": self.constant_formula,
            "relation": self.relation,
            "correction": self.correction,
            "log_power": fstr(self.log_power),
            "log_argument": self.log_argument,
            "limit": self.limit,
            "printed_exponent": None if self.printed_exponent is None
            else fstr(self.printed_exponent),
            "note": self.note,
        }


class LawConstants:
    """Profile-derived numbers entering the laws, computed on first use."""

    def __init__(self, params: ProblemParams, controls: Controls = DEFAULT_CONTROLS):
        self.params = params
        self.controls = controls

    def _profile(self, s):
        from .quadrature import single_power_profile

        return single_power_profile(self.params.N, s, self.controls)

    @cached_property
    def S_q(self) -> float:
        from .quadrature import sobolev_constant

        return sobolev_constant(self.params.N, self.params.q, self.controls)

    @cached_property
    def S_p(self) -> float:
        from .quadrature import sobolev_constant

        return sobolev_constant(self.params.N, self.params.p, self.controls)

    @cached_property
    def V0_peak(self) -> float:
        return self._profile(self.params.q).shoot_value

    @cached_property
    def W0_peak(self) -> float:
        return self._profile(self.params.p).shoot_value

    @cached_property
    def V0_L2star(self) -> float:
        from .quadrature import lp_power_integral

        return lp_power_integral(self._profile(self.params.q), self.params.two_star,
                                 refine=self.controls.refine)

    @cached_property
    def critical(self):
        from .kirchhoff import critical_limits

        return critical_limits(self.params.N, self.params.a, self.params.b)


def _pow(x: float, e: Fraction) -> float:
    return x ** float(e)


def _corr_text(kind: str, var: str, e: Optional[Fraction], log: bool = False) -> str:
    if e is None:
        return kind
    base = f"({var} ln {var})" if log else var
    return f"{kind}({base}^{fstr(e)})"


# ---------------------------------------------------------------- lambda rows

def _critical_small(P: ProblemParams, K: LawConstants) -> list:
    N, q, a = P.N, frac(P.q), P.a
    e = Fraction(2 * N - q * (N - 2)) / (2 * (q - 2))
    em = Fraction(4 - N * (q - 2)) / (2 * (q - 2))
    e2s = N * (2 * N - q * (N - 2)) / (2 * (N - 2) * (q - 2))
    hyp = "p = 2*, N in {3,4}, 2 < q < 2*, lambda -> 0"
    base = a ** (N / 2) * _pow(K.S_q, q / (q - 2))
    corr = _corr_text("O", "lambda", e)
    mk = lambda name, exp, const, rel, cor, cexp, form: AsymptoticLaw(
        f"critical/small-lambda/{name}", name, LAMBDA_TO_0, "lambda", exp, const, rel, cor,
        hyp, form, cexp)
    return [
        mk("peak", 1 / (q - 2), K.V0_peak, ASYMPTOTIC, "o(1)", None, "V0(0)"),
        mk("grad", e, float(N * (q - 2) / (2 * q)) * a ** ((N - 2) / 2)
           * _pow(K.S_q, q / (q - 2)), ASYMPTOTIC, corr, e,
           "N(q-2)/(2q) a^{(N-2)/2} S_q^{q/(q-2)}"),
        mk("mass", em, float((2 * N - q * (N - 2)) / (2 * q)) * base, ASYMPTOTIC, corr, e,
           "(2N-q(N-2))/(2q) a^{N/2} S_q^{q/(q-2)}"),
        mk("Lq", e, base, ASYMPTOTIC, "o(1)", None, "a^{N/2} S_q^{q/(q-2)}"),
        mk("L2star", e2s, a ** (N / 2) * K.V0_L2star, ASYMPTOTIC, "o(1)", None,
           "a^{N/2} ||V0||_{2*}^{2*}"),
        mk("energy", e, float((q - 2) / (2 * q)) * base, ASYMPTOTIC, corr, e,
           "(q-2)/(2q) a^{N/2} S_q^{q/(q-2)}"),
    ]


def _critical_large(P: ProblemParams, K: LawConstants) -> list:
    N, q = P.N, frac(P.q)
    lim = K.critical
    if N == 3:
        if not 4 < q < 6:
            return []
        hyp = "p = 6, N = 3, 4 < q < 6, lambda -> infinity"
        e = -Fraction(6 - q) / (2 * (q - 4))
        rows = {
            "peak": (1 / (2 * (q - 4)), Fraction(0), None, None),
            "grad-gap": (e, Fraction(0), None, lim.limit_grad),
            "mass": (-(q - 2) / (2 * (q - 4)), Fraction(0), None, None),
            "Lq": (e, Fraction(0), None, None),
            "energy-gap": (e, Fraction(0), None, lim.m_infinity),
        }
        log_arg = ""
        corr_l2 = _corr_text("O", "lambda", e)
    else:
        if not 2 < q < 4:
            return []
        hyp = "p = 4, N = 4, 2 < q < 4, b S^2 < 1, lambda -> infinity"
        t = -Fraction(4 - q) / (q - 2)
        rows = {
            "peak": (1 / (q - 2), 1 / (q - 2), 2 / (q - 2), None),
            "grad-gap": (t, t, None, lim.limit_grad),
            "mass": (-2 / (q - 2), t, None, None),
            "Lq": (t, t, None, None),
            "energy-gap": (t, t, None, lim.m_infinity),
        }
        log_arg = "lambda"
        corr_l2 = _corr_text("O", "lambda", t, log=True)
    out = []
    tag = f"critical/large-lambda/N{N}"
    for name in ("peak", "grad-gap", "mass", "Lq", "energy-gap"):
        exp, lp, printed, limit = rows[name]
        note = ""
        if printed is not None:
            note = ("exponent from the blow-up scale (lambda ln lambda)^{-1/(q-2)} with "
                    "bounded rescaled peak")
        out.append(AsymptoticLaw(f"{tag}/{name}", name, LAMBDA_TO_INF, "lambda", exp, None,
                                 ORDER, "", hyp, "", None, lp, log_arg if lp else "", limit,
                                 printed, note))
    out.append(AsymptoticLaw(f"{tag}/L2star", "L2star", LAMBDA_TO_INF, "lambda", Fraction(0),
                             lim.limit_2star, ASYMPTOTIC, corr_l2, hyp, "limit_2star",
                             rows["Lq"][0], limit=lim.limit_2star))
    return out


def _pq_rows(P: ProblemParams, K: LawConstants) -> list:
    from .kirchhoff import pq_sqrt_varpi

    p, a, b = frac(P.p), P.a, P.b
    Sp = K.S_p
    Kp = (Sp / 2) ** float(p / (p - 2))
    X = (6 - p) / (2 * (p - 2))
    hyp = "N = 3, 2 < p = q < 6"

    def sv(lam):
        return pq_sqrt_varpi(P.with_lambda(lam), Sp)

    e_grad, e_mass, e_lp = X, (10 - 3 * p) / (2 * (p - 2)), X
    c_grad, c_mass, c_lp = float(3 * (p - 2) / p) * Kp, float((6 - p) / p) * Kp, Kp
    rows = [
        AsymptoticLaw("pq/all-lambda/peak", "peak", ALL_LAMBDA, "lambda", 1 / (p - 2),
                      2.0 ** float(-1 / (p - 2)) * K.W0_peak, EXACT, "none", hyp,
                      "2^{-1/(p-2)} W0(0)"),
        AsymptoticLaw("pq/all-lambda/grad", "grad", ALL_LAMBDA, "lambda", e_grad, c_grad, EXACT,
                      "none", hyp, "3(p-2)/p (S_p/2)^{p/(p-2)} * sqrt(varpi)",
                      evaluator=lambda lam: c_grad * lam ** float(e_grad) * sv(lam)),
        AsymptoticLaw("pq/all-lambda/mass", "mass", ALL_LAMBDA, "lambda", e_mass, c_mass, EXACT,
                      "none", hyp, "(6-p)/p (S_p/2)^{p/(p-2)} * varpi^{3/2}",
                      evaluator=lambda lam: c_mass * lam ** float(e_mass) * sv(lam) ** 3),
        AsymptoticLaw("pq/all-lambda/Lp", "Lp", ALL_LAMBDA, "lambda", e_lp, c_lp, EXACT,
                      "none", hyp, "(S_p/2)^{p/(p-2)} * varpi^{3/2}",
                      evaluator=lambda lam: c_lp * lam ** float(e_lp) * sv(lam) ** 3),
    ]
    half = float(3 * (p - 2) / (2 * p)) * b * Kp
    sv_exp, sv_const = (X, 2 * half) if b > 0 else (Fraction(0), math.sqrt(a))
    rows.append(AsymptoticLaw(
        "pq/all-lambda/sqrt-varpi", "sqrt-varpi", ALL_LAMBDA, "lambda", sv_exp, sv_const, EXACT,
        "none", hyp, "h + sqrt(h^2 + a), h = 3b(p-2)/(2p) lambda^{(6-p)/(2(p-2))} "
        "(S_p/2)^{p/(p-2)}", evaluator=sv,
        note="coupling coefficient 3b(p-2)/(2p) solves sqrt(varpi)(sqrt(varpi) - bK) = a; "
             "the variant 3b(p-2)/(4p) does not satisfy varpi = a + b||grad u||^2"))
    if b > 0:
        big = -(6 - p) / (p - 2)
        corr = _corr_text("Theta", "lambda", big)
        c1 = float(9 * (p - 2) ** 2 / p ** 2) * b * Kp ** 2
        c3 = float(27 * (p - 2) ** 3 / p ** 3) * b ** 3 * Kp ** 4
        rows += [
            AsymptoticLaw("pq/large-lambda/grad", "grad", LAMBDA_TO_INF, "lambda",
                          (6 - p) / (p - 2), c1, ASYMPTOTIC, corr, hyp + ", b > 0",
                          "9b(p-2)^2/p^2 (S_p/2)^{2p/(p-2)}", big),
            AsymptoticLaw("pq/large-lambda/mass", "mass", LAMBDA_TO_INF, "lambda",
                          (14 - 3 * p) / (p - 2), c3 * float((6 - p) / p), ASYMPTOTIC, corr,
                          hyp + ", b > 0", "27b^3(p-2)^3(6-p)/p^4 (S_p/2)^{4p/(p-2)}", big),
            AsymptoticLaw("pq/large-lambda/Lp", "Lp", LAMBDA_TO_INF, "lambda",
                          2 * (6 - p) / (p - 2), c3, ASYMPTOTIC, corr, hyp + ", b > 0",
                          "27b^3(p-2)^3/p^3 (S_p/2)^{4p/(p-2)}", big,
                          printed_exponent=(14 - 3 * p) / (p - 2),
                          note="exponent 2(6-p)/(p-2) follows from the exact formula"),
        ]
    corr = _corr_text("Theta", "lambda", X)
    rows += [
        AsymptoticLaw("pq/small-lambda/grad", "grad", LAMBDA_TO_0, "lambda", X,
                      c_grad * a ** 0.5, ASYMPTOTIC, corr, hyp,
                      "3(p-2)/p a^{1/2} (S_p/2)^{p/(p-2)}", X),
        AsymptoticLaw("pq/small-lambda/mass", "mass", LAMBDA_TO_0, "lambda", e_mass,
                      c_mass * a ** 1.5, ASYMPTOTIC, corr, hyp,
                      "(6-p)/p a^{3/2} (S_p/2)^{p/(p-2)}", X),
        AsymptoticLaw("pq/small-lambda/Lp", "Lp", LAMBDA_TO_0, "lambda", X, c_lp * a ** 1.5,
                      ASYMPTOTIC, corr, hyp, "a^{3/2} (S_p/2)^{p/(p-2)}", X),
    ]
    return rows


def _subcritical_rows(P: ProblemParams, K: LawConstants) -> list:
    q, p, a, b = frac(P.q), frac(P.p), P.a, P.b
    hyp = "N = 3, 2 < q < p < 6"
    sq = _pow(K.S_q, q / (q - 2))
    if q > 2 * p - 6:
        ce = (p - q) / (q - 2)
        corr = _corr_text("-Theta", "lambda", ce)
    else:
        ce = (6 - q) / (2 * (q - 2))
        corr = _corr_text("O", "lambda", ce)
    e = (6 - q) / (2 * (q - 2))
    mk = lambda name, exp, const, form, cexp=ce, cor=corr: AsymptoticLaw(
        f"subcritical/small-lambda/{name}", name, LAMBDA_TO_0, "lambda", exp, const,
        ASYMPTOTIC, cor, hyp + ", lambda -> 0", form, cexp)
    rows = [
        mk("peak", 1 / (q - 2), K.V0_peak, "V0(0)", None, "o(1)"),
        mk("grad", e, float(3 * (q - 2) / (2 * q)) * a ** 0.5 * sq,
           "3(q-2)/(2q) a^{1/2} S_q^{q/(q-2)}"),
        mk("mass", (10 - 3 * q) / (2 * (q - 2)), float((6 - q) / (2 * q)) * a ** 1.5 * sq,
           "(6-q)/(2q) a^{3/2} S_q^{q/(q-2)}"),
        mk("Lq", e, a ** 1.5 * sq, "a^{3/2} S_q^{q/(q-2)}"),
    ]
    if b > 0:
        ce = -(p - q) / (p - 2) if q > 2 * p - 6 else -(6 - p) / (p - 2)
        corr = _corr_text("O", "lambda", ce)
        s2 = _pow(K.S_p, 2 * p / (p - 2))
        mk = lambda name, exp, const, form, cexp=ce, cor=corr: AsymptoticLaw(
            f"subcritical/large-lambda/{name}", name, LAMBDA_TO_INF, "lambda", exp, const,
            ASYMPTOTIC, cor, hyp + ", b > 0, lambda -> infinity", form, cexp)
        rows += [
            mk("peak", 1 / (p - 2), K.W0_peak, "W0(0)", None, "o(1)"),
            mk("grad", (6 - p) / (p - 2), float(9 * (p - 2) ** 2 / (4 * p ** 2)) * b * s2,
               "9b(p-2)^2/(4p^2) S_p^{2p/(p-2)}"),
            mk("mass", (14 - 3 * p) / (p - 2),
               float(27 * (p - 2) ** 3 * (6 - p) / (16 * p ** 4)) * b ** 3 * s2 * s2,
               "27b^3(p-2)^3(6-p)/(16p^4) S_p^{4p/(p-2)}"),
            mk("Lp", 2 * (6 - p) / (p - 2), float(27 * (p - 2) ** 3 / (8 * p ** 3)) * b ** 3 * s2 * s2,
               "27b^3(p-2)^3/(8p^3) S_p^{4p/(p-2)}"),
        ]
    else:
        ce = -(p - q) / (p - 2)
        corr = _corr_text("O", "lambda", ce)
        sp = _pow(K.S_p, p / (p - 2))
        e = (6 - p) / (2 * (p - 2))
        mk = lambda name, exp, const, form, cexp=ce, cor=corr: AsymptoticLaw(
            f"subcritical-b0/large-lambda/{name}", name, LAMBDA_TO_INF, "lambda", exp, const,
            ASYMPTOTIC, cor, hyp + ", b = 0, lambda -> infinity", form, cexp)
        rows += [
            mk("peak", 1 / (p - 2), K.W0_peak, "W0(0)", None, "o(1)"),
            mk("grad", e, float(3 * (p - 2) / (2 * p)) * a ** 0.5 * sp,
               "3(p-2)/(2p) a^{1/2} S_p^{p/(p-2)}"),
            mk("mass", (10 - 3 * p) / (2 * (p - 2)), float((6 - p) / (2 * p)) * a ** 1.5 * sp,
               "(6-p)/(2p) a^{3/2} S_p^{p/(p-2)}"),
            mk("Lp", e, a ** 1.5 * sp, "a^{3/2} S_p^{p/(p-2)}"),
        ]
    return rows


def lambda_laws(params: ProblemParams, controls: Controls = DEFAULT_CONTROLS,
                constants: Optional[LawConstants] = None) -> list:
    """All lambda-rows whose hypotheses hold for `params`."""
    K = constants or LawConstants(params, controls)
    if params.critical:
        return _critical_small(params, K) + _critical_large(params, K)
    if params.N != 3:
        return []
    if params.pq_equal:
        return _pq_rows(params, K)
    return _subcritical_rows(params, K)


# ---------------------------------------------------------------- c rows

def _to_c(row: str, law: AsymptoticLaw, mass: AsymptoticLaw, hyp: str,
          printed: Optional[Fraction] = None, note: str = "",
          exact: bool = False) -> AsymptoticLaw:
    """Re-express a lambda-law through c^2 = M(lambda) ~ K_M lambda^{e_M}."""
    eM = mass.exponent
    r = law.exponent / eM
    c_small = (eM > 0) == (law.regime == LAMBDA_TO_0)
    regime = ALL_C if exact else (C_TO_0 if c_small else C_TO_INF)
    const = None
    if r == 0:
        const = law.constant
    elif law.constant is not None and mass.constant is not None:
        const = law.constant * mass.constant ** float(-r)
    cexps = [e for e in (law.correction_exponent, mass.correction_exponent) if e is not None]
    ce = None
    if cexps:
        ce = 2 * min(cexps, key=abs) / eM
    if exact:
        rel, corr = EXACT, "none"
    else:
        rel = ASYMPTOTIC if const is not None else ORDER
        corr = _corr_text("O", "c", ce) if ce is not None else law.correction
    return AsymptoticLaw(row, law.quantity, regime, "c", 2 * r, const, rel, corr, hyp,
                         f"({law.constant_formula}) * (c^2 / K_M)^{{{fstr(r)}}}" if const
                         else "", ce, limit=law.limit, printed_exponent=printed, note=note)


def _lambda_c_law(row: str, mass: AsymptoticLaw, hyp: str, printed=None, note="",
                  exact=False) -> AsymptoticLaw:
    unit = AsymptoticLaw("", "lambda_c", mass.regime, "lambda", Fraction(1), 1.0, EXACT, "",
                         "", "1")
    law = _to_c(row, unit, mass, hyp, printed, note, exact)
    return law


def _by_quantity(laws, prefix):
    return {l.quantity: l for l in laws if l.row.startswith(prefix)}


def normalized_laws(params: ProblemParams, controls: Controls = DEFAULT_CONTROLS,
                    constants: Optional[LawConstants] = None) -> list:
    """c-rows (normalized solutions, c^2 = M(lambda_c)) whose hypotheses hold."""
    K = constants or LawConstants(params, controls)
    lam = lambda_laws(params, controls, K)
    out = []
    if params.critical:
        N, q = params.N, frac(params.q)
        if q != 2 + Fraction(4, N):
            small = _by_quantity(lam, "critical/small-lambda/")
            hyp = "p = 2*, q != 2 + 4/N, lambda_c -> 0"
            M = small["mass"]
            den = 4 - N * (q - 2)
            out.append(_lambda_c_law("normalized/critical/small-lambda/lambda_c", M, hyp))
            out.append(_to_c("normalized/critical/small-lambda/peak", small["peak"], M, hyp))
            out.append(_to_c("normalized/critical/small-lambda/grad", small["grad"], M, hyp))
            out.append(_to_c("normalized/critical/small-lambda/L2star", small["L2star"], M, hyp,
                             printed=2 * N * (2 * N - 2 * q * (N - 2)) / ((N - 2) * den),
                             note="exponent obtained by inverting the mass law"))
            out.append(_to_c("normalized/critical/small-lambda/Lq", small["Lq"], M, hyp))
        large = _by_quantity(lam, f"critical/large-lambda/N{N}/")
        if large and N == 3:
            hyp = "p = 6, N = 3, 4 < q < 6, lambda_c -> infinity"
            M = large["mass"]
            tag = "normalized/critical/large-lambda/N3"
            note = "exponent obtained by inverting the mass law"
            out.append(_lambda_c_law(f"{tag}/lambda_c", M, hyp, -(q - 4) / (q - 2), note))
            out.append(_to_c(f"{tag}/peak", large["peak"], M, hyp, -1 / (2 * (q - 2)), note))
            out.append(_to_c(f"{tag}/grad-gap", large["grad-gap"], M, hyp,
                             (6 - q) / (2 * (q - 2)), note))
            out.append(_to_c(f"{tag}/L2star", large["L2star"], M, hyp))
            out.append(_to_c(f"{tag}/Lq", large["Lq"], M, hyp, (6 - q) / (2 * (q - 2)), note))
        elif large and N == 4:
            out += _critical_n4_c_rows(q, large)
        return out
    if params.N != 3:
        return out
    q, p = frac(params.q), frac(params.p)
    if params.pq_equal:
        if params.b == 0 and p != Fraction(10, 3):
            pq = _by_quantity(lam, "pq/small-lambda/")
            hyp = "N = 3, b = 0, p = q != 10/3"
            M = pq["mass"]
            out.append(_lambda_c_law("normalized/b0/pq/lambda_c", M, hyp, exact=True))
            out.append(_to_c("normalized/b0/pq/grad", pq["grad"], M, hyp, exact=True))
            out.append(_to_c("normalized/b0/pq/Lp", pq["Lp"], M, hyp, exact=True))
        return out
    small = _by_quantity(lam, "subcritical/small-lambda/")
    if params.b > 0:
        hyp = "N = 3, b > 0, 2 < q < p < 6"
        tag = "normalized/subcritical"
        if q != Fraction(10, 3):
            M = small["mass"]
            out.append(_lambda_c_law(f"{tag}/small-lambda/lambda_c", M, hyp))
            peak = _to_c(f"{tag}/small-lambda/peak", small["peak"], M, hyp, 2 / (10 - 3 * q),
                         "exponent obtained by inverting the mass law")
            out.append(_ratio_only(peak))
            out.append(_to_c(f"{tag}/small-lambda/grad", small["grad"], M, hyp))
            out.append(_to_c(f"{tag}/small-lambda/Lq", small["Lq"], M, hyp))
        else:
            out.append(_c_limit(f"{tag}/c-limit/m1", LAMBDA_TO_0, thresholds(params, controls,
                                                                           K)[0], hyp,
                                "m1 = sqrt((6-q)/(2q)) a^{3/4} S_q^{q/(2(q-2))}"))
        large = _by_quantity(lam, "subcritical/large-lambda/")
        if p != Fraction(14, 3):
            M = large["mass"]
            out.append(_lambda_c_law(f"{tag}/large-lambda/lambda_c", M, hyp))
            out.append(_ratio_only(_to_c(f"{tag}/large-lambda/peak", large["peak"], M, hyp)))
            out.append(_to_c(f"{tag}/large-lambda/grad", large["grad"], M, hyp))
            out.append(_to_c(f"{tag}/large-lambda/Lp", large["Lp"], M, hyp))
        else:
            out.append(_c_limit(f"{tag}/c-limit/m2", LAMBDA_TO_INF, thresholds(params, controls,
                                                                             K)[1], hyp,
                                "m2 = sqrt(27b^3(p-2)^3(6-p))/(4p^2) S_p^{2p/(p-2)}"))
        return out
    hyp = "N = 3, b = 0, 2 < q < p < 6"
    large = _by_quantity(lam, "subcritical-b0/large-lambda/")
    if p != Fraction(10, 3):
        M = large["mass"]
        out.append(_lambda_c_law("normalized/b0/large-lambda/lambda_c", M, hyp))
        out.append(_to_c("normalized/b0/large-lambda/grad", large["grad"], M, hyp,
                         2 * (6 - q) / (10 - 3 * p),
                         "exponent obtained by inverting the mass law"))
        out.append(_to_c("normalized/b0/large-lambda/Lp", large["Lp"], M, hyp))
    if q != Fraction(10, 3):
        M = small["mass"]
        out.append(_lambda_c_law("normalized/b0/small-lambda/lambda_c", M, hyp))
        out.append(_to_c("normalized/b0/small-lambda/grad", small["grad"], M, hyp))
        out.append(_to_c("normalized/b0/small-lambda/Lq", small["Lq"], M, hyp))
    return out


def _ratio_only(law: AsymptoticLaw) -> AsymptoticLaw:
    from dataclasses import replace

    return replace(law, constant=None, relation=ORDER, constant_formula="")


def _c_limit(row, regime, value, hyp, formula) -> AsymptoticLaw:
    return AsymptoticLaw(row, "c-limit", regime, "lambda", Fraction(0), value, ASYMPTOTIC,
                         "o(1)", hyp, formula, limit=value)


def _critical_n4_c_rows(q: Fraction, large: dict) -> list:
    # lambda (ln lambda)^{(4-q)/2} ~ c^{-(q-2)}, so every (lambda ln lambda)^t becomes
    # c^{-(q-2) t} (ln lambda_c)^{(q-2) t / 2}.
    hyp = "p = 4, N = 4, 2 < q < 4, b S^2 < 1, lambda_c -> infinity"
    tag = "normalized/critical/large-lambda/N4"

    def row(name, quantity, t, limit=None, printed=None, note=""):
        return AsymptoticLaw(f"{tag}/{name}", quantity, C_TO_0, "c", -(q - 2) * t, None, ORDER,
                             "", hyp, "", None, (q - 2) * t / 2, "lambda_c", limit, printed,
                             note)

    t = -Fraction(4 - q) / (q - 2)
    L2 = large["L2star"]
    return [
        AsymptoticLaw(f"{tag}/lambda_c", "lambda_c", C_TO_0, "c", -(q - 2), None, ORDER, "", hyp,
                      "", None, -Fraction(4 - q) / 2, "lambda_c"),
        row("peak", "peak", 1 / (q - 2), printed=Fraction(-2),
            note="from the peak law (lambda ln lambda)^{1/(q-2)}"),
        row("grad-gap", "grad-gap", t, limit=large["grad-gap"].limit),
        AsymptoticLaw(f"{tag}/L2star", "L2star", C_TO_0, "c", Fraction(0), L2.constant,
                      ASYMPTOTIC, f"O(c^{fstr(4 - q)} (ln lambda_c)^{fstr(-(4 - q) / 2)})", hyp,
                      "limit_2star", 4 - q, limit=L2.limit),
        row("Lq", "Lq", t),
    ]


def all_laws(params: ProblemParams, controls: Controls = DEFAULT_CONTROLS) -> list:
    K = LawConstants(params, controls)
    return lambda_laws(params, controls, K) + normalized_laws(params, controls, K)


def _norm_regime(regime: str) -> str:
    try:
        return _REGIME_ALIASES[regime]
    except KeyError:
        raise ParameterError("regime", f"unknown regime {regime!r}")


def predict(params: ProblemParams, quantity: str, regime: str,
            controls: Controls = DEFAULT_CONTROLS) -> AsymptoticLaw:
    """The unique table row for (quantity, regime), or NotCovered."""
    regime = _norm_regime(regime)
    pool = lambda_laws(params, controls) if regime in (LAMBDA_TO_0, LAMBDA_TO_INF, ALL_LAMBDA) \
        else normalized_laws(params, controls)
    hits = [l for l in pool if l.quantity == quantity and l.regime == regime]
    exact = {LAMBDA_TO_0: ALL_LAMBDA, LAMBDA_TO_INF: ALL_LAMBDA, C_TO_0: ALL_C, C_TO_INF: ALL_C}
    if not hits and regime in exact:
        # exact rows hold in both limits only when no dedicated asymptotic row exists
        hits = [l for l in pool if l.quantity == quantity and l.regime == exact[regime]
                and l.evaluator is None]
    if not hits:
        raise NotCovered("not-covered", f"no law for {quantity!r} in regime {regime!r} "
                         f"at these parameters", quantity=quantity, regime=regime)
    return hits[0]


# ---------------------------------------------------------------- mass limits

@dataclass(frozen=True)
class EndBehaviour:
    """Limit class of M at one end and the sign of M' near it."""

    limit: str                 # "0", "finite", "inf" or "open"
    value: Optional[float]
    sign: object               # +1, -1 or "open"
    row: str
    note: str = ""

    def as_dict(self) -> dict:
        return {"limit": self.limit, "value": self.value, "sign": self.sign, "row": self.row,
                "note": self.note}


@dataclass(frozen=True)
class MassLimits:
    small: EndBehaviour
    large: EndBehaviour

    def as_dict(self) -> dict:
        return {"lambda->0": self.small.as_dict(), "lambda->inf": self.large.as_dict()}


def _end(law: Optional[AsymptoticLaw], at_zero: bool, row: str, note: str = "",
         eval_at: Optional[float] = None) -> EndBehaviour:
    if law is None:
        return EndBehaviour("open", None, "open", row, note or "no law covers this end")
    e = law.exponent
    if e == 0:
        value = law.constant
        sign = "open"
        corr = law.correction
        if corr.startswith("-Theta"):
            sign = -1 if at_zero else 1
        return EndBehaviour("finite", value, sign, row, note)
    grows = (e > 0) != at_zero          # M -> inf
    limit = "inf" if grows else "0"
    # M ~ lam^eta gives M' > 0 and M ~ lam^{-eta} gives M' < 0, at either end
    sign = 1 if e > 0 else -1
    return EndBehaviour(limit, None, sign, row, note)


def mass_limits(params: ProblemParams, controls: Controls = DEFAULT_CONTROLS) -> MassLimits:
    """Limits of M(lambda) at both ends and the eventual sign of M'."""
    laws = lambda_laws(params, controls)
    small = next((l for l in laws if l.quantity == "mass" and l.regime == LAMBDA_TO_0), None)
    large = next((l for l in laws if l.quantity == "mass" and l.regime == LAMBDA_TO_INF), None)
    q, p = frac(params.q), frac(params.p)
    if params.pq_equal and params.b == 0 and params.N == 3:
        large = next(l for l in laws if l.row == "pq/small-lambda/mass")   # exact for b = 0
    if params.critical:
        rs, rl = "mass-limit/critical/small-lambda", "mass-limit/critical/large-lambda"
    else:
        rs = "mass-limit/small-lambda/" + ("q<10/3" if q < Fraction(10, 3)
                                           else "q=10/3" if q == Fraction(10, 3) else "q>10/3")
        rl = "mass-limit/large-lambda/" + ("p<14/3" if p < Fraction(14, 3)
                                           else "p=14/3" if p == Fraction(14, 3) else "p>14/3")
        if params.b == 0:
            rl = "mass-limit/b0/large-lambda"
    s = _end(small, True, rs)
    if params.critical or params.b == 0:
        lnote = ""
    else:
        lnote = ("sign of M' follows the mass law; a table with M' < 0 for p < 14/3 and "
                 "M' > 0 for p > 14/3 contradicts M(inf) = inf for p < 14/3")
    l = _end(large, False, rl, lnote)
    if s.limit == "finite" and s.sign == "open":
        s = EndBehaviour(s.limit, s.value, "open", rs, "sign of M' not determined")
    if l.limit == "finite" and l.sign == "open":
        l = EndBehaviour(l.limit, l.value, "open", rl, "sign of M' not determined")
    return MassLimits(s, l)


def thresholds(params: ProblemParams, controls: Controls = DEFAULT_CONTROLS,
               constants: Optional[LawConstants] = None):
    """(m1, m2) for N = 3, b > 0, 2 < q < p < 6."""
    if params.N != 3 or params.b <= 0 or not (2 < params.q < params.p < 6):
        raise NotCovered("N=3,b>0,2<q<p<6", "thresholds need N = 3, b > 0 and 2 < q < p < 6")
    K = constants or LawConstants(params, controls)
    q, p, a, b = frac(params.q), frac(params.p), params.a, params.b
    m1 = math.sqrt(float((6 - q) / (2 * q))) * a ** 0.75 * _pow(K.S_q, q / (2 * (q - 2)))
    m2 = (math.sqrt(float(27 * (p - 2) ** 3 * (6 - p))) * b ** 1.5 / float(4 * p * p)
          * _pow(K.S_p, 2 * p / (p - 2)))
    return m1, m2


# rows: (small-c count, large-c count)
COUNT_ROWS = {
    "q<10/3,p<14/3": (1, 1),
    "10/3<q<p<14/3": (0, 2),
    "q<10/3,p>14/3": (2, 0),
    "q>10/3,p>14/3": (1, 1),
    "q=10/3,p<14/3": (0, 1),
    "q=10/3,p>14/3": (1, 0),
    "q<10/3,p=14/3": (1, 0),
    "q>10/3,p=14/3": (0, 1),
}


def count_row(params: ProblemParams) -> str:
    if params.N != 3 or params.b <= 0 or not (2 < params.q < params.p < 6):
        raise NotCovered("N=3,b>0,2<q<p<6", "exact counts need N = 3, b > 0, 2 < q < p < 6")
    q, p = frac(params.q), frac(params.p)
    t, u = Fraction(10, 3), Fraction(14, 3)
    qs = "q<10/3" if q < t else "q=10/3" if q == t else "q>10/3"
    ps = "p<14/3" if p < u else "p=14/3" if p == u else "p>14/3"
    if qs == "q>10/3" and ps == "p<14/3":
        return "10/3<q<p<14/3"
    if qs == "q=10/3" and ps == "p=14/3":
        raise NotCovered("count", "q = 10/3 with p = 14/3 has no count row")
    return f"{qs},{ps}"


def predicted_counts(params: ProblemParams):
    """Exact number of normalized solutions for small c and for large c."""
    return COUNT_ROWS[count_row(params)]


# ---------------------------------------------------------------- fitting

@dataclass(frozen=True)
class PowerFit:
    exponent: float
    constant: float
    r2: float
    n: int
    log_power: float = 0.0
    drift: float = 0.0

    def as_dict(self) -> dict:
        return {"exponent": self.exponent, "constant": self.constant, "r2": self.r2,
                "n": self.n, "log_power": self.log_power, "drift": self.drift}


def _line(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(slope), float(icpt)


def fit_power_law(samples, window=None, log_power: float = 0.0) -> PowerFit:
    """Least squares of ln(value) - k ln(ln x) against ln x.

    With log_power k != 0 (two-pass mode) the log factor is held at the law's
    power and `drift` reports the difference between the exponents fitted on
    the lower and upper halves of the window.
    """
    pts = sorted((float(x), float(v)) for x, v in samples)
    if window is not None:
        lo, hi = window
        if not lo < hi:
            raise ParameterError("window", "degenerate fitting window", window=list(window))
        pts = [(x, v) for x, v in pts if lo <= x <= hi]
    if len(pts) < 4:
        raise ParameterError("samples", "need at least 4 samples in the window", n=len(pts))
    x = np.array([t[0] for t in pts])
    v = np.array([t[1] for t in pts])
    if np.any(v <= 0) or np.any(x <= 0):
        raise ParameterError("positive", "samples must be positive")
    lx = np.log(x)
    if np.ptp(lx) == 0:
        raise ParameterError("window", "all samples at one abscissa")
    ly = np.log(v)
    if log_power:
        if np.any(x <= 1):
            raise ParameterError("window", "log-corrected fits need x > 1")
        ly = ly - log_power * np.log(lx)
    slope, icpt = _line(lx, ly)
    resid = ly - (slope * lx + icpt)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-28 * max(1.0, float(np.sum(ly ** 2))) else 0.0
    drift = 0.0
    if log_power and len(pts) >= 4:
        h = len(pts) // 2
        drift = _line(lx[h:], ly[h:])[0] - _line(lx[:h + len(pts) % 2], ly[:h + len(pts) % 2])[0]
    return PowerFit(slope, math.exp(icpt), r2, len(pts), float(log_power), drift)


@dataclass(frozen=True)
class Extrapolation:
    constant: float
    last_ratio: float
    correction_exponent: Optional[float]


def extrapolate_constant(samples, law: AsymptoticLaw) -> Extrapolation:
    """Leading constant from the two samples deepest in the law's regime.

    value / x^e = K + c x^beta is solved for K using the correction exponent
    beta of the law (Richardson elimination).  Without a known beta the last
    ratio is returned.
    """
    pts = sorted((float(x), float(v)) for x, v in samples)
    if len(pts) < 2:
        raise ParameterError("samples", "need two samples")
    if law.regime in (LAMBDA_TO_0, C_TO_0):
        (x1, v1), (x2, v2) = pts[1], pts[0]
    else:
        (x1, v1), (x2, v2) = pts[-2], pts[-1]
    e = float(law.exponent)
    r1, r2 = v1 / x1 ** e, v2 / x2 ** e
    beta = law.correction_exponent
    if beta is None:
        return Extrapolation(r2, r2, None)
    b = float(beta)
    t1, t2 = x1 ** b, x2 ** b
    K = (r2 * t1 - r1 * t2) / (t1 - t2)
    return Extrapolation(K, r2, b)


def table_json(params: ProblemParams, controls: Controls = DEFAULT_CONTROLS) -> dict:
    """JSON-ready export of every applicable row plus the mass limits."""
    out = {"params": params.as_dict(), "laws": [l.as_dict() for l in all_laws(params, controls)],
           "mass_limits": mass_limits(params, controls).as_dict()}
    try:
        out["count_row"] = count_row(params)
        out["predicted_counts"] = list(predicted_counts(params))
        m1, m2 = thresholds(params, controls)
        out["thresholds"] = {"m1": m1, "m2": m2}
    except NotCovered:
        pass
    return out
