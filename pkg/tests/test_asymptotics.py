import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from kirchhoff_gs.asymptotics import (C_TO_0, LAMBDA_TO_0, LAMBDA_TO_INF,
                                      ROW_IDS, LawConstants, NotCovered, all_laws, count_row,
                                      extrapolate_constant, fit_power_law, frac, lambda_laws,
                                      mass_limits, normalized_laws, predict, predicted_counts,
                                      table_json, thresholds)
from kirchhoff_gs.core import ParameterError, validate_params
from kirchhoff_gs.validation import COVERAGE_PARAMS

SUBCRITICAL = [(3, 4), (3.5, 4.5), (3, 5), (4, 5), (10 / 3, 4), (3, 14 / 3)]


def test_row_ids_unique():
    assert len(ROW_IDS) == len(set(ROW_IDS)) == 75


def test_table_coverage():
    seen = set()
    for args in COVERAGE_PARAMS:
        rows = [l.row for l in all_laws(validate_params(*args))]
        assert len(rows) == len(set(rows))
        seen.update(rows)
    assert seen == set(ROW_IDS)


def test_subcritical_exponents():
    P = validate_params(3, 1, 1, 3, 4)
    law = {(l.quantity, l.regime): l for l in lambda_laws(P)}
    assert law["mass", LAMBDA_TO_0].exponent == Fraction(1, 2)
    assert law["mass", LAMBDA_TO_INF].exponent == 1
    # (6-q)/(2(q-2)) and (6-p)/(p-2)
    assert law["grad", LAMBDA_TO_0].exponent == Fraction(3, 2)
    assert law["grad", LAMBDA_TO_INF].exponent == 1


@pytest.mark.parametrize("q, p", SUBCRITICAL)
def test_mass_exponents_general(q, p):
    law = {(l.quantity, l.regime): l for l in lambda_laws(validate_params(3, 1, 1, q, p))}
    fq, fp = frac(q), frac(p)
    assert law["mass", LAMBDA_TO_0].exponent == (10 - 3 * fq) / (2 * (fq - 2))
    assert law["mass", LAMBDA_TO_INF].exponent == (14 - 3 * fp) / (fp - 2)


@pytest.mark.parametrize("args", [(3, 1, 1, 3, 4), (3, 1, 1, 3.5, 4.5), (3, 1, 1, 4, 5),
                                  (3, 1, 1, 3, 5), (3, 2, 0, 3, 4), (3, 1, 0, 4, 4)])
def test_c_laws_invert_lambda_laws(args):
    """lambda_c(c) evaluated at c = sqrt(M(lambda)) returns lambda."""
    P = validate_params(*args)
    checked = 0
    for law in normalized_laws(P):
        if law.quantity != "lambda_c" or law.ratio_only:
            continue
        mass = predict(P, "mass", LAMBDA_TO_INF if "large-lambda" in law.row else LAMBDA_TO_0)
        for lam in (1e-3, 1.0, 1e3):
            c = math.sqrt(mass.evaluate(lam))
            assert law.evaluate(c) == pytest.approx(lam, rel=1e-10)
            checked += 1
    assert checked > 0


def test_small_c_constant_matches_closed_form():
    for q, a in ((3.0, 1.0), (3.0, 2.5), (3.2, 1.0)):
        P = validate_params(3, a, 1, q, 4)
        S = LawConstants(P).S_q
        law = predict(P, "lambda_c", C_TO_0)
        e = 10 - 3 * q
        expected = ((2 * q / (6 - q)) * a ** -1.5 * S ** (-q / (q - 2))) ** (2 * (q - 2) / e)
        assert law.constant == pytest.approx(expected, rel=1e-12)
        assert law.exponent == frac(4 * (q - 2) / e)


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_pq_b0_normalized_closed_forms(a):
    p = 4.0
    P = validate_params(3, a, 0, p, p)
    S = LawConstants(P).S_p
    e = 10 - 3 * p
    rows = {l.quantity: l for l in normalized_laws(P)}
    assert rows["lambda_c"].constant == pytest.approx(
        (p / (6 - p)) ** (2 * (p - 2) / e) * a ** (-3 * (p - 2) / e) * (S / 2) ** (-2 * p / e),
        rel=1e-12)
    assert rows["grad"].constant == pytest.approx(
        3 * (p - 2) / p * (p / (6 - p)) ** ((6 - p) / e) * a ** (-4 / e) * (S / 2) ** (-2 * p / e),
        rel=1e-12)
    assert rows["Lp"].constant == pytest.approx(
        (p / (6 - p)) ** ((6 - p) / e) * a ** (-3 * (p - 2) / e) * (S / 2) ** (-2 * p / e),
        rel=1e-12)


def test_printed_exponent_discrepancies_are_recorded():
    P = validate_params(3, 1, 1, 4, 4)
    lp = next(l for l in lambda_laws(P) if l.quantity == "Lp" and l.regime == LAMBDA_TO_INF)
    assert lp.exponent == 2 * (6 - frac(4)) / (frac(4) - 2)
    assert lp.printed_exponent == (14 - 3 * frac(4)) / (frac(4) - 2)


@pytest.mark.parametrize("qp, signs", [
    ((3, 4), (1, 1)), ((4, 5), (-1, -1)), ((10 / 3, 4), (-1, 1)),
    ((3.5, 4.5), (-1, 1)), ((3, 5), (1, -1)), ((3, 14 / 3), (1, "open")),
])
def test_mass_limit_signs(qp, signs):
    lim = mass_limits(validate_params(3, 1, 1, *qp))
    assert (lim.small.sign, lim.large.sign) == signs


def test_threshold_limits():
    m1, m2 = thresholds(validate_params(3, 1, 1, 10 / 3, 4))
    assert math.isfinite(m1) and m1 > 0
    lim = mass_limits(validate_params(3, 1, 1, 10 / 3, 4))
    assert lim.small.limit == "finite"
    assert lim.small.value == pytest.approx(m1 ** 2, rel=1e-12)


def test_counts_table():
    expected = {(3, 4): (1, 1), (3.5, 4.5): (0, 2), (3, 5): (2, 0), (4, 5): (1, 1),
                (10 / 3, 4): (0, 1), (3, 14 / 3): (1, 0)}
    for (q, p), counts in expected.items():
        P = validate_params(3, 1, 1, q, p)
        assert predicted_counts(P) == counts
        assert count_row(P)
    with pytest.raises(NotCovered):
        count_row(validate_params(3, 1, 0, 3, 4))


def test_predict_not_covered():
    with pytest.raises(NotCovered):
        predict(validate_params(3, 1, 1, 3, 4), "Lp", LAMBDA_TO_0)
    with pytest.raises(ParameterError):
        predict(validate_params(3, 1, 1, 3, 4), "mass", "sideways")


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 100), st.integers(4, 40))
def test_fit_recovers_power_law(e, K, n):
    xs = [10 ** (-2 + 4 * i / (n - 1)) for i in range(n)]
    fit = fit_power_law([(x, K * x ** e) for x in xs])
    assert fit.exponent == pytest.approx(e, abs=1e-9)
    assert fit.constant == pytest.approx(K, rel=1e-8)
    if abs(e) > 1e-3:
        assert fit.r2 == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, -0.2), st.floats(-1.5, 1.5))
def test_two_pass_log_fit(e, k):
    xs = [10 ** (1 + 4 * i / 19) for i in range(20)]
    fit = fit_power_law([(x, 3.0 * x ** e * math.log(x) ** k) for x in xs], log_power=k)
    assert fit.exponent == pytest.approx(e, abs=1e-9)
    assert abs(fit.drift) < 1e-9


def test_fit_errors():
    with pytest.raises(ParameterError):
        fit_power_law([(1, 1), (2, 2), (3, 3)])
    with pytest.raises(ParameterError):
        fit_power_law([(1, 1), (2, -2), (3, 3), (4, 4)])
    with pytest.raises(ParameterError):
        fit_power_law([(1, 1), (2, 2), (3, 3), (4, 4)], window=(5, 1))
    with pytest.raises(ParameterError):
        fit_power_law([(0.5, 1), (2, 2), (3, 3), (4, 4)], log_power=1.0)


def test_richardson_removes_correction():
    P = validate_params(3, 1, 1, 3, 4)
    law = predict(P, "mass", LAMBDA_TO_0)
    beta = float(law.correction_exponent)
    K = float(law.constant)
    pts = [(x, K * x ** float(law.exponent) * (1 + 5 * x ** beta)) for x in (1e-4, 2e-4)]
    assert extrapolate_constant(pts, law).constant == pytest.approx(K, rel=1e-10)


@pytest.mark.parametrize("args", [(3, 1, 1, 3, 4), (3, 1, 1, 5, 6), (4, 1, 0, 2.5, 4),
                                  (3, 1, 0, 4, 4), (3, 1, 1, 10 / 3, 4)])
def test_table_json_round_trip(args):
    from kirchhoff_gs.cli import dumps

    table = table_json(validate_params(*args))
    again = json.loads(dumps(table))
    assert dumps(again) == dumps(table)
    floats = [l["constant"] for l in table["laws"] if isinstance(l["constant"], float)]
    assert floats == [l["constant"] for l in again["laws"] if isinstance(l["constant"], float)]
