import math

import pytest
from hypothesis import given, strategies as st

from kirchhoff_gs.core import (DEFAULT_CONTROLS, EXACT_PQ, LARGE, SMALL, Controls, ParameterError,
                               SolverError, classify_regime, relative_residual, validate_params)


@pytest.mark.parametrize("args, constraint", [
    ((5, 1, 1, 3, 4), "dimension"),
    ((3, 0, 1, 3, 4), "a>0"),
    ((3, 1, -1, 3, 4), "b>=0"),
    ((3, 1, 1, 4, 3), "2<q<=p"),
    ((3, 1, 1, 2, 4), "2<q<=p"),
    ((3, 1, 1, 3, 7), "p<=2*"),
    ((3, 1, 1, 6, 6), "q<2*"),
    ((4, 1, 1, 3, 4), "b*S^2<1"),
    ((3, 1, 1, 3, 4, 0.0), "lambda>0"),
    ((3, math.nan, 1, 3, 4), "finite"),
])
def test_invalid_parameters(args, constraint):
    with pytest.raises(ParameterError) as info:
        validate_params(*args)
    assert info.value.constraint == constraint
    assert info.value.to_dict()["constraint"] == constraint


def test_cases():
    assert validate_params(3, 1, 1, 5, 6).case == "critical"
    assert validate_params(4, 1, 0.001, 3, 4).critical
    assert validate_params(3, 1, 1, 4, 4).case == "pq-equal"
    assert validate_params(3, 1, 1, 3, 4).case == "subcritical"


def test_classify_regime():
    P = validate_params(3, 1, 1, 3, 4, 0.5)
    assert classify_regime(P) == SMALL
    assert classify_regime(P.with_lambda(1.0)) == SMALL
    assert classify_regime(P.with_lambda(2.0)) == LARGE
    assert classify_regime(validate_params(3, 1, 1, 4, 4, 7.0)) == EXACT_PQ


def test_controls_from_mapping():
    ctl = Controls.from_mapping({"ode_tol": "1e-9", "refine": "6"})
    assert ctl.ode_tol == 1e-9 and ctl.refine == 6
    assert ctl.r_max == DEFAULT_CONTROLS.r_max
    with pytest.raises(ParameterError):
        Controls.from_mapping({"nope": "1"})
    with pytest.raises(ParameterError):
        Controls.from_mapping({"refine": "3"})
    with pytest.raises(ParameterError):
        Controls.from_mapping({"ode_tol": "abc"})


def test_error_codes():
    assert ParameterError("x", "m").code == 2
    assert SolverError("k", "m").code == 3
    assert SolverError("k", "m", s=1.0).to_dict() == {
        "error": "solver-failure", "kind": "k", "message": "m", "s": 1.0}


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_relative_residual_bounds(x, y):
    r = relative_residual(x, y)
    assert 0.0 <= r <= 1.0 + 1e-15
    assert relative_residual(x, y) == relative_residual(y, x)
