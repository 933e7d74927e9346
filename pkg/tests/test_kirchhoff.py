import math

import pytest
from hypothesis import given, settings, strategies as st

from kirchhoff_gs.core import LARGE, SMALL, SolverError, validate_params
from kirchhoff_gs.kirchhoff import (VarpiEquation, critical_limits, exact_pq_solution,
                                    ground_state, kirchhoff_energy, local_equation,
                                    pq_sqrt_varpi, printed_pq_sqrt_varpi, solve_varpi)
from kirchhoff_gs.quadrature import sobolev_constant

lams = st.floats(-3, 3).map(lambda t: 10.0 ** t)


@given(st.sampled_from([3, 4]), st.floats(0.01, 100), st.floats(0, 0.99))
def test_varpi_root(N, a, k):
    w = solve_varpi(VarpiEquation(N, a, k))
    assert w == pytest.approx(a + k * w ** ((N - 2) / 2), rel=1e-12)
    assert w >= a * (1 - 1e-15)


def test_varpi_no_root_in_4d():
    with pytest.raises(SolverError):
        solve_varpi(VarpiEquation(4, 1.0, 1.0))


def test_4d_coupling_too_strong():
    with pytest.raises(SolverError) as info:
        ground_state(validate_params(4, 1, 0.01, 2.5, 3.5, 3.0))
    assert info.value.kind == "varpi"


def test_local_equation_tags():
    P = validate_params(3, 1, 1, 3, 4, 8.0)
    assert local_equation(P, SMALL) == (1.0, 1.0, 8.0)
    alpha, mu_q, mu_p = local_equation(P, LARGE)
    assert alpha == 0.5 and mu_p == 1.0 and mu_q == pytest.approx(8.0 ** -0.5)


@pytest.mark.parametrize("args", [(3, 1, 1, 3, 4, 0.01), (3, 1, 1, 3, 4, 100.0),
                                  (3, 2, 0.5, 3.5, 4.5, 1.0), (4, 1, 0.001, 2.5, 3.5, 3.0),
                                  (3, 1, 1, 5, 6, 10.0), (4, 1, 0, 3, 4, 10.0)])
def test_ground_state_consistency(args):
    P = validate_params(*args)
    sol = ground_state(P)
    assert sol.residuals.max() < 1e-6
    assert sol.varpi == pytest.approx(P.a + P.b * sol.norms.A, rel=1e-12)
    assert sol.u(0.0) == pytest.approx(sol.peak, rel=1e-12)
    assert sol.norms.energy == kirchhoff_energy(P, sol.norms)
    assert sol.mass == sol.norms.B


def test_b0_varpi_is_a():
    sol = ground_state(validate_params(3, 1.7, 0, 3, 4, 2.0))
    assert sol.varpi == 1.7


@settings(max_examples=10, deadline=None)
@given(lams)
def test_tag_independence(lam):
    P = validate_params(3, 1, 1, 3, 4, lam)
    s, l = ground_state(P, tag=SMALL), ground_state(P, tag=LARGE)
    for k in ("A", "B", "C", "D", "energy"):
        assert getattr(s.norms, k) == pytest.approx(getattr(l.norms, k), rel=1e-6)
    assert s.peak == pytest.approx(l.peak, rel=1e-6)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 5.0), lams)
def test_b0_coefficient_scaling(a, lam):
    # for b = 0, u_a(x) = u_1(x / sqrt(a)): A scales like a^{1/2}, B like a^{3/2}
    one = ground_state(validate_params(3, 1, 0, 3, 4, lam))
    sol = ground_state(validate_params(3, a, 0, 3, 4, lam))
    assert sol.norms.A == pytest.approx(a ** 0.5 * one.norms.A, rel=1e-6)
    assert sol.norms.B == pytest.approx(a ** 1.5 * one.norms.B, rel=1e-6)
    assert sol.peak == pytest.approx(one.peak, rel=1e-9)


@pytest.mark.parametrize("b", [0.0, 1.0])
@pytest.mark.parametrize("lam", [1e-3, 1.0, 1e3])
def test_exact_pq(b, lam):
    P = validate_params(3, 1, b, 4, 4, lam)
    g, e = ground_state(P), exact_pq_solution(P)
    for x, y in ((g.varpi, e.varpi), (g.peak, e.peak), (g.norms.A, e.norms.A),
                 (g.norms.B, e.norms.B), (g.norms.D, e.norms.D)):
        assert x == pytest.approx(y, rel=1e-6)
    assert e.residuals.max() < 1e-12


def test_printed_pq_varpi_breaks_fixed_point():
    P = validate_params(3, 1, 1, 4, 4, 1.0)
    S = sobolev_constant(3, 4.0)
    A = ground_state(P).norms.A
    good, printed = pq_sqrt_varpi(P, S), printed_pq_sqrt_varpi(P, S)
    assert good ** 2 == pytest.approx(1 + A, rel=1e-6)
    assert abs(printed ** 2 - (1 + A)) > 0.1 * (1 + A)
    P0 = validate_params(3, 1, 0, 4, 4, 1.0)
    assert printed_pq_sqrt_varpi(P0, S) == pq_sqrt_varpi(P0, S) == 1.0


@pytest.mark.parametrize("N, a, b", [(3, 1.0, 1.0), (3, 2.0, 0.0), (4, 1.0, 0.005), (4, 1.0, 0.0)])
def test_critical_limit_identities(N, a, b):
    L = critical_limits(N, a, b)
    ts = 2 * N / (N - 2)
    A, D = L.limit_grad, L.limit_2star
    # extremal: D = (A/S)^{2*/2}, Nehari a A + b A^2 = D
    assert D == pytest.approx((A / L.S) ** (ts / 2), rel=1e-12)
    assert a * A + b * A * A == pytest.approx(D, rel=1e-12)
    assert L.m_infinity == pytest.approx(a / 2 * A + b / 4 * A * A - D / ts, rel=1e-12)


def test_critical_energy_below_limit():
    L = critical_limits(3, 1.0, 1.0)
    prev = None
    for lam in (10.0, 100.0):
        sol = ground_state(validate_params(3, 1, 1, 5, 6, lam))
        assert sol.norms.energy < L.m_infinity
        assert sol.norms.A < L.limit_grad
        if prev is not None:
            assert sol.norms.A > prev
        prev = sol.norms.A
    assert math.isfinite(prev)
