import math

import pytest
from hypothesis import given, settings, strategies as st

from kirchhoff_gs.quadrature import (DIVERGENT, best_sobolev_S, dilate_profile, identity_residuals,
                                     lp_power_integral, norm_bundle, sobolev_S_closed_form,
                                     sobolev_constant, sobolev_Sq, sphere_measure, talenti_peak,
                                     talenti_profile)
from kirchhoff_gs.radial_ode import solve_scalar_field


def test_sphere_measures():
    assert sphere_measure(1) == 2
    assert sphere_measure(3) == pytest.approx(4 * math.pi, rel=1e-15)
    assert sphere_measure(4) == pytest.approx(2 * math.pi ** 2, rel=1e-15)


def test_soliton_norms():
    prof = solve_scalar_field(1, 4, 4, 0.0, 1.0)
    b = norm_bundle(prof, 1, 4, 4, 0.0, 1.0)
    assert b.B == pytest.approx(4, rel=1e-8)
    assert b.D == pytest.approx(16 / 3, rel=1e-8)
    assert b.A == pytest.approx(4 / 3, rel=1e-8)
    assert b.energy == pytest.approx(4 / 3, rel=1e-8)


IDENTITY_GRID = [
    (1, 3, 3, 0.0, 1.0), (1, 6, 6, 0.0, 1.0), (3, 3, 3, 0.0, 1.0), (3, 4, 4, 0.0, 2.0),
    (3, 3, 4, 1.0, 0.5), (3, 3.5, 4.5, 0.3, 1.0), (3, 5, 6, 1.0, 0.1), (3, 5, 6, 1.0, 1.0),
    (4, 3, 4, 1.0, 0.1), (4, 3, 4, 1.0, 1.0), (4, 2.5, 3.5, 1.0, 1.0), (3, 4, 5, 0.5, 2.0),
]


@pytest.mark.parametrize("case", IDENTITY_GRID)
def test_nehari_pohozaev(case):
    prof = solve_scalar_field(*case)
    b = norm_bundle(prof, *case)
    assert identity_residuals(b, *case).max() < 1e-6


@pytest.mark.parametrize("N", [3, 4])
def test_talenti_S(N):
    assert best_sobolev_S(N) == pytest.approx(sobolev_S_closed_form(N), rel=1e-6)


def test_talenti_peaks():
    assert talenti_peak(3) == 3 ** 0.25
    assert talenti_peak(4) == 2 * math.sqrt(2)
    assert talenti_profile(4).W[0] == talenti_peak(4)


def test_talenti_L2_divergent_in_3d():
    assert lp_power_integral(talenti_profile(3), 2.0) == DIVERGENT
    assert math.isfinite(lp_power_integral(talenti_profile(4), 3.0))


@pytest.mark.parametrize("N, q", [(3, 3.0), (3, 4.0), (4, 3.0), (1, 4.0)])
def test_sobolev_two_formulas(N, q):
    prof = solve_scalar_field(N, q, q, 0.0, 1.0)
    S = sobolev_Sq(prof, q)  # raises on disagreement beyond 1e-6
    assert S == sobolev_constant(N, q)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([(3, 4.0), (4, 3.0), (1, 4.0)]),
       st.sampled_from([0.5, 2.0, 0.75, 1.25, 3.0]))
def test_dilation_covariance(dq, t):
    d, q = dq
    prof = solve_scalar_field(d, q, q, 0.0, 1.0)
    base = norm_bundle(prof, d, q, q, 0.0, 1.0)
    b = norm_bundle(dilate_profile(prof, t), d, q, q, 0.0, 1.0)
    assert b.A == pytest.approx(t ** (d - 2) * base.A, rel=1e-8)
    assert b.B == pytest.approx(t ** d * base.B, rel=1e-8)
    assert b.C == pytest.approx(t ** d * base.C, rel=1e-8)


def test_dilation_rejects_algebraic_tail():
    with pytest.raises(ValueError):
        dilate_profile(talenti_profile(3), 2.0)
