import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zollwidth.errors import PoleEvaluation, ProfileInvalid
from zollwidth.metrics import (EvenProfile, MetricOfRevolution, OddProfile, area, c0_distance,
                               conformal_bounds, curvature_report, gauss_curvature,
                               make_control_metric, make_metric, profile_sup, round_metric,
                               total_curvature, validate_profile)

from conftest import zoll

# Richardson-extrapolated nested central differences of the components,
# K = -(EG)^(-1/2) d/dt( (d sqrt(G)/dt) / sqrt(E) ), steps 1e-2, 5e-3, 2.5e-3.
# Frozen from an independent run; eps = 0.3.
K_FD_ORACLE = {
    math.pi / 6: 1.150627224324047,
    math.pi / 3: 0.7807435504311543,
    math.pi / 2: 1.0000000000001654,
    2 * math.pi / 3: 1.3232339883287607,
    5 * math.pi / 6: 0.7465061433942615,
}
# max - min of the same oracle on 20001 points of [0.02, pi - 0.02]
K_RANGE_ORACLE = 1.1985605114764533
# sup |(1 + h(cos t))**2 - 1| on 10**6 + 1 equispaced t in [0, pi]
C0_ORACLE = {0.1: 0.07846151737325124, 0.2: 0.15988599770945222, 0.3: 0.2442734410086027}


@st.composite
def odd_profiles(draw, max_terms=4):
    k = draw(st.integers(2, max_terms))
    tail = draw(st.lists(st.floats(-0.6, 0.6), min_size=k - 1, max_size=k - 1))
    coeffs = [-math.fsum(tail)] + tail
    prof = OddProfile(tuple(coeffs))
    sup = profile_sup(prof)
    if sup >= 0.9:
        prof = prof.scaled(0.9 / sup)
        # rescaling keeps the coefficient sum at zero up to rounding
        c = list(prof.coeffs)
        c[0] = -math.fsum(c[1:])
        prof = OddProfile(tuple(c))
    return prof


def test_round_components():
    g = round_metric()
    t = np.linspace(0.1, 3.0, 7)
    assert np.array_equal(g.g_thetatheta(t), np.ones_like(t))
    assert np.allclose(g.g_phiphi(t), np.sin(t) ** 2, rtol=0, atol=0)
    assert g.matrix(1.0).tolist() == [[1.0, 0.0], [0.0, math.sin(1.0) ** 2]]


def test_zoll_components_closed_form(zoll03):
    assert zoll03.g_thetatheta(math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    # (1 + 0.3 * (0.5 - 0.125))**2
    assert zoll03.g_thetatheta(math.pi / 3) == pytest.approx(1.23765625, rel=1e-14)
    m = zoll03.matrix(math.pi / 3, 1.7)
    assert m[0, 1] == m[1, 0] == 0.0
    assert np.all(np.linalg.eigvalsh(m) > 0)


def test_profile_validation_rejects():
    with pytest.raises(ProfileInvalid):
        make_metric(OddProfile((0.3, -0.2)))  # h(1) != 0
    with pytest.raises(ProfileInvalid):
        make_metric(OddProfile.from_epsilon(3.0))  # sup |h| > 1
    with pytest.raises(ProfileInvalid):
        make_metric(EvenProfile.bump(0.3))  # not odd
    with pytest.raises(ProfileInvalid):
        make_metric(OddProfile((float("nan"), 0.0)))
    with pytest.raises(ProfileInvalid):
        make_metric(OddProfile.from_epsilon(0.3), scale=0.0)
    validate_profile(EvenProfile.bump(0.5), require_odd=False)


def test_sup_threshold_family():
    # sup |eps (u - u^3)| = eps * 2 / (3 sqrt 3); boundary at eps = 2.598...
    crit = 3 * math.sqrt(3) / 2
    make_metric(OddProfile.from_epsilon(crit * 0.999))
    with pytest.raises(ProfileInvalid):
        make_metric(OddProfile.from_epsilon(crit * 1.001))


def test_pole_guard(zoll03):
    with pytest.raises(PoleEvaluation):
        gauss_curvature(zoll03, 1e-7)
    with pytest.raises(PoleEvaluation):
        zoll03.matrix(math.pi)
    assert gauss_curvature(zoll03, 1e-5) == pytest.approx(1.6, abs=1e-8)


def test_curvature_round():
    g = round_metric()
    t = np.linspace(0.01, math.pi - 0.01, 101)
    assert np.allclose(gauss_curvature(g, t), 1.0, atol=1e-15)
    assert gauss_curvature(round_metric(4.0), 1.0) == pytest.approx(0.25)


@pytest.mark.parametrize("theta", sorted(K_FD_ORACLE))
def test_curvature_against_finite_difference_oracle(zoll03, theta):
    assert gauss_curvature(zoll03, theta) == pytest.approx(K_FD_ORACLE[theta], abs=1e-8)


def test_curvature_range_regression(zoll03):
    rep = curvature_report(zoll03, diameter_pairs=0)
    assert rep.K_range > K_RANGE_ORACLE
    # closed form at the poles: K(u = 1) = 1 + 2 eps, K(u = -1) = 1 - 2 eps
    assert rep.K_max == pytest.approx(1.6, abs=1e-12)
    assert rep.K_min == pytest.approx(0.4, abs=1e-12)


def test_round_report():
    rep = curvature_report(round_metric())
    assert rep.K_min == pytest.approx(1.0, abs=1e-12)
    assert rep.K_max == pytest.approx(1.0, abs=1e-12)
    assert rep.total_curvature == pytest.approx(4 * math.pi, abs=1e-12)
    assert rep.area == pytest.approx(4 * math.pi, abs=1e-12)
    assert rep.diameter == pytest.approx(math.pi, abs=1e-6)
    assert rep.csv_row()[4].startswith("shooting")


def test_zero_profile_report_equals_round():
    a = curvature_report(zoll(0.0), diameter_pairs=0)
    b = curvature_report(round_metric(), diameter_pairs=0)
    assert a.csv_row() == b.csv_row()


def test_zoll_diameter_is_pi(zoll03):
    # pole to pole is half a meridian, pi; no pair of points is farther apart
    rep = curvature_report(zoll03, diameter_pairs=3)
    assert rep.diameter == pytest.approx(math.pi, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(odd_profiles())
def test_gauss_bonnet_random_profiles(prof):
    g = make_metric(prof)
    assert abs(total_curvature(g) - 4 * math.pi) < 1e-6


@settings(max_examples=20, deadline=None)
@given(odd_profiles(), st.floats(0.5, 3.0))
def test_area_of_odd_profiles(prof, scale):
    # the odd part of the area density integrates to zero
    assert area(make_metric(prof, scale)) == pytest.approx(4 * math.pi * scale, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(odd_profiles(), st.lists(st.floats(-1, 1), min_size=1, max_size=20))
def test_oddness_exact(prof, us):
    u = np.asarray(us)
    assert np.all(prof(-u) + prof(u) == 0.0)


@settings(max_examples=50, deadline=None)
@given(odd_profiles(), st.floats(0.01, math.pi - 0.01))
def test_antipodal_component_identity(prof, theta):
    g = make_metric(prof)
    assert g.g_thetatheta(math.pi - theta) == pytest.approx(
        (1 - prof(math.cos(theta))) ** 2, rel=1e-12, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(odd_profiles(), st.floats(-0.999, 0.999))
def test_ambient_correction_identity(prof, u):
    g = make_metric(prof)
    h = float(prof(u))
    assert float(g.psi(u)) * (1 - u * u) == pytest.approx(h * (2 + h), abs=1e-13)


@pytest.mark.parametrize("eps", [0.1, 0.2, 0.3])
def test_c0_distance_oracle(eps):
    d = c0_distance(zoll(eps), round_metric())
    assert d == pytest.approx(C0_ORACLE[eps], abs=1e-9)
    assert d >= C0_ORACLE[eps] - 1e-15


def test_c0_conformal_scaling():
    g0 = round_metric()
    assert c0_distance(g0, g0) == 0.0
    assert c0_distance(round_metric(2.25), g0) == pytest.approx(1.25, abs=1e-15)
    assert conformal_bounds(round_metric(2.25)) == (2.25, 2.25)
    assert conformal_bounds(g0) == (1.0, 1.0)


def test_conformal_bounds_closed_form(zoll03):
    hmax = 0.3 * 2 / (3 * math.sqrt(3))
    c1, c2 = conformal_bounds(zoll03)
    assert c1 == pytest.approx((1 - hmax) ** 2, abs=1e-12)
    assert c2 == pytest.approx((1 + hmax) ** 2, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(odd_profiles(3), odd_profiles(3), odd_profiles(3))
def test_c0_pseudometric(p1, p2, p3):
    a, b, c = make_metric(p1), make_metric(p2), make_metric(p3)
    ab, bc, ac = c0_distance(a, b), c0_distance(b, c), c0_distance(a, c)
    assert ab == pytest.approx(c0_distance(b, a), abs=1e-15)
    assert ac <= ab + bc + 1e-12


@settings(max_examples=20, deadline=None)
@given(odd_profiles())
def test_c0_bounded_by_conformal_bounds(prof):
    g = make_metric(prof)
    c1, c2 = conformal_bounds(g)
    assert c0_distance(g, round_metric()) <= max(c2 - 1, 1 - c1) + 1e-14


def test_describe_canonical():
    spellings = [round_metric(), zoll(0.0), make_metric(OddProfile((0.0, 0.0, -0.0))),
                 make_control_metric(EvenProfile.bump(0.0))]
    assert all(m.describe() == round_metric().describe() for m in spellings)
    assert zoll(0.3).describe() != make_control_metric(EvenProfile((0.3, -0.3))).describe()


def test_even_control_distance_comparable(even_control, zoll03):
    d_even = c0_distance(even_control, round_metric())
    d_odd = c0_distance(zoll03, round_metric())
    assert 0.5 * d_odd < d_even < 2 * d_odd
    assert isinstance(even_control, MetricOfRevolution) and not even_control.is_odd
