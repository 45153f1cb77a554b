import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zollwidth import sweepout
from zollwidth.errors import CollapseDetected
from zollwidth.flow import trace_geodesic, unit_phase_point
from zollwidth.sweepout import (DiscreteCurve, arc_length, birkhoff_shorten,
                                fixed_point_residual, geodesic_midpoint, initial_sweepout,
                                minmax_estimate, remesh)

from conftest import TWO_PI, zoll


def latitude(theta, n, phase=0.0):
    phi = TWO_PI * np.arange(n) / n + phase
    return DiscreteCurve.from_chart(np.full(n, theta), phi)


def wobbled_equator(n, amp=0.1, k=2):
    phi = TWO_PI * np.arange(n) / n
    return DiscreteCurve.from_chart(math.pi / 2 + amp * np.sin(k * phi), phi)


def test_arc_length_round_is_angle(round_g):
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, math.cos(0.3), math.sin(0.3)])
    assert arc_length(round_g, a, b) == pytest.approx(math.pi / 2, abs=1e-15)


@pytest.mark.parametrize("t1,t2", [(0.3, 0.35), (1.0, 1.04), (2.5, 2.56)])
def test_arc_length_meridian_closed_form(zoll03, t1, t2):
    # meridian length = dtheta + eps (sin^3 t2 - sin^3 t1) / 3 for h = eps (u - u^3)
    a = np.array([math.sin(t1), 0.0, math.cos(t1)])
    b = np.array([math.sin(t2), 0.0, math.cos(t2)])
    exact = (t2 - t1) + 0.3 * (math.sin(t2) ** 3 - math.sin(t1) ** 3) / 3
    assert arc_length(zoll03, a, b) == pytest.approx(exact, abs=1e-14)


def test_midpoint_round_exact(round_g):
    a = np.array([1.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0])
    m = geodesic_midpoint(round_g, a, b)
    assert np.allclose(m, [math.sqrt(0.5), math.sqrt(0.5), 0.0], atol=1e-15)


def test_midpoint_fourth_order(zoll03):
    start = unit_phase_point(zoll03, 1.0, 0.2, 0.7)
    errs = []
    for L in (0.2, 0.1, 0.05):
        tr = trace_geodesic(zoll03, start, L, max_step=L / 2)
        half = trace_geodesic(zoll03, start, L / 2).xyz[-1]
        errs.append(np.linalg.norm(geodesic_midpoint(zoll03, tr.xyz[0], tr.xyz[-1]) - half))
    assert errs[-1] < 1e-7
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5), rates


def test_latitude_lengths_closed_form(round_g):
    fam = initial_sweepout(round_g, 17, 256)
    # great-arc chords of a latitude circle: n * 2 asin(sin t sin(pi/n))
    expected = 256 * 2 * np.arcsin(np.sin(np.pi * fam.t) * math.sin(math.pi / 256))
    assert np.allclose(fam.lengths, expected, atol=1e-12)
    inscribed = 2 * 256 * math.sin(math.pi / 256)
    assert inscribed <= fam.max_length <= TWO_PI + 1e-12
    assert abs(fam.max_length / TWO_PI - 1) < 1e-3
    assert fam.argmax_t == 0.5


def test_zoll_equator_latitude(zoll03):
    fam = initial_sweepout(zoll03, 5, 256)
    assert fam.lengths[2] == pytest.approx(TWO_PI, abs=1e-12)


def test_three_curve_family(round_g):
    fam = initial_sweepout(round_g, 3, 16)
    assert len(fam.curves) == 3
    assert fam.lengths[0] < sweepout.COLLAPSE_TOL and fam.lengths[2] < sweepout.COLLAPSE_TOL
    with pytest.raises(ValueError):
        initial_sweepout(round_g, 2, 16)
    with pytest.raises(ValueError):
        initial_sweepout(round_g, 3, 7)


def test_great_circle_fixed_point(round_g):
    eq = latitude(math.pi / 2, 64)
    out = birkhoff_shorten(round_g, eq, 20)
    assert np.max(np.abs(out.vertices - eq.vertices)) < 1e-12
    tilt = np.array([[1, 0, 0], [0, math.cos(0.7), -math.sin(0.7)],
                     [0, math.sin(0.7), math.cos(0.7)]])
    tilted = DiscreteCurve(eq.vertices @ tilt.T)
    out = birkhoff_shorten(round_g, tilted, 20)
    assert np.max(np.abs(out.vertices - tilted.vertices)) < 1e-12
    assert fixed_point_residual(round_g, tilted) < 1e-12


def test_wobbled_equator_converges(round_g):
    w = wobbled_equator(48)
    assert w.length(round_g) > 1.005 * TWO_PI
    out = birkhoff_shorten(round_g, w, 2000)
    assert abs(out.length(round_g) / TWO_PI - 1) < 5e-3
    assert fixed_point_residual(round_g, out) < sweepout.FIXED_POINT_TOL


def test_small_circle_collapses(round_g):
    with pytest.raises(CollapseDetected) as info:
        birkhoff_shorten(round_g, latitude(math.pi / 6, 16), 5000)
    assert info.value.curve.length(round_g) < sweepout.COLLAPSE_TOL


@settings(max_examples=8, deadline=None)
@given(st.floats(0.02, 0.3), st.integers(2, 4), st.sampled_from([0.0, 0.3]))
def test_monotone_descent_per_round(amp, k, eps):
    g = zoll(eps)
    c = wobbled_equator(40, amp, k)
    prev = c.length(g)
    for _ in range(15):
        c = birkhoff_shorten(g, c, 1)
        now = c.length(g)
        assert now <= prev
        prev = now


def test_odd_vertex_count_descends(round_g):
    c = wobbled_equator(33)
    out = birkhoff_shorten(round_g, c, 50)
    assert out.length(round_g) < c.length(round_g)


def test_degenerate_family_estimate(round_g):
    res = minmax_estimate(round_g, T=3, n_vertices=32, rounds=5)
    mid = birkhoff_shorten(round_g, latitude(math.pi / 2, 32), 5)
    assert res.width_estimate == mid.length(round_g)
    assert res.collapsed.tolist() == [True, False, True]


def test_minmax_equivariance(zoll03):
    a = minmax_estimate(zoll03, T=9, n_vertices=48, rounds=20)
    b = minmax_estimate(zoll03, T=9, n_vertices=48, rounds=20, phase=0.77)
    assert abs(a.width_estimate - b.width_estimate) < 1e-6


def test_refinement_ladder(round_g):
    est = [minmax_estimate(round_g, T=9, n_vertices=n, rounds=30).width_estimate
           for n in (64, 128, 256)]
    assert all(e >= 0.99 * TWO_PI for e in est)
    assert est[1] <= est[0] + 1e-12 and est[2] <= est[1] + 1e-12


def test_run_log_and_monotone(zoll03):
    res = minmax_estimate(zoll03, T=9, n_vertices=32, rounds=12)
    assert res.monotone and res.max_increase <= 0.0
    rows = res.log_rows()
    assert len(rows) == 13 and rows[0][0] == "0" and len(rows[-1]) == 4
    maxes = [float(r[1]) for r in rows]
    assert all(b <= a for a, b in zip(maxes, maxes[1:]))
    plot = res.family.plot_rows()
    assert len(plot) == 9 * 32


def test_remesh_equalizes(round_g):
    # 12 of 32 vertices inside an arc of length 0.3, the rest spread evenly
    phi = np.r_[np.linspace(0, 0.3, 12, endpoint=False), np.linspace(0.3, TWO_PI, 20, endpoint=False)]
    c = DiscreteCurve.from_chart(np.full(32, math.pi / 2), phi)
    out = remesh(round_g, c)
    seg = out.segment_lengths(round_g)
    assert np.ptp(seg) < 1e-12
    assert out.length(round_g) == pytest.approx(TWO_PI, abs=1e-12)
    assert sweepout._concentrated(round_g, c.vertices)
    assert not sweepout._concentrated(round_g, out.vertices)


def test_curve_validation_and_chart():
    with pytest.raises(ValueError):
        DiscreteCurve(np.zeros((2, 3)))
    c = latitude(1.2, 8, phase=0.1)
    th, ph = c.chart()
    assert np.allclose(th, 1.2, atol=1e-15)
    assert np.allclose(ph, 0.1 + TWO_PI * np.arange(8) / 8, atol=1e-14)
