"""End-to-end acceptance suite, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary (see
``conftest.pytest_terminal_summary``).
"""

import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings

from zollwidth import flow, widths
from zollwidth.flow import PhasePoint, phase_distance, trace_geodesic
from zollwidth.metrics import curvature_report, c0_distance, make_metric, total_curvature
from zollwidth.sweepout import minmax_estimate

from conftest import TWO_PI, zoll
from test_metrics import K_RANGE_ORACLE, odd_profiles
from test_widths import brute_partitions


@pytest.fixture
def criterion(record_property):
    def name(text):
        record_property("criterion", text)
    return name


def test_round_width_table(criterion, certified_store, round_g):
    criterion("1 round-sphere width table p <= 100")
    t0 = time.perf_counter()
    s = widths.spectrum(round_g, 100, store=certified_store)
    elapsed = time.perf_counter() - t0
    assert s.multiples.tolist() == [math.isqrt(p) for p in range(1, 101)]
    for p in range(1, 101):
        k = math.isqrt(p)
        assert abs(s[p] - TWO_PI * k) <= 1e-12 * TWO_PI * k
    assert elapsed < 0.1, elapsed


@pytest.mark.parametrize("eps", [0.1, 0.2, 0.3])
def test_zoll_certification(criterion, eps):
    criterion(f"2 Zoll certification eps={eps}, 100 starts")
    t0 = time.perf_counter()
    run = flow.certify_metric(zoll(eps), 100, seed=0)
    elapsed = time.perf_counter() - t0
    assert len(run.certificates) == 100
    assert max(c.residual for c in run.certificates) < 1e-6
    assert all(c.simple for c in run.certificates)
    assert elapsed < 60.0, elapsed


def test_negative_control(criterion, even_control, zoll03):
    criterion("3 negative control has a residual > 1e-3")
    # comparable C0 size to the eps = 0.3 Zoll profile
    size = c0_distance(even_control, zoll(0.0))
    assert 0.5 * c0_distance(zoll03, zoll(0.0)) < size < 4 * c0_distance(zoll03, zoll(0.0))
    run = flow.certify_metric(even_control, 100, seed=0)
    assert max(c.residual for c in run.certificates) > 1e-3


def test_counterexample(criterion, certified_store, round_g, zoll03):
    criterion("4 counterexample round vs eps=0.3")
    a = widths.spectrum(round_g, 100, store=certified_store)
    b = widths.spectrum(zoll03, 100, store=certified_store)
    assert np.array_equal(a.values, b.values)
    rr = curvature_report(round_g, diameter_pairs=0)
    assert abs(rr.K_max - 1) <= 1e-6 and abs(rr.K_min - 1) <= 1e-6
    assert curvature_report(zoll03, diameter_pairs=0).K_range > K_RANGE_ORACLE
    v = widths.isospectral_verdict(round_g, zoll03, 100, store=certified_store)
    assert v.counterexample


def test_path_constancy(criterion):
    criterion("5 path constancy, 32 steps eps 0 -> 0.3")
    store = widths.CertificationStore()
    spectra = []
    for eps in np.linspace(0.0, 0.3, 32):
        g = zoll(float(eps))
        run = flow.certify_metric(g, 100, seed=0)
        assert run.passed, (eps, run.failure_reason())
        store.record_run(g, run)
        spectra.append(widths.spectrum(g, 50, store=store).values)
    assert all(np.array_equal(spectra[0], s) for s in spectra[1:])


def test_continuity_battery(criterion, certified_store):
    criterion("6 continuity battery, K=1, p <= 100")
    eps = sorted(certified_store.runs)
    for a, b in itertools.product(eps, repeat=2):
        g, g2 = zoll(a), zoll(b)
        dist = c0_distance(g, g2)
        if a != b:
            assert dist > 0
        for c in widths.continuity_battery(g, g2, 100, 1.0, store=certified_store):
            assert c.lhs == 0.0
            assert c.lhs <= 1.0 * math.sqrt(c.p) * dist
            assert c.satisfied


@settings(max_examples=20, deadline=None, derandomize=True)
@given(odd_profiles())
def _gauss_bonnet(prof):
    assert abs(total_curvature(make_metric(prof)) - 4 * math.pi) < 1e-6


def test_geometric_invariants(criterion, certified_store):
    criterion("7 Gauss-Bonnet, Clairaut drift, reversibility, equivariance")
    _gauss_bonnet()
    for run in certified_store.runs.values():
        for c in run.certificates:
            assert c.clairaut_drift / c.closure_length < 1e-8
    g = zoll(0.3)
    tol = flow.DEFAULT_TOL
    rng = np.random.default_rng(0)
    for start in flow.low_discrepancy_starts(g, 8, seed=1):
        mid = trace_geodesic(g, start, 3.7, tol=tol).samples[-1][1]
        end = trace_geodesic(g, PhasePoint(mid.theta, mid.phi, -mid.p_theta, -mid.p_phi),
                             3.7, tol=tol).samples[-1][1]
        assert phase_distance(g, start, PhasePoint(end.theta, end.phi,
                                                   -end.p_theta, -end.p_phi)) < 10 * tol
        alpha = float(rng.uniform(-math.pi, math.pi))
        shifted = PhasePoint(start.theta, start.phi + alpha, start.p_theta, start.p_phi)
        a = trace_geodesic(g, start, 2.5)
        b = trace_geodesic(g, shifted, 2.5)
        rot = np.array([[math.cos(alpha), -math.sin(alpha), 0.0],
                        [math.sin(alpha), math.cos(alpha), 0.0], [0.0, 0.0, 1.0]])
        assert np.linalg.norm(a.xyz[-1] @ rot.T - b.xyz[-1]) < 1e-9


@pytest.mark.parametrize("eps", [0.0, 0.3])
def test_minmax_cross_check(criterion, certified_store, eps):
    criterion(f"8 min-max cross-check eps={eps} (T=65, n=256, rounds=200)")
    g = zoll(eps)
    assert certified_store.is_certified(g)
    t0 = time.perf_counter()
    res = minmax_estimate(g, T=65, n_vertices=256, rounds=200)
    elapsed = time.perf_counter() - t0
    assert abs(res.width_estimate / TWO_PI - 1) < 0.02
    assert res.monotone and res.max_increase <= 0.0
    maxes = [float(r[1]) for r in res.log_rows()]
    assert all(b <= a for a, b in zip(maxes, maxes[1:]))
    assert elapsed < 300.0, elapsed


def test_partition_oracle(criterion):
    criterion("9 partition oracle n <= 12")
    for n in range(1, 13):
        got = widths.geodesic_sum_decompose(TWO_PI * n)
        assert {d.multiplicities for d in got} == brute_partitions(n)
        assert len(got) == len(brute_partitions(n))
