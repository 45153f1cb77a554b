"""Geodesic flow on metrics of revolution, closure certification and shooting.

Geodesics are integrated on the embedded coordinate sphere: the state is a
position ``x`` with ``|x| = 1`` and a velocity ``v`` tangent to the sphere,
both in R^3.  The constrained Euler-Lagrange equations of
``L = 1/2 scale (|v|^2 + psi(x3) v3^2)`` on ``|x|^2 = 1`` are regular
everywhere, so meridians cross the poles without a chart switch.  After every
accepted step the state is projected back to the unit cosphere bundle.

The public surface speaks the ``(theta, phi, p_theta, p_phi)`` chart through
:class:`PhasePoint`; conversion to and from the embedded state is exact up to
rounding away from the poles.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .errors import NoConnectionFound, PoleEvaluation, StepUnderflow
from .metrics import POLE_GUARD, MetricOfRevolution, conformal_bounds

TWO_PI = 2.0 * math.pi
DEFAULT_TOL = 1e-12
MAX_STEP = 0.05
CLOSURE_WINDOW = 0.2
SIMPLICITY_EXCLUSION = 0.1
RESIDUAL_TOL = 1e-6
INTERSECTION_GAP = 1e-12
_H_MIN = 1e-12
_WINDOW_POINTS = 41

# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@dataclass(frozen=True)
class PhasePoint:
    """Point of the cotangent bundle in the ``(theta, phi)`` chart."""

    theta: float
    phi: float
    p_theta: float
    p_phi: float

    def hamiltonian(self, metric: MetricOfRevolution) -> float:
        """``1/2 g^{ij} p_i p_j``; equals 1/2 on the unit cosphere bundle."""
        return 0.5 * (self.p_theta ** 2 / float(metric.g_thetatheta(self.theta))
                      + self.p_phi ** 2 / float(metric.g_phiphi(self.theta)))


def unit_phase_point(metric: MetricOfRevolution, theta: float, phi: float,
                     direction: float) -> PhasePoint:
    """Unit covector at ``(theta, phi)`` making angle ``direction`` with ``d/dtheta``."""
    a = 1.0 + float(metric.h(math.cos(theta)))
    rs = math.sqrt(metric.scale)
    return PhasePoint(theta, phi, rs * a * math.cos(direction),
                      rs * math.sin(theta) * math.sin(direction))


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _to_ambient(metric, theta, phi, p_theta, p_phi) -> np.ndarray:
    theta, phi = np.asarray(theta, float), np.asarray(phi, float)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    x = np.stack([st * cp, st * sp, ct], axis=-1)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    a2 = (1.0 + metric.h(ct)) ** 2
    theta_dot = np.asarray(p_theta) / (metric.scale * a2)
    phi_dot = np.asarray(p_phi) / (metric.scale * st * st)
    v = theta_dot[..., None] * e_theta + (phi_dot * st)[..., None] * e_phi
    return np.concatenate([x, v], axis=-1)


def _to_phase(metric, y):
    x, v = y[..., :3], y[..., 3:]
    rho = np.hypot(x[..., 0], x[..., 1])
    theta = np.arctan2(rho, x[..., 2])
    phi = np.mod(np.arctan2(x[..., 1], x[..., 0]), TWO_PI)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    theta_dot = v[..., 0] * ct * cp + v[..., 1] * ct * sp - v[..., 2] * st
    p_theta = metric.scale * (1.0 + metric.h(ct)) ** 2 * theta_dot
    p_phi = metric.scale * (x[..., 0] * v[..., 1] - x[..., 1] * v[..., 0])
    return theta, phi, p_theta, p_phi


def _phase_to_state(metric, point: PhasePoint) -> np.ndarray:
    return _to_ambient(metric, [point.theta], [point.phi], [point.p_theta], [point.p_phi])


def _state_to_phase(metric, y) -> PhasePoint:
    t, p, pt, pp = _to_phase(metric, y)
    return PhasePoint(float(t), float(p), float(pt), float(pp))


def _check_start(point: PhasePoint):
    if not POLE_GUARD <= point.theta <= math.pi - POLE_GUARD:
        raise PoleEvaluation(f"theta={point.theta} inside pole guard band")


def _rhs(metric, y):
    x, v = y[:, :3], y[:, 3:]
    x3, v3 = x[:, 2], v[:, 2]
    psi = metric.psi(x3)
    r3 = -0.5 * metric.dpsi(x3) * v3 * v3
    c = -_dot(v, v)
    w = 1.0 - x3 * x3
    a3 = (r3 * w + x3 * c) / (1.0 + psi * w)
    lam = c - x3 * r3 + psi * x3 * a3
    acc = lam[:, None] * x
    acc[:, 2] += r3 - psi * a3
    return np.concatenate([v, acc], axis=1)


def _project(metric, y):
    x = y[:, :3] / np.linalg.norm(y[:, :3], axis=1)[:, None]
    v = y[:, 3:] - _dot(y[:, 3:], x)[:, None] * x
    speed2 = metric.scale * (_dot(v, v) + metric.psi(x[:, 2]) * v[:, 2] ** 2)
    return np.concatenate([x, v / np.sqrt(speed2)[:, None]], axis=1)


def _dp_step(metric, y, h):
    h = h[:, None]
    k = [_rhs(metric, y)]
    for row in _A[1:]:
        inc = sum(a * ki for a, ki in zip(row, k) if a)
        k.append(_rhs(metric, y + h * inc))
    y5 = y + h * sum(b * ki for b, ki in zip(_A[6], k[:6]) if b)
    # k[6] is evaluated at y5 (first-same-as-last stage)
    err = h * sum(e * ki for e, ki in zip(_E, k) if e)
    return y5, err


@dataclass
class _Run:
    y: np.ndarray
    y0: np.ndarray
    checkpoints: np.ndarray | None
    s_rec: list | None
    y_rec: list | None
    steps: np.ndarray


def _integrate(metric, y0, length, *, tol=DEFAULT_TOL, max_step=MAX_STEP,
               checkpoints=None, record=False) -> _Run:
    """Adaptive DP5(4) over arclength ``length`` for a batch of states.

    Every trajectory has its own step size, so results do not depend on how
    the batch is formed.  ``checkpoints`` (increasing, in ``(0, length]``) are
    landed on exactly and their states returned.
    """
    y = _project(metric, np.atleast_2d(np.asarray(y0, float)).copy())
    start = y.copy()
    n = len(y)
    L = np.broadcast_to(np.asarray(length, float), (n,)).copy()
    s = np.zeros(n)
    h = np.full(n, min(max_step, 0.01))
    steps = np.zeros(n, dtype=int)
    ck = None if checkpoints is None else np.asarray(checkpoints, float)
    m = 0 if ck is None else len(ck)
    ptr = np.zeros(n, dtype=int)
    ck_states = None if ck is None else np.empty((n, m, 6))
    s_rec = [[0.0] for _ in range(n)] if record else None
    y_rec = [[y[i].copy()] for i in range(n)] if record else None

    while True:
        idx = np.flatnonzero(s < L)
        if idx.size == 0:
            break
        target = L[idx].copy()
        if m:
            has = ptr[idx] < m
            nxt = ck[np.minimum(ptr[idx], m - 1)]
            target = np.where(has, np.minimum(target, nxt), target)
        room = target - s[idx]
        hh = np.minimum(h[idx], room)
        landing = hh >= room
        y_new, err = _dp_step(metric, y[idx], hh)
        scale = tol * (1.0 + np.maximum(np.abs(y[idx]), np.abs(y_new)))
        en = np.max(np.abs(err) / scale, axis=1)
        ok = en <= 1.0
        with np.errstate(divide="ignore"):
            fac = np.where(en > 0, np.clip(0.9 * en ** -0.2, 0.2, 5.0), 5.0)

        acc = idx[ok]
        if acc.size:
            y[acc] = _project(metric, y_new[ok])
            s_new = s[acc] + hh[ok]
            land = landing[ok]
            s_new[land] = target[ok][land]
            s[acc] = s_new
            steps[acc] += 1
            grown = hh[ok] * fac[ok]
            h[acc] = np.minimum(np.where(land, np.maximum(h[acc], grown), grown), max_step)
            if m:
                for j in acc[land]:
                    while ptr[j] < m and ck[ptr[j]] <= s[j]:
                        ck_states[j, ptr[j]] = y[j]
                        ptr[j] += 1
            if record:
                for j in acc:
                    s_rec[j].append(s[j])
                    y_rec[j].append(y[j].copy())
        rej = idx[~ok]
        if rej.size:
            h[rej] = hh[~ok] * fac[~ok]
            if np.any(h[rej] < _H_MIN):
                raise StepUnderflow(f"step size fell below {_H_MIN:g} at s={s[rej].min():.6g}")

    return _Run(y, start, ck_states, s_rec, y_rec, steps)


def _advance(metric, y, ds, max_sub=0.01):
    """Fixed-substep DP5 advance by per-trajectory (possibly negative) ``ds``."""
    ds = np.asarray(ds, float)
    n_sub = max(1, int(math.ceil(float(np.max(np.abs(ds))) / max_sub)))
    hh = ds / n_sub
    for _ in range(n_sub):
        y, _ = _dp_step(metric, y, hh)
        y = _project(metric, y)
    return y


def integrate_fixed_step(metric, start: PhasePoint, length: float, n_steps: int,
                         project: bool = True) -> PhasePoint:
    """Fixed-step fifth-order integration; used to measure the convergence order.

    With ``project = False`` the bare Runge-Kutta step is used, which shows
    the nominal order 5.  The projection onto the unit cosphere bundle raises
    the observed closure order to about 6 on metrics of revolution.
    """
    y = _phase_to_state(metric, start)
    if project:
        y = _project(metric, y)
    h = np.full(1, length / n_steps)
    for _ in range(n_steps):
        y, _ = _dp_step(metric, y, h)
        if project:
            y = _project(metric, y)
    return _state_to_phase(metric, y[0])


def _frame_momentum(metric, y):
    # covector raised with the round metric, as a vector in R^3
    x, v = y[..., :3], y[..., 3:]
    x3, v3 = x[..., 2], v[..., 2]
    normal3 = np.zeros_like(x)
    normal3[..., 2] = 1.0
    grad_x3 = normal3 - x3[..., None] * x
    return metric.scale * (v + (metric.psi(x3) * v3)[..., None] * grad_x3)


def _phase_distance(metric, y, y0):
    """Chordal position distance plus round-frame momentum distance."""
    dx = np.linalg.norm(y[..., :3] - y0[..., :3], axis=-1)
    dp = np.linalg.norm(_frame_momentum(metric, y) - _frame_momentum(metric, y0), axis=-1)
    return dx + dp


def phase_distance(metric: MetricOfRevolution, a: PhasePoint, b: PhasePoint) -> float:
    return float(_phase_distance(metric, _phase_to_state(metric, a)[0],
                                 _phase_to_state(metric, b)[0]))


def geodesic_step(metric: MetricOfRevolution, state: PhasePoint, ds: float,
                  tol: float = DEFAULT_TOL) -> PhasePoint:
    """Advance ``state`` by arclength ``ds`` with adaptive substeps.

    The momentum is renormalized to the unit cosphere after every substep;
    on a metric of revolution ``p_phi`` is conserved to integrator accuracy.
    """
    if not ds > 0:
        raise ValueError("ds must be positive")
    _check_start(state)
    run = _integrate(metric, _phase_to_state(metric, state), ds, tol=tol)
    return _state_to_phase(metric, run.y[0])


@dataclass
class GeodesicTrace:
    """An integrated geodesic sampled at the accepted steps."""

    s: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    p_theta: np.ndarray
    p_phi: np.ndarray
    xyz: np.ndarray = field(repr=False)
    velocity: np.ndarray = field(repr=False)
    total_length: float = 0.0
    clairaut_drift: float = 0.0

    @property
    def samples(self) -> list[tuple[float, PhasePoint]]:
        return [(float(s), PhasePoint(float(t), float(p), float(a), float(b)))
                for s, t, p, a, b in zip(self.s, self.theta, self.phi,
                                         self.p_theta, self.p_phi)]

    def energy_error(self, metric: MetricOfRevolution) -> np.ndarray:
        """``|g(v, v) - 1|`` at every sample."""
        v = self.velocity
        g = metric.scale * (_dot(v, v) + metric.psi(self.xyz[:, 2]) * v[:, 2] ** 2)
        return np.abs(g - 1.0)


def _trace_from_record(metric, s, ys) -> GeodesicTrace:
    s = np.asarray(s)
    ys = np.asarray(ys)
    theta, phi, p_theta, p_phi = _to_phase(metric, ys)
    drift = float(np.max(np.abs(p_phi - p_phi[0])))
    return GeodesicTrace(s, theta, phi, p_theta, p_phi, ys[:, :3].copy(),
                         ys[:, 3:].copy(), float(s[-1]), drift)


def trace_geodesic(metric: MetricOfRevolution, start: PhasePoint, length: float,
                   tol: float = DEFAULT_TOL, max_step: float = MAX_STEP) -> GeodesicTrace:
    """Integrate from ``start`` for arclength ``length`` and keep every step."""
    if not length > 0:
        raise ValueError("length must be positive")
    _check_start(start)
    run = _integrate(metric, _phase_to_state(metric, start), length, tol=tol,
                     max_step=max_step, record=True)
    return _trace_from_record(metric, run.s_rec[0], run.y_rec[0])


def is_simple(xyz: np.ndarray, s: np.ndarray, exclusion: float = SIMPLICITY_EXCLUSION,
              closed: bool = True, gap: float = INTERSECTION_GAP) -> bool:
    """Segment-pair crossing sweep of a polyline on the unit sphere.

    Segment pairs whose midpoints are closer than ``exclusion`` in arclength
    (cyclically, if ``closed``) are skipped.  Only proper crossings count: each
    endpoint must sit at least ``gap`` off the other segment's great-circle
    plane, so coplanar pieces of one great circle never register.
    """
    a, b = xyz[:-1], xyz[1:]
    mid = 0.5 * (s[:-1] + s[1:])
    n = np.cross(a, b)
    side_a = n @ a.T
    side_b = n @ b.T
    straddle = (side_a * side_b < 0.0) & (np.abs(side_a) > gap) & (np.abs(side_b) > gap)
    same_half = (a + b) @ (a + b).T > 0.0
    sep = np.abs(mid[:, None] - mid[None, :])
    if closed:
        sep = np.minimum(sep, (s[-1] - s[0]) - sep)
    hit = straddle & straddle.T & same_half & (sep >= exclusion)
    return not bool(np.any(np.triu(hit, 1)))


@dataclass(frozen=True)
class ClosureCertificate:
    """Return residual of a geodesic after arclength 2 pi.

    ``residual`` is the phase-space distance at exactly 2 pi; ``closure_length``
    is the length in ``[2 pi - w, 2 pi + w]`` minimizing that distance and
    ``min_residual`` the distance there.
    """

    initial: PhasePoint
    closure_length: float
    residual: float
    simple: bool
    min_residual: float = float("nan")
    clairaut_drift: float = float("nan")
    direction: float = float("nan")
    index: int = 0
    trace: GeodesicTrace | None = field(default=None, repr=False, compare=False)

    def passed(self, tol: float = RESIDUAL_TOL) -> bool:
        return self.residual < tol and self.simple


def _closest_approach(metric, y, target, iters=8, clamp=0.2):
    """Newton on ``(x(s) - target) . v(s) = 0``; returns states and arclength shifts."""
    shift = np.zeros(len(y))
    for _ in range(iters):
        x, v = y[:, :3], y[:, 3:]
        acc = _rhs(metric, y)[:, 3:]
        d = x - target
        f = _dot(d, v)
        fp = np.maximum(_dot(v, v) + _dot(d, acc), 0.5 * _dot(v, v))
        ds = np.clip(-f / fp, -clamp, clamp)
        if np.max(np.abs(ds)) < 1e-15:
            break
        y = _advance(metric, y, ds)
        shift += ds
    return y, shift


def _certify_batch(metric, starts, *, tol, window, max_step, keep_traces):
    y0 = np.concatenate([_phase_to_state(metric, p) for p in starts])
    grid = TWO_PI + window * np.linspace(-1.0, 1.0, _WINDOW_POINTS)
    mid = _WINDOW_POINTS // 2
    grid[mid] = TWO_PI
    run = _integrate(metric, y0, grid[-1], tol=tol, max_step=max_step,
                     checkpoints=grid, record=True)
    y0p = run.y0
    resid = _phase_distance(metric, run.checkpoints, y0p[:, None, :])
    k = np.argmin(resid, axis=1)
    rows = np.arange(len(y0p))
    yk = run.checkpoints[rows, k]
    y_ref, shift = _closest_approach(metric, yk, y0p[:, :3])
    s_ref = grid[k] + shift
    r_ref = _phase_distance(metric, y_ref, y0p)
    use_grid = (r_ref > resid[rows, k]) | (np.abs(s_ref - TWO_PI) > window)
    closure = np.where(use_grid, grid[k], s_ref)
    min_res = np.where(use_grid, resid[rows, k], r_ref)

    out = []
    for i, start in enumerate(starts):
        s = np.asarray(run.s_rec[i])
        ys = np.asarray(run.y_rec[i])
        keep = s < closure[i]
        xyz = np.vstack([ys[keep, :3], y_ref[i, :3] if not use_grid[i] else yk[i, :3]])
        ss = np.append(s[keep], closure[i])
        trace = _trace_from_record(metric, s, ys)
        st = start
        direction = math.atan2(st.p_phi / math.sin(st.theta),
                               st.p_theta / (1.0 + float(metric.h(math.cos(st.theta)))))
        out.append(ClosureCertificate(
            initial=start,
            closure_length=float(closure[i]),
            residual=float(resid[i, mid]),
            simple=is_simple(xyz, ss),
            min_residual=float(min_res[i]),
            clairaut_drift=trace.clairaut_drift,
            direction=direction % TWO_PI,
            trace=trace if keep_traces else None,
        ))
    return out


def closure_certificate(metric: MetricOfRevolution, start: PhasePoint,
                        tol: float = DEFAULT_TOL, window: float = CLOSURE_WINDOW,
                        max_step: float = MAX_STEP, keep_trace: bool = False) -> ClosureCertificate:
    """Integrate to 2 pi, measure the return residual and test simplicity."""
    _check_start(start)
    return _certify_batch(metric, [start], tol=tol, window=window, max_step=max_step,
                          keep_traces=keep_trace)[0]


def low_discrepancy_starts(metric: MetricOfRevolution, n: int, seed: int = 0) -> list[PhasePoint]:
    """Scrambled Halton points on ``(cos theta0, phi0, direction)``, as unit covectors."""
    r = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
    theta = np.clip(np.arccos(1.0 - 2.0 * r[:, 0]), POLE_GUARD, math.pi - POLE_GUARD)
    return [unit_phase_point(metric, float(t), TWO_PI * float(p), TWO_PI * float(d))
            for t, p, d in zip(theta, r[:, 1], r[:, 2])]


def length_spectrum_sample(metric: MetricOfRevolution, n_starts: int, *, seed: int = 0,
                           starts: Sequence[PhasePoint] | None = None,
                           tol: float = DEFAULT_TOL, window: float = CLOSURE_WINDOW,
                           max_step: float = MAX_STEP, workers: int = 1,
                           keep_traces: bool = False) -> list[ClosureCertificate]:
    """Closure certificates for ``n_starts`` deterministic initial conditions.

    Results are ordered by start index whatever the worker count.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    if starts is None:
        starts = low_discrepancy_starts(metric, n_starts, seed)
    starts = list(starts)[:n_starts]
    for p in starts:
        _check_start(p)
    workers = max(1, min(workers, len(starts)))
    chunks = [starts[i::workers] for i in range(workers)]
    kw = dict(tol=tol, window=window, max_step=max_step, keep_traces=keep_traces)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: _certify_batch(metric, c, **kw), chunks))
    certs = [None] * len(starts)
    for w, part in enumerate(parts):
        for j, cert in enumerate(part):
            i = w + j * workers
            certs[i] = ClosureCertificate(**{**cert.__dict__, "index": i})
    return certs


@dataclass
class CertificationRun:
    certificates: list[ClosureCertificate]
    residual_tol: float

    @property
    def passed(self) -> bool:
        return all(c.passed(self.residual_tol) for c in self.certificates)

    @property
    def worst(self) -> ClosureCertificate:
        return max(self.certificates, key=lambda c: c.residual)

    @property
    def n_passed(self) -> int:
        return sum(c.passed(self.residual_tol) for c in self.certificates)

    def failure_reason(self) -> str | None:
        if self.passed:
            return None
        bad = [c for c in self.certificates if not c.passed(self.residual_tol)]
        w = max(bad, key=lambda c: c.residual)
        nonsimple = sum(not c.simple for c in bad)
        return (f"worst_residual={w.residual:.12g} start_index={w.index} "
                f"failing={len(bad)} nonsimple={nonsimple}")


def certify_metric(metric: MetricOfRevolution, n_starts: int = 100, *, seed: int = 0,
                   residual_tol: float = RESIDUAL_TOL, tol: float = DEFAULT_TOL,
                   workers: int = 1, keep_traces: bool = False) -> CertificationRun:
    certs = length_spectrum_sample(metric, n_starts, seed=seed, tol=tol, workers=workers,
                                   keep_traces=keep_traces)
    return CertificationRun(certs, residual_tol)


CERTIFICATE_COLUMNS = ("start_index", "theta0", "phi0", "direction", "closure_length",
                       "residual", "simple", "clairaut_drift")


def certificate_rows(certs: Sequence[ClosureCertificate]) -> list[list[str]]:
    return [[str(c.index), f"{c.initial.theta:.12g}", f"{c.initial.phi:.12g}",
             f"{c.direction:.12g}", f"{c.closure_length:.12g}", f"{c.residual:.12g}",
             str(c.simple).lower(), f"{c.clairaut_drift:.12g}"] for c in certs]


def plot_rows(traces: Sequence[GeodesicTrace]) -> list[list[str]]:
    """``(trace, s, theta, phi)`` rows for external plotting."""
    rows = []
    for k, tr in enumerate(traces):
        for s, t, p in zip(tr.s, tr.theta, tr.phi):
            rows.append([str(k), f"{s:.12g}", f"{t:.12g}", f"{p:.12g}"])
    return rows


# shooting ------------------------------------------------------------------

def _point(theta, phi):
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def _fan_basis(metric, xa):
    ref = np.array([0.0, 0.0, 1.0]) if abs(xa[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    t1 = ref - ref.dot(xa) * xa
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(xa, t1)
    psi = float(metric.psi(xa[2]))
    g = lambda p, q: metric.scale * (p.dot(q) + psi * p[2] * q[2])
    w1 = t1 / math.sqrt(g(t1, t1))
    w2 = t2 - g(t2, w1) * w1
    w2 /= math.sqrt(g(w2, w2))
    return w1, w2


def _miss(metric, y, xb):
    x, v = y[:, :3], y[:, 3:]
    off = xb - x
    sigma = _dot(off, np.cross(x, v)) / np.linalg.norm(v, axis=1)
    return sigma, np.linalg.norm(off, axis=1)


def shoot_distance(metric: MetricOfRevolution, a: tuple[float, float], b: tuple[float, float],
                   n_fan: int = 64, max_fan: int = 256, tol: float = 1e-11,
                   hit_tol: float = 1e-7) -> float:
    """Geodesic distance between chart points ``a`` and ``b`` by shooting from ``a``.

    A fan of directions is integrated up to ``sqrt(C2) * d_round(a, b)``, an
    upper bound for the distance.  Closest approaches to ``b`` that change
    side between neighbouring fan directions are refined with Brent's method
    on the direction angle; the shortest connecting length is returned.
    Poles are accepted as endpoints.
    """
    xa, xb = _point(*a), _point(*b)
    d0 = math.acos(max(-1.0, min(1.0, float(xa.dot(xb)))))
    if d0 < 1e-12:
        return 0.0
    _, c2 = conformal_bounds(metric, n_samples=512)
    s_max = math.sqrt(c2) * d0 + 0.2
    w1, w2 = _fan_basis(metric, xa)

    def state(alpha):
        v = math.cos(alpha) * w1 + math.sin(alpha) * w2
        return np.concatenate([xa, v])[None, :]

    def refine(alpha, s_guess):
        y = _integrate(metric, state(alpha), s_guess, tol=tol).y
        y, shift = _closest_approach(metric, y, xb)
        sigma, dist = _miss(metric, y, xb)
        return s_guess + float(shift[0]), float(sigma[0]), float(dist[0])

    while n_fan <= max_fan:
        alphas = TWO_PI * np.arange(n_fan) / n_fan
        y0 = np.concatenate([state(al) for al in alphas])
        run = _integrate(metric, y0, s_max, tol=tol, record=True)
        cands = []
        for i in range(n_fan):
            s = np.asarray(run.s_rec[i])
            ys = np.asarray(run.y_rec[i])
            d = np.linalg.norm(ys[:, :3] - xb, axis=1)
            interior = np.flatnonzero((d[1:-1] <= d[:-2]) & (d[1:-1] <= d[2:])) + 1
            for k in interior:
                if d[k] > 0.5:
                    continue
                y_ref, shift = _closest_approach(metric, ys[k:k + 1], xb)
                sig, dist = _miss(metric, y_ref, xb)
                cands.append((i, s[k] + float(shift[0]), float(sig[0]), float(dist[0])))
        hits = [c[1] for c in cands if c[3] < hit_tol and c[1] > 0]
        best = min(hits) if hits else math.inf
        by_dir = {}
        for c in cands:
            by_dir.setdefault(c[0], []).append(c)
        brackets = []
        for i in range(n_fan):
            j = (i + 1) % n_fan
            for ci in by_dir.get(i, []):
                for cj in by_dir.get(j, []):
                    # an endpoint that already hits b needs no root search
                    if min(ci[3], cj[3]) < hit_tol:
                        continue
                    if abs(ci[1] - cj[1]) < 0.5 and ci[2] * cj[2] < 0:
                        brackets.append((min(ci[1], cj[1]), i, ci, cj))
        for s_lo, i, ci, cj in sorted(brackets):
            if s_lo > best + 0.1:
                break
            a0 = alphas[i]
            a1 = a0 + TWO_PI / n_fan
            s_mid = 0.5 * (ci[1] + cj[1])
            try:
                root = brentq(lambda al: refine(al, s_mid)[1], a0, a1, xtol=1e-14,
                              maxiter=60)
            except ValueError:
                continue
            length, _, dist = refine(root, s_mid)
            if dist < hit_tol and 0 < length:
                best = min(best, length)
        if math.isfinite(best):
            return best
        n_fan *= 2
    raise NoConnectionFound(f"no geodesic from {a} to {b} within length {s_max:.6g}")


def diameter_estimate(metric: MetricOfRevolution, n_pairs: int = 4) -> float:
    """Max shooting distance over meridian-antipodal pairs ``(t, 0)``, ``(pi - t, pi)``.

    By rotational symmetry the candidates for the diameter are taken on a
    single meridian plane; ``t`` runs over ``[0, pi/2]``.  An estimate, not a
    certificate.
    """
    best = 0.0
    for t in np.linspace(0.0, math.pi / 2, n_pairs):
        best = max(best, shoot_distance(metric, (float(t), 0.0), (math.pi - float(t), math.pi)))
    return best
