"""Discrete 1-sweepouts of the sphere and Birkhoff curve shortening.

Curves are closed polygons whose vertices sit on the embedded unit sphere.
A segment is measured as the metric length of the round great arc joining its
endpoints (Gauss-Legendre quadrature along the arc).  For the short segments
used here this is within a relative ``O(segment**2)`` of the true geodesic
distance, and it makes the length functional cheap enough to evaluate for
whole families at once.

Shortening replaces each vertex by the geodesic midpoint of its two
neighbours, alternately on the even and the odd vertices, so a pass moves
vertices whose segments do not overlap.  A move is kept only if it lowers the
length of the two segments it touches, which makes the descent monotone by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CollapseDetected
from .flow import _rhs
from .metrics import MetricOfRevolution, conformal_bounds

TWO_PI = 2.0 * math.pi
COLLAPSE_TOL = 1e-3
BALL_RADIUS = 0.2
BALL_FRACTION = 0.25
CONCENTRATION_MIN_LENGTH = 1.6
CONCENTRATION_EVERY = 10
FIXED_POINT_TOL = 1e-4
_QUAD = np.polynomial.legendre.leggauss(6)

RUNLOG_COLUMNS = ("round", "max_length", "argmax_t", "collapse_count")


def _unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _sphere(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta) + 0.0 * phi], axis=-1)


def arc_length(metric: MetricOfRevolution, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Metric length of the round great arc from ``a`` to ``b`` (broadcasting over ``...x3``)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    cos = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    ang = np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), cos)
    # unit tangent direction of the arc at a, then x(t) = a cos t + e sin t
    e = b - cos[..., None] * a
    ne = np.linalg.norm(e, axis=-1, keepdims=True)
    e = np.divide(e, ne, out=np.zeros_like(e), where=ne > 0)
    nodes, weights = _QUAD
    t = 0.5 * ang[..., None] * (nodes + 1.0)
    # x3(t) and dx3/dt along the arc; |dx/dt| = 1
    x3 = a[..., 2:3] * np.cos(t) + e[..., 2:3] * np.sin(t)
    dx3 = -a[..., 2:3] * np.sin(t) + e[..., 2:3] * np.cos(t)
    speed = np.sqrt(1.0 + metric.psi(x3) * dx3 * dx3)
    return math.sqrt(metric.scale) * 0.5 * ang * np.sum(weights * speed, axis=-1)


def geodesic_midpoint(metric: MetricOfRevolution, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Midpoint of the short geodesic from ``a`` to ``b``, to fourth order in ``|b - a|``.

    With ``x(0) = a`` and ``x(1) = b`` Taylor expansion about ``t = 1/2`` gives
    ``x(1/2) = (a + b)/2 - x''/8``; the acceleration is the geodesic one for
    velocity ``b - a`` (including the sphere constraint force).
    """
    shape = np.shape(a)
    a = np.reshape(a, (-1, 3))
    b = np.reshape(b, (-1, 3))
    m0 = _unit(0.5 * (a + b))
    v = b - a
    v = v - np.sum(v * m0, axis=1, keepdims=True) * m0
    acc = _rhs(metric, np.concatenate([m0, v], axis=1))[:, 3:]
    return np.reshape(_unit(0.5 * (a + b) - acc / 8.0), shape)


@dataclass
class DiscreteCurve:
    """Closed polygon on the sphere; ``vertices`` is ``(n, 3)`` with unit rows.

    Vertex ``0`` follows vertex ``n - 1``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, float)
        if v.ndim != 2 or v.shape[1] != 3 or len(v) < 3:
            raise ValueError("vertices must have shape (n, 3) with n >= 3")
        self.vertices = _unit(v)

    @classmethod
    def from_chart(cls, theta, phi) -> "DiscreteCurve":
        return cls(_sphere(np.asarray(theta, float), np.asarray(phi, float)))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def chart(self) -> tuple[np.ndarray, np.ndarray]:
        """``(theta, phi)`` of the vertices; ``phi`` in ``[0, 2 pi)``."""
        x = self.vertices
        theta = np.arccos(np.clip(x[:, 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(x[:, 1], x[:, 0]), TWO_PI)
        return theta, phi

    def segment_lengths(self, metric: MetricOfRevolution) -> np.ndarray:
        return arc_length(metric, self.vertices, np.roll(self.vertices, -1, axis=0))

    def length(self, metric: MetricOfRevolution) -> float:
        return float(np.sum(self.segment_lengths(metric)))


def fixed_point_residual(metric: MetricOfRevolution, curve: DiscreteCurve) -> float:
    """Max vertex distance to its neighbours' geodesic midpoint, per mean segment length."""
    x = curve.vertices
    mid = geodesic_midpoint(metric, np.roll(x, 1, axis=0), np.roll(x, -1, axis=0))
    seg = curve.segment_lengths(metric)
    mean = float(np.mean(seg))
    if mean == 0.0:
        return 0.0
    return float(np.max(arc_length(metric, x, mid))) / mean


# family-level kernels on (C, n, 3) arrays ----------------------------------

def _vertex_classes(n: int):
    # two alternating classes; an odd count puts the last vertex on its own
    if n % 2 == 0:
        return [np.arange(0, n, 2), np.arange(1, n, 2)]
    return [np.arange(0, n - 1, 2), np.arange(1, n - 1, 2), np.array([n - 1])]


def _shorten_pass(metric, x, idx, cap):
    """One Birkhoff half-pass on vertices ``idx`` of every curve in ``x`` (in place)."""
    n = x.shape[1]
    prev = x[:, (idx - 1) % n]
    nxt = x[:, (idx + 1) % n]
    cur = x[:, idx]
    target = geodesic_midpoint(metric, prev, nxt)
    step = target - cur
    norm = np.linalg.norm(step, axis=-1, keepdims=True)
    limit = cap[:, None, None]
    scale = np.where(norm > limit, limit / np.maximum(norm, 1e-300), 1.0)
    cand = _unit(cur + scale * step)
    old = arc_length(metric, prev, cur) + arc_length(metric, cur, nxt)
    new = arc_length(metric, prev, cand) + arc_length(metric, cand, nxt)
    keep = new < old
    x[:, idx] = np.where(keep[..., None], cand, cur)


def _lengths(metric, x):
    return np.sum(arc_length(metric, x, np.roll(x, -1, axis=1)), axis=1)


def _birkhoff_round(metric, x):
    lengths = _lengths(metric, x)
    cap = lengths / x.shape[1]
    for idx in _vertex_classes(x.shape[1]):
        _shorten_pass(metric, x, idx, cap)


def _concentrated(metric, x, radius=BALL_RADIUS, fraction=BALL_FRACTION):
    """True if more than ``fraction`` of the vertices fit in a metric ball of ``radius``.

    Metric distance is at least ``sqrt(C1)`` times the round distance, so the
    round ball of radius ``radius / sqrt(C1)`` contains the metric ball and the
    count is conservative.
    """
    c1, _ = conformal_bounds(metric, n_samples=512)
    r = radius / math.sqrt(c1)
    cosr = math.cos(min(r, math.pi))
    gram = np.einsum("ij,kj->ik", x, x)
    counts = np.sum(gram >= cosr, axis=1)
    return int(np.max(counts)) > fraction * len(x)


def remesh(metric: MetricOfRevolution, curve: DiscreteCurve) -> DiscreteCurve:
    """Redistribute the vertices at equal metric arclength along the polygon."""
    x = curve.vertices
    n = len(x)
    nxt = np.roll(x, -1, axis=0)
    seg = arc_length(metric, x, nxt)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0.0:
        return DiscreteCurve(x.copy())
    targets = total * np.arange(n) / n
    k = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, n - 1)
    frac = np.where(seg[k] > 0, (targets - cum[k]) / np.where(seg[k] > 0, seg[k], 1.0), 0.0)
    # slerp in round arclength; the metric density varies little across one segment
    a, b = x[k], nxt[k]
    ang = np.arccos(np.clip(np.sum(a * b, axis=1), -1.0, 1.0))
    sin = np.sin(ang)
    safe = sin > 1e-15
    wa = np.where(safe, np.sin((1 - frac) * ang) / np.where(safe, sin, 1.0), 1 - frac)
    wb = np.where(safe, np.sin(frac * ang) / np.where(safe, sin, 1.0), frac)
    return DiscreteCurve(_unit(wa[:, None] * a + wb[:, None] * b))


def birkhoff_shorten(metric: MetricOfRevolution, curve: DiscreteCurve, rounds: int,
                     collapse_tol: float = COLLAPSE_TOL) -> DiscreteCurve:
    """Run ``rounds`` Birkhoff rounds on a single curve.

    Raises
    ------
    CollapseDetected
        The length fell below ``collapse_tol``; the collapsed curve is attached.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    x = curve.vertices.copy()[None]
    if _lengths(metric, x)[0] < collapse_tol:
        raise CollapseDetected("curve is already below the collapse tolerance",
                               DiscreteCurve(x[0]))
    for _ in range(rounds):
        _birkhoff_round(metric, x)
        if _lengths(metric, x)[0] < collapse_tol:
            raise CollapseDetected("curve shortened to a point", DiscreteCurve(x[0]))
    return DiscreteCurve(x[0])


# sweepouts -----------------------------------------------------------------

@dataclass
class SweepoutFamily:
    """Curves indexed by ``t_k = k / (T - 1)``; the end curves are point curves."""

    curves: list[DiscreteCurve]
    t: np.ndarray
    lengths: np.ndarray

    @property
    def max_length(self) -> float:
        return float(np.max(self.lengths))

    @property
    def argmax_t(self) -> float:
        return float(self.t[int(np.argmax(self.lengths))])

    @property
    def width_estimate(self) -> float:
        return self.max_length

    def plot_rows(self) -> list[list[str]]:
        """``(k, t, vertex, theta, phi)`` rows for external plotting."""
        rows = []
        for k, (tk, c) in enumerate(zip(self.t, self.curves)):
            th, ph = c.chart()
            for j, (a, b) in enumerate(zip(th, ph)):
                rows.append([str(k), f"{tk:.12g}", str(j), f"{a:.12g}", f"{b:.12g}"])
        return rows


def _latitude_array(T, n, phase):
    t = np.arange(T) / (T - 1)
    phi = TWO_PI * np.arange(n) / n + phase
    return t, _sphere(np.pi * t[:, None], phi[None, :])


def initial_sweepout(metric: MetricOfRevolution, T: int, n_vertices: int,
                     phase: float = 0.0) -> SweepoutFamily:
    """Latitude circles ``theta = t pi`` with ``n_vertices`` equally spaced in ``phi``.

    ``phase`` rotates every curve in ``phi``.
    """
    if T < 3:
        raise ValueError("T must be >= 3")
    if n_vertices < 8:
        raise ValueError("n_vertices must be >= 8")
    t, x = _latitude_array(T, n_vertices, phase)
    return SweepoutFamily([DiscreteCurve(c) for c in x], t, _lengths(metric, x))


@dataclass
class MinmaxResult:
    family: SweepoutFamily
    width_estimate: float
    log: list[tuple[int, float, float, int]]
    monotone: bool
    max_increase: float
    collapsed: np.ndarray
    remeshes: int
    fixed_point_residual: float = field(default=float("nan"))

    def log_rows(self) -> list[list[str]]:
        return [[str(r), f"{m:.12g}", f"{t:.12g}", str(c)] for r, m, t, c in self.log]


def minmax_estimate(metric: MetricOfRevolution, T: int = 65, n_vertices: int = 256,
                    rounds: int = 200, phase: float = 0.0,
                    collapse_tol: float = COLLAPSE_TOL) -> MinmaxResult:
    """Pull the latitude sweepout tight and report its longest curve.

    Every curve longer than ``collapse_tol`` takes one Birkhoff round per
    outer round; curves that fall below it are frozen as point curves.  Each
    vertex moves at most one mean segment length per round, so the family
    stays a continuous path of curves.  Curves at least
    ``CONCENTRATION_MIN_LENGTH`` long are remeshed by arclength when more
    than a quarter of their vertices crowd into a ball of radius 0.2; a
    remesh is kept only if it does not lengthen the curve.

    The returned ``width_estimate`` is the final ``max_length``, an estimate
    of the first width from above, not a certified bound.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    family = initial_sweepout(metric, T, n_vertices, phase)
    x = np.stack([c.vertices for c in family.curves])
    lengths = _lengths(metric, x)
    collapsed = lengths < collapse_tol
    log = [(0, float(lengths.max()), float(family.t[np.argmax(lengths)]), int(collapsed.sum()))]
    monotone, worst, remeshes = True, 0.0, 0
    for r in range(1, rounds + 1):
        live = np.flatnonzero(~collapsed)
        if live.size == 0:
            break
        xl = x[live]
        _birkhoff_round(metric, xl)
        new = _lengths(metric, xl)
        if r % CONCENTRATION_EVERY == 0:
            for j in np.flatnonzero(new >= CONCENTRATION_MIN_LENGTH):
                if _concentrated(metric, xl[j]):
                    cand = remesh(metric, DiscreteCurve(xl[j])).vertices
                    lc = _lengths(metric, cand[None])[0]
                    if lc <= new[j]:
                        xl[j], new[j] = cand, lc
                        remeshes += 1
        inc = float(np.max(new - lengths[live]))
        worst = max(worst, inc)
        if inc > 0.0:
            monotone = False
        x[live] = xl
        lengths[live] = new
        collapsed |= lengths < collapse_tol
        k = int(np.argmax(lengths))
        log.append((r, float(lengths[k]), float(family.t[k]), int(collapsed.sum())))
    curves = [DiscreteCurve(c) for c in x]
    final = SweepoutFamily(curves, family.t, lengths)
    k = int(np.argmax(lengths))
    return MinmaxResult(final, final.max_length, log, monotone, worst, collapsed, remeshes,
                        fixed_point_residual(metric, curves[k]))
