"""Width spectra: exact Zoll values, geodesic-sum representations and comparisons.

On the connected component of the round metric in the space of Zoll metrics
every p-width equals ``2 pi floor(sqrt(p))``.  The exact path here is integer
arithmetic gated on a stored closure certification; the only floating-point
operation is the final multiplication by ``2 pi``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import NotCertifiedZoll, NotMultipleOf2Pi, PartitionCapExceeded
from .metrics import (MetricOfRevolution, c0_distance, conformal_bounds,
                      curvature_report)

TWO_PI = 2.0 * math.pi
MULTIPLE_TOL = 1e-9
PARTITION_CAP = 12
GEOMETRY_TOL = 1e-6

EXACT = "exact-zoll"
GEODESIC_SUM = "geodesic-sum"
MINMAX = "minmax-estimate"
MODES = (EXACT, MINMAX)

SPECTRUM_COLUMNS = ("p", "omega_p", "omega_p/2pi", "provenance")


def zoll_width(p: int) -> float:
    """``2 pi floor(sqrt(p))`` with the floor taken by exact integer square root."""
    p = int(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    return TWO_PI * math.isqrt(p)


def isqrt_array(p: np.ndarray) -> np.ndarray:
    """Vectorized exact ``floor(sqrt(p))`` for nonnegative int64 input.

    The float estimate is off by at most one for ``p < 2**52``; the integer
    correction makes the result exact.
    """
    p = np.asarray(p, dtype=np.int64)
    k = np.floor(np.sqrt(p.astype(np.float64))).astype(np.int64)
    k -= (k * k > p)
    k += ((k + 1) * (k + 1) <= p)
    return k


# certification store -------------------------------------------------------

def metric_key(metric: MetricOfRevolution) -> str:
    """Content address of a metric: sha256 of its canonical description."""
    text = json.dumps(metric.describe(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


class CertificationStore:
    """Certification artifacts keyed by metric hash.

    With ``root`` set, each artifact is a JSON file ``<key>.json`` under it;
    otherwise artifacts live in memory.  Writing an existing key replaces it.
    """

    def __init__(self, root: str | os.PathLike | None = None):
        self.root = Path(root) if root is not None else None
        self._mem: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def path(self, metric: MetricOfRevolution) -> Path | None:
        return None if self.root is None else self.root / f"{metric_key(metric)}.json"

    def put(self, metric: MetricOfRevolution, record: dict) -> str:
        key = metric_key(metric)
        record = {"key": key, "metric": metric.describe(), **record}
        with self._lock:
            if self.root is None:
                self._mem[key] = record
            else:
                tmp = self.root / f".{key}.tmp"
                tmp.write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")
                os.replace(tmp, self.root / f"{key}.json")
        return key

    def get(self, metric: MetricOfRevolution) -> dict | None:
        key = metric_key(metric)
        if self.root is None:
            return self._mem.get(key)
        f = self.root / f"{key}.json"
        if not f.exists():
            return None
        return json.loads(f.read_text())

    def is_certified(self, metric: MetricOfRevolution) -> bool:
        rec = self.get(metric)
        return bool(rec and rec.get("passed"))

    def record_run(self, metric: MetricOfRevolution, run, seed: int = 0) -> str:
        """Store the outcome of a :class:`~zollwidth.flow.CertificationRun`."""
        worst = run.worst
        return self.put(metric, {
            "passed": run.passed,
            "n_starts": len(run.certificates),
            "n_passed": run.n_passed,
            "seed": int(seed),
            "residual_tol": run.residual_tol,
            "worst_residual": worst.residual,
            "worst_index": worst.index,
            "failure": run.failure_reason(),
        })


def require_certified(metric: MetricOfRevolution, store: CertificationStore | None):
    if store is None or not store.is_certified(metric):
        raise NotCertifiedZoll(
            f"no passing certification for metric {metric_key(metric)[:12]}; "
            "run the closure certification first")


# spectra -------------------------------------------------------------------

@dataclass
class WidthSpectrum:
    """``omega_p`` for ``p = 1..P`` with the source of every entry.

    ``multiples`` holds ``omega_p / 2 pi`` as integers for exact entries and
    ``-1`` otherwise.
    """

    values: np.ndarray
    provenance: list[str]
    multiples: np.ndarray

    def __len__(self):
        return len(self.values)

    def __getitem__(self, p: int) -> float:
        """Width for 1-based index ``p``."""
        return float(self.values[p - 1])

    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def same_as(self, other: "WidthSpectrum", upto: int | None = None) -> bool:
        n = min(len(self), len(other)) if upto is None else upto
        if n > len(self) or n > len(other):
            return False
        a, b = self.multiples[:n], other.multiples[:n]
        if np.all(a >= 0) and np.all(b >= 0):
            return bool(np.array_equal(a, b))
        return bool(np.array_equal(self.values[:n], other.values[:n]))

    def csv_text(self) -> str:
        """CSV with columns ``p, omega_p, omega_p/2pi, provenance``.

        Exact entries come in runs of equal value, so each run is written with
        a single formatted suffix; this keeps ``P = 10**6`` well under a second.
        """
        out = [",".join(SPECTRUM_COLUMNS) + "\n"]
        n = len(self.values)
        p = 1
        while p <= n:
            k = int(self.multiples[p - 1])
            if k >= 0 and self.provenance[p - 1] == EXACT:
                end = min(n, (k + 1) * (k + 1) - 1)
                suffix = f",{self.values[p - 1]:.12g},{k},{EXACT}\n"
                out.append(suffix.join(map(str, range(p, end + 1))) + suffix)
                p = end + 1
            else:
                v = self.values[p - 1]
                out.append(f"{p},{v:.12g},{v / TWO_PI:.12g},{self.provenance[p - 1]}\n")
                p += 1
        return "".join(out)


def exact_spectrum(P: int) -> WidthSpectrum:
    if P < 1:
        raise ValueError("P must be >= 1")
    k = isqrt_array(np.arange(1, P + 1, dtype=np.int64))
    return WidthSpectrum(TWO_PI * k.astype(float), [EXACT] * P, k)


def spectrum(metric: MetricOfRevolution, P: int, mode: str = EXACT, *,
             store: CertificationStore | None = None, **minmax_kw) -> WidthSpectrum:
    """Width spectrum up to ``P``.

    Parameters
    ----------
    mode : {"exact-zoll", "minmax-estimate"}
        ``exact-zoll`` needs a passing certification for ``metric`` in
        ``store``.  ``minmax-estimate`` runs the sweepout estimator and only
        supports ``P = 1``; extra keywords go to
        :func:`zollwidth.sweepout.minmax_estimate`.

    Raises
    ------
    NotCertifiedZoll
        Exact mode without a passing certification artifact.
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    if mode == EXACT:
        require_certified(metric, store)
        return exact_spectrum(P)
    if mode == MINMAX:
        if P != 1:
            raise ValueError("minmax-estimate mode is available for p = 1 only")
        from .sweepout import minmax_estimate

        est = minmax_estimate(metric, **minmax_kw).width_estimate
        return WidthSpectrum(np.array([est]), [MINMAX], np.array([-1]))
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


# geodesic sums -------------------------------------------------------------

@dataclass(frozen=True)
class GeodesicSum:
    """``sum_j m_j L_j`` over closed geodesics with multiplicities."""

    terms: tuple[tuple[int, float], ...]

    def __post_init__(self):
        for m, length in self.terms:
            if int(m) != m or m < 1:
                raise ValueError(f"multiplicity {m} must be a positive integer")
            if not length > 0:
                raise ValueError(f"length {length} must be positive")

    @property
    def total(self) -> float:
        return math.fsum(m * length for m, length in self.terms)

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.terms)


def integer_multiple(value: float, tol: float = MULTIPLE_TOL) -> int:
    """``value / 2 pi`` as a positive integer, or :class:`NotMultipleOf2Pi`."""
    if not value > 0:
        raise ValueError("value must be positive")
    n = round(value / TWO_PI)
    if n < 1 or abs(value - TWO_PI * n) > tol * value:
        raise NotMultipleOf2Pi(f"{value!r} is not an integer multiple of 2 pi")
    return n


def _partitions(n: int, largest: int):
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def partition_count(n: int) -> int:
    """Integer partition function by the standard coin-change recurrence."""
    ways = [1] + [0] * n
    for part in range(1, n + 1):
        for total in range(part, n + 1):
            ways[total] += ways[total - part]
    return ways[n]


def count_geodesic_sums(value: float) -> int:
    """Number of Zoll geodesic-sum representations of ``value``; no cap."""
    return partition_count(integer_multiple(value))


def geodesic_sum_decompose(value: float) -> list[GeodesicSum]:
    """All ways to write ``value`` as ``sum m_j 2 pi`` up to reordering.

    Parts are listed in nonincreasing multiplicity order; the list runs in
    reverse lexicographic order starting from the single term ``(n, 2 pi)``.

    Raises
    ------
    NotMultipleOf2Pi
        ``value / 2 pi`` is not within relative ``1e-9`` of a positive integer.
    PartitionCapExceeded
        ``value / 2 pi > 12``; use :func:`count_geodesic_sums`.
    """
    n = integer_multiple(value)
    if n > PARTITION_CAP:
        raise PartitionCapExceeded(
            f"n = {n} exceeds the enumeration cap {PARTITION_CAP}; "
            f"count = {partition_count(n)}")
    return [GeodesicSum(tuple((m, TWO_PI) for m in parts)) for parts in _partitions(n, n)]


# continuity and verdicts ---------------------------------------------------

@dataclass(frozen=True)
class ContinuityCheck:
    """``|omega_p(g) - omega_p(g')| <= K sqrt(p) ||g - g'||`` for one ``p``.

    ``C1`` and ``C2`` are the sampled conformal bounds of the pair; ``K`` is
    an assumed constant, not a derived one.
    """

    p: int
    lhs: float
    rhs: float
    K_used: float
    C1: float
    C2: float

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.rhs


def _pair_bounds(g, g2):
    a1, a2 = conformal_bounds(g)
    b1, b2 = conformal_bounds(g2)
    return min(a1, b1), max(a2, b2)


def continuity_battery(g: MetricOfRevolution, g2: MetricOfRevolution, P: int,
                       K: float = 1.0, *, store: CertificationStore | None = None
                       ) -> list[ContinuityCheck]:
    """:func:`continuity_check` for every ``p <= P``, sharing one distance evaluation."""
    if not K > 0:
        raise ValueError("K must be positive")
    s1 = spectrum(g, P, store=store)
    s2 = spectrum(g2, P, store=store)
    dist = 0.0 if g == g2 else c0_distance(g, g2)
    c1, c2 = _pair_bounds(g, g2)
    lhs = np.abs(s1.values - s2.values)
    return [ContinuityCheck(p, float(lhs[p - 1]), K * math.sqrt(p) * dist, K, c1, c2)
            for p in range(1, P + 1)]


def continuity_check(g: MetricOfRevolution, g2: MetricOfRevolution, p: int,
                     K: float = 1.0, *, store: CertificationStore | None = None
                     ) -> ContinuityCheck:
    """Evaluate the width continuity bound at index ``p`` for two certified metrics."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return continuity_battery(g, g2, p, K, store=store)[-1]


@dataclass
class Verdict:
    isospectral: bool
    distinct_geometry: bool
    P: int
    first_mismatch: int | None
    curvature_a: tuple[float, float]
    curvature_b: tuple[float, float]
    area_a: float
    area_b: float
    geometry_tol: float
    notes: list[str] = field(default_factory=list)

    @property
    def counterexample(self) -> bool:
        return self.isospectral and self.distinct_geometry

    @property
    def headline(self) -> str:
        if self.counterexample:
            return "ISOSPECTRAL, NOT ISOMETRIC: counterexample reproduced"
        if self.isospectral:
            return "isospectral, geometrically indistinguishable at tolerance"
        return f"NOT ISOSPECTRAL: spectra first differ at p={self.first_mismatch}"

    def text(self) -> str:
        lines = [
            f"verdict            {self.headline}",
            f"isospectral        {str(self.isospectral).lower()}",
            f"p_max              {self.P}",
            f"first_mismatch     {self.first_mismatch if self.first_mismatch else 'none'}",
            f"distinct_geometry  {str(self.distinct_geometry).lower()}",
            f"counterexample     {str(self.counterexample).lower()}",
            f"K_range_a          [{self.curvature_a[0]:.12g}, {self.curvature_a[1]:.12g}]",
            f"K_range_b          [{self.curvature_b[0]:.12g}, {self.curvature_b[1]:.12g}]",
            f"area_a             {self.area_a:.12g}",
            f"area_b             {self.area_b:.12g}",
            f"geometry_tol       {self.geometry_tol:.3g}",
        ]
        lines += [f"note               {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def isospectral_verdict(g: MetricOfRevolution, g2: MetricOfRevolution, P: int, *,
                        store: CertificationStore | None = None,
                        geometry_tol: float = GEOMETRY_TOL) -> Verdict:
    """Compare exact spectra up to ``P`` and curvature data of two certified metrics.

    Geometry counts as distinct when the curvature ranges are disjoint or an
    endpoint or the area differs by more than ``geometry_tol``.  Curvature
    extremes are isometry invariants, so a difference rules out an isometry.
    """
    s1 = spectrum(g, P, store=store)
    s2 = spectrum(g2, P, store=store)
    diff = np.flatnonzero(s1.multiples != s2.multiples)
    first = int(diff[0]) + 1 if diff.size else None
    ra = curvature_report(g, diameter_pairs=0)
    rb = curvature_report(g2, diameter_pairs=0)
    notes = []
    disjoint = ra.K_max < rb.K_min - geometry_tol or rb.K_max < ra.K_min - geometry_tol
    if disjoint:
        notes.append("curvature ranges disjoint")
    for name, x, y in (("K_min", ra.K_min, rb.K_min), ("K_max", ra.K_max, rb.K_max),
                       ("area", ra.area, rb.area)):
        if abs(x - y) > geometry_tol:
            notes.append(f"{name} differs by {abs(x - y):.6g}")
    return Verdict(first is None, bool(notes), P, first, (ra.K_min, ra.K_max),
                   (rb.K_min, rb.K_max), ra.area, rb.area, geometry_tol, notes)
