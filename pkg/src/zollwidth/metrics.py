"""Rotationally symmetric metrics on the 2-sphere built from a profile function.

A profile ``h`` on ``u = cos(theta)`` in ``[-1, 1]`` defines

    g = scale * ((1 + h(cos theta))**2 dtheta**2 + sin(theta)**2 dphi**2).

For odd ``h`` with ``h(+-1) = 0`` and ``|h| < 1`` every geodesic of ``g`` (at
``scale = 1``) is closed with length ``2*pi``; these are the classical Zoll
surfaces of revolution.  Even profiles are accepted only through
:func:`make_control_metric`, which builds smooth non-Zoll controls.

Internally the metric is also written on the embedded coordinate sphere
``x = (sin t cos p, sin t sin p, cos t)`` as

    g = scale * (|dx|**2 + psi(x3) dx3**2),   psi(u) = h(u) (2 + h(u)) / (1 - u**2),

which has no coordinate singularity at the poles (``psi`` is a polynomial
because ``h`` vanishes at ``u = +-1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from .errors import PoleEvaluation, ProfileInvalid

POLE_GUARD = 1e-6
C0_SAMPLES = 4096
_SUM_TOL = 1e-12
_SUP_SAMPLES = 4097
_GL_NODES = 512


@dataclass(frozen=True)
class _MonomialProfile:
    coeffs: tuple = ()

    offset: ClassVar[int] = 1
    parity: ClassVar[str] = "odd"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs) or (0.0,)
        object.__setattr__(self, "coeffs", coeffs)

    def power_coeffs(self) -> np.ndarray:
        """Coefficients of ``h`` in the ascending power basis ``1, u, u**2, ...``."""
        out = np.zeros(self.offset + 2 * len(self.coeffs) - 1)
        out[self.offset::2] = self.coeffs
        return out

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        # written as u**offset * q(u**2) so parity holds bit for bit
        q = P.polyval(u * u, np.asarray(self.coeffs))
        return u * q if self.offset else q

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        k = np.arange(len(self.coeffs))
        powers = 2 * k + self.offset
        dq = np.asarray(self.coeffs) * powers
        # d/du of c_k u^(2k+offset) = c_k (2k+offset) u^(2k+offset-1)
        if self.offset:
            return P.polyval(u * u, dq)
        return u * P.polyval(u * u, dq[1:]) if len(dq) > 1 else np.zeros_like(u)

    def scaled(self, factor: float):
        return type(self)(tuple(factor * c for c in self.coeffs))

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)


@dataclass(frozen=True)
class OddProfile(_MonomialProfile):
    """Odd profile ``h(u) = sum_k coeffs[k] * u**(2k+1)``."""

    offset: ClassVar[int] = 1
    parity: ClassVar[str] = "odd"

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "OddProfile":
        """The one-parameter family ``h(u) = epsilon * (u - u**3)``."""
        return cls((epsilon, -epsilon))


@dataclass(frozen=True)
class EvenProfile(_MonomialProfile):
    """Even profile ``h(u) = sum_k coeffs[k] * u**(2k)``; used for non-Zoll controls."""

    offset: ClassVar[int] = 0
    parity: ClassVar[str] = "even"

    @classmethod
    def bump(cls, epsilon: float) -> "EvenProfile":
        """``h(u) = epsilon * (u**2 - u**4)``, vanishing at the poles and the equator."""
        return cls((0.0, epsilon, -epsilon))


Profile = Union[OddProfile, EvenProfile]


def profile_sup(profile: Profile) -> float:
    """``sup |h|`` on ``[-1, 1]`` from dense samples plus the critical points of ``h``."""
    u = np.linspace(-1.0, 1.0, _SUP_SAMPLES)
    best = float(np.max(np.abs(profile(u))))
    dh = P.polyder(profile.power_coeffs())
    big = np.max(np.abs(dh)) if dh.size else 0.0
    # negligible leading terms only push companion-matrix roots to infinity
    while dh.size and abs(dh[-1]) <= 1e-14 * big:
        dh = dh[:-1]
    if len(dh) > 1:
        roots = P.polyroots(dh)
        real = roots[np.abs(roots.imag) < 1e-9].real
        real = real[(real >= -1.0) & (real <= 1.0)]
        if real.size:
            best = max(best, float(np.max(np.abs(profile(real)))))
    return best


def validate_profile(profile: Profile, *, require_odd: bool = True) -> None:
    """Raise :class:`ProfileInvalid` unless ``profile`` defines a valid metric."""
    if not isinstance(profile, (OddProfile, EvenProfile)):
        raise ProfileInvalid(f"unsupported profile type {type(profile).__name__}")
    if require_odd and profile.parity != "odd":
        raise ProfileInvalid("Zoll metrics need an odd profile")
    c = np.asarray(profile.coeffs)
    if not np.all(np.isfinite(c)):
        raise ProfileInvalid("profile coefficients must be finite")
    total = math.fsum(profile.coeffs)
    if abs(total) > _SUM_TOL * max(1.0, float(np.sum(np.abs(c)))):
        raise ProfileInvalid(f"h(1) = sum of coefficients = {total:.3e}, must vanish")
    if require_odd:
        u = np.linspace(0.0, 1.0, 257)
        if np.any(profile(-u) + profile(u) != 0.0):
            raise ProfileInvalid("profile is not odd")
    sup = profile_sup(profile)
    if sup >= 1.0:
        raise ProfileInvalid(f"sup |h| = {sup:.6g} >= 1, metric degenerates")


@dataclass(frozen=True)
class MetricOfRevolution:
    """``scale * ((1 + h(cos t))**2 dt**2 + sin(t)**2 dp**2)`` on the sphere.

    Chart: polar angle ``theta`` in ``(0, pi)``, azimuth ``phi`` in ``[0, 2 pi)``.
    Construct through :func:`make_metric` (Zoll family) or
    :func:`make_control_metric` (even controls) so the profile is validated.
    """

    profile: Profile = field(default_factory=lambda: OddProfile((0.0,)))
    scale: float = 1.0

    @property
    def is_odd(self) -> bool:
        return self.profile.parity == "odd"

    @property
    def is_round(self) -> bool:
        return self.profile.is_zero and self.scale == 1.0

    def describe(self) -> dict:
        """Canonical description; also the input to the certification hash.

        Trailing zero coefficients are dropped and a zero profile is reported
        as odd, so every spelling of the round metric describes the same way.
        """
        coeffs = [float(c) + 0.0 for c in self.profile.coeffs]
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        parity = "odd" if all(c == 0.0 for c in coeffs) else self.profile.parity
        return {"parity": parity, "coeffs": coeffs, "scale": float(self.scale)}

    def h(self, u):
        return self.profile(u)

    def dh(self, u):
        return self.profile.derivative(u)

    def g_thetatheta(self, theta):
        return self.scale * (1.0 + self.h(np.cos(theta))) ** 2

    def g_phiphi(self, theta):
        return self.scale * np.sin(theta) ** 2

    def matrix(self, theta: float, phi: float = 0.0) -> np.ndarray:
        """2x2 component matrix in the ``(theta, phi)`` chart."""
        _check_guard(theta)
        return np.array([[float(self.g_thetatheta(theta)), 0.0],
                         [0.0, float(self.g_phiphi(theta))]])

    @cached_property
    def _psi_coeffs(self) -> np.ndarray:
        hc = self.profile.power_coeffs()
        q, _ = P.polydiv(hc, [1.0, 0.0, -1.0])
        two_plus_h = P.polyadd([2.0], hc)
        return P.polymul(q, two_plus_h)

    @cached_property
    def _dpsi_coeffs(self) -> np.ndarray:
        return P.polyder(self._psi_coeffs) if len(self._psi_coeffs) > 1 else np.zeros(1)

    def psi(self, u):
        """Ambient correction ``h (2 + h) / (1 - u**2)``, a polynomial in ``u``."""
        return P.polyval(u, self._psi_coeffs)

    def dpsi(self, u):
        return P.polyval(u, self._dpsi_coeffs)

    def curvature_u(self, u):
        """Gauss curvature as a function of ``u = cos(theta)``; smooth through the poles."""
        h = self.h(u)
        return (1.0 + h - u * self.dh(u)) / ((1.0 + h) ** 3 * self.scale)


def make_metric(profile: OddProfile, scale: float = 1.0) -> MetricOfRevolution:
    """Build a Zoll metric of revolution from an odd profile.

    Raises
    ------
    ProfileInvalid
        If the profile is not odd, does not vanish at the poles, or reaches
        ``|h| >= 1`` somewhere.
    """
    validate_profile(profile, require_odd=True)
    if not scale > 0:
        raise ProfileInvalid("scale must be positive")
    return MetricOfRevolution(profile, float(scale))


def make_control_metric(profile: Profile, scale: float = 1.0) -> MetricOfRevolution:
    """Like :func:`make_metric` but accepts even profiles (non-Zoll negative controls)."""
    validate_profile(profile, require_odd=False)
    if not scale > 0:
        raise ProfileInvalid("scale must be positive")
    return MetricOfRevolution(profile, float(scale))


def round_metric(scale: float = 1.0) -> MetricOfRevolution:
    """The unit round metric, optionally multiplied by a constant ``scale``."""
    return MetricOfRevolution(OddProfile((0.0,)), float(scale))


def _check_guard(theta):
    t = np.asarray(theta)
    if np.any(t < POLE_GUARD) or np.any(t > math.pi - POLE_GUARD):
        raise PoleEvaluation(f"theta={theta} inside pole guard band {POLE_GUARD:g}")


def gauss_curvature(metric: MetricOfRevolution, theta):
    """Gauss curvature at polar angle ``theta`` (independent of ``phi``).

    For ``a = 1 + h(u)`` the surface-of-revolution formula reduces to
    ``K = (a - u h'(u)) / a**3``, divided by ``scale``.
    """
    _check_guard(theta)
    k = metric.curvature_u(np.cos(theta))
    return float(k) if np.ndim(k) == 0 else k


def _gauss_legendre(n: int = _GL_NODES):
    return np.polynomial.legendre.leggauss(n)


def total_curvature(metric: MetricOfRevolution, n_nodes: int = _GL_NODES) -> float:
    """``integral of K dA`` over the sphere by Gauss-Legendre quadrature in ``u``."""
    u, w = _gauss_legendre(n_nodes)
    area_density = metric.scale * (1.0 + metric.h(u))
    return 2.0 * math.pi * float(np.dot(w, metric.curvature_u(u) * area_density))


def area(metric: MetricOfRevolution, n_nodes: int = _GL_NODES) -> float:
    u, w = _gauss_legendre(n_nodes)
    return 2.0 * math.pi * metric.scale * float(np.dot(w, 1.0 + metric.h(u)))


def _sampled_extreme(f, lo: float, hi: float, n: int, sense: str) -> float:
    """Extreme of ``f`` on ``[lo, hi]``: dense grid, then one bounded refinement."""
    x = np.linspace(lo, hi, n)
    y = f(x)
    sign = 1.0 if sense == "min" else -1.0
    i = int(np.argmin(sign * y))
    best = float(y[i])
    a, b = x[max(i - 1, 0)], x[min(i + 1, n - 1)]
    if b > a:
        res = minimize_scalar(lambda t: sign * float(f(np.array([t]))[0]),
                              bounds=(a, b), method="bounded",
                              options={"xatol": 1e-13})
        cand = float(f(np.array([res.x]))[0])
        best = min(best, cand) if sense == "min" else max(best, cand)
    return best


def c0_distance(g: MetricOfRevolution, g2: MetricOfRevolution,
                n_samples: int = C0_SAMPLES) -> float:
    """``||g - g2||`` in ``C^0`` measured in a round-orthonormal frame.

    In the frame ``(e_theta, e_phi / sin theta)`` the difference is diagonal with
    entries ``s a**2 - s' a'**2`` and ``s - s'``; the operator norm is their
    largest magnitude.  Rotational symmetry reduces the sup to one over theta.
    """
    dtt = lambda t: np.abs(g.g_thetatheta(t) - g2.g_thetatheta(t))
    sup_tt = _sampled_extreme(dtt, 0.0, math.pi, n_samples, "max")
    return max(sup_tt, abs(g.scale - g2.scale))


def conformal_bounds(g: MetricOfRevolution, n_samples: int = C0_SAMPLES) -> tuple[float, float]:
    """Tightest sampled ``(C1, C2)`` with ``C1 g0 <= g <= C2 g0``."""
    lo = _sampled_extreme(g.g_thetatheta, 0.0, math.pi, n_samples, "min")
    hi = _sampled_extreme(g.g_thetatheta, 0.0, math.pi, n_samples, "max")
    return min(lo, g.scale), max(hi, g.scale)


@dataclass(frozen=True)
class CurvatureReport:
    K_min: float
    K_max: float
    total_curvature: float
    diameter: float
    diameter_method: str
    area: float

    csv_header: ClassVar[tuple] = ("K_min", "K_max", "total_curvature",
                                   "diameter", "diameter_method", "area")

    @property
    def K_range(self) -> float:
        return self.K_max - self.K_min

    def csv_row(self) -> list[str]:
        return [f"{self.K_min:.12g}", f"{self.K_max:.12g}", f"{self.total_curvature:.12g}",
                f"{self.diameter:.12g}", self.diameter_method, f"{self.area:.12g}"]

    def text(self) -> str:
        return "\n".join([
            f"K_min            {self.K_min:.12g}",
            f"K_max            {self.K_max:.12g}",
            f"total curvature  {self.total_curvature:.12g}  ({self.total_curvature / math.pi:.12g} pi)",
            f"area             {self.area:.12g}  ({self.area / math.pi:.12g} pi)",
            f"diameter         {self.diameter:.12g}  [{self.diameter_method}]",
        ])


def curvature_report(metric: MetricOfRevolution, n_grid: int = 2049,
                     diameter_pairs: int = 4) -> CurvatureReport:
    """Curvature range, Gauss-Bonnet total, area and a shooting diameter estimate.

    ``diameter_pairs = 0`` skips the (comparatively slow) diameter estimate and
    reports ``nan`` with method ``"skipped"``.
    """
    k_min = _sampled_extreme(metric.curvature_u, -1.0, 1.0, n_grid, "min")
    k_max = _sampled_extreme(metric.curvature_u, -1.0, 1.0, n_grid, "max")
    if diameter_pairs > 0:
        from .flow import diameter_estimate

        diam = diameter_estimate(metric, n_pairs=diameter_pairs)
        method = f"shooting-max-over-{diameter_pairs}-antipodal-pairs"
    else:
        diam, method = float("nan"), "skipped"
    return CurvatureReport(k_min, k_max, total_curvature(metric), diam, method, area(metric))
