"""Plain-text run configuration: ``key = value`` lines, ``#`` comments.

The first metric uses the keys ``coeffs``, ``epsilon``, ``parity`` and
``scale``; a second metric (for comparisons) uses the same keys with a ``_2``
suffix.  ``coeffs`` is a bracketed list of odd (or even) monomial
coefficients; ``epsilon`` alone selects the standard one-parameter family of
the given parity and, together with ``coeffs``, scales them.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields, replace

from .errors import ZollError
from .metrics import (EvenProfile, MetricOfRevolution, OddProfile, make_control_metric,
                      make_metric)


class ConfigError(ZollError, ValueError):
    """Malformed or out-of-range configuration."""


PARITIES = ("odd", "even")


@dataclass(frozen=True)
class MetricSpec:
    coeffs: tuple[float, ...] | None = None
    epsilon: float | None = None
    parity: str = "odd"
    scale: float = 1.0

    def __post_init__(self):
        if self.coeffs is not None:
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "scale", float(self.scale))

    def profile(self):
        cls = OddProfile if self.parity == "odd" else EvenProfile
        if self.coeffs is None:
            eps = 0.0 if self.epsilon is None else self.epsilon
            return OddProfile.from_epsilon(eps) if cls is OddProfile else EvenProfile.bump(eps)
        prof = cls(self.coeffs)
        return prof if self.epsilon is None else prof.scaled(self.epsilon)

    def build(self) -> MetricOfRevolution:
        """Validated metric; even profiles are built as non-Zoll controls."""
        if self.parity == "odd":
            return make_metric(self.profile(), self.scale)
        return make_control_metric(self.profile(), self.scale)

    def label(self) -> str:
        if self.coeffs is None:
            eps = 0.0 if self.epsilon is None else self.epsilon
            return f"{self.parity}-family(epsilon={eps:g})"
        body = ",".join(f"{c:g}" for c in self.coeffs)
        return f"{self.parity}[{body}]" + ("" if self.epsilon is None else f"*{self.epsilon:g}")


def parse_profile(text: str) -> MetricSpec:
    """Parse a ``--profile`` value.

    Accepted forms: ``round``, ``eps:0.3`` (odd family), ``even-bump:0.5``
    (even control family), ``odd:c0,c1,...``, ``even:c0,c1,...`` and a bare
    coefficient list ``c0,c1,...`` (odd).
    """
    s = text.strip()
    try:
        if s == "round":
            return MetricSpec()
        head, _, body = s.partition(":")
        if not _:
            return MetricSpec(coeffs=_float_list(s))
        head = head.strip().lower()
        if head in ("eps", "epsilon"):
            return MetricSpec(epsilon=float(body))
        if head == "even-bump":
            return MetricSpec(epsilon=float(body), parity="even")
        if head in PARITIES:
            return MetricSpec(coeffs=_float_list(body), parity=head)
    except ValueError as exc:
        raise ConfigError(f"cannot parse profile {text!r}: {exc}") from None
    raise ConfigError(f"unknown profile form {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    items = [t for t in (p.strip() for p in body.split(",")) if t]
    if not items:
        raise ConfigError("empty coefficient list")
    return tuple(float(t) for t in items)


@dataclass(frozen=True)
class RunConfig:
    metrics: tuple[MetricSpec, ...] = (MetricSpec(),)
    p_max: int = 100
    n_starts: int = 100
    tolerance: float = 1e-6
    integrator_tol: float = 1e-12
    seed: int = 0
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    out_dir: str = "zollwidth-out"
    T: int = 65
    n_vertices: int = 256
    rounds: int = 200
    K: float = 1.0

    def validate(self) -> "RunConfig":
        if not 1 <= len(self.metrics) <= 2:
            raise ConfigError("one or two metrics expected")
        for m in self.metrics:
            if m.parity not in PARITIES:
                raise ConfigError(f"parity must be one of {PARITIES}")
            if not (m.scale > 0 and math.isfinite(m.scale)):
                raise ConfigError("scale must be positive")
        for name in ("tolerance", "integrator_tol", "K"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive")
        for name, lo in (("p_max", 1), ("n_starts", 1), ("workers", 1), ("T", 3),
                         ("n_vertices", 8), ("rounds", 1)):
            if getattr(self, name) < lo:
                raise ConfigError(f"{name} must be >= {lo}")
        if not self.out_dir:
            raise ConfigError("out_dir must be non-empty")
        return self

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


_METRIC_KEYS = ("coeffs", "epsilon", "parity", "scale")
_SCALAR_KEYS = tuple(f.name for f in fields(RunConfig) if f.name != "metrics")
_INT_KEYS = {"p_max", "n_starts", "seed", "workers", "T", "n_vertices", "rounds"}


def render(config: RunConfig) -> str:
    """Text form of ``config``; :func:`parse` inverts it exactly."""
    lines = []
    for i, m in enumerate(config.metrics):
        sfx = "" if i == 0 else f"_{i + 1}"
        if m.coeffs is not None:
            lines.append(f"coeffs{sfx} = [{', '.join(repr(c) for c in m.coeffs)}]")
        if m.epsilon is not None:
            lines.append(f"epsilon{sfx} = {m.epsilon!r}")
        lines.append(f"parity{sfx} = {m.parity}")
        lines.append(f"scale{sfx} = {m.scale!r}")
    for key in _SCALAR_KEYS:
        lines.append(f"{key} = {getattr(config, key)!r}" if key != "out_dir"
                     else f"out_dir = {config.out_dir}")
    return "\n".join(lines) + "\n"


def parse(text: str) -> RunConfig:
    """Parse configuration text.  Raises :class:`ConfigError` on bad input."""
    metric_kw: list[dict] = [{}, {}]
    scalars = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"line {n}: expected key = value")
        base, _, idx = key.rpartition("_")
        slot = 1 if idx == "2" and base in _METRIC_KEYS else 0
        name = base if slot else key
        try:
            if name in _METRIC_KEYS:
                if name == "coeffs":
                    metric_kw[slot]["coeffs"] = _float_list(value)
                elif name == "parity":
                    metric_kw[slot]["parity"] = value.lower()
                else:
                    metric_kw[slot][name] = float(value)
            elif name in _INT_KEYS:
                scalars[name] = int(value)
            elif name == "out_dir":
                scalars[name] = value
            elif name in _SCALAR_KEYS:
                scalars[name] = float(value)
            else:
                raise ConfigError(f"line {n}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {n}: bad value for {key}: {value!r}") from None
    metrics = [MetricSpec(**metric_kw[0])]
    if metric_kw[1]:
        metrics.append(MetricSpec(**metric_kw[1]))
    return RunConfig(metrics=tuple(metrics), **scalars).validate()


def load(path: str | os.PathLike) -> RunConfig:
    with open(path) as fh:
        return parse(fh.read())
