"""Bias waveforms ``eps(t) = eps0 + eps1(t)``.

Four protocols are supported: a sinusoid, a rectangular (latching) wave,
two-valued telegraph noise with exponential dwell times, and a linear sweep
for single Landau-Zener passages. A constant bias is the trivial fifth.

Stochastic realizations are reproducible: the switching sequence is a pure
function of ``(chi, seed, t_max)``. See :data:`RNG_ALGORITHM`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels

#: Identifier recorded in run metadata for telegraph realizations.
RNG_ALGORITHM = ("numpy.random.PCG64 seeded with SeedSequence(seed); dwell times "
                 "from Generator.exponential(scale=1/chi) drawn in blocks")


@dataclass(frozen=True)
class Constant:
    pass


@dataclass(frozen=True)
class Sinusoidal:
    amplitude: float
    omega: float


@dataclass(frozen=True)
class Rectangular:
    """``A sgn(sin(omega t))`` with ``sgn(0) = +1``."""

    amplitude: float
    omega: float


@dataclass(frozen=True)
class Telegraph:
    """Random jumps between ``+A`` and ``-A`` at total mean rate ``chi``."""

    amplitude: float
    chi: float
    seed: int = 0
    start_positive: bool = True


@dataclass(frozen=True)
class LinearSweep:
    rate: float
    t_center: float = 0.0


Variant = Union[Constant, Sinusoidal, Rectangular, Telegraph, LinearSweep]

_KIND = {
    Constant: _kernels.KIND_CONSTANT,
    Sinusoidal: _kernels.KIND_SINUSOIDAL,
    Rectangular: _kernels.KIND_RECTANGULAR,
    Telegraph: _kernels.KIND_TELEGRAPH,
    LinearSweep: _kernels.KIND_LINEAR,
}


@dataclass(frozen=True)
class DriveSpec:
    eps0: float = 0.0
    variant: Variant = field(default_factory=Constant)

    def __post_init__(self):
        v = self.variant
        if not math.isfinite(self.eps0):
            raise ValueError("eps0 must be finite")
        if isinstance(v, (Sinusoidal, Rectangular, Telegraph)):
            if not (v.amplitude >= 0 and math.isfinite(v.amplitude)):
                raise ValueError(f"amplitude must be >= 0, got {v.amplitude}")
        if isinstance(v, (Sinusoidal, Rectangular)) and not v.omega > 0:
            raise ValueError(f"drive frequency must be > 0, got {v.omega}")
        if isinstance(v, Telegraph):
            if not v.chi > 0:
                raise ValueError(f"switching rate chi must be > 0, got {v.chi}")
            if not 0 <= int(v.seed) < 2 ** 64:
                raise ValueError("seed must be an unsigned 64-bit integer")
        if isinstance(v, LinearSweep) and (v.rate == 0 or not math.isfinite(v.rate)):
            raise ValueError("sweep rate must be non-zero")
        if type(v) not in _KIND:
            raise TypeError(f"unknown drive variant {v!r}")

    @property
    def amplitude(self) -> float:
        return getattr(self.variant, "amplitude", 0.0)

    @property
    def omega(self) -> float:
        return getattr(self.variant, "omega", 0.0)


@dataclass(frozen=True, eq=False)
class DriveRealization:
    spec: DriveSpec
    switch_times: np.ndarray
    t_max: float

    def __post_init__(self):
        self.switch_times.setflags(write=False)


def realize(spec: DriveSpec, t_max: float) -> DriveRealization:
    """Fix a drive on ``[0, t_max]``; draws the telegraph switching times."""
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    v = spec.variant
    if isinstance(v, Telegraph):
        times = telegraph_switch_times(v.chi, v.seed, t_max)
    else:
        times = np.empty(0)
    return DriveRealization(spec, times, float(t_max))


def telegraph_switch_times(chi: float, seed: int, t_max: float) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    mean = chi * t_max
    block = int(math.ceil(mean + 6.0 * math.sqrt(mean) + 16))
    chunks = []
    t = 0.0
    while t <= t_max:
        gaps = rng.exponential(1.0 / chi, block)
        c = t + np.cumsum(gaps)
        chunks.append(c)
        t = c[-1]
    times = np.concatenate(chunks)
    return times[times <= t_max]


def _rect_sign(omega: float, t):
    phase = np.asarray(omega * t / math.pi, dtype=float)
    n = np.floor(phase + 1e-12)
    on_flip = np.abs(phase - np.round(phase)) <= 1e-12
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return np.where(on_flip, 1.0, sign)


def bias_at(r: DriveRealization, t):
    """Bias at time ``t`` (scalar or array). ``t`` must lie in ``[0, t_max]``."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0) or np.any(ta > r.t_max) or np.any(~np.isfinite(ta)):
        raise ValueError(f"t outside the realization horizon [0, {r.t_max}]")
    spec = r.spec
    v = spec.variant
    if isinstance(v, Sinusoidal):
        out = spec.eps0 + v.amplitude * np.sin(v.omega * ta)
    elif isinstance(v, Rectangular):
        out = spec.eps0 + v.amplitude * _rect_sign(v.omega, ta)
    elif isinstance(v, Telegraph):
        # right-continuous: the post-switch value holds at a switch instant
        count = np.searchsorted(r.switch_times, ta, side="right")
        s0 = 1.0 if v.start_positive else -1.0
        out = spec.eps0 + s0 * v.amplitude * np.where(count % 2 == 0, 1.0, -1.0)
    elif isinstance(v, LinearSweep):
        out = spec.eps0 + v.rate * (ta - v.t_center)
    else:
        out = np.full_like(ta, spec.eps0)
    return float(out) if np.ndim(out) == 0 else out


def discontinuities(r: DriveRealization) -> np.ndarray:
    """Flip instants in ``(0, t_max]``; empty for smooth drives."""
    v = r.spec.variant
    if isinstance(v, Rectangular):
        step = math.pi / v.omega
        n = int(math.floor(r.t_max / step * (1 + 1e-12)))
        return np.arange(1, n + 1) * step
    if isinstance(v, Telegraph):
        return r.switch_times.copy()
    return np.empty(0)


def segments(r: DriveRealization, t0: float, t1: float) -> tuple[np.ndarray, np.ndarray]:
    """Segment boundaries over ``[t0, t1]`` and the per-segment sign level.

    The level is only meaningful for piecewise-constant drives; smooth drives
    get a single segment.
    """
    d = discontinuities(r)
    d = d[(d > t0) & (d < t1)]
    breaks = np.concatenate(([t0], d, [t1]))
    v = r.spec.variant
    if isinstance(v, Rectangular):
        mid = 0.5 * (breaks[1:] + breaks[:-1])
        levels = _rect_sign(v.omega, mid)
    elif isinstance(v, Telegraph):
        mid = 0.5 * (breaks[1:] + breaks[:-1])
        count = np.searchsorted(r.switch_times, mid, side="right")
        s0 = 1.0 if v.start_positive else -1.0
        levels = s0 * np.where(count % 2 == 0, 1.0, -1.0)
    else:
        levels = np.zeros(len(breaks) - 1)
    return breaks, np.ascontiguousarray(levels, dtype=float)


def kernel_params(delta: float, gamma: float, carrier: float,
                  spec: DriveSpec) -> np.ndarray:
    v = spec.variant
    par = np.zeros(9)
    par[0] = delta
    par[1] = gamma
    par[2] = carrier
    par[3] = _KIND[type(v)]
    par[4] = spec.eps0
    par[5] = getattr(v, "amplitude", 0.0)
    par[6] = getattr(v, "omega", 0.0)
    if isinstance(v, LinearSweep):
        par[7] = v.rate
        par[8] = v.t_center
    return par


def max_abs_bias(r: DriveRealization) -> float:
    """Largest ``|eps(t)|`` on the horizon."""
    v = r.spec.variant
    if isinstance(v, LinearSweep):
        ends = bias_at(r, np.array([0.0, r.t_max]))
        return float(np.max(np.abs(ends)))
    return abs(r.spec.eps0) + r.spec.amplitude


def write_switch_times_csv(r: DriveRealization, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_switch"])
        for t in discontinuities(r):
            w.writerow([repr(float(t))])


def describe(spec: DriveSpec) -> dict:
    """JSON-ready description of a drive spec."""
    v = spec.variant
    d = {"eps0": spec.eps0, "kind": type(v).__name__.lower()}
    for k, val in vars(v).items():
        d[k] = int(val) if k == "seed" else val
    return d
