"""Physical parameters of the two-oscillator system and their reduction to
two-level (qubit-like) parameters.

Two identical, weakly coupled, damped oscillators with spring constants
``k0 +/- dk(t)`` reduce, in the slow-envelope limit, to a two-level system with
tunnelling amplitude ``delta = kc / (m W0)`` and bias ``eps = dk / (m W0)``
where ``W0 = sqrt((k0 + kc) / m)`` is the interaction-shifted carrier.

All reduced rates are angular frequencies (rad/s). In dimensionless runs
``delta = 1`` sets the unit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

#: Sanity bound on ``gamma / delta`` enforced by :class:`QubitParams`.
GAMMA_SANITY_RATIO = 1e3

#: Default thresholds used by :func:`regime_report`.
OMEGA_RATIO_THRESHOLD = 0.1
GAMMA_RATIO_THRESHOLD = 0.01

#: Weak-coupling ratio above which a warning is emitted.
WEAK_COUPLING_WARN = 0.01


class ParameterError(ValueError):
    """Raised when a parameter set violates its invariants."""


@dataclass(frozen=True)
class OscillatorParams:
    """Raw mechanical parameters (SI units).

    Parameters
    ----------
    m : float
        Effective mass of each oscillator (kg).
    k0 : float
        Base spring constant (N/m).
    kc : float
        Coupling spring constant (N/m), must satisfy ``kc < k0``.
    gamma : float
        Common damping rate (1/s).
    """

    m: float
    k0: float
    kc: float
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("m", "k0", "kc", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v}")
        if self.m <= 0:
            raise ParameterError(f"mass must be positive, got {self.m}")
        if self.k0 <= 0:
            raise ParameterError(f"k0 must be positive, got {self.k0}")
        if self.kc < 0:
            raise ParameterError(f"kc must be non-negative, got {self.kc}")
        if self.gamma < 0:
            raise ParameterError(f"gamma must be non-negative, got {self.gamma}")
        if self.kc >= self.k0:
            raise ParameterError(
                f"coupling kc={self.kc} must be weaker than k0={self.k0}")
        if self.kc > WEAK_COUPLING_WARN * self.k0:
            warnings.warn(
                f"kc/k0 = {self.kc / self.k0:.3g} exceeds {WEAK_COUPLING_WARN}; "
                "the weak-coupling reduction is only approximate",
                stacklevel=3)
        if self.gamma >= carrier_frequency(self):
            raise ParameterError("gamma must be below the carrier frequency")


@dataclass(frozen=True)
class QubitParams:
    """Reduced two-level parameters.

    ``omega0_carrier`` may be ``inf`` for purely reduced experiments; the
    exact envelope integrator requires a finite value.
    """

    delta: float
    gamma: float = 0.0
    omega0_carrier: float = math.inf

    def __post_init__(self):
        if not math.isfinite(self.delta) or self.delta < 0:
            raise ParameterError(f"delta must be finite and >= 0, got {self.delta}")
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise ParameterError(f"gamma must be finite and >= 0, got {self.gamma}")
        if math.isnan(self.omega0_carrier) or self.omega0_carrier <= 0:
            raise ParameterError("omega0_carrier must be positive")
        if self.delta >= self.omega0_carrier:
            raise ParameterError(
                "delta must be far below the carrier frequency (slow envelope)")
        if self.delta > 0 and self.gamma >= GAMMA_SANITY_RATIO * self.delta:
            raise ParameterError(
                f"gamma/delta = {self.gamma / self.delta:.3g} exceeds the sanity "
                f"bound {GAMMA_SANITY_RATIO:g}")

    def with_carrier(self, omega0_carrier: float) -> "QubitParams":
        return QubitParams(self.delta, self.gamma, omega0_carrier)


@dataclass(frozen=True)
class RegimeReport:
    ratio_omega_over_Omega0: float
    ratio_gamma_over_Omega0: float
    valid: bool
    messages: list[str] = field(default_factory=list)


def carrier_frequency(p: OscillatorParams) -> float:
    """Interaction-shifted carrier ``sqrt((k0 + kc) / m)`` in rad/s."""
    return math.sqrt((p.k0 + p.kc) / p.m)


def regime_report(omega: float, gamma: float, omega0_carrier: float,
                  omega_threshold: float = OMEGA_RATIO_THRESHOLD,
                  gamma_threshold: float = GAMMA_RATIO_THRESHOLD) -> RegimeReport:
    """Check the slow-envelope conditions ``omega << W0`` and ``gamma << W0``.

    ``omega`` is the fastest characteristic envelope frequency of the run
    (drive frequency, splitting, or ``delta``).
    """
    r_w = omega / omega0_carrier
    r_g = gamma / omega0_carrier
    messages = []
    if r_w >= omega_threshold:
        messages.append(
            f"envelope frequency / carrier = {r_w:.3g} >= {omega_threshold:g}: "
            "slow-envelope approximation not justified")
    if r_g >= gamma_threshold:
        messages.append(
            f"gamma / carrier = {r_g:.3g} >= {gamma_threshold:g}: "
            "damping not negligible next to the carrier")
    return RegimeReport(r_w, r_g, not messages, messages)


def reduce_to_qubit(p: OscillatorParams) -> tuple[QubitParams, RegimeReport]:
    """Map mechanical parameters onto ``QubitParams`` and check the regime."""
    w0 = carrier_frequency(p)
    delta = p.kc / (p.m * w0)
    q = QubitParams(delta=delta, gamma=p.gamma, omega0_carrier=w0)
    return q, regime_report(delta, p.gamma, w0)


def delta_approx(p: OscillatorParams) -> float:
    """Leading-order tunnelling amplitude ``kc / sqrt(m k0)``."""
    return p.kc / math.sqrt(p.m * p.k0)


def bias_from_detuning(dk: float, p: OscillatorParams) -> float:
    """Bias ``dk / (m W0)`` (rad/s) produced by a spring detuning ``dk`` (N/m)."""
    if abs(dk) >= p.k0:
        raise ParameterError(
            f"|dk|={abs(dk)} >= k0={p.k0} would make a spring constant negative")
    return dk / (p.m * carrier_frequency(p))


def to_hz(rate: float) -> float:
    """Angular frequency (rad/s) -> frequency in Hz (i.e. value in Hz*2pi)."""
    return rate / (2 * math.pi)


def from_hz(freq: float) -> float:
    return 2 * math.pi * freq
