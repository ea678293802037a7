"""Closed-form results for the driven two-level system.

These serve both as standalone outputs and as oracles for the integrators.

Eigenbasis convention
---------------------
With ``tan(theta) = delta / eps0`` and ``theta`` in ``(0, pi)``::

    psi_+ =  cos(theta/2) psi_1 + sin(theta/2) psi_2    (frequency +w0/2)
    psi_- = -sin(theta/2) psi_1 + cos(theta/2) psi_2    (frequency -w0/2)

so the upper mode (the one with carrier ``W0 - w0/2``) is ``psi_+``. At
``eps0 = 0`` this gives ``psi_+ = (psi_1 + psi_2)/sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import loggamma

from .model import QubitParams

# Hankel expansion is used for x >= HANKEL_MIN_X + k**2; below that the
# normalized downward recurrence is exact to roundoff.
HANKEL_MIN_X = 1000.0

# Stirling coefficients |B_2k| / (2k (2k - 1)) for the large-adiabaticity branch
# of the Stokes phase; all terms enter with a positive sign.
_STOKES_ASYMPTOTIC = (1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188, 691 / 360360, 1 / 156)
STOKES_ASYMPTOTIC_MIN = 10.0


@dataclass(frozen=True)
class Eigenstructure:
    omega_qubit: float
    Omega_plus: float
    Omega_minus: float
    mixing_angle: float


@dataclass(frozen=True)
class LzParams:
    delta_adiab: float
    v: float


def mixing_angle(delta: float, eps0: float) -> float:
    """``theta`` with ``tan(theta) = delta/eps0`` in ``[0, pi]``."""
    return math.atan2(delta, eps0)


def eigenstructure(q: QubitParams, eps0: float) -> Eigenstructure:
    """Splitting ``w0 = sqrt(delta^2 + eps0^2)`` and mode frequencies ``W0 -/+ w0/2``."""
    w0 = math.hypot(q.delta, eps0)
    W = q.omega0_carrier
    return Eigenstructure(w0, W - 0.5 * w0, W + 0.5 * w0, mixing_angle(q.delta, eps0))


def sweep_rate(A: float, omega: float, eps0: float) -> float:
    """Speed ``|d eps/dt|`` of a sinusoidal drive at its zero crossing."""
    if not abs(eps0) < A:
        raise ValueError(f"crossing not reached: |eps0|={abs(eps0)} >= A={A}")
    return A * omega * math.sqrt(1.0 - (eps0 / A) ** 2)


def lz_params(delta: float, v: float) -> LzParams:
    if not v > 0:
        raise ValueError("sweep rate must be positive")
    return LzParams(delta ** 2 / (4.0 * v), v)


def lz_probability_rate(delta: float, v: float) -> float:
    """``exp(-2 pi delta^2 / (4 v))`` for a linear sweep of rate ``v``."""
    return math.exp(-2.0 * math.pi * lz_params(delta, abs(v)).delta_adiab)


def lz_probability(q: QubitParams, A: float, omega: float, eps0: float) -> float:
    """Single-passage transition probability for ``eps0 + A sin(omega t)``.

    Raises
    ------
    ValueError
        If ``|eps0| >= A``: the avoided crossing is never traversed.
    """
    return lz_probability_rate(q.delta, sweep_rate(A, omega, eps0))


def stokes_phase(delta_adiab: float) -> float:
    """Stokes phase, going from ``-pi/4`` (sudden) to ``-pi/2`` (adiabatic).

    ``-pi/4 + d (ln d - 1) + arg Gamma(1 - i d)``.
    """
    d = float(delta_adiab)
    if d < 0:
        raise ValueError("adiabaticity must be non-negative")
    if d == 0:
        return -0.25 * math.pi
    if d >= STOKES_ASYMPTOTIC_MIN:
        # Stirling series of log Gamma(1 - i d); avoids cancellation in d (ln d - 1)
        inv2 = 1.0 / (d * d)
        acc = 0.0
        for c in reversed(_STOKES_ASYMPTOTIC):
            acc = acc * inv2 + c
        return -0.5 * math.pi + acc / d
    return -0.25 * math.pi + d * (math.log(d) - 1.0) + float(np.imag(loggamma(1.0 - 1j * d)))


def crossing_times(A: float, omega: float, eps0: float) -> tuple[float, float]:
    """Consecutive zeros of ``eps0 + A sin(omega t)`` bracketing the negative lobe."""
    if not abs(eps0) < A:
        raise ValueError(f"crossing not reached: |eps0|={abs(eps0)} >= A={A}")
    a = math.asin(eps0 / A)
    return (math.pi + a) / omega, (2.0 * math.pi - a) / omega


def stuckelberg_phase(q: QubitParams, A: float, omega: float, eps0: float,
                      t1: float | None = None, t2: float | None = None) -> float:
    """``1/2 int_t1^t2 sqrt(delta^2 + eps(t)^2) dt + stokes_phase``."""
    if t1 is None or t2 is None:
        t1, t2 = crossing_times(A, omega, eps0)
    if not t1 < t2:
        raise ValueError("need t1 < t2")

    def f(t):
        return math.hypot(q.delta, eps0 + A * math.sin(omega * t))

    zeta, _ = integrate.quad(f, t1, t2, epsabs=1e-13, epsrel=1e-12, limit=200)
    v = sweep_rate(A, omega, eps0)
    return 0.5 * zeta + stokes_phase(lz_params(q.delta, v).delta_adiab)


def stuckelberg_double_passage(q: QubitParams, A: float, omega: float, eps0: float,
                               t1: float | None = None, t2: float | None = None,
                               t: float | None = None, form: str = "consistent") -> float:
    """Upper-mode occupation after two crossings, starting in the lower mode.

    ``form="consistent"`` returns ``4 P (1 - P) cos^2(Phi_St)``, which agrees
    with direct integration when the Stokes phase runs from ``-pi/4`` to
    ``-pi/2``. ``form="literal"`` returns ``4 P (1 - P) sin^2(Phi_St)``; the two
    differ by a quarter period of the fringe pattern.

    Passing ``t`` applies the damping factor ``exp(-gamma t)``.
    """
    p = lz_probability(q, A, omega, eps0)
    phi = stuckelberg_phase(q, A, omega, eps0, t1, t2)
    if form == "consistent":
        fringe = math.cos(phi) ** 2
    elif form == "literal":
        fringe = math.sin(phi) ** 2
    else:
        raise ValueError(f"unknown form {form!r}")
    val = 4.0 * p * (1.0 - p) * fringe
    if t is not None:
        val *= math.exp(-q.gamma * t)
    return val


def rabi_frequency(q: QubitParams, eps0: float, A: float, omega: float, k: int,
                   detuning_reference: str = "bias") -> tuple[float, float]:
    """Return ``(delta_k, Omega_R)`` for the ``k``-photon resonance.

    ``detuning_reference="bias"`` uses the detuning ``k omega - |eps0|``;
    ``"splitting"`` uses ``k omega - sqrt(delta^2 + eps0^2)``, which is the
    better choice when ``delta`` is not small next to ``eps0``.
    """
    if k < 1:
        raise ValueError("resonance index k must be >= 1")
    dk = q.delta * bessel_j(k, A / omega)
    if detuning_reference == "bias":
        det = k * omega - abs(eps0)
    elif detuning_reference == "splitting":
        det = k * omega - math.hypot(q.delta, eps0)
    else:
        raise ValueError(f"unknown detuning_reference {detuning_reference!r}")
    return dk, math.hypot(dk, det)


def rabi_occupation(q: QubitParams, eps0: float, A: float, omega: float, k: int, t,
                    damped: bool = True, detuning_reference: str = "bias"):
    """Multi-photon Rabi oscillation ``(dk^2 / 2 W_R^2)(1 - cos W_R t)``.

    ``t`` may be an array. With ``damped`` the result carries ``exp(-gamma t)``.
    """
    dk, wr = rabi_frequency(q, eps0, A, omega, k, detuning_reference)
    t = np.asarray(t, dtype=float)
    if wr == 0:
        out = np.zeros_like(t)
    else:
        out = 0.5 * (dk / wr) ** 2 * (1.0 - np.cos(wr * t))
    if damped:
        out = out * np.exp(-q.gamma * t)
    return float(out) if out.ndim == 0 else out


def default_k_max(eps0: float, A: float, omega: float) -> int:
    return int(math.ceil((abs(eps0) + A) / omega)) + 5


def lorentzian_average(q: QubitParams, eps0: float, A: float, omega: float,
                       k_max: int | None = None, k_min: int = 1) -> float:
    """Time-averaged occupation as a sum of multi-photon Lorentzians.

    ``sum_k dk^2 / (dk^2 + (k omega - |eps0|)^2 + gamma^2)`` for
    ``k = k_min..k_max``. The default ``k_max`` is
    ``ceil((|eps0| + A)/omega) + 5``; beyond the drive's reach ``J_k(A/omega)``
    is negligible.
    """
    if k_max is None:
        k_max = default_k_max(eps0, A, omega)
    if k_max < 1 or k_min < 0 or k_min > k_max:
        raise ValueError("need 0 <= k_min <= k_max and k_max >= 1")
    js = bessel_j_orders(k_max, A / omega)[k_min:]
    ks = np.arange(k_min, k_max + 1)
    d2 = (q.delta * js) ** 2
    den = d2 + (ks * omega - abs(eps0)) ** 2 + q.gamma ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(den > 0, d2 / np.where(den > 0, den, 1.0), 0.0)
    return float(np.sum(terms))


def _miller_start(n: int, x: float) -> int:
    m = int(max(n, x) + 20 + math.sqrt(40.0 * max(n, x, 1.0)))
    return m + (m % 2)


def _bessel_miller(n: int, x: float) -> np.ndarray:
    """``J_0..J_n`` at ``x > 0`` by normalized downward recurrence."""
    m = _miller_start(n, x)
    out = np.zeros(n + 1)
    jp1 = 0.0
    j = 1e-300
    norm = 0.0
    two_over_x = 2.0 / x
    for k in range(m, 0, -1):
        # j = J_k, jp1 = J_{k+1} (unnormalized)
        jm1 = k * two_over_x * j - jp1
        jp1, j = j, jm1
        if abs(j) > 1e250:
            j *= 1e-250
            jp1 *= 1e-250
            out *= 1e-250
            norm *= 1e-250
        if k - 1 <= n:
            out[k - 1] = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
    norm += j
    return out / norm


def _bessel_hankel(k: int, x: float) -> float:
    """Hankel asymptotic expansion for ``x >> k^2``."""
    mu = 4.0 * k * k
    p = 1.0
    qs = 0.0
    term = 1.0
    prev = math.inf
    for m in range(1, 60):
        term *= (mu - (2 * m - 1) ** 2) / (m * 8.0 * x)
        if abs(term) > prev:
            break
        prev = abs(term)
        if m % 2 == 1:
            qs += term if (m // 2) % 2 == 0 else -term
        else:
            p += -term if (m // 2) % 2 == 1 else term
        if abs(term) < 1e-17:
            break
    chi = x - (0.5 * k + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - qs * math.sin(chi))


def bessel_j_orders(n: int, x: float) -> np.ndarray:
    """``[J_0(x), ..., J_n(x)]`` for integer ``n >= 0`` and real ``x``."""
    if n < 0:
        raise ValueError("order must be non-negative")
    x = float(x)
    if x == 0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    ax = abs(x)
    if ax >= HANKEL_MIN_X + n * n:
        out = np.array([_bessel_hankel(k, ax) for k in range(n + 1)])
    else:
        out = _bessel_miller(n, ax)
    if x < 0:
        out[1::2] *= -1.0
    return out


def bessel_j(k: int, x: float) -> float:
    """Bessel function of the first kind ``J_k(x)`` for integer ``k >= 0``."""
    k = int(k)
    if k < 0:
        raise ValueError("order must be non-negative")
    return float(bessel_j_orders(k, x)[k])
