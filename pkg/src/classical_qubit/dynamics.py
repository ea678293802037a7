"""Integrators for the three dynamical descriptions.

* :func:`integrate_exact` -- the second-order envelope equation that keeps
  ``d2psi/dt2``, ``gamma dpsi/dt`` and ``i W0 gamma psi`` (carrier ``W0``).
* :func:`integrate_schrodinger` -- ``i dpsi/dt = H psi - i gamma/2 psi`` with
  ``H = (delta sx + eps sz) / 2``.
* :func:`integrate_bloch` -- ``dX/dt = B x X - gamma X`` with
  ``B = (delta, 0, eps)``.

Every integrator restarts at drive discontinuities, so no adaptive step spans
a flip of a rectangular or telegraph drive.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from .drive import (DriveRealization, bias_at, describe, discontinuities, kernel_params,
                    max_abs_bias, segments)
from .model import QubitParams

ADAPTIVE = "adaptive-embedded-RK"
FIXED_RK4 = "fixed-RK4"

MODEL_NAMES = {
    _kernels.MODEL_SCHRODINGER: "schrodinger",
    _kernels.MODEL_BLOCH: "bloch",
    _kernels.MODEL_EXACT: "exact",
}

#: Default number of output samples per period of the fastest envelope motion.
SAMPLES_PER_PERIOD = 20
MAX_SAMPLES = 2_000_000


class IntegrationError(RuntimeError):
    """Integration aborted (step-size underflow, NaN, or step budget)."""

    def __init__(self, message, time=None, stats=None):
        super().__init__(message)
        self.time = time
        self.stats = stats or {}


@dataclass(frozen=True)
class StateVector:
    psi1: complex
    psi2: complex

    def __post_init__(self):
        if not (np.isfinite(self.psi1) and np.isfinite(self.psi2)):
            raise ValueError("state components must be finite")

    @property
    def norm(self) -> float:
        """``|psi1|^2 + |psi2|^2`` (not fixed to one under damping)."""
        return abs(self.psi1) ** 2 + abs(self.psi2) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.psi1, self.psi2], dtype=complex)

    @classmethod
    def from_array(cls, a) -> "StateVector":
        return cls(complex(a[0]), complex(a[1]))


@dataclass(frozen=True)
class ExactState:
    psi: StateVector
    dpsi_dt: tuple[complex, complex]

    def __post_init__(self):
        if not all(np.isfinite(x) for x in self.dpsi_dt):
            raise ValueError("derivatives must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.psi.psi1, self.psi.psi2, *self.dpsi_dt], dtype=complex)


@dataclass(frozen=True)
class BlochVector:
    X: float
    Y: float
    Z: float

    @property
    def magnitude(self) -> float:
        return math.sqrt(self.X ** 2 + self.Y ** 2 + self.Z ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z], dtype=float)

    @classmethod
    def from_state(cls, s: StateVector) -> "BlochVector":
        """``X = <psi|sigma|psi>`` for the unnormalized state."""
        z = np.conj(s.psi1) * s.psi2
        return cls(2 * z.real, 2 * z.imag, abs(s.psi1) ** 2 - abs(s.psi2) ** 2)


def bloch_from_psi(psi: np.ndarray) -> np.ndarray:
    """Vectorized ``(n, 2)`` complex amplitudes -> ``(n, 3)`` Bloch vectors."""
    z = np.conj(psi[:, 0]) * psi[:, 1]
    return np.column_stack([2 * z.real, 2 * z.imag,
                            np.abs(psi[:, 0]) ** 2 - np.abs(psi[:, 1]) ** 2])


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = ADAPTIVE
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    initial_step: float = 0.0
    dense_output_stride: Union[float, None] = None
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.method not in (ADAPTIVE, FIXED_RK4):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.method == FIXED_RK4 and not (
                self.initial_step > 0 or math.isfinite(self.max_step)):
            raise ValueError("fixed-RK4 needs initial_step (the step size) or a finite max_step")
        if self.dense_output_stride is not None and not self.dense_output_stride > 0:
            raise ValueError("dense_output_stride must be positive")

    @property
    def fixed_step(self) -> float:
        return self.initial_step if self.initial_step > 0 else self.max_step

    def describe(self) -> dict:
        return {
            "method": self.method,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_step": None if math.isinf(self.max_step) else self.max_step,
            "initial_step": self.initial_step,
            "dense_output_stride": self.dense_output_stride,
        }


@dataclass
class Trajectory:
    """Sampled solution.

    ``states`` is ``(n, 2)`` complex for the Schrodinger model, ``(n, 4)``
    complex (``psi1, psi2, dpsi1, dpsi2``) for the exact model and ``(n, 3)``
    real for the Bloch model.
    """

    times: np.ndarray
    states: np.ndarray
    model: str
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def psi(self) -> np.ndarray:
        if self.model == "bloch":
            raise AttributeError("Bloch trajectories carry no amplitudes")
        return self.states[:, :2]

    @property
    def dpsi_dt(self) -> np.ndarray:
        if self.model != "exact":
            raise AttributeError("only exact trajectories retain derivatives")
        return self.states[:, 2:]

    def norm(self) -> np.ndarray:
        """``|psi|^2``, or ``|X|`` for Bloch trajectories (equal for pure states)."""
        if self.model == "bloch":
            return np.linalg.norm(self.states, axis=1)
        return np.sum(np.abs(self.psi) ** 2, axis=1)

    def bloch(self) -> np.ndarray:
        if self.model == "bloch":
            return self.states
        return bloch_from_psi(self.psi)

    def state(self, i: int):
        s = self.states[i]
        if self.model == "bloch":
            return BlochVector(*map(float, s))
        sv = StateVector.from_array(s)
        if self.model == "exact":
            return ExactState(sv, (complex(s[2]), complex(s[3])))
        return sv

    def write_csv(self, path) -> None:
        if self.model == "bloch":
            header = ["t", "X", "Y", "Z"]
            cols = [self.states[:, 0], self.states[:, 1], self.states[:, 2]]
        else:
            header = ["t", "re_psi1", "im_psi1", "re_psi2", "im_psi2"]
            p = self.psi
            cols = [p[:, 0].real, p[:, 0].imag, p[:, 1].real, p[:, 1].imag]
        write_columns_csv(path, header, [self.times, *cols])

    def write_metadata(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def format_float(x: float) -> str:
    return repr(float(x))


def write_columns_csv(path, header, columns) -> None:
    """Comma-separated, LF line endings, shortest round-trip float repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([format_float(v) for v in row])


def sample_times(t0: float, t1: float, stride: float) -> np.ndarray:
    """Uniform grid over ``[t0, t1]`` whose spacing does not exceed ``stride``."""
    n = int(math.ceil((t1 - t0) / stride - 1e-9)) + 1
    if n > MAX_SAMPLES:
        raise ValueError(f"{n} output samples requested; raise dense_output_stride")
    return np.linspace(t0, t1, max(n, 2))


def auto_stride(q: QubitParams, r: DriveRealization, t0: float, t1: float) -> float:
    fmax = math.hypot(q.delta, max_abs_bias(r))
    stride = (t1 - t0) / 200
    if fmax > 0:
        stride = min(stride, 2 * math.pi / (SAMPLES_PER_PERIOD * fmax))
    return stride


def _check_span(r: DriveRealization, t_span) -> tuple[float, float]:
    t0, t1 = map(float, t_span)
    if not (0 <= t0 < t1 <= r.t_max * (1 + 1e-12)):
        raise ValueError(f"t_span {t_span} not inside [0, {r.t_max}]")
    return t0, min(t1, r.t_max)


def _solve(model: int, par: np.ndarray, y0: np.ndarray, breaks: np.ndarray,
           levels: np.ndarray, ts: np.ndarray, cfg: IntegratorConfig):
    out = np.empty((len(ts), len(y0)), dtype=complex)
    stats = np.zeros(4, dtype=np.int64)
    method = _kernels.METHOD_RK4 if cfg.method == FIXED_RK4 else _kernels.METHOD_DOPRI5
    h0 = cfg.fixed_step if cfg.method == FIXED_RK4 else cfg.initial_step
    t_reached = _kernels.solve(model, par, np.ascontiguousarray(y0, dtype=complex),
                               breaks, levels, ts, out, method, cfg.rel_tol,
                               cfg.abs_tol, h0, cfg.max_step, cfg.max_steps, stats)
    info = {"accepted_steps": int(stats[0]), "rejected_steps": int(stats[1]),
            "rhs_evaluations": int(stats[2])}
    status = int(stats[3])
    if status != _kernels.STATUS_OK:
        reason = {
            _kernels.STATUS_UNDERFLOW: "step size underflow",
            _kernels.STATUS_NAN: "non-finite state",
            _kernels.STATUS_MAX_STEPS: "step budget exhausted",
        }[status]
        raise IntegrationError(
            f"{MODEL_NAMES[model]} integration aborted at t={t_reached:.17g}: {reason} "
            f"({info['accepted_steps']} accepted, {info['rejected_steps']} rejected)",
            time=float(t_reached), stats=info)
    return out, info


def step_across_discontinuities(model: int, q: QubitParams, r: DriveRealization,
                                y0: np.ndarray, t_span, cfg: IntegratorConfig,
                                ts: Union[np.ndarray, None] = None) -> Trajectory:
    """Integrate ``model`` over ``t_span``, restarting at every drive flip.

    The returned trajectory is sampled on ``ts`` (default: a uniform grid
    with spacing ``cfg.dense_output_stride``).
    """
    t0, t1 = _check_span(r, t_span)
    breaks, levels = segments(r, t0, t1)
    if ts is None:
        stride = cfg.dense_output_stride or auto_stride(q, r, t0, t1)
        ts = sample_times(t0, t1, stride)
    ts = np.ascontiguousarray(ts, dtype=float)
    par = kernel_params(q.delta, q.gamma, q.omega0_carrier, r.spec)
    out, info = _solve(model, par, y0, breaks, levels, ts, cfg)
    d = discontinuities(r)
    meta = {
        "model": MODEL_NAMES[model],
        "integrator": cfg.describe(),
        "step_statistics": info,
        "restarts": int(np.count_nonzero((d > t0) & (d <= t1))),
        "segments": len(breaks) - 1,
        "t_span": [t0, t1],
        "qubit": {"delta": q.delta, "gamma": q.gamma,
                  "omega0_carrier": None if math.isinf(q.omega0_carrier) else q.omega0_carrier},
        "drive": describe(r.spec),
    }
    states = out.real.copy() if model == _kernels.MODEL_BLOCH else out
    return Trajectory(ts, states, MODEL_NAMES[model], meta)


def integrate_schrodinger(q: QubitParams, r: DriveRealization, init: StateVector,
                          t_span, cfg: IntegratorConfig = IntegratorConfig(),
                          ts=None) -> Trajectory:
    """Solve the damped Schrodinger-like equation."""
    return step_across_discontinuities(_kernels.MODEL_SCHRODINGER, q, r,
                                       init.as_array(), t_span, cfg, ts)


def integrate_bloch(q: QubitParams, r: DriveRealization, init: BlochVector,
                    t_span, cfg: IntegratorConfig = IntegratorConfig(),
                    ts=None) -> Trajectory:
    """Solve ``dX/dt = B x X - gamma X``."""
    y0 = init.as_array().astype(complex)
    return step_across_discontinuities(_kernels.MODEL_BLOCH, q, r, y0, t_span, cfg, ts)


def consistent_exact_state(q: QubitParams, bias: float, psi: StateVector) -> ExactState:
    """Exact-model initial condition whose derivative follows the reduced dynamics.

    ``dpsi/dt(0) = -i H(0) psi(0) - gamma/2 psi(0)``. A zero initial derivative
    would instead excite the fast root near ``-2i W0``.
    """
    p = psi.as_array()
    h = 0.5 * np.array([[bias, q.delta], [q.delta, -bias]])
    d = -1j * h @ p - 0.5 * q.gamma * p
    return ExactState(psi, (complex(d[0]), complex(d[1])))


def integrate_exact(q: QubitParams, r: DriveRealization,
                    init: Union[ExactState, StateVector], t_span,
                    cfg: IntegratorConfig = IntegratorConfig(), ts=None) -> Trajectory:
    """Solve the full second-order envelope equation with carrier ``W0``.

    A bare :class:`StateVector` initial condition is completed with
    :func:`consistent_exact_state`.
    """
    w0 = q.omega0_carrier
    if not (math.isfinite(w0) and w0 > 0):
        raise ValueError("the exact model needs a finite carrier frequency omega0_carrier")
    if r.spec.omega > 0.1 * w0:
        warnings.warn(
            f"drive frequency {r.spec.omega:g} exceeds 0.1 x carrier {w0:g}; "
            "envelope comparison is not meaningful", stacklevel=2)
    if isinstance(init, StateVector):
        t0 = float(t_span[0])
        init = consistent_exact_state(q, bias_at(r, t0), init)
    return step_across_discontinuities(_kernels.MODEL_EXACT, q, r, init.as_array(),
                                       t_span, cfg, ts)


def constant_propagator(delta: float, eps: float, gamma: float, t: float) -> np.ndarray:
    """Closed-form ``exp(-i H t - gamma t / 2)`` for a constant bias."""
    w = math.hypot(delta, eps)
    if w == 0:
        u = np.eye(2, dtype=complex)
    else:
        c = math.cos(0.5 * w * t)
        s = math.sin(0.5 * w * t)
        nx, nz = delta / w, eps / w
        u = np.array([[c - 1j * s * nz, -1j * s * nx],
                      [-1j * s * nx, c + 1j * s * nz]])
    return u * math.exp(-0.5 * gamma * t)
