"""Measured quantities: eigenmode occupation, time averages, interferograms.

The central object is :func:`run_sweep`, which maps a 2-D grid of drive
parameters onto the time-averaged upper-mode occupation. Cells are independent
and deterministic, so the result does not depend on the worker count or on the
order in which cells finish.
"""

from __future__ import annotations

import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import find_peaks

from . import __version__, _kernels
from .analytic import lorentzian_average, mixing_angle
from .drive import (RNG_ALGORITHM, DriveSpec, Rectangular, Sinusoidal, Telegraph,
                    describe, kernel_params, realize, segments)
from .dynamics import (IntegrationError, IntegratorConfig, StateVector, Trajectory,
                       consistent_exact_state, format_float, write_columns_csv)
from .model import QubitParams

MODELS = ("exact", "schrodinger", "bloch", "analytic")
Y_AXES = ("amplitude", "drive_frequency", "switching_rate")
DRIVE_KINDS = ("sinusoidal", "rectangular", "telegraph")
BASES = ("eigen", "diabatic")

#: Output samples per period of the fastest envelope frequency.
SAMPLES_PER_PERIOD = 20
#: Minimum number of samples in an averaging window.
MIN_WINDOW_SAMPLES = 200


class SweepFailure(RuntimeError):
    """More cells failed than the failure budget allows."""

    def __init__(self, message, interferogram=None):
        super().__init__(message)
        self.interferogram = interferogram


# --------------------------------------------------------------------------
# eigenbasis


def readout_angle(delta: float, eps0: float, basis: str = "eigen") -> float:
    """Rotation angle defining ``psi_+`` for a readout basis.

    ``"eigen"`` diagonalizes the static Hamiltonian; ``"diabatic"`` picks the
    uncoupled mode that is upper at bias ``eps0`` (``psi_1`` for ``eps0 >= 0``).
    """
    if basis == "eigen":
        if delta == 0 and eps0 == 0:
            raise ValueError("eigenbasis undefined for delta = eps0 = 0")
        return mixing_angle(delta, eps0)
    if basis == "diabatic":
        return 0.0 if eps0 >= 0 else math.pi
    raise ValueError(f"unknown basis {basis!r}")


def to_eigenbasis(s: StateVector, q: QubitParams, eps0: float) -> tuple[complex, complex]:
    """Return ``(psi_minus, psi_plus)``; the rotation is orthogonal."""
    th = readout_angle(q.delta, eps0)
    c, sn = math.cos(0.5 * th), math.sin(0.5 * th)
    return -sn * s.psi1 + c * s.psi2, c * s.psi1 + sn * s.psi2


def from_eigenbasis(psi_minus: complex, psi_plus: complex, q: QubitParams,
                    eps0: float) -> StateVector:
    th = readout_angle(q.delta, eps0)
    c, sn = math.cos(0.5 * th), math.sin(0.5 * th)
    return StateVector(complex(c * psi_plus - sn * psi_minus),
                       complex(sn * psi_plus + c * psi_minus))


def lower_state(theta: float) -> np.ndarray:
    """Amplitudes of ``psi_-`` (the state with ``psi_+ = 0``)."""
    return np.array([-math.sin(0.5 * theta), math.cos(0.5 * theta)], dtype=complex)


def upper_occupation(psi: np.ndarray, theta: float) -> np.ndarray:
    """``|psi_+|^2`` for ``(n, 2)`` amplitudes."""
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    return np.abs(c * psi[:, 0] + s * psi[:, 1]) ** 2


def upper_occupation_bloch(X: np.ndarray, theta: float) -> np.ndarray:
    """Bloch-vector form of ``|psi_+|^2``: ``(|X| + n.X)/2``."""
    n = np.array([math.sin(theta), 0.0, math.cos(theta)])
    return 0.5 * (np.linalg.norm(X, axis=1) + X @ n)


@dataclass
class OccupationSeries:
    times: np.ndarray
    occupation: np.ndarray
    norm: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.occupation = np.asarray(self.occupation, dtype=float)
        if self.times.shape != self.occupation.shape:
            raise ValueError("times and occupation differ in length")


def occupation_series(traj: Trajectory, q: QubitParams, eps0: float,
                      basis: str = "eigen", renormalize: bool = False) -> OccupationSeries:
    """Upper-mode occupation along a trajectory.

    The raw value decays with the norm; ``renormalize`` divides by it.
    """
    th = readout_angle(q.delta, eps0, basis)
    if traj.model == "bloch":
        occ = upper_occupation_bloch(traj.states, th)
    else:
        occ = upper_occupation(traj.psi, th)
    norm = traj.norm()
    if renormalize:
        occ = occ / norm
    return OccupationSeries(traj.times, occ, norm)


def time_average(series: OccupationSeries, window: float, t_start: float = 0.0) -> float:
    """Trapezoidal mean of the series over ``[t_start, t_start + window]``.

    Raises
    ------
    ValueError
        If the window is not covered, or samples inside it are more than
        ``window/100`` apart.
    """
    if not window > 0:
        raise ValueError("window must be positive")
    t = series.times
    t_end = t_start + window
    tol = 1e-9 * max(window, abs(t_end))
    if t[0] > t_start + tol or t[-1] < t_end - tol:
        raise ValueError(f"window [{t_start}, {t_end}] not covered by the series "
                         f"[{t[0]}, {t[-1]}]")
    mask = (t >= t_start - tol) & (t <= t_end + tol)
    tw = t[mask]
    yw = series.occupation[mask]
    if len(tw) < 2:
        raise ValueError("fewer than two samples inside the window")
    gaps = np.diff(np.concatenate(([t_start], tw, [t_end])))
    if gaps.max() > window / 100 * (1 + 1e-9):
        raise ValueError(f"sampling stride {gaps.max():.3g} exceeds window/100; "
                         "resample the trajectory more densely")
    if tw[0] > t_start:
        tw = np.concatenate(([t_start], tw))
        yw = np.concatenate(([np.interp(t_start, t, series.occupation)], yw))
    if tw[-1] < t_end:
        tw = np.concatenate((tw, [t_end]))
        yw = np.concatenate((yw, [np.interp(t_end, t, series.occupation)]))
    return float(np.trapezoid(yw, tw) / (tw[-1] - tw[0]))


def reconstruct_displacement(traj: Trajectory, q: QubitParams) -> tuple[np.ndarray, np.ndarray]:
    """Oscillator coordinates ``u_i = Re(psi_i exp(i W0 t))``."""
    w = q.omega0_carrier
    if not math.isfinite(w):
        raise ValueError("reconstruction needs a finite carrier frequency")
    ph = np.exp(1j * w * traj.times)
    p = traj.psi
    return (p[:, 0] * ph).real, (p[:, 1] * ph).real


def reconstruct_velocity(traj: Trajectory, q: QubitParams) -> tuple[np.ndarray, np.ndarray]:
    """``du_i/dt`` from an exact-model trajectory (needs ``dpsi/dt``)."""
    w = q.omega0_carrier
    ph = np.exp(1j * w * traj.times)
    p, dp = traj.psi, traj.dpsi_dt
    v = (dp + 1j * w * p) * ph[:, None]
    return v[:, 0].real, v[:, 1].real


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepGrid:
    """Grid of ``eps0`` (columns) against a drive parameter (rows).

    The drive parameter not on the y axis is taken from ``amplitude``,
    ``omega`` or ``chi``.
    """

    x_values: tuple
    y_values: tuple
    y_axis: str
    drive_kind: str
    qubit: QubitParams
    window: float
    amplitude: float = 0.0
    omega: float = 0.0
    chi: float = 0.0
    model: str = "schrodinger"
    basis: str = "eigen"
    n_realizations: int = 1
    base_seed: int = 0
    t_start: float = 0.0
    carrier_ratio: float = 100.0
    renormalize: bool = False
    x_axis: str = "eps0"

    def __post_init__(self):
        object.__setattr__(self, "x_values", tuple(float(v) for v in self.x_values))
        object.__setattr__(self, "y_values", tuple(float(v) for v in self.y_values))
        for name in ("x_values", "y_values"):
            v = np.asarray(getattr(self, name))
            if v.size == 0:
                raise ValueError(f"{name} is empty")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            d = np.diff(v)
            if v.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError(f"{name} must be strictly monotone")
        if self.x_axis != "eps0":
            raise ValueError("only eps0 is supported on the x axis")
        if self.y_axis not in Y_AXES:
            raise ValueError(f"y_axis must be one of {Y_AXES}")
        if self.drive_kind not in DRIVE_KINDS:
            raise ValueError(f"drive_kind must be one of {DRIVE_KINDS}")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}")
        if not self.window > 0 or self.t_start < 0:
            raise ValueError("window must be positive and t_start non-negative")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not 0 <= int(self.base_seed) < 2 ** 64:
            raise ValueError("base_seed must be an unsigned 64-bit integer")
        if (self.y_axis == "switching_rate") != (self.drive_kind == "telegraph"):
            raise ValueError("the switching_rate axis goes with the telegraph drive")
        if self.model == "analytic" and self.drive_kind != "sinusoidal":
            raise ValueError("the analytic model covers sinusoidal driving only")
        if self.model == "exact" and not self.carrier_ratio > 1:
            raise ValueError("carrier_ratio must exceed 1")
        # validate one representative cell drive
        self.cell_drive(0, 0)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.y_values), len(self.x_values)

    def cell_drive(self, i: int, j: int, seed: int = 0) -> DriveSpec:
        eps0 = self.x_values[j]
        y = self.y_values[i]
        A = y if self.y_axis == "amplitude" else self.amplitude
        w = y if self.y_axis == "drive_frequency" else self.omega
        if self.drive_kind == "sinusoidal":
            return DriveSpec(eps0, Sinusoidal(A, w))
        if self.drive_kind == "rectangular":
            return DriveSpec(eps0, Rectangular(A, w))
        return DriveSpec(eps0, Telegraph(A, y, seed))

    def realizations(self) -> int:
        return self.n_realizations if self.drive_kind == "telegraph" else 1

    def describe(self) -> dict:
        return {
            "x_axis": self.x_axis,
            "y_axis": self.y_axis,
            "x_values": list(self.x_values),
            "y_values": list(self.y_values),
            "drive_kind": self.drive_kind,
            "amplitude": self.amplitude,
            "omega": self.omega,
            "model": self.model,
            "basis": self.basis,
            "window": self.window,
            "t_start": self.t_start,
            "n_realizations": self.realizations(),
            "base_seed": int(self.base_seed),
            "carrier_ratio": self.carrier_ratio,
            "renormalize": self.renormalize,
            "qubit": {"delta": self.qubit.delta, "gamma": self.qubit.gamma},
        }


def cell_seed(base_seed: int, i: int, j: int, r: int) -> int:
    """Deterministic 64-bit sub-seed for realization ``r`` of cell ``(i, j)``."""
    ss = np.random.SeedSequence([int(base_seed), i, j, r])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class Interferogram:
    grid: SweepGrid
    values: np.ndarray
    n_failures: np.ndarray
    steps: np.ndarray
    diagnostics: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def row(self, i: int) -> np.ndarray:
        return self.values[i]

    def write_csv(self, path) -> None:
        """Matrix layout: header row of x values, then ``y, v_1, ..., v_n`` rows."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(["y\\x"] + [format_float(x) for x in self.grid.x_values]) + "\n")
            for y, row in zip(self.grid.y_values, self.values):
                fh.write(",".join([format_float(y)] + [format_float(v) for v in row]) + "\n")

    def write_long_csv(self, path) -> None:
        ny, nx = self.values.shape
        xs = np.tile(self.grid.x_values, ny)
        ys = np.repeat(self.grid.y_values, nx)
        write_columns_csv(path, ["x", "y", "value", "n_failures"],
                          [xs, ys, self.values.ravel(), self.n_failures.ravel()])

    def write_metadata(self, path) -> None:
        meta = dict(self.metadata)
        meta["grid"] = self.grid.describe()
        meta["diagnostics"] = self.diagnostics
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


_MODEL_CODE = {
    "schrodinger": _kernels.MODEL_SCHRODINGER,
    "bloch": _kernels.MODEL_BLOCH,
    "exact": _kernels.MODEL_EXACT,
}


def sample_stride(delta: float, eps0: float, A: float, window: float,
                  requested: float | None = None) -> float:
    fmax = math.hypot(delta, abs(eps0) + A)
    stride = window / MIN_WINDOW_SAMPLES
    if fmax > 0:
        stride = min(stride, 2 * math.pi / (SAMPLES_PER_PERIOD * fmax))
    if requested is not None:
        if requested > window / 100:
            raise ValueError("dense_output_stride exceeds window/100")
        stride = min(stride, requested)
    return stride


def _realization_average(grid: SweepGrid, spec: DriveSpec, cfg: IntegratorConfig,
                         ts: np.ndarray, theta: float) -> tuple[float, int]:
    """Time-averaged occupation for one drive realization."""
    q = grid.qubit
    t_end = grid.t_start + grid.window
    r = realize(spec, t_end)
    breaks, levels = segments(r, 0.0, t_end)
    model = _MODEL_CODE[grid.model]
    carrier = q.omega0_carrier
    if grid.model == "exact":
        w = spec.omega if not isinstance(spec.variant, Telegraph) else spec.variant.chi
        carrier = grid.carrier_ratio * max(w, math.hypot(q.delta, spec.eps0))
    par = kernel_params(q.delta, q.gamma, carrier, spec)
    psi0 = lower_state(theta)
    if model == _kernels.MODEL_BLOCH:
        n = np.array([math.sin(theta), 0.0, math.cos(theta)])
        y0 = (-n).astype(complex)
    elif model == _kernels.MODEL_EXACT:
        qc = QubitParams(q.delta, q.gamma, carrier)
        y0 = consistent_exact_state(qc, spec.eps0 + _initial_offset(spec),
                                    StateVector.from_array(psi0)).as_array()
    else:
        y0 = psi0
    out = np.empty((len(ts), len(y0)), dtype=complex)
    stats = np.zeros(4, dtype=np.int64)
    method = _kernels.METHOD_RK4 if cfg.method == "fixed-RK4" else _kernels.METHOD_DOPRI5
    h0 = cfg.fixed_step if cfg.method == "fixed-RK4" else cfg.initial_step
    t_reached = _kernels.solve(model, par, y0, breaks, levels, ts, out, method,
                               cfg.rel_tol, cfg.abs_tol, h0, cfg.max_step,
                               cfg.max_steps, stats)
    if stats[3] != _kernels.STATUS_OK:
        raise IntegrationError(f"status {int(stats[3])} at t={t_reached:.17g}",
                               time=float(t_reached),
                               stats={"accepted_steps": int(stats[0]),
                                      "rejected_steps": int(stats[1])})
    if model == _kernels.MODEL_BLOCH:
        X = out.real
        occ = upper_occupation_bloch(X, theta)
        norm = np.linalg.norm(X, axis=1)
    else:
        occ = upper_occupation(out[:, :2], theta)
        norm = np.sum(np.abs(out[:, :2]) ** 2, axis=1)
    if grid.renormalize:
        occ = occ / norm
    val = time_average(OccupationSeries(ts, occ), grid.window, grid.t_start)
    return val, int(stats[0])


def _initial_offset(spec: DriveSpec) -> float:
    """``eps1(0)``: zero except for the rectangular (+A) and telegraph branches."""
    v = spec.variant
    if isinstance(v, Rectangular):
        return v.amplitude
    if isinstance(v, Telegraph):
        return v.amplitude if v.start_positive else -v.amplitude
    return 0.0


def compute_cell(grid: SweepGrid, cfg: IntegratorConfig, i: int, j: int) -> tuple[float, int, int, list]:
    """Return ``(value, n_failures, accepted_steps, messages)`` for cell ``(i, j)``.

    For telegraph drives the value is the mean over the realizations that
    succeeded; the cell fails only if all of them do.
    """
    q = grid.qubit
    eps0 = grid.x_values[j]
    if grid.model == "analytic":
        spec = grid.cell_drive(i, j)
        v = lorentzian_average(q, eps0, spec.amplitude, spec.omega)
        return v, 0, 0, []
    theta = readout_angle(q.delta, eps0, grid.basis)
    spec0 = grid.cell_drive(i, j)
    stride = sample_stride(q.delta, eps0, spec0.amplitude, grid.window,
                           cfg.dense_output_stride)
    t_end = grid.t_start + grid.window
    n = int(math.ceil((t_end - grid.t_start) / stride - 1e-9)) + 1
    ts = np.linspace(grid.t_start, t_end, n)
    if grid.t_start > 0:
        ts = np.concatenate(([0.0], ts))
    vals = []
    steps = 0
    fails = 0
    msgs = []
    for r in range(grid.realizations()):
        spec = spec0
        if grid.drive_kind == "telegraph":
            spec = grid.cell_drive(i, j, cell_seed(grid.base_seed, i, j, r))
        try:
            v, s = _realization_average(grid, spec, cfg, ts, theta)
        except (IntegrationError, ValueError, FloatingPointError) as exc:
            fails += 1
            msgs.append(f"realization {r}: {exc}")
            continue
        vals.append(v)
        steps += s
    if not vals:
        return math.nan, fails, steps, msgs
    return math.fsum(vals) / len(vals), fails, steps, msgs


def run_sweep(grid: SweepGrid, cfg: IntegratorConfig = IntegratorConfig(),
              parallelism: int | None = None, failure_budget: float = 0.01,
              progress=None) -> Interferogram:
    """Time-averaged upper-mode occupation on every grid cell.

    Each cell starts in ``psi_-`` (``psi_+(0) = 0``), integrates the selected
    model over ``[0, t_start + window]`` and averages ``|psi_+|^2`` over the
    window. Cells run on a thread pool (the compiled kernels release the GIL).

    Raises
    ------
    SweepFailure
        If the fraction of failed cells exceeds ``failure_budget``. The
        partial interferogram is attached to the exception.
    """
    ny, nx = grid.shape
    if parallelism is None:
        parallelism = os.cpu_count() or 1
    parallelism = max(1, int(parallelism))
    values = np.full((ny, nx), np.nan)
    n_fail = np.zeros((ny, nx), dtype=np.int64)
    steps = np.zeros((ny, nx), dtype=np.int64)
    diagnostics = []
    cells = [(i, j) for i in range(ny) for j in range(nx)]
    t0 = time.perf_counter()

    def work(ij):
        return ij, compute_cell(grid, cfg, *ij)

    done = 0
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        for (i, j), (v, nf, st, msgs) in pool.map(work, cells):
            values[i, j] = v
            n_fail[i, j] = nf
            steps[i, j] = st
            if msgs:
                diagnostics.append({"cell": [i, j], "x": grid.x_values[j],
                                    "y": grid.y_values[i], "messages": msgs})
            done += 1
            if progress is not None:
                progress(done, len(cells))
    wall = time.perf_counter() - t0
    failed = int(np.count_nonzero(~np.isfinite(values)))
    meta = {
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_time_s": wall,
        "parallelism": parallelism,
        "integrator": cfg.describe(),
        "rng_algorithm": RNG_ALGORITHM if grid.drive_kind == "telegraph" else None,
        "sub_seed_rule": "SeedSequence([base_seed, i, j, r]).generate_state(1, uint64)[0]",
        "failed_cells": failed,
        "failure_budget": failure_budget,
        "template_drive": describe(grid.cell_drive(0, 0)),
    }
    ig = Interferogram(grid, values, n_fail, steps, diagnostics, meta)
    if failed > failure_budget * len(cells):
        raise SweepFailure(f"{failed} of {len(cells)} cells failed "
                           f"(budget {failure_budget:.1%})", ig)
    return ig


def with_model(grid: SweepGrid, model: str) -> SweepGrid:
    return replace(grid, model=model)


# --------------------------------------------------------------------------
# peaks


def smooth3(row: np.ndarray) -> np.ndarray:
    """3-point moving average with edge padding."""
    p = np.pad(np.asarray(row, dtype=float), 1, mode="edge")
    return (p[:-2] + p[1:-1] + p[2:]) / 3.0


def find_row_peaks(row, rel_prominence: float = 0.1, floor: float = 1e-3) -> np.ndarray:
    """Indices of local maxima after 3-point smoothing.

    Peaks need prominence of at least ``rel_prominence`` times the smoothed row
    maximum. Rows whose smoothed maximum is below ``floor`` have no peaks.
    """
    s = smooth3(row)
    top = float(np.nanmax(s)) if s.size else 0.0
    if not top > floor:
        return np.empty(0, dtype=int)
    idx, _ = find_peaks(np.nan_to_num(s, nan=0.0), prominence=rel_prominence * top)
    return idx
