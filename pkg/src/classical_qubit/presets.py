"""Built-in run configurations.

Reduced units: ``delta = 1`` sets the frequency scale unless a preset carries
an ``oscillator`` block, in which case all rates are in rad/s.

Ranges and grid sizes are chosen so the main fringe features fall well inside
the grid at 101 x 101 resolution. Readout basis per preset:

* ``eigen`` for slow or adiabatic driving (rabi, fig3b, fig3c), where the
  eigenmodes of the static Hamiltonian are the natural states;
* ``diabatic`` for fast passages and piecewise-constant drives (fig3a, fig4,
  fig5, fig6), where the static-bias eigenbasis mixes the two branches the
  drive visits.
"""

from __future__ import annotations

import copy
import math

import numpy as np

from .model import OscillatorParams, reduce_to_qubit

SCHEMA_VERSION = 1

TWO_PI = 2 * math.pi


def _axis(start, stop, num):
    return {"start": float(start), "stop": float(stop), "num": int(num)}


def _fig2():
    # eps0 = 5 delta, drive at the splitting w = sqrt(26) delta,
    # amplitude 0.7 w, damping 0.006 w; about five Rabi periods.
    w = math.sqrt(26.0)
    return {
        "experiment": "rabi",
        "model": "all",
        "qubit": {"delta": 1.0, "gamma": 0.006 * w},
        "drive": {"kind": "sinusoidal", "eps0": 5.0, "amplitude": 0.7 * w, "omega": w},
        "time": {"t_max": 100.0},
        "carrier_ratio": 100.0,
        "rabi": {"k": 1, "detuning_reference": "splitting", "basis": "eigen"},
    }


def _lzsm_amp(omega, gamma_factor, periods, x_ratio, y_ratio, basis):
    # gamma = gamma_factor * omega / 2pi, averaging window = periods * 2pi / omega
    return {
        "experiment": "lzsm-amp",
        "model": "schrodinger",
        "qubit": {"delta": 1.0, "gamma": gamma_factor * omega / TWO_PI},
        "drive": {"kind": "sinusoidal", "omega": omega},
        "grid": {
            "x": _axis(-x_ratio * omega, x_ratio * omega, 101),
            "y": _axis(0.0, y_ratio * omega, 101),
            "y_axis": "amplitude",
            "basis": basis,
            "window": periods * TWO_PI / omega,
        },
    }


def _fig4():
    A = 10.0
    return {
        "experiment": "lzsm-freq",
        "model": "schrodinger",
        "qubit": {"delta": 1.0, "gamma": 0.001},
        "drive": {"kind": "sinusoidal", "amplitude": A},
        "grid": {
            "x": _axis(-1.5 * A, 1.5 * A, 101),
            "y": _axis(0.02 * A, 1.0 * A, 101),
            "y_axis": "drive_frequency",
            "basis": "diabatic",
            "window": 100.0,
        },
    }


def _fig5():
    A = 15.0
    return {
        "experiment": "latching",
        "model": "schrodinger",
        "qubit": {"delta": 1.0, "gamma": 0.001},
        "drive": {"kind": "rectangular", "amplitude": A},
        "grid": {
            "x": _axis(-2.5 * A, 2.5 * A, 101),
            "y": _axis(0.01 * A, 1.0 * A, 100),
            "y_axis": "drive_frequency",
            "basis": "diabatic",
            "window": 100.0,
        },
    }


def _fig6():
    A = 10.0
    window = 20.0
    chis = [r * A for r in (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)]
    return {
        "experiment": "motional",
        "model": "schrodinger",
        "qubit": {"delta": 1.0, "gamma": 0.1 / window},
        "drive": {"kind": "telegraph", "amplitude": A},
        "grid": {
            "x": _axis(-2.0 * A, 2.0 * A, 101),
            "y": {"values": chis},
            "y_axis": "switching_rate",
            "basis": "diabatic",
            "window": window,
            "n_realizations": 100,
        },
        "seed": 0,
    }


def _faust12():
    # Nanomechanical two-mode beam: m = 1e-15 kg (see README on the mass unit),
    # k0 = 3 N/m, kc = 0.003 N/m, gamma = 80 Hz*2pi. The drive repeats the
    # fig2-rabi ratios in rad/s.
    osc = OscillatorParams(1e-15, 3.0, 0.003, TWO_PI * 80.0)
    q, _ = reduce_to_qubit(osc)
    d = q.delta
    w = math.sqrt(26.0) * d
    return {
        "experiment": "rabi",
        "model": "all",
        "oscillator": {"m": osc.m, "k0": osc.k0, "kc": osc.kc, "gamma": "80 Hz"},
        "drive": {"kind": "sinusoidal", "eps0": 5.0 * d, "amplitude": 0.7 * w, "omega": w},
        "time": {"t_max": 100.0 / d},
        "rabi": {"k": 1, "detuning_reference": "splitting", "basis": "eigen"},
    }


def _lz_single():
    # adiabaticity 0.3, sweep across +-50 delta
    v = 1.0 / (4 * 0.3)
    return {
        "experiment": "lz-single",
        "model": "schrodinger",
        "qubit": {"delta": 1.0, "gamma": 0.0},
        "drive": {"kind": "linear", "eps0": 0.0, "rate": v, "t_center": 50.0 / v},
        "time": {"t_max": 100.0 / v},
        "integrator": {"rel_tol": 1e-10, "abs_tol": 1e-12},
    }


def _stuckelberg():
    return {
        "experiment": "stuckelberg",
        "model": "schrodinger",
        "qubit": {"delta": 1.0, "gamma": 0.0},
        "drive": {"kind": "sinusoidal", "eps0": 5.0, "amplitude": 30.0, "omega": 1.0},
        "integrator": {"rel_tol": 1e-10, "abs_tol": 1e-12},
    }


_BUILDERS = {
    "fig2-rabi": _fig2,
    "fig3a": lambda: _lzsm_amp(2.0, 0.02, 50, 6, 6, "diabatic"),
    "fig3b": lambda: _lzsm_amp(1 / 3, 0.1, 8, 30, 30, "eigen"),
    "fig3c": lambda: _lzsm_amp(1 / 3, 1.0, 1, 30, 30, "eigen"),
    "fig4-freq": _fig4,
    "fig5-latching": _fig5,
    "fig6-motional": _fig6,
    "faust12-like": _faust12,
    "lz-single": _lz_single,
    "stuckelberg": _stuckelberg,
}

NAMES = tuple(_BUILDERS)


def get(name: str) -> dict:
    """A fresh copy of preset ``name``."""
    if name not in _BUILDERS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(NAMES)}")
    cfg = copy.deepcopy(_BUILDERS[name]())
    cfg["schema_version"] = SCHEMA_VERSION
    cfg["preset"] = name
    return cfg


def axis_values(spec: dict) -> np.ndarray:
    if "values" in spec:
        return np.asarray(spec["values"], dtype=float)
    return np.linspace(spec["start"], spec["stop"], spec["num"])
