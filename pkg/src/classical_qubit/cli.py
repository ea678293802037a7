"""Command-line front end.

Usage::

    classical-qubit run --preset fig3c --out results/
    classical-qubit run --config my_run.json --parallelism 8
    classical-qubit validate --preset fig2-rabi
    classical-qubit presets
    classical-qubit schema

Exit codes: 0 success, 2 invalid configuration, 3 regime violation for the
exact model (override with ``--force``), 4 integration failure or failure
budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, analytic, presets
from .drive import (RNG_ALGORITHM, DriveSpec, LinearSweep, Rectangular, Sinusoidal,
                    Telegraph, describe, realize)
from .dynamics import (ADAPTIVE, FIXED_RK4, BlochVector, IntegrationError, IntegratorConfig,
                       StateVector, integrate_bloch, integrate_exact,
                       integrate_schrodinger, sample_times, write_columns_csv)
from .model import (OscillatorParams, ParameterError, QubitParams, carrier_frequency,
                    reduce_to_qubit, regime_report, to_hz)
from .observables import (SweepFailure, SweepGrid, lower_state, occupation_series,
                          readout_angle, run_sweep)

OUT_ENV = "CLASSICAL_QUBIT_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_FAILURE = 4

TRAJECTORY_EXPERIMENTS = ("rabi", "lz-single", "stuckelberg")
SWEEP_EXPERIMENTS = ("lzsm-amp", "lzsm-freq", "latching", "motional")
ANALYTIC_EXPERIMENTS = ("analytic-eigen", "analytic-lz", "analytic-stokes",
                        "analytic-stuckelberg", "analytic-rabi", "analytic-lorentzian",
                        "analytic-bessel")
EXPERIMENTS = TRAJECTORY_EXPERIMENTS + SWEEP_EXPERIMENTS + ANALYTIC_EXPERIMENTS

_UNITS = {"rad/s": 1.0, "Hz": 2 * math.pi, "kHz": 2e3 * math.pi,
          "MHz": 2e6 * math.pi, "GHz": 2e9 * math.pi}

_RATE = {"anyOf": [{"type": "number"},
                   {"type": "string", "pattern": r"^\s*[-+0-9.eE]+\s*(rad/s|Hz|kHz|MHz|GHz)\s*$"}]}
_NUM = {"type": "number"}
_AXIS = {
    "type": "object",
    "properties": {"start": _NUM, "stop": _NUM, "num": {"type": "integer", "minimum": 1},
                   "values": {"type": "array", "items": _NUM, "minItems": 1}},
    "oneOf": [{"required": ["start", "stop", "num"]}, {"required": ["values"]}],
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "classical-qubit run configuration",
    "type": "object",
    "required": ["experiment"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": presets.SCHEMA_VERSION},
        "preset": {"type": "string"},
        "notes": {"type": "string"},
        "experiment": {"enum": list(EXPERIMENTS)},
        "model": {"enum": ["exact", "schrodinger", "bloch", "analytic", "all"]},
        "oscillator": {
            "type": "object", "required": ["m", "k0", "kc"], "additionalProperties": False,
            "properties": {"m": _NUM, "k0": _NUM, "kc": _NUM, "gamma": _RATE},
        },
        "qubit": {
            "type": "object", "additionalProperties": False,
            "properties": {"delta": _RATE, "gamma": _RATE, "omega0_carrier": _RATE},
        },
        "drive": {
            "type": "object", "required": ["kind"], "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["constant", "sinusoidal", "rectangular", "telegraph", "linear"]},
                "eps0": _RATE, "amplitude": _RATE, "omega": _RATE, "chi": _RATE,
                "rate": _NUM, "t_center": _NUM, "seed": {"type": "integer", "minimum": 0},
                "start_positive": {"type": "boolean"},
            },
        },
        "time": {
            "type": "object", "additionalProperties": False,
            "properties": {"t_max": _NUM, "stride": _NUM},
        },
        "grid": {
            "type": "object", "required": ["x", "y", "y_axis", "window"],
            "additionalProperties": False,
            "properties": {
                "x": _AXIS, "y": _AXIS,
                "y_axis": {"enum": ["amplitude", "drive_frequency", "switching_rate"]},
                "basis": {"enum": ["eigen", "diabatic"]},
                "window": _NUM, "t_start": _NUM,
                "n_realizations": {"type": "integer", "minimum": 1},
            },
        },
        "integrator": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "method": {"enum": [ADAPTIVE, FIXED_RK4]},
                "rel_tol": _NUM, "abs_tol": _NUM, "max_step": _NUM, "initial_step": _NUM,
                "dense_output_stride": _NUM, "max_steps": {"type": "integer"},
            },
        },
        "rabi": {
            "type": "object", "additionalProperties": False,
            "properties": {"k": {"type": "integer", "minimum": 1},
                           "detuning_reference": {"enum": ["bias", "splitting"]},
                           "basis": {"enum": ["eigen", "diabatic"]}},
        },
        "analytic": {
            "type": "object", "additionalProperties": False,
            "properties": {"k": {"type": "integer", "minimum": 0},
                           "k_max": {"type": "integer", "minimum": 1},
                           "x": {"type": "array", "items": _NUM},
                           "delta_adiab": {"type": "array", "items": _NUM},
                           "eps0": {"type": "array", "items": _NUM}},
        },
        "carrier_ratio": _NUM,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "failure_budget": _NUM,
        "renormalize": {"type": "boolean"},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"prefix": {"type": "string"}}},
    },
}


class ConfigError(ValueError):
    pass


class RegimeError(RuntimeError):
    pass


def parse_rate(value) -> float:
    """Number (rad/s) or string such as ``"7 kHz"`` meaning ``7 kHz*2pi``."""
    if isinstance(value, (int, float)):
        return float(value)
    num, unit = value.split()
    return float(num) * _UNITS[unit]


def load_config(args) -> dict:
    """Merge preset, config file and command-line overrides."""
    if args.config and args.preset:
        raise ConfigError("use either --config or --preset, not both")
    if args.preset:
        try:
            cfg = presets.get(args.preset)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    elif args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from None
        if isinstance(cfg, dict) and "preset" in cfg and "experiment" not in cfg:
            try:
                base = presets.get(cfg.pop("preset"))
            except KeyError as exc:
                raise ConfigError(str(exc)) from None
            cfg = _merge(base, cfg)
    else:
        raise ConfigError("one of --config or --preset is required")
    if getattr(args, "experiment", None):
        cfg["experiment"] = args.experiment
    if getattr(args, "model", None):
        cfg["model"] = args.model
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "renormalize", False):
        cfg["renormalize"] = True
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    return cfg


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class Resolved:
    cfg: dict
    qubit: QubitParams
    oscillator: OscillatorParams | None
    drive: DriveSpec | None
    integrator: IntegratorConfig
    seed: int
    grid: SweepGrid | None = None


def _drive(d: dict, seed: int) -> DriveSpec:
    kind = d["kind"]
    eps0 = parse_rate(d.get("eps0", 0.0))
    A = parse_rate(d.get("amplitude", 0.0))
    w = parse_rate(d.get("omega", 1.0))
    if kind == "sinusoidal":
        return DriveSpec(eps0, Sinusoidal(A, w))
    if kind == "rectangular":
        return DriveSpec(eps0, Rectangular(A, w))
    if kind == "telegraph":
        return DriveSpec(eps0, Telegraph(A, parse_rate(d.get("chi", 1.0)),
                                         int(d.get("seed", seed)),
                                         bool(d.get("start_positive", True))))
    if kind == "linear":
        return DriveSpec(eps0, LinearSweep(float(d["rate"]), float(d.get("t_center", 0.0))))
    return DriveSpec(eps0)


def resolve(cfg: dict) -> Resolved:
    """Build domain objects from a validated config dict."""
    try:
        osc = None
        qd = cfg.get("qubit", {})
        if "oscillator" in cfg:
            o = cfg["oscillator"]
            osc = OscillatorParams(float(o["m"]), float(o["k0"]), float(o["kc"]),
                                   parse_rate(o.get("gamma", 0.0)))
            q, _ = reduce_to_qubit(osc)
            if "gamma" in qd:
                q = QubitParams(q.delta, parse_rate(qd["gamma"]), q.omega0_carrier)
        else:
            carrier = parse_rate(qd.get("omega0_carrier", math.inf))
            q = QubitParams(parse_rate(qd.get("delta", 1.0)), parse_rate(qd.get("gamma", 0.0)),
                            carrier)
        seed = int(cfg.get("seed", 0))
        icfg = IntegratorConfig(**cfg.get("integrator", {}))
        drive = None
        grid = None
        exp = cfg["experiment"]
        if "drive" in cfg:
            d = dict(cfg["drive"])
            if exp in SWEEP_EXPERIMENTS or exp == "analytic-lorentzian":
                d.setdefault("omega", 1.0)
                d.setdefault("chi", 1.0)
            drive = _drive(d, seed)
        if exp in SWEEP_EXPERIMENTS or exp == "analytic-lorentzian":
            grid = _grid(cfg, q, seed)
        if exp in TRAJECTORY_EXPERIMENTS and drive is None:
            raise ConfigError(f"experiment {exp} needs a drive block")
        if exp == "lz-single" and not isinstance(drive.variant, LinearSweep):
            raise ConfigError("lz-single needs a linear drive")
        if exp in ("rabi", "stuckelberg", "analytic-rabi", "analytic-stuckelberg",
                   "analytic-lz") and (drive is None or not isinstance(drive.variant, Sinusoidal)):
            raise ConfigError(f"{exp} needs a sinusoidal drive")
    except (ParameterError, ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return Resolved(cfg, q, osc, drive, icfg, seed, grid)


_EXPERIMENT_AXIS = {"lzsm-amp": "amplitude", "lzsm-freq": "drive_frequency",
                    "latching": "drive_frequency", "motional": "switching_rate"}
_EXPERIMENT_KIND = {"lzsm-amp": "sinusoidal", "lzsm-freq": "sinusoidal",
                    "latching": "rectangular", "motional": "telegraph"}


def _grid(cfg: dict, q: QubitParams, seed: int) -> SweepGrid:
    g = cfg.get("grid")
    if g is None:
        raise ConfigError("sweep experiments need a grid block")
    exp = cfg["experiment"]
    d = cfg.get("drive", {})
    kind = d.get("kind", _EXPERIMENT_KIND.get(exp, "sinusoidal"))
    if exp in _EXPERIMENT_AXIS:
        if g["y_axis"] != _EXPERIMENT_AXIS[exp]:
            raise ConfigError(f"{exp} sweeps {_EXPERIMENT_AXIS[exp]}, not {g['y_axis']}")
        if kind != _EXPERIMENT_KIND[exp]:
            raise ConfigError(f"{exp} needs a {_EXPERIMENT_KIND[exp]} drive")
    model = cfg.get("model", "schrodinger")
    if exp == "analytic-lorentzian":
        model = "analytic"
    if model == "all":
        raise ConfigError("model 'all' applies to the rabi experiment only")
    return SweepGrid(
        x_values=tuple(presets.axis_values(g["x"])),
        y_values=tuple(presets.axis_values(g["y"])),
        y_axis=g["y_axis"],
        drive_kind=kind,
        qubit=q,
        window=float(g["window"]),
        amplitude=parse_rate(d.get("amplitude", 0.0)),
        omega=parse_rate(d.get("omega", 1.0)),
        model=model,
        basis=g.get("basis", "eigen"),
        n_realizations=int(g.get("n_realizations", 100 if kind == "telegraph" else 1)),
        base_seed=seed,
        t_start=float(g.get("t_start", 0.0)),
        carrier_ratio=float(cfg.get("carrier_ratio", 100.0)),
        renormalize=bool(cfg.get("renormalize", False)),
    )


def exact_carrier(res: Resolved) -> float:
    """Carrier for exact-model runs: the physical one, else ``ratio * max(w, w0)``."""
    if math.isfinite(res.qubit.omega0_carrier):
        return res.qubit.omega0_carrier
    d = res.drive
    w0 = math.hypot(res.qubit.delta, d.eps0)
    return float(res.cfg.get("carrier_ratio", 100.0)) * max(d.omega, w0)


def check_regime(res: Resolved, force: bool) -> list[str]:
    """Messages about the slow-envelope regime; raises without ``force``."""
    exp = res.cfg["experiment"]
    model = res.cfg.get("model", "schrodinger")
    msgs = []
    if model not in ("exact", "all"):
        return msgs
    if exp in TRAJECTORY_EXPERIMENTS:
        W = exact_carrier(res)
        w = max(res.drive.omega, res.qubit.delta)
        rep = regime_report(w, res.qubit.gamma, W)
        msgs = rep.messages
        if res.drive.omega > 0.1 * W and not force:
            raise RegimeError(f"drive frequency {res.drive.omega:g} exceeds 0.1 x carrier "
                              f"{W:g}; pass --force to run anyway")
    elif res.grid is not None and res.grid.carrier_ratio < 10 and not force:
        raise RegimeError("carrier_ratio below 10 puts the drive above 0.1 x carrier; "
                          "pass --force to run anyway")
    return msgs


def describe_resolved(res: Resolved) -> dict:
    """Effective parameters in reduced units and in Hz*2pi."""
    q = res.qubit
    out = {
        "experiment": res.cfg["experiment"],
        "model": res.cfg.get("model", "schrodinger"),
        "seed": res.seed,
        "qubit": {"delta": q.delta, "gamma": q.gamma,
                  "omega0_carrier": None if math.isinf(q.omega0_carrier) else q.omega0_carrier},
        "integrator": res.integrator.describe(),
    }
    if res.oscillator is not None:
        o = res.oscillator
        out["units"] = "rad/s"
        out["oscillator"] = {"m": o.m, "k0": o.k0, "kc": o.kc, "gamma": o.gamma,
                             "carrier_rad_s": carrier_frequency(o)}
    else:
        out["units"] = "reduced (delta = 1)"
    if res.drive is not None:
        out["drive"] = describe(res.drive)
        if res.drive.omega > 0:
            out["ratios"] = {"eps0/delta": res.drive.eps0 / q.delta if q.delta else None,
                             "omega/delta": res.drive.omega / q.delta if q.delta else None,
                             "A/omega": res.drive.amplitude / res.drive.omega,
                             "gamma/omega": q.gamma / res.drive.omega}
    if res.grid is not None:
        out["grid"] = res.grid.describe()
        out["grid"].pop("x_values")
        out["grid"].pop("y_values")
        out["grid"]["x_range"] = [res.grid.x_values[0], res.grid.x_values[-1], len(res.grid.x_values)]
        out["grid"]["y_range"] = [res.grid.y_values[0], res.grid.y_values[-1], len(res.grid.y_values)]
    scale = q.delta if res.oscillator is not None else None
    hz = {"delta": _hz(q.delta), "gamma": _hz(q.gamma)}
    if res.drive is not None:
        hz.update({"eps0": _hz(res.drive.eps0), "amplitude": _hz(res.drive.amplitude),
                   "omega": _hz(res.drive.omega)})
    if scale is not None:
        out["physical_Hz_2pi"] = hz
    else:
        out["reduced_over_2pi"] = hz
    return out


def _hz(x: float) -> str:
    return f"{to_hz(x):.6g} Hz*2pi" if x is not None else None


# --------------------------------------------------------------------------
# runners


def _base_metadata(res: Resolved, args) -> dict:
    return {
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": res.cfg,
        "resolved": describe_resolved(res),
        "seed": res.seed,
        "rng_algorithm": RNG_ALGORITHM,
        "parallelism": getattr(args, "parallelism", None),
    }


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _prefix(res: Resolved) -> str:
    return res.cfg.get("output", {}).get("prefix") or res.cfg.get("preset") or res.cfg["experiment"]


def run_rabi(res: Resolved, out: Path, args) -> str:
    q = res.qubit
    d = res.drive
    t_max = float(res.cfg.get("time", {}).get("t_max", 100.0 / max(q.delta, 1e-300)))
    r = realize(d, t_max)
    rabi = res.cfg.get("rabi", {})
    basis = rabi.get("basis", "eigen")
    renorm = bool(res.cfg.get("renormalize", False))
    stride = res.cfg.get("time", {}).get("stride") or min(
        t_max / 2000, 2 * math.pi / (20 * math.hypot(q.delta, abs(d.eps0) + d.amplitude)))
    ts = sample_times(0.0, t_max, stride)
    th = readout_angle(q.delta, d.eps0, basis)
    init = StateVector.from_array(lower_state(th))
    model = res.cfg.get("model", "all")
    models = ("exact", "schrodinger", "analytic") if model == "all" else (model,)
    cols, header, meta = [ts], ["t"], _base_metadata(res, args)
    meta["runs"] = {}
    for m in models:
        if m == "analytic":
            k = int(rabi.get("k", max(1, round(math.hypot(q.delta, d.eps0) / d.omega))))
            occ = analytic.rabi_occupation(q, d.eps0, d.amplitude, d.omega, k, ts,
                                           damped=not renorm,
                                           detuning_reference=rabi.get("detuning_reference", "bias"))
            meta["runs"]["analytic"] = {"k": k}
        else:
            if m == "exact":
                qq = q.with_carrier(exact_carrier(res))
                traj = integrate_exact(qq, r, init, (0.0, t_max), res.integrator, ts)
            elif m == "bloch":
                n = np.array([math.sin(th), 0.0, math.cos(th)])
                traj = integrate_bloch(q, r, BlochVector(*(-n)), (0.0, t_max), res.integrator, ts)
            else:
                traj = integrate_schrodinger(q, r, init, (0.0, t_max), res.integrator, ts)
            occ = occupation_series(traj, q, d.eps0, basis, renorm).occupation
            path = out / f"{_prefix(res)}_{m}_trajectory.csv"
            traj.write_csv(path)
            traj.write_metadata(path.with_suffix(".json"))
            meta["runs"][m] = traj.metadata
        header.append(f"occ_{m}")
        cols.append(occ)
    path = out / f"{_prefix(res)}.csv"
    write_columns_csv(path, header, cols)
    _write_json(path.with_suffix(".json"), meta)
    return f"rabi: {len(ts)} samples x {len(models)} models -> {path}"


def run_lz_single(res: Resolved, out: Path, args) -> str:
    q = res.qubit
    d = res.drive
    v = d.variant
    t_max = float(res.cfg.get("time", {}).get("t_max", 2 * v.t_center))
    r = realize(d, t_max)
    e_start = d.eps0 + v.rate * (0.0 - v.t_center)
    e_end = d.eps0 + v.rate * (t_max - v.t_center)
    init = StateVector.from_array(lower_state(readout_angle(q.delta, e_start)))
    stride = res.cfg.get("time", {}).get("stride") or t_max / 2000
    traj = integrate_schrodinger(q, r, init, (0.0, t_max), res.integrator,
                                 sample_times(0.0, t_max, stride))
    # a diabatic passage ends in the upper adiabatic state
    occ = occupation_series(traj, q, e_end).occupation
    p_num = float(occ[-1]) / float(traj.norm()[-1])
    p_lz = analytic.lz_probability_rate(q.delta, v.rate)
    path = out / f"{_prefix(res)}.csv"
    traj.write_csv(path)
    meta = _base_metadata(res, args)
    meta.update(traj.metadata)
    meta["result"] = {"p_numeric": p_num, "p_lz": p_lz,
                      "delta_adiab": analytic.lz_params(q.delta, abs(v.rate)).delta_adiab,
                      "relative_error": abs(p_num - p_lz) / p_lz if p_lz > 0 else None}
    _write_json(path.with_suffix(".json"), meta)
    return f"lz-single: P_numeric={p_num:.6g} P_LZ={p_lz:.6g} -> {path}"


def stuckelberg_numeric(q: QubitParams, d: DriveSpec, cfg: IntegratorConfig):
    """Double passage from the bias maximum across the negative lobe and back.

    Returns the trajectory and the final upper-eigenmode occupation.
    """
    w = d.omega
    ta, tb = 0.5 * math.pi / w, 2.5 * math.pi / w
    r = realize(d, tb)
    e_top = d.eps0 + d.amplitude
    init = StateVector.from_array(lower_state(readout_angle(q.delta, e_top)))
    ts = sample_times(ta, tb, (tb - ta) / 2000)
    traj = integrate_schrodinger(q, r, init, (ta, tb), cfg, ts)
    occ = occupation_series(traj, q, e_top).occupation
    return traj, float(occ[-1])


def run_stuckelberg(res: Resolved, out: Path, args) -> str:
    q, d = res.qubit, res.drive
    traj, p_num = stuckelberg_numeric(q, d, res.integrator)
    p_an = analytic.stuckelberg_double_passage(q, d.amplitude, d.omega, d.eps0)
    path = out / f"{_prefix(res)}.csv"
    traj.write_csv(path)
    meta = _base_metadata(res, args)
    meta.update(traj.metadata)
    meta["result"] = {"p_numeric": p_num, "p_formula": p_an,
                      "crossing_times": analytic.crossing_times(d.amplitude, d.omega, d.eps0)}
    _write_json(path.with_suffix(".json"), meta)
    return f"stuckelberg: numeric={p_num:.6g} formula={p_an:.6g} -> {path}"


def run_sweep_experiment(res: Resolved, out: Path, args) -> str:
    grid = res.grid
    budget = float(res.cfg.get("failure_budget", args.failure_budget))
    ig = run_sweep(grid, res.integrator, args.parallelism, budget)
    path = out / f"{_prefix(res)}.csv"
    if args.format == "long-csv":
        ig.write_long_csv(path)
    else:
        ig.write_csv(path)
    meta = _base_metadata(res, args)
    meta.update(ig.metadata)
    meta["output_format"] = args.format
    meta["grid"] = grid.describe()
    meta["diagnostics"] = ig.diagnostics
    _write_json(path.with_suffix(".json"), meta)
    ny, nx = grid.shape
    return (f"{res.cfg['experiment']}: {ny * nx} cells, {meta['failed_cells']} failures, "
            f"{meta['wall_time_s']:.1f} s -> {path}")


def run_analytic(res: Resolved, out: Path, args) -> str:
    exp = res.cfg["experiment"]
    q, d = res.qubit, res.drive
    a = res.cfg.get("analytic", {})
    rows: list[tuple[str, float]] = []
    if exp == "analytic-eigen":
        eps = a.get("eps0", [d.eps0 if d else 0.0])
        for e in eps:
            es = analytic.eigenstructure(q, e)
            rows += [(f"omega_qubit@{e!r}", es.omega_qubit),
                     (f"mixing_angle@{e!r}", es.mixing_angle)]
            if math.isfinite(q.omega0_carrier):
                rows += [(f"Omega_plus@{e!r}", es.Omega_plus), (f"Omega_minus@{e!r}", es.Omega_minus)]
    elif exp == "analytic-lz":
        p = analytic.lz_probability(q, d.amplitude, d.omega, d.eps0)
        v = analytic.sweep_rate(d.amplitude, d.omega, d.eps0)
        rows += [("v", v), ("delta_adiab", analytic.lz_params(q.delta, v).delta_adiab), ("P_LZ", p)]
    elif exp == "analytic-stokes":
        for x in a.get("delta_adiab", [0.0, 0.1, 1.0, 10.0]):
            rows.append((f"stokes_phase@{x!r}", analytic.stokes_phase(x)))
    elif exp == "analytic-stuckelberg":
        t1, t2 = analytic.crossing_times(d.amplitude, d.omega, d.eps0)
        rows += [("t1", t1), ("t2", t2),
                 ("P_LZ", analytic.lz_probability(q, d.amplitude, d.omega, d.eps0)),
                 ("phase", analytic.stuckelberg_phase(q, d.amplitude, d.omega, d.eps0)),
                 ("occupation", analytic.stuckelberg_double_passage(q, d.amplitude, d.omega, d.eps0))]
    elif exp == "analytic-rabi":
        t_max = float(res.cfg.get("time", {}).get("t_max", 100.0))
        ts = sample_times(0.0, t_max, res.cfg.get("time", {}).get("stride") or t_max / 2000)
        k = int(a.get("k", res.cfg.get("rabi", {}).get("k", 1)))
        ref = res.cfg.get("rabi", {}).get("detuning_reference", "bias")
        occ = analytic.rabi_occupation(q, d.eps0, d.amplitude, d.omega, k, ts,
                                       detuning_reference=ref)
        path = out / f"{_prefix(res)}.csv"
        write_columns_csv(path, ["t", "occ_analytic"], [ts, occ])
        dk, wr = analytic.rabi_frequency(q, d.eps0, d.amplitude, d.omega, k, ref)
        meta = _base_metadata(res, args)
        meta["result"] = {"k": k, "delta_k": dk, "rabi_frequency": wr}
        _write_json(path.with_suffix(".json"), meta)
        return f"analytic-rabi: Omega_R={wr:.6g} -> {path}"
    elif exp == "analytic-lorentzian":
        ig = run_sweep(res.grid, res.integrator, 1)
        path = out / f"{_prefix(res)}.csv"
        if args.format == "long-csv":
            ig.write_long_csv(path)
        else:
            ig.write_csv(path)
        meta = _base_metadata(res, args)
        meta["grid"] = res.grid.describe()
        _write_json(path.with_suffix(".json"), meta)
        return f"analytic-lorentzian: {res.grid.shape[0] * res.grid.shape[1]} cells -> {path}"
    elif exp == "analytic-bessel":
        k = int(a.get("k", 1))
        for x in a.get("x", [0.0, 1.0, 10.0]):
            rows.append((f"J_{k}({x!r})", analytic.bessel_j(k, x)))
    path = out / f"{_prefix(res)}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("quantity,value\n")
        for name, val in rows:
            fh.write(f"{name},{float(val)!r}\n")
    meta = _base_metadata(res, args)
    meta["result"] = dict(rows)
    _write_json(path.with_suffix(".json"), meta)
    return f"{exp}: {len(rows)} values -> {path}"


_RUNNERS = {"rabi": run_rabi, "lz-single": run_lz_single, "stuckelberg": run_stuckelberg}
_RUNNERS.update({e: run_sweep_experiment for e in SWEEP_EXPERIMENTS})
_RUNNERS.update({e: run_analytic for e in ANALYTIC_EXPERIMENTS})


# --------------------------------------------------------------------------
# entry points


def _add_config_args(p):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--preset", metavar="NAME", help=f"built-in preset ({', '.join(presets.NAMES)})")
    p.add_argument("--experiment", choices=EXPERIMENTS, help="override the experiment")
    p.add_argument("--model", choices=["exact", "schrodinger", "bloch", "analytic", "all"])
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--renormalize", action="store_true",
                   help="divide occupations by the instantaneous norm")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="classical-qubit",
                                 description="Driven two-oscillator (classical qubit) simulations.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment")
    _add_config_args(p)
    p.add_argument("--parallelism", type=int, default=os.cpu_count() or 1, metavar="N")
    p.add_argument("--out", metavar="DIR", default=None,
                   help=f"output directory (default: ${OUT_ENV} or ./out)")
    p.add_argument("--force", action="store_true", help="run despite regime violations")
    p.add_argument("--format", choices=["csv", "long-csv"], default="csv")
    p.add_argument("--failure-budget", type=float, default=0.01, metavar="FRAC")
    p = sub.add_parser("validate", help="validate a configuration without running it")
    _add_config_args(p)
    sub.add_parser("presets", help="list built-in presets")
    sub.add_parser("schema", help="print the configuration JSON schema")
    p = sub.add_parser("show-preset", help="print a preset as JSON")
    p.add_argument("name")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name in presets.NAMES:
            print(f"{name:16s} {presets.get(name)['experiment']}")
        return EXIT_OK
    if args.command == "schema":
        print(json.dumps(SCHEMA, indent=2))
        return EXIT_OK
    if args.command == "show-preset":
        try:
            print(json.dumps(presets.get(args.name), indent=2))
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    try:
        cfg = load_config(args)
        res = resolve(cfg)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(json.dumps({"valid": True, "resolved": describe_resolved(res)}, indent=2,
                         default=_json_default))
        return EXIT_OK
    try:
        for msg in check_regime(res, args.force):
            print(f"warning: {msg}", file=sys.stderr)
    except RegimeError as exc:
        print(f"regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    out = Path(args.out or os.environ.get(OUT_ENV) or "out")
    out.mkdir(parents=True, exist_ok=True)
    try:
        summary = _RUNNERS[cfg["experiment"]](res, out, args)
    except SweepFailure as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
