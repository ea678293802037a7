import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classical_qubit.drive import DriveSpec, Rectangular, Sinusoidal, Telegraph, realize
from classical_qubit.dynamics import (FIXED_RK4, BlochVector, ExactState, IntegrationError,
                                      IntegratorConfig, StateVector, consistent_exact_state,
                                      constant_propagator, integrate_bloch, integrate_exact,
                                      integrate_schrodinger, sample_times)
from classical_qubit.model import QubitParams
from classical_qubit.observables import lower_state, occupation_series, readout_angle

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)


def test_decoupled_phase_evolution():
    eps = 1.7
    r = realize(DriveSpec(eps), 10.0)
    ts = np.linspace(0, 10, 101)
    tr = integrate_schrodinger(QubitParams(0.0), r, StateVector(1, 0), (0, 10), TIGHT, ts)
    np.testing.assert_allclose(tr.psi[:, 0], np.exp(-0.5j * eps * ts), atol=1e-9)
    np.testing.assert_allclose(np.abs(tr.psi[:, 1]), 0, atol=1e-15)


def test_damping_law_any_drive():
    g = 0.03
    r = realize(DriveSpec(0.4, Sinusoidal(3.0, 1.1)), 50.0)
    ts = np.linspace(0, 50, 201)
    tr = integrate_schrodinger(QubitParams(1.0, g), r, StateVector(0.6, 0.8j), (0, 50), TIGHT, ts)
    np.testing.assert_allclose(tr.norm(), np.exp(-g * ts), rtol=1e-8)


def test_bloch_pure_damping():
    g = 0.2
    r = realize(DriveSpec(0.0), 5.0)
    ts = np.linspace(0, 5, 11)
    tr = integrate_bloch(QubitParams(0.0, g), r, BlochVector(0.1, 0.2, 0.3), (0, 5), TIGHT, ts)
    np.testing.assert_allclose(tr.states, np.outer(np.exp(-g * ts), [0.1, 0.2, 0.3]),
                               rtol=1e-9, atol=1e-14)


def test_bloch_precession_sign():
    r = realize(DriveSpec(0.0), 10.0)
    ts = np.linspace(0, 10, 51)
    tr = integrate_bloch(QubitParams(1.0), r, BlochVector(0, 0, 1), (0, 10), TIGHT, ts)
    np.testing.assert_allclose(tr.states[:, 2], np.cos(ts), atol=1e-8)
    np.testing.assert_allclose(tr.states[:, 1], -np.sin(ts), atol=1e-8)
    np.testing.assert_allclose(tr.states[:, 0], 0, atol=1e-8)


def test_exact_model_trivial_constant():
    q = QubitParams(0.0, 0.0, 100.0)
    r = realize(DriveSpec(0.0), 5.0)
    tr = integrate_exact(q, r, ExactState(StateVector(1, 0), (0, 0)), (0, 5), TIGHT,
                         np.linspace(0, 5, 11))
    np.testing.assert_allclose(tr.psi[:, 0], 1, atol=1e-12)
    np.testing.assert_allclose(tr.dpsi_dt, 0, atol=1e-12)


def test_exact_model_slow_root():
    # roots of l^2 + (g + 2i W) l + i W g = 0; the slow one tends to -g/2
    g, W = 0.1, 50.0
    lam = np.roots([1, g + 2j * W, 1j * W * g])
    slow = lam[np.argmin(np.abs(lam))]
    assert slow.real == pytest.approx(-g / 2, rel=1e-3)
    q = QubitParams(0.0, g, W)
    r = realize(DriveSpec(0.0), 20.0)
    ts = np.linspace(0, 20, 41)
    init = ExactState(StateVector(1, 0), (complex(slow), 0))
    tr = integrate_exact(q, r, init, (0, 20), TIGHT, ts)
    np.testing.assert_allclose(tr.psi[:, 0], np.exp(slow * ts), rtol=1e-7, atol=1e-10)


def test_consistent_initial_derivative():
    q = QubitParams(1.0, 0.2, 100.0)
    s = consistent_exact_state(q, 0.5, StateVector(1, 0))
    assert s.dpsi_dt[0] == pytest.approx(-0.25j - 0.1)
    assert s.dpsi_dt[1] == pytest.approx(-0.5j)


def test_exact_requires_carrier():
    r = realize(DriveSpec(0.0), 1.0)
    with pytest.raises(ValueError):
        integrate_exact(QubitParams(1.0), r, StateVector(1, 0), (0, 1))


def test_exact_warns_on_fast_drive():
    q = QubitParams(1.0, 0.0, 20.0)
    r = realize(DriveSpec(0.0, Sinusoidal(1.0, 5.0)), 1.0)
    with pytest.warns(UserWarning):
        integrate_exact(q, r, StateVector(1, 0), (0, 1))


def test_rectangular_one_period_restarts():
    r = realize(DriveSpec(0.0, Rectangular(2.0, 1.0)), 2 * math.pi)
    tr = integrate_schrodinger(QubitParams(1.0), r, StateVector(1, 0), (0, 2 * math.pi))
    assert tr.metadata["restarts"] == 2
    assert tr.metadata["segments"] == 2


def test_telegraph_without_switches_single_segment():
    r = realize(DriveSpec(0.0, Telegraph(1.0, 1e-9, 0)), 1.0)
    tr = integrate_schrodinger(QubitParams(1.0), r, StateVector(1, 0), (0, 1))
    assert tr.metadata["restarts"] == 0 and tr.metadata["segments"] == 1


def test_latching_matches_glued_propagators():
    # slow flips: each half period is a constant-bias evolution
    q = QubitParams(1.0, 0.01)
    A, eps0, w = 4.0, 0.5, 0.7
    half = math.pi / w
    r = realize(DriveSpec(eps0, Rectangular(A, w)), 4 * half)
    ts = np.linspace(0, 4 * half, 401)
    tr = integrate_schrodinger(q, r, StateVector(0.6, 0.8), (0, 4 * half), TIGHT, ts)
    psi = np.array([0.6, 0.8], dtype=complex)
    ref = []
    for t in ts:
        n = min(int(t // half), 3)
        p = psi.copy()
        for m in range(n):
            p = constant_propagator(1.0, eps0 + A * (-1) ** m, q.gamma, half) @ p
        ref.append(constant_propagator(1.0, eps0 + A * (-1) ** n, q.gamma, t - n * half) @ p)
    np.testing.assert_allclose(tr.psi, np.array(ref), atol=1e-8)


def test_rk4_fourth_order():
    q = QubitParams(1.0)
    eps, T = 2.0, 10.0
    r = realize(DriveSpec(eps), T)
    ref = constant_propagator(1.0, eps, 0.0, T) @ np.array([1, 0], dtype=complex)
    errs = []
    hs = (0.1, 0.05, 0.025)
    for h in hs:
        cfg = IntegratorConfig(method=FIXED_RK4, initial_step=h)
        tr = integrate_schrodinger(q, r, StateVector(1, 0), (0, T), cfg, np.array([0.0, T]))
        errs.append(np.max(np.abs(tr.psi[-1] - ref)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 4) < 0.3), orders


def test_exact_converges_to_envelope():
    q = QubitParams(1.0, 0.02)
    w = math.sqrt(26.0)
    d = DriveSpec(5.0, Sinusoidal(0.7 * w, w))
    T = 30.0
    r = realize(d, T)
    ts = np.linspace(0, T, 1501)
    init = StateVector.from_array(lower_state(readout_angle(1.0, 5.0)))
    sc = occupation_series(integrate_schrodinger(q, r, init, (0, T), TIGHT, ts), q, 5.0)
    errs = []
    for ratio in (25, 50, 100):
        ex = integrate_exact(q.with_carrier(ratio * w), r, init, (0, T), TIGHT, ts)
        errs.append(np.max(np.abs(occupation_series(ex, q, 5.0).occupation - sc.occupation)))
    assert errs[0] > errs[1] > errs[2], errs


def test_step_budget_raises():
    r = realize(DriveSpec(0.0, Sinusoidal(1.0, 1.0)), 100.0)
    with pytest.raises(IntegrationError) as ei:
        integrate_schrodinger(QubitParams(1.0), r, StateVector(1, 0), (0, 100),
                              IntegratorConfig(max_steps=5))
    assert ei.value.time is not None and ei.value.time < 100


def test_span_outside_realization():
    r = realize(DriveSpec(0.0), 1.0)
    with pytest.raises(ValueError):
        integrate_schrodinger(QubitParams(1.0), r, StateVector(1, 0), (0, 2))


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(method=FIXED_RK4)


def test_sample_times_stride():
    ts = sample_times(0.0, 1.0, 0.3)
    assert ts[0] == 0.0 and ts[-1] == 1.0
    assert np.max(np.diff(ts)) <= 0.3


def test_csv_and_metadata(tmp_path):
    r = realize(DriveSpec(0.2, Sinusoidal(1.0, 1.0)), 1.0)
    ts = np.linspace(0, 1, 5)
    tr = integrate_schrodinger(QubitParams(1.0), r, StateVector(1, 0), (0, 1), ts=ts)
    p = tmp_path / "t.csv"
    tr.write_csv(p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "t,re_psi1,im_psi1,re_psi2,im_psi2"
    row = [float(x) for x in lines[2].split(",")]
    assert row[0] == ts[1] and complex(row[1], row[2]) == tr.psi[1, 0]
    tr.write_metadata(tmp_path / "t.json")
    meta = json.loads((tmp_path / "t.json").read_text())
    assert meta["integrator"]["rel_tol"] == 1e-8 and meta["drive"]["kind"] == "sinusoidal"
    bl = integrate_bloch(QubitParams(1.0), r, BlochVector(0, 0, 1), (0, 1), ts=ts)
    bl.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text().splitlines()[0] == "t,X,Y,Z"


@settings(max_examples=25, deadline=None)
@given(eps0=st.floats(-5, 5), A=st.floats(0, 5), w=st.floats(0.2, 5),
       g=st.floats(0, 0.1), phase=st.floats(0, 2 * math.pi))
def test_bloch_magnitude_law(eps0, A, w, g, phase):
    T = 10.0
    r = realize(DriveSpec(eps0, Sinusoidal(A, w)), T)
    X0 = BlochVector(math.cos(phase), math.sin(phase), 0.5)
    ts = np.linspace(0, T, 21)
    tr = integrate_bloch(QubitParams(1.0, g), r, X0, (0, T), TIGHT, ts)
    np.testing.assert_allclose(tr.norm(), X0.magnitude * np.exp(-g * ts), rtol=1e-7)
