import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classical_qubit.model import (OscillatorParams, ParameterError, QubitParams,
                                   bias_from_detuning, carrier_frequency, delta_approx,
                                   from_hz, reduce_to_qubit, regime_report, to_hz)

NOMINAL = OscillatorParams(1e-15, 3.0, 0.003)


def test_nominal_reduction():
    # direct arithmetic: kc / (m sqrt((k0 + kc)/m))
    q, rep = reduce_to_qubit(NOMINAL)
    w0 = math.sqrt(3.003 / 1e-15)
    assert q.omega0_carrier == pytest.approx(w0, rel=1e-15)
    assert q.delta == pytest.approx(0.003 / (1e-15 * w0), rel=1e-14)
    assert q.delta == pytest.approx(5.48e4, rel=2e-3)
    assert to_hz(q.delta) == pytest.approx(8.7e3, rel=1e-2)
    assert rep.valid


def test_decoupled_limit():
    q, _ = reduce_to_qubit(OscillatorParams(1e-15, 3.0, 0.0))
    assert q.delta == 0.0


def test_two_delta_forms():
    q, _ = reduce_to_qubit(NOMINAL)
    ratio = q.delta / delta_approx(NOMINAL) - 1.0
    assert ratio == pytest.approx(math.sqrt(3.0 / 3.003) - 1.0, rel=1e-9)


def test_bias_from_detuning():
    q, _ = reduce_to_qubit(NOMINAL)
    assert bias_from_detuning(0.0, NOMINAL) == 0.0
    assert bias_from_detuning(NOMINAL.kc, NOMINAL) == pytest.approx(q.delta, rel=1e-15)
    eps = bias_from_detuning(0.03, NOMINAL)
    assert eps == pytest.approx(5.48e5, rel=2e-3)
    assert eps / q.delta == pytest.approx(10.0)
    with pytest.raises(ParameterError):
        bias_from_detuning(3.0, NOMINAL)


@pytest.mark.parametrize("kw", [
    dict(m=-1.0, k0=1.0, kc=0.001),
    dict(m=1.0, k0=0.0, kc=0.0),
    dict(m=1.0, k0=1.0, kc=-0.1),
    dict(m=1.0, k0=1.0, kc=1.0),
    dict(m=1.0, k0=1.0, kc=0.001, gamma=-1.0),
    dict(m=math.nan, k0=1.0, kc=0.001),
])
def test_oscillator_rejections(kw):
    with pytest.raises(ParameterError):
        OscillatorParams(**kw)


def test_strong_coupling_warns():
    with pytest.warns(UserWarning):
        OscillatorParams(1.0, 1.0, 0.1)


@pytest.mark.parametrize("kw", [
    dict(delta=-1.0), dict(delta=math.inf), dict(delta=1.0, gamma=-0.1),
    dict(delta=1.0, omega0_carrier=0.5), dict(delta=1.0, gamma=2e3),
])
def test_qubit_rejections(kw):
    with pytest.raises(ParameterError):
        QubitParams(**kw)


def test_regime_report():
    assert regime_report(0.05, 0.001, 1.0).valid
    rep = regime_report(0.1, 0.001, 1.0)
    assert not rep.valid and len(rep.messages) == 1
    assert not regime_report(0.01, 0.02, 1.0).valid


def test_hz_round_trip():
    assert from_hz(to_hz(123.4)) == pytest.approx(123.4, rel=1e-15)
    assert from_hz(1.0) == 2 * math.pi


@settings(max_examples=60, deadline=None)
@given(c=st.floats(1e-3, 1e3), kc_frac=st.floats(1e-5, 9e-3), dk_frac=st.floats(-0.9, 0.9))
def test_uniform_rescaling_invariance(c, kc_frac, dk_frac):
    base = OscillatorParams(1e-15, 3.0, 3.0 * kc_frac)
    scaled = OscillatorParams(c * 1e-15, c * 3.0, c * 3.0 * kc_frac)
    q1, _ = reduce_to_qubit(base)
    q2, _ = reduce_to_qubit(scaled)
    assert q2.delta == pytest.approx(q1.delta, rel=1e-12)
    assert q2.omega0_carrier == pytest.approx(q1.omega0_carrier, rel=1e-12)
    e1 = bias_from_detuning(3.0 * dk_frac, base)
    e2 = bias_from_detuning(c * 3.0 * dk_frac, scaled)
    assert e2 == pytest.approx(e1, rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(m=st.floats(0.1, 10), k0=st.floats(0.1, 10), f=st.floats(1.01, 2.0))
def test_carrier_monotone(m, k0, f):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = OscillatorParams(m, k0, 1e-3 * k0)
        assert carrier_frequency(OscillatorParams(m, f * k0, 1e-3 * k0)) > carrier_frequency(p)
        assert carrier_frequency(OscillatorParams(m, k0, 2e-3 * k0)) > carrier_frequency(p)
        assert carrier_frequency(OscillatorParams(f * m, k0, 1e-3 * k0)) < carrier_frequency(p)
