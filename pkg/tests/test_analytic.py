import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classical_qubit import analytic
from classical_qubit.cli import stuckelberg_numeric
from classical_qubit.drive import DriveSpec, Sinusoidal
from classical_qubit.dynamics import IntegratorConfig
from classical_qubit.model import QubitParams

J1_ZERO = 3.8317059702075125


def _series_j(k, x):
    with mpmath.workdps(50):
        return float(mpmath.nsum(lambda m: (-1) ** m * (mpmath.mpf(x) / 2) ** (2 * m + k)
                                 / (mpmath.factorial(m) * mpmath.factorial(m + k)),
                                 [0, mpmath.inf]))


def test_eigenstructure_examples():
    q = QubitParams(1.0, 0.0, 1000.0)
    e = analytic.eigenstructure(q, 0.0)
    assert e.omega_qubit == 1.0 and e.mixing_angle == pytest.approx(math.pi / 2)
    assert e.Omega_plus == 999.5 and e.Omega_minus == 1000.5
    assert analytic.eigenstructure(q, 5.0).omega_qubit == pytest.approx(math.sqrt(26.0))
    far = analytic.eigenstructure(q, 1e8)
    assert far.mixing_angle == pytest.approx(0.0, abs=1e-7)
    assert analytic.eigenstructure(q, -1e8).mixing_angle == pytest.approx(math.pi, abs=1e-7)


def test_lz_examples():
    assert analytic.lz_probability(QubitParams(0.0), 2.0, 1.0, 0.5) == 1.0
    d = math.log(2) / (2 * math.pi)
    assert math.exp(-2 * math.pi * d) == pytest.approx(0.5)
    v = 1.0 / (4 * d)
    assert analytic.lz_probability_rate(1.0, v) == pytest.approx(0.5, rel=1e-14)
    assert analytic.sweep_rate(3.0, 2.0, 0.0) == 6.0
    with pytest.raises(ValueError, match="crossing not reached"):
        analytic.lz_probability(QubitParams(1.0), 1.0, 1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(d1=st.floats(0.01, 5), d2=st.floats(0.01, 5), v=st.floats(0.2, 50))
def test_lz_monotone(d1, d2, v):
    # v >= 0.2 keeps exp(-2 pi delta) above the double underflow threshold
    p1 = analytic.lz_probability_rate(d1, v)
    assert 0 < p1 <= 1
    if d2 > d1 * (1 + 1e-9):
        assert analytic.lz_probability_rate(d2, v) < p1
    assert analytic.lz_probability_rate(d1, 1.5 * v) >= p1


def test_stokes_limits_and_monotone():
    assert analytic.stokes_phase(0.0) == -math.pi / 4
    assert analytic.stokes_phase(1e-12) == pytest.approx(-math.pi / 4, abs=1e-10)
    assert analytic.stokes_phase(1e9) == pytest.approx(-math.pi / 2, abs=1e-9)
    assert analytic.stokes_phase(1e6) == pytest.approx(-math.pi / 2, abs=1e-6)
    xs = np.logspace(-4, 4, 200)
    ph = [analytic.stokes_phase(x) for x in xs]
    assert np.all(np.diff(ph) < 0)
    # the two branches meet continuously at the series crossover
    x = analytic.STOKES_ASYMPTOTIC_MIN
    assert analytic.stokes_phase(x) == pytest.approx(analytic.stokes_phase(x * (1 - 1e-12)),
                                                     abs=5e-14)


def test_stokes_against_mpmath():
    for d in (0.1, 1.0, 3.0, 9.99, 10.0, 47.0, 1e4, 1e7):
        with mpmath.workdps(30):
            ref = -mpmath.pi / 4 + d * (mpmath.log(d) - 1) + mpmath.im(mpmath.loggamma(1 - 1j * d))
        assert analytic.stokes_phase(d) == pytest.approx(float(ref), abs=1e-13)


def test_stuckelberg_phase_integral_delta_zero():
    A, w = 7.0, 1.3
    ph = analytic.stuckelberg_phase(QubitParams(0.0), A, w, 0.0)
    assert ph == pytest.approx(A / w - math.pi / 4, rel=1e-12)


def test_stuckelberg_bounds():
    q = QubitParams(0.0)
    assert analytic.stuckelberg_double_passage(q, 5.0, 1.0, 0.0) == 0.0
    for eps0 in np.linspace(-4, 4, 17):
        v = analytic.stuckelberg_double_passage(QubitParams(1.0), 5.0, 1.0, eps0)
        assert 0 <= v <= 1


def test_stuckelberg_against_integration():
    q = QubitParams(1.0)
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    for eps0, A in ((5.0, 30.0), (0.0, 20.0), (-4.0, 25.0)):
        _, num = stuckelberg_numeric(q, DriveSpec(eps0, Sinusoidal(A, 1.0)), cfg)
        formula = analytic.stuckelberg_double_passage(q, A, 1.0, eps0)
        literal = analytic.stuckelberg_double_passage(q, A, 1.0, eps0, form="literal")
        assert num == pytest.approx(formula, abs=0.02)
        assert abs(num - formula) < abs(num - literal) or abs(num - literal) < 0.02


def test_crossing_times_are_roots():
    A, w, e = 3.0, 2.0, 1.2
    t1, t2 = analytic.crossing_times(A, w, e)
    assert t1 < t2 < t1 + 2 * math.pi / w
    for t in (t1, t2):
        assert e + A * math.sin(w * t) == pytest.approx(0.0, abs=1e-14)


def test_rabi_exact_resonance():
    q = QubitParams(0.3)
    w, A, k = 2.0, 3.0, 2
    dk, wr = analytic.rabi_frequency(q, 4.0, A, w, k)
    assert wr == pytest.approx(abs(dk))
    v = analytic.rabi_occupation(q, 4.0, A, w, k, math.pi / wr, damped=False)
    assert v == pytest.approx(1.0)


def test_rabi_cdt():
    q = QubitParams(1.0)
    t = np.linspace(0, 100, 101)
    occ = analytic.rabi_occupation(q, 2.0, J1_ZERO * 2.0, 2.0, 1, t)
    assert np.max(occ) < 1e-25


def test_rabi_weak_drive():
    q = QubitParams(0.5)
    dk, _ = analytic.rabi_frequency(q, 3.0, 1e-3, 3.0, 1)
    assert dk == pytest.approx(0.5 * 1e-3 / 3.0 / 2, rel=1e-7)


@settings(max_examples=100, deadline=None)
@given(eps0=st.floats(-10, 10), A=st.floats(0.01, 10), w=st.floats(0.1, 5),
       k=st.integers(1, 5), t=st.floats(0, 100))
def test_rabi_bounds_and_period(eps0, A, w, k, t):
    q = QubitParams(1.0)
    dk, wr = analytic.rabi_frequency(q, eps0, A, w, k)
    v = analytic.rabi_occupation(q, eps0, A, w, k, t, damped=False)
    assert -1e-15 <= v <= (dk / wr) ** 2 + 1e-15 <= 1 + 1e-15
    v2 = analytic.rabi_occupation(q, eps0, A, w, k, t + 2 * math.pi / wr, damped=False)
    assert v2 == pytest.approx(v, abs=1e-9)


def test_lorentzian_examples():
    q = QubitParams(1.0)
    assert analytic.lorentzian_average(q, 3.0, 0.0, 1.0) == 0.0
    # exact 4th resonance, far from the others at tiny coupling
    qs = QubitParams(1e-4)
    v = analytic.lorentzian_average(qs, 40.0, 35.0, 10.0)
    assert v == pytest.approx(1.0, abs=1e-6)
    assert analytic.default_k_max(3.0, 4.0, 2.0) == 9


@settings(max_examples=100, deadline=None)
@given(eps0=st.floats(0, 20), A=st.floats(0, 20), w=st.floats(0.1, 5), g=st.floats(0, 1))
def test_lorentzian_even_and_bounded(eps0, A, w, g):
    q = QubitParams(1.0, g)
    a = analytic.lorentzian_average(q, eps0, A, w)
    assert a == analytic.lorentzian_average(q, -eps0, A, w)
    ks = np.arange(1, analytic.default_k_max(eps0, A, w) + 1)
    d2 = (analytic.bessel_j_orders(ks[-1], A / w)[1:]) ** 2
    den = d2 + (ks * w - eps0) ** 2 + g ** 2
    assert np.all(d2[den > 0] <= den[den > 0])
    assert a >= 0


def test_lorentzian_sign_invariance():
    q = QubitParams(1.0, 0.1)
    for x in (1.0, 4.2, 7.7):
        js = analytic.bessel_j_orders(10, x)
        jm = analytic.bessel_j_orders(10, -x)
        np.testing.assert_array_equal(js ** 2, jm ** 2)
    assert analytic.lorentzian_average(q, 2.0, 5.0, 1.0) > 0


def test_bessel_at_zero():
    js = analytic.bessel_j_orders(5, 0.0)
    assert js.tolist() == [1.0, 0, 0, 0, 0, 0]


def test_bessel_against_series_oracle():
    for k in (0, 1, 2, 7, 20):
        for x in (0.1, 1.0, 3.3, 12.0, 30.0, 50.0):
            assert analytic.bessel_j(k, x) == pytest.approx(_series_j(k, x), abs=1e-14,
                                                            rel=1e-12)


def test_j1_first_zero_by_bisection():
    lo, hi = 3.0, 4.5
    assert _series_j(1, lo) > 0 > _series_j(1, hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _series_j(1, mid) > 0:
            lo = mid
        else:
            hi = mid
    assert lo == pytest.approx(3.8317, abs=1e-4)
    assert analytic.bessel_j(1, lo) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("k", [0, 1, 3])
def test_large_x_asymptote(k):
    for x in (200.0, 2000.0, 2e5):
        asym = math.sqrt(2 / (math.pi * x)) * math.cos(x - (2 * k + 1) * math.pi / 4)
        assert abs(analytic.bessel_j(k, x) - asym) < 2 * (1 + k * k) * x ** -1.5
    with mpmath.workdps(30):
        ref = float(mpmath.besselj(k, 5e4))
    assert analytic.bessel_j(k, 5e4) == pytest.approx(ref, abs=1e-14)


def test_bessel_rejects_negative_order():
    with pytest.raises(ValueError):
        analytic.bessel_j(-1, 1.0)
