"""Compiled integration kernels.

All three dynamical descriptions are linear ODEs ``y' = M(t) y`` with a small
complex state, so one Dormand-Prince 5(4) driver and one fixed-step RK4 driver
serve every model. The driver walks a list of segments whose boundaries are the
drive discontinuities; no step ever straddles a boundary.

Layout of the ``par`` vector::

    0 delta   1 gamma   2 carrier   3 drive kind
    4 eps0    5 amp     6 omega     7 sweep rate   8 t_center

Drive kinds: 0 constant, 1 sinusoidal, 2 rectangular, 3 telegraph, 4 linear
sweep. For kinds 2 and 3 the per-segment sign is supplied in ``levels``.

Models: 0 Schrodinger-like (dim 2), 1 Bloch (dim 3), 2 exact envelope (dim 4).
"""

import numpy as np
from numba import njit

MODEL_SCHRODINGER = 0
MODEL_BLOCH = 1
MODEL_EXACT = 2

MODEL_DIM = (2, 3, 4)

KIND_CONSTANT = 0
KIND_SINUSOIDAL = 1
KIND_RECTANGULAR = 2
KIND_TELEGRAPH = 3
KIND_LINEAR = 4

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NAN = 2
STATUS_MAX_STEPS = 3

METHOD_DOPRI5 = 0
METHOD_RK4 = 1

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])
# Continuous extension (Hairer/Shampine, order 4), coefficients of theta^1..theta^4.
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@njit(cache=True, nogil=True)
def bias(t, par, level):
    kind = int(par[3])
    eps0 = par[4]
    if kind == KIND_SINUSOIDAL:
        return eps0 + par[5] * np.sin(par[6] * t)
    if kind == KIND_RECTANGULAR or kind == KIND_TELEGRAPH:
        return eps0 + par[5] * level
    if kind == KIND_LINEAR:
        return eps0 + par[7] * (t - par[8])
    return eps0


@njit(cache=True, nogil=True)
def rhs(model, t, y, par, level, out):
    delta = par[0]
    gamma = par[1]
    eps = bias(t, par, level)
    if model == MODEL_SCHRODINGER:
        # i psi' = H psi - i gamma/2 psi,  H = (delta sx + eps sz) / 2
        out[0] = (-0.5j * eps - 0.5 * gamma) * y[0] - 0.5j * delta * y[1]
        out[1] = -0.5j * delta * y[0] + (0.5j * eps - 0.5 * gamma) * y[1]
    elif model == MODEL_BLOCH:
        # X' = B x X - gamma X,  B = (delta, 0, eps)
        out[0] = -eps * y[1] - gamma * y[0]
        out[1] = eps * y[0] - delta * y[2] - gamma * y[1]
        out[2] = delta * y[1] - gamma * y[2]
    else:
        # psi'' + (gamma + 2i W) psi' + i W gamma psi - W (delta sx + eps sz) psi = 0
        w = par[2]
        damp = gamma + 2j * w
        out[0] = y[2]
        out[1] = y[3]
        out[2] = -damp * y[2] - 1j * w * gamma * y[0] + w * (eps * y[0] + delta * y[1])
        out[3] = -damp * y[3] - 1j * w * gamma * y[1] + w * (delta * y[0] - eps * y[1])


@njit(cache=True, nogil=True)
def _all_finite(y):
    for i in range(y.shape[0]):
        if not (np.isfinite(y[i].real) and np.isfinite(y[i].imag)):
            return False
    return True


@njit(cache=True, nogil=True)
def _error_norm(y, ynew, err, rtol, atol):
    acc = 0.0
    n = y.shape[0]
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        r = abs(err[i]) / sc
        acc += r * r
    return np.sqrt(acc / n)


@njit(cache=True, nogil=True)
def _initial_step(model, t, y, f, par, level, rtol, atol, span):
    n = y.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(f[i]) / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6 * max(span, 1e-300)
    else:
        h = 0.01 * d0 / d1
    return min(h, span)


@njit(cache=True, nogil=True)
def solve(model, par, y0, breaks, levels, ts, out, method, rtol, atol,
          h_init, h_max, max_steps, stats):
    """Integrate across ``breaks[0]..breaks[-1]`` sampling at ``ts``.

    ``stats`` receives [accepted, rejected, rhs evaluations, status]; the
    return value is the time reached (the failure time on abort).
    """
    n = y0.shape[0]
    y = y0.copy()
    ynew = np.empty(n, dtype=np.complex128)
    ytmp = np.empty(n, dtype=np.complex128)
    errv = np.empty(n, dtype=np.complex128)
    k = np.empty((7, n), dtype=np.complex128)
    nsamp = ts.shape[0]
    si = 0
    t = breaks[0]
    while si < nsamp and ts[si] <= t:
        for i in range(n):
            out[si, i] = y[i]
        si += 1
    stats[0] = 0
    stats[1] = 0
    stats[2] = 0
    stats[3] = STATUS_OK
    if not _all_finite(y):
        stats[3] = STATUS_NAN
        return t
    h_prop = h_init
    total = 0
    for seg in range(breaks.shape[0] - 1):
        t = breaks[seg]
        t_end = breaks[seg + 1]
        if t_end <= t:
            continue
        level = levels[seg]
        span = t_end - t
        if method == METHOD_RK4:
            nsub = int(np.ceil(span / h_init - 1e-9))
            if nsub < 1:
                nsub = 1
            h = span / nsub
            rhs(model, t, y, par, level, k[0])
            stats[2] += 1
            for step in range(nsub):
                tn = breaks[seg] + (step + 1) * h if step < nsub - 1 else t_end
                hh = tn - t
                for i in range(n):
                    ytmp[i] = y[i] + 0.5 * hh * k[0, i]
                rhs(model, t + 0.5 * hh, ytmp, par, level, k[1])
                for i in range(n):
                    ytmp[i] = y[i] + 0.5 * hh * k[1, i]
                rhs(model, t + 0.5 * hh, ytmp, par, level, k[2])
                for i in range(n):
                    ytmp[i] = y[i] + hh * k[2, i]
                rhs(model, tn, ytmp, par, level, k[3])
                for i in range(n):
                    ynew[i] = y[i] + hh / 6.0 * (k[0, i] + 2.0 * k[1, i]
                                                  + 2.0 * k[2, i] + k[3, i])
                rhs(model, tn, ynew, par, level, k[4])
                stats[2] += 4
                stats[0] += 1
                if not _all_finite(ynew):
                    stats[3] = STATUS_NAN
                    return t
                # cubic Hermite samples
                while si < nsamp and ts[si] <= tn:
                    th = (ts[si] - t) / hh
                    h00 = 2 * th ** 3 - 3 * th ** 2 + 1
                    h10 = th ** 3 - 2 * th ** 2 + th
                    h01 = -2 * th ** 3 + 3 * th ** 2
                    h11 = th ** 3 - th ** 2
                    for i in range(n):
                        out[si, i] = (h00 * y[i] + h10 * hh * k[0, i]
                                      + h01 * ynew[i] + h11 * hh * k[4, i])
                    si += 1
                for i in range(n):
                    y[i] = ynew[i]
                    k[0, i] = k[4, i]
                t = tn
            continue

        rhs(model, t, y, par, level, k[0])
        stats[2] += 1
        if h_prop <= 0.0:
            h_prop = _initial_step(model, t, y, k[0], par, level, rtol, atol, span)
        while t < t_end:
            total += 1
            if total > max_steps:
                stats[3] = STATUS_MAX_STEPS
                return t
            h = min(h_prop, h_max)
            last = False
            if t + 1.01 * h >= t_end:
                h = t_end - t
                last = True
            if h <= 8.0 * 2.220446049250313e-16 * max(abs(t), abs(t_end)):
                stats[3] = STATUS_UNDERFLOW
                return t
            for s in range(1, 7):
                for i in range(n):
                    acc = 0.0j
                    for j in range(s):
                        acc += _A[s, j] * k[j, i]
                    ytmp[i] = y[i] + h * acc
                if s < 6:
                    rhs(model, t + _C[s] * h, ytmp, par, level, k[s])
            for i in range(n):
                ynew[i] = ytmp[i]
            rhs(model, t + h, ynew, par, level, k[6])
            stats[2] += 6
            for i in range(n):
                acc = 0.0j
                for j in range(7):
                    acc += _E[j] * k[j, i]
                errv[i] = h * acc
            err = _error_norm(y, ynew, errv, rtol, atol)
            if np.isnan(err):
                stats[3] = STATUS_NAN
                return t
            if err <= 1.0:
                stats[0] += 1
                tn = t_end if last else t + h
                while si < nsamp and ts[si] <= tn:
                    th = (ts[si] - t) / h
                    for i in range(n):
                        acc = 0.0j
                        for j in range(7):
                            pj = _P[j]
                            acc += k[j, i] * th * (pj[0] + th * (pj[1] + th * (pj[2] + th * pj[3])))
                        out[si, i] = y[i] + h * acc
                    si += 1
                for i in range(n):
                    y[i] = ynew[i]
                    k[0, i] = k[6, i]
                t = tn
                if err == 0.0:
                    fac = 10.0
                else:
                    fac = min(10.0, max(0.2, 0.9 * err ** -0.2))
                if not last or fac < 1.0:
                    h_prop = h * fac
            else:
                stats[1] += 1
                if np.isinf(err):
                    fac = 0.2
                else:
                    fac = max(0.2, 0.9 * err ** -0.2)
                h_prop = h * fac
    # samples at the very end can be missed by roundoff in tn
    while si < nsamp:
        for i in range(n):
            out[si, i] = y[i]
        si += 1
    return t
