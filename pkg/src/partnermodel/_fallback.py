"""Pure-Python event loops, the fallback backend for :mod:`.kernels`.

Mirrors ``_speedups.pyx`` operation for operation: same RNG, same summation
order, same branch structure, so a seeded run produces bit-identical output
on either backend (the extension is compiled with FP contraction off).
"""
from __future__ import annotations

import math

import numpy as np

from .rng import Xoshiro256

_NAN = float("nan")

# Count changes (dS, dI, dSS, dSI, dII) of the ten aggregate transitions, in
# the canonical order: recovery of a single; SS/SI/II formation; recovery
# inside SI; recovery inside II; transmission; SS/SI/II breakup.
MACRO_UPDATES = (
    (1, -1, 0, 0, 0),
    (-2, 0, 1, 0, 0),
    (-1, -1, 0, 1, 0),
    (0, -2, 0, 0, 1),
    (0, 0, 1, -1, 0),
    (0, 0, 0, 1, -1),
    (0, 0, 0, -1, 1),
    (2, 0, -1, 0, 0),
    (1, 1, 0, -1, 0),
    (0, 2, 0, 0, -1),
)

UBP_UPDATES = (
    (-1, 0, 0),
    (-1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (0, -1, 0),
    (1, -1, 0),
    (0, -1, 1),
    (0, 1, -1),
    (2, 0, -1),
)

LBP_UPDATES = (
    (-1, 0, 0),
    (-1, 1, 0),
    (-2, 0, 0),
    (0, -1, 0),
    (1, -1, 0),
    (0, -1, 1),
    (0, 1, -1),
    (2, 0, -1),
)


def macro_run(S, I, SS, SI, II, N, lam, r_plus, r_minus, t_end, sample_dt, seed,
              run_past_extinction=False, max_events=0, record_events=False):
    rng = Xoshiro256(seed)
    rpN = r_plus / N
    n_samp = int(math.floor(t_end / sample_dt + 1e-9)) + 1
    times = np.empty(n_samp)
    states = np.empty((n_samp, 5), dtype=np.int64)
    for k in range(n_samp):
        times[k] = k * sample_dt
    if record_events:
        if max_events <= 0:
            raise ValueError("record_events requires max_events > 0")
        ev_t = np.empty(max_events)
        ev_c = np.empty(max_events, dtype=np.uint8)
    else:
        ev_t = ev_c = None

    t = 0.0
    k = 0
    states[0] = (S, I, SS, SI, II)
    k = 1
    n_ev = 0
    absorbed = I == 0 and SI == 0 and II == 0
    absorption_time = 0.0 if absorbed else _NAN
    hit_max = False
    stop = absorbed and not run_past_extinction
    w = [0.0] * 10

    while not stop:
        w[0] = float(I)
        w[1] = rpN * float((S * (S - 1)) // 2)
        w[2] = rpN * float(S * I)
        w[3] = rpN * float((I * (I - 1)) // 2)
        w[4] = float(SI)
        w[5] = 2.0 * II
        w[6] = lam * SI
        w[7] = r_minus * SS
        w[8] = r_minus * SI
        w[9] = r_minus * II
        W = 0.0
        for j in range(10):
            W += w[j]
        if W <= 0.0:
            while k < n_samp:
                states[k] = (S, I, SS, SI, II)
                k += 1
            t = t_end
            break
        u = rng.random()
        tn = t + (-math.log(1.0 - u) / W)
        while k < n_samp and times[k] < tn:
            states[k] = (S, I, SS, SI, II)
            k += 1
        if tn > t_end:
            t = t_end
            break
        t = tn
        target = rng.random() * W
        acc = 0.0
        c = 9
        for j in range(10):
            acc += w[j]
            if target < acc:
                c = j
                break
        if w[c] <= 0.0:  # rounding edge at target ~= W
            for j in range(c - 1, -1, -1):
                if w[j] > 0.0:
                    c = j
                    break
        dS, dI, dSS, dSI, dII = MACRO_UPDATES[c]
        S += dS
        I += dI
        SS += dSS
        SI += dSI
        II += dII
        if record_events:
            ev_t[n_ev] = t
            ev_c[n_ev] = c
        n_ev += 1
        if not absorbed and I == 0 and SI == 0 and II == 0:
            absorbed = True
            absorption_time = t
            if not run_past_extinction:
                break
        if max_events > 0 and n_ev >= max_events:
            hit_max = True
            break

    if ev_t is not None:
        ev_t = ev_t[:n_ev].copy()
        ev_c = ev_c[:n_ev].copy()
    return (times[:k].copy(), states[:k].copy(), n_ev, absorbed, absorption_time,
            t, (S, I, SS, SI, II), ev_t, ev_c, hit_max)


def branching_run(nI, nSI, nII, lam, r_plus, r_minus, ystar, delta, kind,
                  t_end, sample_dt, seed, cap=10_000_000):
    """kind 0 = upper-bound process (9 channels), 1 = lower-bound (8)."""
    rng = Xoshiro256(seed)
    n_samp = int(math.floor(t_end / sample_dt + 1e-9)) + 1
    times = np.empty(n_samp)
    states = np.empty((n_samp, 3), dtype=np.int64)
    for k in range(n_samp):
        times[k] = k * sample_dt

    t = 0.0
    states[0] = (nI, nSI, nII)
    k = 1
    n_ev = 0
    extinct = nI == 0 and nSI == 0 and nII == 0
    extinction_time = 0.0 if extinct else _NAN
    censored = False
    n_ch = 9 if kind == 0 else 8
    updates = UBP_UPDATES if kind == 0 else LBP_UPDATES
    w = [0.0] * 9

    while not extinct:
        if kind == 0:
            w[0] = float(nI)
            w[1] = r_plus * (ystar - delta) * nI
            w[2] = 2.0 * r_plus * delta * nI
            w[3] = r_plus * delta * nI
            w[4] = float(nSI)
            w[5] = r_minus * nSI
            w[6] = lam * nSI
            w[7] = 2.0 * nII
            w[8] = r_minus * nII
        else:
            w[0] = (1.0 + 2.0 * r_plus * delta) * nI
            w[1] = r_plus * (ystar - delta) * nI
            w[2] = r_plus * delta * nI
            w[3] = float(nSI)
            w[4] = r_minus * nSI
            w[5] = lam * nSI
            w[6] = 2.0 * nII
            w[7] = r_minus * nII
        W = 0.0
        for j in range(n_ch):
            W += w[j]
        if W <= 0.0:
            while k < n_samp:
                states[k] = (nI, nSI, nII)
                k += 1
            t = t_end
            break
        u = rng.random()
        tn = t + (-math.log(1.0 - u) / W)
        while k < n_samp and times[k] < tn:
            states[k] = (nI, nSI, nII)
            k += 1
        if tn > t_end:
            t = t_end
            break
        t = tn
        target = rng.random() * W
        acc = 0.0
        c = n_ch - 1
        for j in range(n_ch):
            acc += w[j]
            if target < acc:
                c = j
                break
        if w[c] <= 0.0:
            for j in range(c - 1, -1, -1):
                if w[j] > 0.0:
                    c = j
                    break
        dI, dSI, dII = updates[c]
        nI += dI
        nSI += dSI
        nII += dII
        if nI < 0:  # lower-bound pair removal from a lone particle
            nI = 0
        n_ev += 1
        if nI == 0 and nSI == 0 and nII == 0:
            extinct = True
            extinction_time = t
            break
        if nI + nSI + nII > cap:
            censored = True
            break

    return (times[:k].copy(), states[:k].copy(), n_ev, extinct, extinction_time,
            censored, t, (nI, nSI, nII))


# Invariant-region tolerances for the mean-field integrator: violations up to
# CLAMP_TOL are projected back (integration noise), beyond ABORT_TOL the run
# stops.
RK4_CLAMP_TOL = 1e-9
RK4_ABORT_TOL = 1e-6


def rk4_run(y, i, si, ii, lam, r_plus, r_minus, t_end, dt,
            sample_stride=100, stop_deriv_tol=0.0):
    n_steps = int(math.ceil(t_end / dt - 1e-9))
    max_samp = n_steps // sample_stride + 2
    times = np.empty(max_samp)
    states = np.empty((max_samp, 4))

    def rhs(y, i, si, ii):
        dy = -r_plus * y * y + r_minus * (1.0 - y)
        di = -(1.0 + r_plus * y) * i + r_minus * (si + 2.0 * ii)
        dsi = r_plus * (y - i) * i - (1.0 + lam + r_minus) * si + 2.0 * ii
        dii = r_plus * i * i / 2.0 + lam * si - (2.0 + r_minus) * ii
        return dy, di, dsi, dii

    times[0] = 0.0
    states[0] = (y, i, si, ii)
    k = 1
    max_viol = 0.0
    converged = False
    aborted = False
    t = 0.0

    for step in range(1, n_steps + 1):
        k1y, k1i, k1s, k1q = rhs(y, i, si, ii)
        k2y, k2i, k2s, k2q = rhs(y + 0.5 * dt * k1y, i + 0.5 * dt * k1i,
                                 si + 0.5 * dt * k1s, ii + 0.5 * dt * k1q)
        k3y, k3i, k3s, k3q = rhs(y + 0.5 * dt * k2y, i + 0.5 * dt * k2i,
                                 si + 0.5 * dt * k2s, ii + 0.5 * dt * k2q)
        k4y, k4i, k4s, k4q = rhs(y + dt * k3y, i + dt * k3i,
                                 si + dt * k3s, ii + dt * k3q)
        y = y + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        i = i + (dt / 6.0) * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        si = si + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        ii = ii + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        t = step * dt

        viol = 0.0
        if -y > viol:
            viol = -y
        if y - 1.0 > viol:
            viol = y - 1.0
        if -i > viol:
            viol = -i
        if i - y > viol:
            viol = i - y
        if -si > viol:
            viol = -si
        if -ii > viol:
            viol = -ii
        excess = si + ii - (1.0 - y) / 2.0
        if excess > viol:
            viol = excess
        if viol > max_viol:
            max_viol = viol
        if viol > RK4_ABORT_TOL:
            aborted = True
            break
        if 0.0 < viol <= RK4_CLAMP_TOL:
            if y < 0.0:
                y = 0.0
            elif y > 1.0:
                y = 1.0
            if i < 0.0:
                i = 0.0
            elif i > y:
                i = y
            if si < 0.0:
                si = 0.0
            if ii < 0.0:
                ii = 0.0
            cap = (1.0 - y) / 2.0
            tot = si + ii
            if tot > cap:
                scale = cap / tot
                si *= scale
                ii *= scale

        if step % sample_stride == 0 or step == n_steps:
            times[k] = t
            states[k] = (y, i, si, ii)
            k += 1
            if stop_deriv_tol > 0.0:
                dy, di, dsi, dii = rhs(y, i, si, ii)
                m = abs(dy)
                if abs(di) > m:
                    m = abs(di)
                if abs(dsi) > m:
                    m = abs(dsi)
                if abs(dii) > m:
                    m = abs(dii)
                if m < stop_deriv_tol:
                    converged = True
                    break

    return (times[:k].copy(), states[:k].copy(), converged, t, max_viol,
            aborted, (y, i, si, ii))
