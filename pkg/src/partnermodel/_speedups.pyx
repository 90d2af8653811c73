# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loops. Reference semantics live in _fallback.py; the two
backends must produce bit-identical output for equal seeds."""

from libc.math cimport log, floor, ceil

import numpy as np

ctypedef unsigned long long u64
ctypedef long long i64

cdef double _NAN = float("nan")


cdef struct Rng:
    u64 s0
    u64 s1
    u64 s2
    u64 s3


cdef inline u64 _rotl(u64 x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline u64 _splitmix_step(u64* x) noexcept nogil:
    cdef u64 z
    x[0] = x[0] + <u64>0x9E3779B97F4A7C15
    z = x[0]
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline void _rng_seed(Rng* r, u64 seed) noexcept nogil:
    cdef u64 x = seed
    cdef u64 a, b, c, d
    a = _splitmix_step(&x)
    b = _splitmix_step(&x)
    c = _splitmix_step(&x)
    d = _splitmix_step(&x)
    if a == 0 and b == 0 and c == 0 and d == 0:
        a = <u64>0x9E3779B97F4A7C15
    r.s0 = a
    r.s1 = b
    r.s2 = c
    r.s3 = d


cdef inline u64 _rng_next(Rng* r) noexcept nogil:
    cdef u64 s0 = r.s0
    cdef u64 s1 = r.s1
    cdef u64 s2 = r.s2
    cdef u64 s3 = r.s3
    cdef u64 result = _rotl(s0 + s3, 23) + s0
    cdef u64 t = s1 << 17
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    r.s0 = s0
    r.s1 = s1
    r.s2 = s2
    r.s3 = s3
    return result


cdef inline double _rng_double(Rng* r) noexcept nogil:
    return <double>(_rng_next(r) >> 11) * (1.0 / 9007199254740992.0)


def macro_run(i64 S, i64 I, i64 SS, i64 SI, i64 II, i64 N,
              double lam, double r_plus, double r_minus,
              double t_end, double sample_dt, u64 seed,
              bint run_past_extinction=False, i64 max_events=0,
              bint record_events=False):
    cdef Rng rng
    cdef double rpN = r_plus / N
    cdef i64 n_samp = <i64>floor(t_end / sample_dt + 1e-9) + 1
    cdef i64 k, j, n_ev, c
    cdef double t, tn, u, W, target, acc, absorption_time
    cdef bint absorbed, hit_max, stop
    cdef double w[10]

    times = np.empty(n_samp)
    states = np.empty((n_samp, 5), dtype=np.int64)
    cdef double[::1] times_v = times
    cdef i64[:, ::1] states_v = states
    for k in range(n_samp):
        times_v[k] = k * sample_dt

    ev_t_arr = None
    ev_c_arr = None
    cdef double[::1] ev_t = None
    cdef unsigned char[::1] ev_c = None
    if record_events:
        if max_events <= 0:
            raise ValueError("record_events requires max_events > 0")
        ev_t_arr = np.empty(max_events)
        ev_c_arr = np.empty(max_events, dtype=np.uint8)
        ev_t = ev_t_arr
        ev_c = ev_c_arr

    _rng_seed(&rng, seed)
    t = 0.0
    states_v[0, 0] = S
    states_v[0, 1] = I
    states_v[0, 2] = SS
    states_v[0, 3] = SI
    states_v[0, 4] = II
    k = 1
    n_ev = 0
    absorbed = I == 0 and SI == 0 and II == 0
    absorption_time = 0.0 if absorbed else _NAN
    hit_max = False
    stop = absorbed and not run_past_extinction

    while not stop:
        w[0] = <double>I
        w[1] = rpN * <double>((S * (S - 1)) / 2)
        w[2] = rpN * <double>(S * I)
        w[3] = rpN * <double>((I * (I - 1)) / 2)
        w[4] = <double>SI
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
                states_v[k, 0] = S
                states_v[k, 1] = I
                states_v[k, 2] = SS
                states_v[k, 3] = SI
                states_v[k, 4] = II
                k += 1
            t = t_end
            break
        u = _rng_double(&rng)
        tn = t + (-log(1.0 - u) / W)
        while k < n_samp and times_v[k] < tn:
            states_v[k, 0] = S
            states_v[k, 1] = I
            states_v[k, 2] = SS
            states_v[k, 3] = SI
            states_v[k, 4] = II
            k += 1
        if tn > t_end:
            t = t_end
            break
        t = tn
        target = _rng_double(&rng) * W
        acc = 0.0
        c = 9
        for j in range(10):
            acc += w[j]
            if target < acc:
                c = j
                break
        if w[c] <= 0.0:
            for j in range(c - 1, -1, -1):
                if w[j] > 0.0:
                    c = j
                    break
        if c == 0:
            S += 1; I -= 1
        elif c == 1:
            S -= 2; SS += 1
        elif c == 2:
            S -= 1; I -= 1; SI += 1
        elif c == 3:
            I -= 2; II += 1
        elif c == 4:
            SS += 1; SI -= 1
        elif c == 5:
            SI += 1; II -= 1
        elif c == 6:
            SI -= 1; II += 1
        elif c == 7:
            S += 2; SS -= 1
        elif c == 8:
            S += 1; I += 1; SI -= 1
        else:
            I += 2; II -= 1
        if record_events:
            ev_t[n_ev] = t
            ev_c[n_ev] = <unsigned char>c
        n_ev += 1
        if not absorbed and I == 0 and SI == 0 and II == 0:
            absorbed = True
            absorption_time = t
            if not run_past_extinction:
                break
        if max_events > 0 and n_ev >= max_events:
            hit_max = True
            break

    if ev_t_arr is not None:
        ev_t_arr = ev_t_arr[:n_ev].copy()
        ev_c_arr = ev_c_arr[:n_ev].copy()
    return (times[:k].copy(), states[:k].copy(), n_ev, absorbed,
            absorption_time, t, (S, I, SS, SI, II), ev_t_arr, ev_c_arr, hit_max)


def branching_run(i64 nI, i64 nSI, i64 nII,
                  double lam, double r_plus, double r_minus,
                  double ystar, double delta, int kind,
                  double t_end, double sample_dt, u64 seed,
                  i64 cap=10_000_000):
    cdef Rng rng
    cdef i64 n_samp = <i64>floor(t_end / sample_dt + 1e-9) + 1
    cdef i64 k, j, n_ev, c
    cdef int n_ch = 9 if kind == 0 else 8
    cdef double t, tn, u, W, target, acc, extinction_time
    cdef bint extinct, censored
    cdef double w[9]

    times = np.empty(n_samp)
    states = np.empty((n_samp, 3), dtype=np.int64)
    cdef double[::1] times_v = times
    cdef i64[:, ::1] states_v = states
    for k in range(n_samp):
        times_v[k] = k * sample_dt

    _rng_seed(&rng, seed)
    t = 0.0
    states_v[0, 0] = nI
    states_v[0, 1] = nSI
    states_v[0, 2] = nII
    k = 1
    n_ev = 0
    extinct = nI == 0 and nSI == 0 and nII == 0
    extinction_time = 0.0 if extinct else _NAN
    censored = False

    while not extinct:
        if kind == 0:
            w[0] = <double>nI
            w[1] = r_plus * (ystar - delta) * nI
            w[2] = 2.0 * r_plus * delta * nI
            w[3] = r_plus * delta * nI
            w[4] = <double>nSI
            w[5] = r_minus * nSI
            w[6] = lam * nSI
            w[7] = 2.0 * nII
            w[8] = r_minus * nII
        else:
            w[0] = (1.0 + 2.0 * r_plus * delta) * nI
            w[1] = r_plus * (ystar - delta) * nI
            w[2] = r_plus * delta * nI
            w[3] = <double>nSI
            w[4] = r_minus * nSI
            w[5] = lam * nSI
            w[6] = 2.0 * nII
            w[7] = r_minus * nII
        W = 0.0
        for j in range(n_ch):
            W += w[j]
        if W <= 0.0:
            while k < n_samp:
                states_v[k, 0] = nI
                states_v[k, 1] = nSI
                states_v[k, 2] = nII
                k += 1
            t = t_end
            break
        u = _rng_double(&rng)
        tn = t + (-log(1.0 - u) / W)
        while k < n_samp and times_v[k] < tn:
            states_v[k, 0] = nI
            states_v[k, 1] = nSI
            states_v[k, 2] = nII
            k += 1
        if tn > t_end:
            t = t_end
            break
        t = tn
        target = _rng_double(&rng) * W
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
        if kind == 0:
            if c == 0:
                nI -= 1
            elif c == 1:
                nI -= 1; nSI += 1
            elif c == 2:
                nSI += 1
            elif c == 3:
                nII += 1
            elif c == 4:
                nSI -= 1
            elif c == 5:
                nI += 1; nSI -= 1
            elif c == 6:
                nSI -= 1; nII += 1
            elif c == 7:
                nSI += 1; nII -= 1
            else:
                nI += 2; nII -= 1
        else:
            if c == 0:
                nI -= 1
            elif c == 1:
                nI -= 1; nSI += 1
            elif c == 2:
                nI -= 2
            elif c == 3:
                nSI -= 1
            elif c == 4:
                nI += 1; nSI -= 1
            elif c == 5:
                nSI -= 1; nII += 1
            elif c == 6:
                nSI += 1; nII -= 1
            else:
                nI += 2; nII -= 1
        if nI < 0:
            nI = 0
        n_ev += 1
        if nI == 0 and nSI == 0 and nII == 0:
            extinct = True
            extinction_time = t
            break
        if nI + nSI + nII > cap:
            censored = True
            break

    return (times[:k].copy(), states[:k].copy(), n_ev, extinct,
            extinction_time, censored, t, (nI, nSI, nII))


cdef double RK4_CLAMP_TOL = 1e-9
cdef double RK4_ABORT_TOL = 1e-6


cdef inline void _mfe_rhs(double y, double i, double si, double ii,
                          double lam, double rp, double rm,
                          double* out) noexcept nogil:
    out[0] = -rp * y * y + rm * (1.0 - y)
    out[1] = -(1.0 + rp * y) * i + rm * (si + 2.0 * ii)
    out[2] = rp * (y - i) * i - (1.0 + lam + rm) * si + 2.0 * ii
    out[3] = rp * i * i / 2.0 + lam * si - (2.0 + rm) * ii


def rk4_run(double y, double i, double si, double ii,
            double lam, double r_plus, double r_minus,
            double t_end, double dt,
            i64 sample_stride=100, double stop_deriv_tol=0.0):
    cdef i64 n_steps = <i64>ceil(t_end / dt - 1e-9)
    cdef i64 max_samp = n_steps // sample_stride + 2
    cdef i64 k, step
    cdef double t, viol, excess, cap, tot, scale, m
    cdef double max_viol = 0.0
    cdef bint converged = False
    cdef bint aborted = False
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double d[4]

    times = np.empty(max_samp)
    states = np.empty((max_samp, 4))
    cdef double[::1] times_v = times
    cdef double[:, ::1] states_v = states

    times_v[0] = 0.0
    states_v[0, 0] = y
    states_v[0, 1] = i
    states_v[0, 2] = si
    states_v[0, 3] = ii
    k = 1
    t = 0.0

    for step in range(1, n_steps + 1):
        _mfe_rhs(y, i, si, ii, lam, r_plus, r_minus, k1)
        _mfe_rhs(y + 0.5 * dt * k1[0], i + 0.5 * dt * k1[1],
                 si + 0.5 * dt * k1[2], ii + 0.5 * dt * k1[3],
                 lam, r_plus, r_minus, k2)
        _mfe_rhs(y + 0.5 * dt * k2[0], i + 0.5 * dt * k2[1],
                 si + 0.5 * dt * k2[2], ii + 0.5 * dt * k2[3],
                 lam, r_plus, r_minus, k3)
        _mfe_rhs(y + dt * k3[0], i + dt * k3[1],
                 si + dt * k3[2], ii + dt * k3[3],
                 lam, r_plus, r_minus, k4)
        y = y + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        i = i + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        si = si + (dt / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        ii = ii + (dt / 6.0) * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
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
            times_v[k] = t
            states_v[k, 0] = y
            states_v[k, 1] = i
            states_v[k, 2] = si
            states_v[k, 3] = ii
            k += 1
            if stop_deriv_tol > 0.0:
                _mfe_rhs(y, i, si, ii, lam, r_plus, r_minus, d)
                m = abs(d[0])
                if abs(d[1]) > m:
                    m = abs(d[1])
                if abs(d[2]) > m:
                    m = abs(d[2])
                if abs(d[3]) > m:
                    m = abs(d[3])
                if m < stop_deriv_tol:
                    converged = True
                    break

    return (times[:k].copy(), states[:k].copy(), converged, t, max_viol,
            aborted, (y, i, si, ii))
