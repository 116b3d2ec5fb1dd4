"""Compiled RK4 stepping for the consensus fields.

Fields use the matrix forms (L, W, out-degrees) and the integer codes from
``protocols.PROTOCOL_CODES``. Everything here is sequential and allocation
light; buffers are owned by the caller.
"""

import math

import numpy as np
from numba import njit

OK = 0
NONPOSITIVE = 1
DOMAIN = 2

# status codes returned by integrate_chunk
BUFFER_FULL = 0
CONSENSUS = 1
HORIZON = 2
UNDERFLOW = 3
DOMAIN_ERROR = 4


@njit(cache=True)
def field(code, x, L, W, outdeg, lx, out):
    n = x.shape[0]
    if code == 4:
        lo = x[0]
        hi = x[0]
        for i in range(n):
            lo = min(lo, x[i])
            hi = max(hi, x[i])
        if hi - lo >= 0.5 * math.pi:
            return DOMAIN
        for i in range(n):
            s = 0.0
            for j in range(n):
                if W[i, j] != 0.0:
                    s += W[i, j] * math.sin(x[j] - x[i])
            out[i] = s
        return OK
    if code == 0:
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += L[i, j] * x[j]
            out[i] = -s
        return OK
    for i in range(n):
        if x[i] <= 0.0:
            return NONPOSITIVE
        lx[i] = math.log(x[i])
    if code == 1:
        for i in range(n):
            s = 0.0
            for j in range(n):
                if W[i, j] != 0.0:
                    s += W[i, j] * lx[j]
            out[i] = math.exp(s) - math.exp(outdeg[i] * lx[i])
        return OK
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += L[i, j] * lx[j]
        out[i] = -s if code == 3 else -x[i] * s
    return OK


@njit(cache=True)
def _positive(y):
    for i in range(y.shape[0]):
        if not y[i] > 0.0:
            return False
    return True


@njit(cache=True)
def _admissible(code, y):
    # the linear and sine fields live on all of R^n
    if code == 0 or code == 4:
        return True
    return _positive(y)


@njit(cache=True)
def rk4_step(code, x, h, L, W, outdeg, k1, k2, k3, k4, tmp, lx, out):
    n = x.shape[0]
    st = field(code, x, L, W, outdeg, lx, k1)
    if st != OK:
        return st
    for i in range(n):
        tmp[i] = x[i] + 0.5 * h * k1[i]
    if not _admissible(code, tmp):
        return NONPOSITIVE
    st = field(code, tmp, L, W, outdeg, lx, k2)
    if st != OK:
        return st
    for i in range(n):
        tmp[i] = x[i] + 0.5 * h * k2[i]
    if not _admissible(code, tmp):
        return NONPOSITIVE
    st = field(code, tmp, L, W, outdeg, lx, k3)
    if st != OK:
        return st
    for i in range(n):
        tmp[i] = x[i] + h * k3[i]
    if not _admissible(code, tmp):
        return NONPOSITIVE
    st = field(code, tmp, L, W, outdeg, lx, k4)
    if st != OK:
        return st
    for i in range(n):
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    if not _admissible(code, out):
        return NONPOSITIVE
    return OK


@njit(cache=True)
def _spread(x):
    lo = x[0]
    hi = x[0]
    for i in range(x.shape[0]):
        lo = min(lo, x[i])
        hi = max(hi, x[i])
    return hi - lo


@njit(cache=True)
def integrate_chunk(code, L, W, outdeg, x, state,
                    dt_nominal, t_end, consensus_tol, min_dt, stride,
                    adaptive, rtol, atol, max_dt, times_buf, states_buf):
    """Advance ``x`` in place until consensus, horizon, failure or a full buffer.

    ``state`` holds [t, dt, calm, accepted, rejected] and is updated in place.
    Returns (status, number of records written).
    """
    n = x.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    lx = np.empty(n)
    y1 = np.empty(n)
    y2 = np.empty(n)
    ymid = np.empty(n)
    cap = times_buf.shape[0]
    nrec = 0
    t = state[0]
    dt = state[1]
    calm = int(state[2])
    accepted = int(state[3])
    rejected = int(state[4])
    status = BUFFER_FULL
    horizon_eps = 1e-12 * max(1.0, t_end)

    while True:
        if nrec >= cap - 1:
            status = BUFFER_FULL
            break
        if t >= t_end - horizon_eps:
            status = HORIZON
            break
        h = min(dt, t_end - t)
        if adaptive:
            st = rk4_step(code, x, h, L, W, outdeg, k1, k2, k3, k4, tmp, lx, y1)
            if st == OK:
                st = rk4_step(code, x, 0.5 * h, L, W, outdeg, k1, k2, k3, k4, tmp, lx, ymid)
            if st == OK:
                st = rk4_step(code, ymid, 0.5 * h, L, W, outdeg, k1, k2, k3, k4, tmp, lx, y2)
            if st == DOMAIN:
                status = DOMAIN_ERROR
                break
            if st == NONPOSITIVE:
                rejected += 1
                dt = 0.5 * h
                if dt < min_dt:
                    status = UNDERFLOW
                    break
                continue
            err = 0.0
            big = 0.0
            for i in range(n):
                err = max(err, abs(y2[i] - y1[i]))
                big = max(big, abs(x[i]), abs(y2[i]))
            err /= 15.0
            tol = atol + rtol * big
            if err <= tol:
                for i in range(n):
                    x[i] = y2[i]
                t += h
                accepted += 1
                fac = 4.0 if err == 0.0 else min(4.0, max(0.2, 0.9 * (tol / err) ** 0.2))
                if h == dt:
                    dt = min(h * fac, max_dt)
            else:
                rejected += 1
                dt = h * max(0.2, 0.9 * (tol / err) ** 0.2)
                if dt < min_dt:
                    status = UNDERFLOW
                    break
                continue
        else:
            st = rk4_step(code, x, h, L, W, outdeg, k1, k2, k3, k4, tmp, lx, y1)
            if st == DOMAIN:
                status = DOMAIN_ERROR
                break
            if st == NONPOSITIVE:
                rejected += 1
                dt = 0.5 * dt
                calm = 0
                if dt < min_dt:
                    status = UNDERFLOW
                    break
                continue
            for i in range(n):
                x[i] = y1[i]
            t += h
            accepted += 1
            if dt < dt_nominal:
                calm += 1
                if calm >= 10:
                    dt = min(2.0 * dt, dt_nominal)
                    calm = 0

        done = _spread(x) <= consensus_tol
        if done or accepted % stride == 0:
            times_buf[nrec] = t
            for i in range(n):
                states_buf[nrec, i] = x[i]
            nrec += 1
        if done:
            status = CONSENSUS
            break

    if status == HORIZON and (nrec == 0 or times_buf[nrec - 1] != t):
        times_buf[nrec] = t
        for i in range(n):
            states_buf[nrec, i] = x[i]
        nrec += 1
    state[0] = t
    state[1] = dt
    state[2] = calm
    state[3] = accepted
    state[4] = rejected
    return status, nrec
