# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; must match kernels.reference bit for bit.

All interior state is integer counting; the only float operation is the
single (cum + count) / M <= budget comparison per candidate, identical to
the reference expression.
"""

import numpy as np

cimport numpy as cnp

from seqaudit.kernels.reference import InfeasibleStageError

cnp.import_array()


def mc_boundary_sweep(
    s_h_in,
    s_k_in,
    double alpha,
    double beta,
    int t_start,
    int t_end,
    bint calibrate_upper=True,
):
    s_h_arr = np.ascontiguousarray(s_h_in, dtype=np.int32)
    s_k_arr = np.ascontiguousarray(s_k_in, dtype=np.int32)
    if s_h_arr.ndim != 2 or s_k_arr.ndim != 2:
        raise ValueError("path matrix must be 2-D (replications x stages)")
    if s_k_arr.shape[0] != s_h_arr.shape[0]:
        raise ValueError("both ensembles must have the same replication count")
    if s_h_arr.shape[1] < t_end or s_k_arr.shape[1] < t_end:
        raise ValueError(f"ensembles must cover {t_end} stages")

    cdef const int[:, ::1] s_h = s_h_arr
    cdef const int[:, ::1] s_k = s_k_arr
    cdef Py_ssize_t m_reps = s_h.shape[0]
    cdef double m_f = <double> m_reps

    lower_arr = np.zeros(t_end, dtype=np.int64)
    upper_arr = np.zeros(t_end, dtype=np.int64)
    cum_a_arr = np.zeros(t_end, dtype=np.int64)
    cum_b_arr = np.zeros(t_end, dtype=np.int64)
    alive_h_arr = np.ones(m_reps, dtype=np.uint8)
    alive_k_arr = np.ones(m_reps, dtype=np.uint8)
    hist_arr = np.zeros(t_end + 2, dtype=np.int64)

    cdef long long[::1] lower = lower_arr
    cdef long long[::1] upper = upper_arr
    cdef long long[::1] cum_a_out = cum_a_arr
    cdef long long[::1] cum_b_out = cum_b_arr
    cdef unsigned char[::1] alive_h = alive_h_arr
    cdef unsigned char[::1] alive_k = alive_k_arr
    cdef long long[::1] hist = hist_arr

    cdef long long cum_a = 0, cum_b = 0, tail, head, a_inc, b_inc
    cdef long long n_alive_h = m_reps, n_alive_k = m_reps
    cdef Py_ssize_t i, t, c, u_t, l_t
    cdef int v

    for t in range(1, t_end + 1):
        if t < t_start:
            lower[t - 1] = 0
            upper[t - 1] = t
            cum_a_out[t - 1] = cum_a
            cum_b_out[t - 1] = cum_b
            continue

        if calibrate_upper and n_alive_h > 0:
            for c in range(t + 2):
                hist[c] = 0
            for i in range(m_reps):
                if alive_h[i]:
                    hist[s_h[i, t - 1]] += 1
            # scan candidates upward; tail(c) = alive H-paths with S_t > c
            u_t = -1
            tail = 0
            for c in range(1, t + 1):
                tail += hist[c]
            for c in range(0, t + 1):
                if (<double> (cum_a + tail)) / m_f <= alpha:
                    u_t = c
                    break
                tail -= hist[c + 1]
            if u_t < 0:
                raise InfeasibleStageError(f"stage {t}: no feasible upper candidate")
            a_inc = 0
            for c in range(u_t + 1, t + 1):
                a_inc += hist[c]
        else:
            u_t = t
            a_inc = 0

        if n_alive_k > 0:
            for c in range(t + 2):
                hist[c] = 0
            for i in range(m_reps):
                if alive_k[i]:
                    hist[s_k[i, t - 1]] += 1
            # scan candidates downward; head(c) = alive K-paths with S_t < c
            l_t = -1
            head = 0
            for c in range(0, t):
                head += hist[c]
            for c in range(t, -1, -1):
                if (<double> (cum_b + head)) / m_f <= beta:
                    l_t = c
                    break
                if c > 0:
                    head -= hist[c - 1]
            if l_t < 0:
                raise InfeasibleStageError(f"stage {t}: no feasible lower candidate")
            b_inc = 0
            for c in range(0, l_t):
                b_inc += hist[c]
        else:
            l_t = 0
            b_inc = 0

        # l_t > u_t is allowed: the stage band is empty, every surviving path
        # stops here (accept-H precedence), and both alive sets drain.
        cum_a += a_inc
        cum_b += b_inc
        lower[t - 1] = l_t
        upper[t - 1] = u_t
        cum_a_out[t - 1] = cum_a
        cum_b_out[t - 1] = cum_b

        if l_t > 0 or u_t < t:
            for i in range(m_reps):
                if alive_h[i]:
                    v = s_h[i, t - 1]
                    if v < l_t or v > u_t:
                        alive_h[i] = 0
                        n_alive_h -= 1
                if alive_k[i]:
                    v = s_k[i, t - 1]
                    if v < l_t or v > u_t:
                        alive_k[i] = 0
                        n_alive_k -= 1

    return (
        lower_arr,
        upper_arr,
        cum_a_arr,
        cum_b_arr,
        alive_h_arr.astype(bool),
        alive_k_arr.astype(bool),
    )


def first_exit(s_in, lower_in, upper_in, int t_start, int t_end):
    s_arr = np.ascontiguousarray(s_in, dtype=np.int32)
    if s_arr.ndim != 2:
        raise ValueError("path matrix must be 2-D (replications x stages)")
    lower_arr = np.ascontiguousarray(lower_in, dtype=np.int64)
    upper_arr = np.ascontiguousarray(upper_in, dtype=np.int64)
    if lower_arr.size < t_end or upper_arr.size < t_end:
        raise ValueError(f"schedule must cover {t_end} stages")

    cdef const int[:, ::1] s = s_arr
    cdef const long long[::1] lower = lower_arr
    cdef const long long[::1] upper = upper_arr
    cdef Py_ssize_t rows = s.shape[0]

    stage_arr = np.zeros(rows, dtype=np.int64)
    side_arr = np.zeros(rows, dtype=np.int8)
    cdef long long[::1] stage = stage_arr
    cdef signed char[::1] side = side_arr

    cdef Py_ssize_t i, t
    cdef int v

    for i in range(rows):
        for t in range(t_start, t_end + 1):
            v = s[i, t - 1]
            if v < lower[t - 1]:
                stage[i] = t
                side[i] = -1
                break
            if v > upper[t - 1]:
                stage[i] = t
                side[i] = 1
                break

    return stage_arr, side_arr
