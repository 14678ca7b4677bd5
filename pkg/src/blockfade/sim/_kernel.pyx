# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled twin of the block-stepping kernel in _kernel_py.

The arithmetic mirrors the reference kernel expression for expression so
that both produce bit-identical accumulators on the same inputs.
"""

import numpy as np
cimport numpy as cnp

KERNEL_NAME = "compiled"

# slot layout shared with _kernel_py
DEF HEAD = 0
DEF COUNT = 1
DEF BLOCK = 2
DEF CPREV = 3
DEF TADM = 4
DEF TDEP = 5
DEF TDROP = 6
DEF TOFF = 7

DEF BLOCKS = 0
DEF NC0 = 1
DEF NBUSY = 2
DEF NRUNS = 3
DEF OFFERED = 4
DEF DROPS = 5
DEF ADMITTED = 6
DEF DEPARTED = 7
DEF DSAMP = 8

DEF SUMQ = 0
DEF DRESID = 1
DEF DPHYS = 2
DEF DWHOLE = 3


def run_chunk(double[::1] caps, cnp.int64_t[::1] arrivals, double lp,
              long long bufK, bint accumulate,
              cnp.int64_t[::1] state_i, double[::1] state_d,
              double[::1] arr_time, cnp.int64_t[::1] first_touch,
              cnp.int64_t[::1] acc_i, double[::1] acc_d,
              cnp.int64_t[::1] count_hist, cnp.int64_t[::1] service_hist):
    cdef Py_ssize_t cap_ring = arr_time.shape[0]
    cdef Py_ssize_t head = <Py_ssize_t>state_i[HEAD]
    cdef long long count = state_i[COUNT]
    cdef long long block = state_i[BLOCK]
    cdef long long c_prev = state_i[CPREV]
    cdef double head_rem = state_d[0]
    cdef long long hist_max = count_hist.shape[0] - 1
    cdef long long st_max = service_hist.shape[0] - 1
    cdef Py_ssize_t n = caps.shape[0]
    cdef Py_ssize_t i, idx
    cdef long long na, a, c, t_int
    cdef double b, s, cap_s, portion, avail, arr, dwhole

    for i in range(n):
        b = <double>block
        na = arrivals[i]
        for a in range(na):
            state_i[TOFF] += 1
            if accumulate:
                acc_i[OFFERED] += 1
            if bufK < 0 or count <= bufK:
                idx = <Py_ssize_t>((head + count) % cap_ring)
                arr_time[idx] = b
                first_touch[idx] = -1
                count += 1
                if count == 1:
                    head_rem = lp
                state_i[TADM] += 1
                if accumulate:
                    acc_i[ADMITTED] += 1
            else:
                state_i[TDROP] += 1
                if accumulate:
                    acc_i[DROPS] += 1
        s = caps[i]
        cap_s = s
        while s > 0.0 and count > 0:
            if first_touch[head] < 0:
                first_touch[head] = block
            if s >= head_rem:
                portion = head_rem
                avail = s
                s = s - portion
                state_i[TDEP] += 1
                if accumulate:
                    arr = arr_time[head]
                    dwhole = b - arr
                    acc_d[DWHOLE] += dwhole
                    acc_d[DRESID] += dwhole + portion / avail
                    acc_d[DPHYS] += dwhole + (cap_s - s) / cap_s
                    acc_i[DSAMP] += 1
                    acc_i[DEPARTED] += 1
                    t_int = block - first_touch[head]
                    if t_int > st_max:
                        t_int = st_max
                    service_hist[t_int] += 1
                head = (head + 1) % cap_ring
                count -= 1
                head_rem = lp if count > 0 else 0.0
            else:
                head_rem = head_rem - s
                s = 0.0
        c = count
        if accumulate:
            acc_i[BLOCKS] += 1
            acc_d[SUMQ] += c
            count_hist[c if c <= hist_max else hist_max] += 1
            if c == 0:
                acc_i[NC0] += 1
            else:
                acc_i[NBUSY] += 1
                if c_prev == 0:
                    acc_i[NRUNS] += 1
        c_prev = c
        block += 1

    state_i[HEAD] = head
    state_i[COUNT] = count
    state_i[BLOCK] = block
    state_i[CPREV] = c_prev
    state_d[0] = head_rem
