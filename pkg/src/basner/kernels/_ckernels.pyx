# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CRF dynamic-programming kernels.

Arithmetic order matches _pykernels exactly for Viterbi (additions and max
only), and matches up to summation order inside log-sum-exp for the
forward/backward pass (agreement verified to 1e-12 in the test suite).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def forward_backward(double[:, ::1] em, double[:, ::1] trans,
                     double[::1] start, double[::1] stop):
    cdef Py_ssize_t T = em.shape[0]
    cdef Py_ssize_t L = em.shape[1]
    alpha_arr = np.empty((T, L))
    beta_arr = np.empty((T, L))
    cdef double[:, ::1] alpha = alpha_arr
    cdef double[:, ::1] beta = beta_arr
    cdef Py_ssize_t t, i, j
    cdef double mx, s, v

    for j in range(L):
        alpha[0, j] = start[j] + em[0, j]
    for t in range(1, T):
        for j in range(L):
            mx = alpha[t - 1, 0] + trans[0, j]
            for i in range(1, L):
                v = alpha[t - 1, i] + trans[i, j]
                if v > mx:
                    mx = v
            s = 0.0
            for i in range(L):
                s += exp(alpha[t - 1, i] + trans[i, j] - mx)
            alpha[t, j] = em[t, j] + (mx + log(s))

    for j in range(L):
        beta[T - 1, j] = stop[j]
    for t in range(T - 2, -1, -1):
        for i in range(L):
            mx = trans[i, 0] + em[t + 1, 0] + beta[t + 1, 0]
            for j in range(1, L):
                v = trans[i, j] + em[t + 1, j] + beta[t + 1, j]
                if v > mx:
                    mx = v
            s = 0.0
            for j in range(L):
                s += exp(trans[i, j] + em[t + 1, j] + beta[t + 1, j] - mx)
            beta[t, i] = mx + log(s)

    mx = alpha[T - 1, 0] + stop[0]
    for j in range(1, L):
        v = alpha[T - 1, j] + stop[j]
        if v > mx:
            mx = v
    s = 0.0
    for j in range(L):
        s += exp(alpha[T - 1, j] + stop[j] - mx)
    return mx + log(s), alpha_arr, beta_arr


def viterbi(double[:, ::1] em, double[:, ::1] trans,
            double[::1] start, double[::1] stop):
    cdef Py_ssize_t T = em.shape[0]
    cdef Py_ssize_t L = em.shape[1]
    delta_arr = np.empty(L)
    next_arr = np.empty(L)
    back_arr = np.zeros((T, L), dtype=np.intp)
    cdef double[::1] delta = delta_arr
    cdef double[::1] ndelta = next_arr
    cdef Py_ssize_t[:, ::1] back = back_arr
    cdef Py_ssize_t t, i, j, besti, y
    cdef double best, v, score

    for j in range(L):
        delta[j] = start[j] + em[0, j]
    for t in range(1, T):
        for j in range(L):
            best = delta[0] + trans[0, j]
            besti = 0
            for i in range(1, L):
                v = delta[i] + trans[i, j]
                if v > best:  # strict: ties keep the lowest index
                    best = v
                    besti = i
            ndelta[j] = best + em[t, j]
            back[t, j] = besti
        for j in range(L):
            delta[j] = ndelta[j]

    y = 0
    score = delta[0] + stop[0]
    for j in range(1, L):
        v = delta[j] + stop[j]
        if v > score:
            score = v
            y = j
    path = np.empty(T, dtype=np.intp)
    cdef Py_ssize_t[::1] pv = path
    pv[T - 1] = y
    for t in range(T - 1, 0, -1):
        y = back[t, y]
        pv[t - 1] = y
    return path, score
