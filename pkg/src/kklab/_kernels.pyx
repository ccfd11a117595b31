# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops of the Monte Carlo engine.

Semantics match ``_kernels_py`` exactly; see that module for documentation.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, floor, fabs, sqrt, NAN

cnp.import_array()


def em_step(double[:, ::1] x, const double[:, ::1] drift, const double[:, :, ::1] frame,
            const double[:, ::1] dw, double dt, double scale,
            const double[::1] lower, const double[::1] upper,
            const unsigned char[::1] periodic, unsigned char[::1] alive):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, a, k
    cdef double acc, period, v
    cdef double[8] incr
    if d > 8:
        raise ValueError("em_step supports at most 8 coordinates")
    with nogil:
        for i in range(n):
            if not alive[i]:
                continue
            for a in range(d):
                acc = 0.0
                for k in range(d):
                    acc = acc + frame[i, a, k] * dw[i, k]
                incr[a] = drift[i, a] * dt + scale * acc
            for a in range(d):
                v = x[i, a] + incr[a]
                if periodic[a]:
                    period = upper[a] - lower[a]
                    v = v - period * floor((v - lower[a]) / period)
                elif v <= lower[a] or v >= upper[a]:
                    alive[i] = 0
                x[i, a] = v


def class_bump_sum(const double[:, ::1] points, const double[:, ::1] nodes, const double[::1] weights,
                   double beta, double norm, int su2):
    cdef Py_ssize_t n = points.shape[0], m = nodes.shape[0], d = points.shape[1]
    cdef Py_ssize_t i, k, a
    cdef double s, acc, t
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(m):
                s = 0.0
                if su2:
                    for a in range(d):
                        s = s + points[i, a] * nodes[k, a]
                    t = beta * s * s
                else:
                    for a in range(d):
                        s = s + cos(points[i, a] - nodes[k, a])
                    t = beta * s
                acc = acc + weights[k] * exp(t)
            o[i] = acc / norm
    return out


def neumaier_sum(const double[::1] values):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef double s = 0.0, c = 0.0, t, v
    with nogil:
        for i in range(n):
            v = values[i]
            t = s + v
            if fabs(s) >= fabs(v):
                c = c + ((s - t) + v)
            else:
                c = c + ((v - t) + s)
            s = t
    return s + c


def spd_inv_det(const double[:, :, ::1] g):
    """Inverse and determinant of a stack of SPD matrices via Cholesky.

    A non-positive pivot yields ``det = 0`` and a NaN inverse for that matrix.
    """
    cdef Py_ssize_t n = g.shape[0], d = g.shape[1]
    cdef Py_ssize_t i, a, b, k
    cdef double s, det
    cdef double[8][8] L
    cdef double[8][8] Li
    if d > 8:
        raise ValueError("spd_inv_det supports at most 8x8 matrices")
    inv = np.empty((n, d, d))
    dets = np.empty(n)
    cdef double[:, :, ::1] o = inv
    cdef double[::1] od = dets
    with nogil:
        for i in range(n):
            det = 1.0
            for a in range(d):
                for b in range(a + 1):
                    s = g[i, a, b]
                    for k in range(b):
                        s = s - L[a][k] * L[b][k]
                    if a == b:
                        if s <= 0.0:
                            det = 0.0
                            s = 1.0
                        L[a][a] = sqrt(s)
                    else:
                        L[a][b] = s / L[b][b]
            if det == 0.0:
                od[i] = 0.0
                for a in range(d):
                    for b in range(d):
                        o[i, a, b] = NAN
                continue
            for a in range(d):
                det = det * L[a][a] * L[a][a]
            # Li = L^{-1} (lower triangular)
            for a in range(d):
                for b in range(d):
                    Li[a][b] = 0.0
            for b in range(d):
                Li[b][b] = 1.0 / L[b][b]
                for a in range(b + 1, d):
                    s = 0.0
                    for k in range(b, a):
                        s = s - L[a][k] * Li[k][b]
                    Li[a][b] = s / L[a][a]
            for a in range(d):
                for b in range(a + 1):
                    s = 0.0
                    for k in range(a, d):
                        s = s + Li[k][a] * Li[k][b]
                    o[i, a, b] = s
                    o[i, b, a] = s
            od[i] = det
    return inv, dets


def spd_inv_sqrt(const double[:, :, ::1] g):
    """Principal inverse square root of a stack of SPD matrices (cyclic Jacobi)."""
    cdef Py_ssize_t n = g.shape[0], d = g.shape[1]
    cdef Py_ssize_t i, p, q, k, sweep
    cdef double off, app, aqq, apq, theta, t, c, sn, akp, akq, vkp, vkq, s
    cdef double[8][8] M
    cdef double[8][8] V
    cdef double[8] w
    if d > 8:
        raise ValueError("spd_inv_sqrt supports at most 8x8 matrices")
    out = np.empty((n, d, d))
    cdef double[:, :, ::1] o = out
    with nogil:
        for i in range(n):
            for p in range(d):
                for q in range(d):
                    M[p][q] = 0.5 * (g[i, p, q] + g[i, q, p])
                    V[p][q] = 1.0 if p == q else 0.0
            for sweep in range(60):
                off = 0.0
                s = 0.0
                for p in range(d):
                    s = s + M[p][p] * M[p][p]
                    for q in range(p + 1, d):
                        off = off + M[p][q] * M[p][q]
                if off <= 1e-34 * s:
                    break
                for p in range(d):
                    for q in range(p + 1, d):
                        apq = M[p][q]
                        if apq == 0.0:
                            continue
                        app = M[p][p]
                        aqq = M[q][q]
                        theta = (aqq - app) / (2.0 * apq)
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                        if theta < 0.0:
                            t = -t
                        c = 1.0 / sqrt(t * t + 1.0)
                        sn = t * c
                        for k in range(d):
                            akp = M[k][p]
                            akq = M[k][q]
                            M[k][p] = c * akp - sn * akq
                            M[k][q] = sn * akp + c * akq
                        for k in range(d):
                            akp = M[p][k]
                            akq = M[q][k]
                            M[p][k] = c * akp - sn * akq
                            M[q][k] = sn * akp + c * akq
                        for k in range(d):
                            vkp = V[k][p]
                            vkq = V[k][q]
                            V[k][p] = c * vkp - sn * vkq
                            V[k][q] = sn * vkp + c * vkq
            for p in range(d):
                w[p] = 1.0 / sqrt(M[p][p]) if M[p][p] > 0.0 else NAN
            for p in range(d):
                for q in range(d):
                    s = 0.0
                    for k in range(d):
                        s = s + V[p][k] * w[k] * V[q][k]
                    o[i, p, q] = s
    return out
