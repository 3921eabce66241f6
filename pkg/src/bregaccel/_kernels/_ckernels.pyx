# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the numpy kernels.

Semantics are defined by _py_kernels; elementwise results match it bit for
bit.  diff_norm2 accumulates sequentially, so it may differ from numpy's
pairwise summation in the last ulp.
"""

import numpy as np

from libc.math cimport fabs


cdef inline double _soft1(double v, double t) nogil:
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0


def soft_threshold_vec(v, t):
    v = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty_like(v)
    cdef const double[::1] vv = v
    cdef double[::1] oo = out
    cdef const double[::1] tt
    cdef double ts
    cdef Py_ssize_t i, n = vv.shape[0]
    if np.ndim(t) == 0:
        ts = float(t)
        for i in range(n):
            oo[i] = _soft1(vv[i], ts)
    else:
        tt = np.ascontiguousarray(t, dtype=np.float64)
        for i in range(n):
            oo[i] = _soft1(vv[i], tt[i])
    return out


def prox_grad_step(y, grad, step, delta):
    y = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty_like(y)
    cdef const double[::1] yy = y
    cdef const double[::1] gg = np.ascontiguousarray(grad, dtype=np.float64)
    cdef const double[::1] dd = np.ascontiguousarray(delta, dtype=np.float64)
    cdef double[::1] oo = out
    cdef double st = float(step)
    cdef Py_ssize_t i, n = yy.shape[0]
    for i in range(n):
        oo[i] = _soft1(yy[i] - st * gg[i], st * dd[i])
    return out


def momentum_combine(z, z_prev, coef):
    z = np.ascontiguousarray(z, dtype=np.float64)
    out = np.empty_like(z)
    cdef const double[::1] zz = z
    cdef const double[::1] zp = np.ascontiguousarray(z_prev, dtype=np.float64)
    cdef double[::1] oo = out
    cdef double c = float(coef)
    cdef Py_ssize_t i, n = zz.shape[0]
    for i in range(n):
        oo[i] = zz[i] + c * (zz[i] - zp[i])
    return out


def diff_norm2(a, b):
    cdef const double[::1] aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef double acc = 0.0, d
    cdef Py_ssize_t i, n = aa.shape[0]
    for i in range(n):
        d = aa[i] - bb[i]
        acc += d * d
    return acc


def min_norm_subgrad(grad, delta, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    cdef const double[::1] gg = np.ascontiguousarray(grad, dtype=np.float64)
    cdef const double[::1] dd = np.ascontiguousarray(delta, dtype=np.float64)
    cdef const double[::1] xx = x
    cdef double[::1] oo = out
    cdef double gp, gm
    cdef Py_ssize_t i, n = xx.shape[0]
    for i in range(n):
        gp = gg[i] + dd[i]
        gm = gg[i] - dd[i]
        if xx[i] > 0.0:
            oo[i] = gp
        elif xx[i] < 0.0:
            oo[i] = gm
        elif gp < 0.0:
            oo[i] = gp
        elif gm > 0.0:
            oo[i] = gm
        else:
            oo[i] = 0.0
    return out


def beta_phi(grad, delta, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    beta = np.empty_like(x)
    phi = np.empty_like(x)
    cdef const double[::1] gg = np.ascontiguousarray(grad, dtype=np.float64)
    cdef const double[::1] dd = np.ascontiguousarray(delta, dtype=np.float64)
    cdef const double[::1] xx = x
    cdef double[::1] bb = beta
    cdef double[::1] pp = phi
    cdef double gp, gm, hi, lo
    cdef Py_ssize_t i, n = xx.shape[0]
    for i in range(n):
        gp = gg[i] + dd[i]
        gm = gg[i] - dd[i]
        if xx[i] > 0.0:
            bb[i] = 0.0
            hi = xx[i] if xx[i] > gm else gm
            pp[i] = gp if gp < hi else hi
        elif xx[i] < 0.0:
            bb[i] = 0.0
            lo = xx[i] if xx[i] < gp else gp
            pp[i] = gm if gm > lo else lo
        else:
            pp[i] = 0.0
            if gp < 0.0:
                bb[i] = gp
            elif gm > 0.0:
                bb[i] = gm
            else:
                bb[i] = 0.0
    return beta, phi


def project_face(z, x_ref):
    z = np.ascontiguousarray(z, dtype=np.float64)
    out = np.empty_like(z)
    cdef const double[::1] zz = z
    cdef const double[::1] rr = np.ascontiguousarray(x_ref, dtype=np.float64)
    cdef double[::1] oo = out
    cdef Py_ssize_t i, n = zz.shape[0]
    for i in range(n):
        if rr[i] > 0.0:
            oo[i] = zz[i] if zz[i] > 0.0 else 0.0
        elif rr[i] < 0.0:
            oo[i] = zz[i] if zz[i] < 0.0 else 0.0
        else:
            oo[i] = 0.0
    return out
