# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: causal convolution and LSTM recurrence.

Same signatures and conventions as ``_fallback``; matrix products go through
the BLAS bundled with scipy.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, tanhf
from scipy.linalg.cython_blas cimport sgemm, dgemm

cnp.import_array()

ctypedef fused floating:
    float
    double


cdef inline void _mm(bint ta, bint tb, int m, int n, int k, floating alpha,
                     const floating* a, int lda, const floating* b, int ldb,
                     floating beta, floating* c, int ldc) noexcept nogil:
    # row-major c[m, n] = alpha * op(a) @ op(b) + beta * c
    cdef char ca = b'T' if ta else b'N'
    cdef char cb = b'T' if tb else b'N'
    if floating is float:
        sgemm(&cb, &ca, &n, &m, &k, &alpha, <float*>b, &ldb, <float*>a, &lda, &beta, c, &ldc)
    else:
        dgemm(&cb, &ca, &n, &m, &k, &alpha, <double*>b, &ldb, <double*>a, &lda, &beta, c, &ldc)


cdef inline floating _tanh(floating z) noexcept nogil:
    if floating is float:
        return tanhf(z)
    else:
        return tanh(z)


cdef inline void _act(floating* z, Py_ssize_t H) noexcept nogil:
    # in-place gate activations over one contiguous [4H] row
    cdef Py_ssize_t q
    for q in range(2 * H):
        z[q] = 0.5 * (_tanh(0.5 * z[q]) + 1.0)
    for q in range(2 * H, 3 * H):
        z[q] = _tanh(z[q])
    for q in range(3 * H, 4 * H):
        z[q] = 0.5 * (_tanh(0.5 * z[q]) + 1.0)


def conv_forward(const floating[:, :, ::1] x, const floating[:, :, ::1] w,
                 const floating[::1] b, int dilation):
    cdef Py_ssize_t B = x.shape[0], T = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t k = w.shape[0], cout = w.shape[2]
    cdef Py_ssize_t bi, t, o, j, s
    y = np.empty((B, T, cout), dtype=np.float32 if floating is float else np.float64)
    cdef floating[:, :, ::1] yv = y
    if B == 0 or T == 0:
        return y
    with nogil:
        for bi in range(B):
            for t in range(T):
                for o in range(cout):
                    yv[bi, t, o] = b[o]
        for bi in range(B):
            for j in range(k):
                s = dilation * (k - 1 - j)
                if s >= T:
                    continue
                _mm(False, False, <int>(T - s), <int>cout, <int>C, <floating>1.0,
                    &x[bi, 0, 0], <int>C, &w[j, 0, 0], <int>cout,
                    <floating>1.0, &yv[bi, s, 0], <int>cout)
    return y


def conv_backward(const floating[:, :, ::1] x, const floating[:, :, ::1] w,
                  const floating[:, :, ::1] gy, int dilation):
    cdef Py_ssize_t B = x.shape[0], T = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t k = w.shape[0], cout = w.shape[2]
    cdef Py_ssize_t bi, t, o, j, s
    dt = np.float32 if floating is float else np.float64
    gx = np.zeros((B, T, C), dtype=dt)
    gw = np.zeros((k, C, cout), dtype=dt)
    gb = np.zeros(cout, dtype=dt)
    cdef floating[:, :, ::1] gxv = gx
    cdef floating[:, :, ::1] gwv = gw
    cdef floating[::1] gbv = gb
    if B == 0 or T == 0:
        return gx, gw, gb
    with nogil:
        for j in range(k):
            s = dilation * (k - 1 - j)
            if s >= T:
                continue
            for bi in range(B):
                _mm(False, True, <int>(T - s), <int>C, <int>cout, <floating>1.0,
                    &gy[bi, s, 0], <int>cout, &w[j, 0, 0], <int>cout,
                    <floating>1.0, &gxv[bi, 0, 0], <int>C)
                _mm(True, False, <int>C, <int>cout, <int>(T - s), <floating>1.0,
                    &x[bi, 0, 0], <int>C, &gy[bi, s, 0], <int>cout,
                    <floating>1.0, &gwv[j, 0, 0], <int>cout)
        for bi in range(B):
            for t in range(T):
                for o in range(cout):
                    gbv[o] += gy[bi, t, o]
    return gx, gw, gb


def lstm_forward(const floating[:, :, ::1] xw, const floating[:, ::1] u):
    cdef Py_ssize_t B = xw.shape[0], T = xw.shape[1], H4 = xw.shape[2]
    cdef Py_ssize_t H = H4 // 4
    cdef Py_ssize_t bi, t, q
    cdef floating* z
    cdef floating* hp
    cdef floating* cn
    cdef floating* cpv
    dt = np.float32 if floating is float else np.float64
    gates = np.array(xw, dtype=dt, copy=True, order="C")
    h = np.empty((B, T, H), dtype=dt)
    c = np.empty((B, T, H), dtype=dt)
    cdef floating[:, :, ::1] gv = gates
    cdef floating[:, :, ::1] hv = h
    cdef floating[:, :, ::1] cv = c
    if B == 0 or T == 0:
        return h, c, gates
    with nogil:
        for t in range(T):
            if t > 0:
                _mm(False, False, <int>B, <int>H4, <int>H, <floating>1.0,
                    &hv[0, t - 1, 0], <int>(T * H), &u[0, 0], <int>H4,
                    <floating>1.0, &gv[0, t, 0], <int>(T * H4))
            for bi in range(B):
                z = &gv[bi, t, 0]
                _act(z, H)
                hp = &hv[bi, t, 0]
                cn = &cv[bi, t, 0]
                if t > 0:
                    cpv = &cv[bi, t - 1, 0]
                    for q in range(H):
                        cn[q] = z[H + q] * cpv[q] + z[q] * z[2 * H + q]
                else:
                    for q in range(H):
                        cn[q] = z[q] * z[2 * H + q]
                for q in range(H):
                    hp[q] = z[3 * H + q] * _tanh(cn[q])
    return h, c, gates


def lstm_backward(const floating[:, :, ::1] gh, const floating[:, :, ::1] h,
                  const floating[:, :, ::1] c, const floating[:, :, ::1] gates,
                  const floating[:, ::1] u):
    cdef Py_ssize_t B = h.shape[0], T = h.shape[1], H = h.shape[2]
    cdef Py_ssize_t H4 = 4 * H
    cdef Py_ssize_t bi, t, q
    cdef floating i, f, g, o, cp, dh, tc, dc
    cdef const floating* gt
    cdef const floating* ct
    cdef const floating* ghp
    cdef floating* gzp
    cdef floating* dhp
    cdef floating* dcp
    dt = np.float32 if floating is float else np.float64
    gxw = np.empty((B, T, H4), dtype=dt)
    gu = np.zeros((H, H4), dtype=dt)
    dh_next = np.zeros((B, H), dtype=dt)
    dc_next = np.zeros((B, H), dtype=dt)
    cdef floating[:, :, ::1] gz = gxw
    cdef floating[:, ::1] guv = gu
    cdef floating[:, ::1] dhn = dh_next
    cdef floating[:, ::1] dcn = dc_next
    if B == 0 or T == 0:
        return gxw, gu
    with nogil:
        for t in range(T - 1, -1, -1):
            for bi in range(B):
                gt = &gates[bi, t, 0]
                ct = &c[bi, t, 0]
                ghp = &gh[bi, t, 0]
                gzp = &gz[bi, t, 0]
                dhp = &dhn[bi, 0]
                dcp = &dcn[bi, 0]
                for q in range(H):
                    i = gt[q]
                    f = gt[H + q]
                    g = gt[2 * H + q]
                    o = gt[3 * H + q]
                    cp = c[bi, t - 1, q] if t > 0 else 0.0
                    dh = ghp[q] + dhp[q]
                    tc = _tanh(ct[q])
                    dc = dh * o * (1.0 - tc * tc) + dcp[q]
                    gzp[q] = dc * g * i * (1.0 - i)
                    gzp[H + q] = dc * cp * f * (1.0 - f)
                    gzp[2 * H + q] = dc * i * (1.0 - g * g)
                    gzp[3 * H + q] = dh * tc * o * (1.0 - o)
                    dcp[q] = dc * f
            _mm(False, True, <int>B, <int>H, <int>H4, <floating>1.0,
                &gz[0, t, 0], <int>(T * H4), &u[0, 0], <int>H4,
                <floating>0.0, &dhn[0, 0], <int>H)
            if t > 0:
                _mm(True, False, <int>H, <int>H4, <int>B, <floating>1.0,
                    &h[0, t - 1, 0], <int>(T * H), &gz[0, t, 0], <int>(T * H4),
                    <floating>1.0, &guv[0, 0], <int>H4)
    return gxw, gu
