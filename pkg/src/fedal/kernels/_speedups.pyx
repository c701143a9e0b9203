# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match reference.py; numerical results
agree to rounding error (summation order differs from BLAS)."""

from libc.math cimport exp, log, sqrt, pow

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double PROB_FLOOR = 1e-12


cdef void _affine(double[:, ::1] inp, double[:, ::1] w, double[::1] b,
                  double[:, ::1] out, bint relu) noexcept nogil:
    # row-major friendly accumulation: scan w and out rows contiguously
    cdef Py_ssize_t n = inp.shape[0], din = inp.shape[1], dout = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        for j in range(dout):
            out[i, j] = b[j]
        for k in range(din):
            s = inp[i, k]
            for j in range(dout):
                out[i, j] += s * w[k, j]
        if relu:
            for j in range(dout):
                if out[i, j] < 0.0:
                    out[i, j] = 0.0


cdef void _softmax_rows(double[:, ::1] z) noexcept nogil:
    cdef Py_ssize_t n = z.shape[0], c = z.shape[1]
    cdef Py_ssize_t i, j
    cdef double mx, s
    for i in range(n):
        mx = z[i, 0]
        for j in range(1, c):
            if z[i, j] > mx:
                mx = z[i, j]
        s = 0.0
        for j in range(c):
            z[i, j] = exp(z[i, j] - mx)
            s += z[i, j]
        for j in range(c):
            z[i, j] /= s


cdef void _grad_wb(double[:, ::1] a, double[:, ::1] delta,
                   double[:, ::1] gw, double[::1] gb) noexcept nogil:
    # rank-one updates per sample keep every inner scan contiguous
    cdef Py_ssize_t n = a.shape[0], din = a.shape[1], dout = delta.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s
    gw[:, :] = 0.0
    gb[:] = 0.0
    for i in range(n):
        for k in range(din):
            s = a[i, k]
            if s != 0.0:
                for j in range(dout):
                    gw[k, j] += s * delta[i, j]
        for j in range(dout):
            gb[j] += delta[i, j]


cdef void _backprop_delta(double[:, ::1] delta, double[:, ::1] w,
                          double[:, ::1] act, double[:, ::1] out) noexcept nogil:
    # out = (delta @ w.T) masked by act > 0
    cdef Py_ssize_t n = delta.shape[0], dout = delta.shape[1], din = w.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        for k in range(din):
            if act[i, k] > 0.0:
                s = 0.0
                for j in range(dout):
                    s += delta[i, j] * w[k, j]
                out[i, k] = s
            else:
                out[i, k] = 0.0


def _forward_cached(dims, cnp.ndarray weights, cnp.ndarray x):
    cdef Py_ssize_t L = len(dims) - 1
    cdef Py_ssize_t offset = 0, fan_in, fan_out, l
    cdef double[:, ::1] hv, wv, ov
    cdef double[::1] bv
    cdef bint relu
    acts = [x]
    h = x
    for l in range(L):
        fan_in = dims[l]
        fan_out = dims[l + 1]
        w = weights[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = weights[offset:offset + fan_out]
        offset += fan_out
        out = np.empty((h.shape[0], fan_out), dtype=np.float64)
        hv, wv, bv, ov = h, w, b, out
        relu = l < L - 1
        with nogil:
            _affine(hv, wv, bv, ov, relu)
            if not relu:
                _softmax_rows(ov)
        if relu:
            acts.append(out)
        h = out
    return acts, h


def forward_probs(dims, weights, x):
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _forward_cached(tuple(dims), weights, x)[1]


def loss_and_grad(dims, weights, x, y):
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    dims = tuple(dims)
    acts, probs = _forward_cached(dims, weights, x)

    cdef Py_ssize_t n = x.shape[0]
    cdef double[:, ::1] pview = probs
    cdef cnp.int64_t[::1] yview = y
    cdef Py_ssize_t i
    cdef double p, loss = 0.0
    for i in range(n):
        p = pview[i, yview[i]]
        if p < PROB_FLOOR:
            p = PROB_FLOOR
        loss -= log(p)
    loss /= n

    delta = probs.copy()
    cdef double[:, ::1] dview = delta
    cdef Py_ssize_t c = delta.shape[1], j
    for i in range(n):
        dview[i, yview[i]] -= 1.0
    for i in range(n):
        for j in range(c):
            dview[i, j] /= n

    grad = np.zeros_like(weights)
    cdef Py_ssize_t L = len(dims) - 1
    offsets = []
    cdef Py_ssize_t offset = 0, fan_in, fan_out, l
    cdef double[:, ::1] av, wv, gwv, ndv
    cdef double[::1] gbv
    for l in range(L):
        fan_in = dims[l]
        fan_out = dims[l + 1]
        offsets.append(offset)
        offset += fan_in * fan_out + fan_out
    for l in range(L - 1, -1, -1):
        fan_in = dims[l]
        fan_out = dims[l + 1]
        offset = offsets[l]
        w = weights[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        gw = grad[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        gb = grad[offset + fan_in * fan_out:offset + fan_in * fan_out + fan_out]
        av, gwv, gbv = acts[l], gw, gb
        with nogil:
            _grad_wb(av, dview, gwv, gbv)
        if l > 0:
            new_delta = np.empty_like(acts[l])
            wv, ndv = w, new_delta
            with nogil:
                _backprop_delta(dview, wv, av, ndv)
            delta = new_delta
            dview = delta
    return loss, grad


def adam_step(params, grad, m, v, step, lr, beta1, beta2, eps, weight_decay):
    params = np.ascontiguousarray(params, dtype=np.float64)
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    m = np.ascontiguousarray(m, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    p_new = np.empty_like(params)
    m_new = np.empty_like(m)
    v_new = np.empty_like(v)
    cdef double[::1] pv = params, gv = grad, mv = m, vv = v
    cdef double[::1] po = p_new, mo = m_new, vo = v_new
    cdef double c_lr = lr, b1 = beta1, b2 = beta2, c_eps = eps, wd = weight_decay
    cdef double c1 = 1.0 - pow(b1, <double> step)
    cdef double c2 = 1.0 - pow(b2, <double> step)
    cdef Py_ssize_t i, size = params.shape[0]
    cdef double g, mn, vn
    with nogil:
        for i in range(size):
            g = gv[i] + wd * pv[i]
            mn = b1 * mv[i] + (1.0 - b1) * g
            vn = b2 * vv[i] + (1.0 - b2) * g * g
            mo[i] = mn
            vo[i] = vn
            po[i] = pv[i] - c_lr * (mn / c1) / (sqrt(vn / c2) + c_eps)
    return p_new, m_new, v_new
