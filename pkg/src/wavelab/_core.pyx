# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: pointwise nonlinearity evaluation and running time quadrature."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def poly_eval(double[:, ::1] derivs, long[:, ::1] alphas, double[::1] coeffs):
    cdef Py_ssize_t nvar = derivs.shape[0]
    cdef Py_ssize_t npts = derivs.shape[1]
    cdef Py_ssize_t nterm = alphas.shape[0]
    cdef Py_ssize_t p, t, i
    cdef long a, e
    cdef double acc, prod, base
    out_arr = np.empty(npts, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for p in range(npts):
            acc = 0.0
            for t in range(nterm):
                prod = coeffs[t]
                for i in range(nvar):
                    a = alphas[t, i]
                    if a == 0:
                        continue
                    base = derivs[i, p]
                    for e in range(a):
                        prod = prod * base
                acc = acc + prod
            out[p] = acc
    return out_arr


def cumulative_quadrature(double complex[:, ::1] g, double h):
    cdef Py_ssize_t J = g.shape[0] - 1
    cdef Py_ssize_t M = g.shape[1]
    cdef Py_ssize_t j, k
    if J < 2:
        raise ValueError("need at least three time samples")
    out_arr = np.zeros((J + 1, M), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double c3 = h / 3.0
    cdef double c38 = 3.0 * h / 8.0
    cdef double c12 = h / 12.0
    with nogil:
        for k in range(M):
            out[1, k] = c12 * (5.0 * g[0, k] + 8.0 * g[1, k] - g[2, k])
        for j in range(2, J + 1):
            if j % 2 == 0:
                for k in range(M):
                    out[j, k] = out[j - 2, k] + c3 * (g[j - 2, k] + 4.0 * g[j - 1, k] + g[j, k])
            else:
                for k in range(M):
                    out[j, k] = out[j - 3, k] + c38 * (
                        g[j - 3, k] + 3.0 * g[j - 2, k] + 3.0 * g[j - 1, k] + g[j, k])
    return out_arr
