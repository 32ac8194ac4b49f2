# cython: language_level=3
"""Compiled hot loops: dense kernel matrices and multiplier series sums.

Semantics match ``_kernels_py`` exactly; see that module for the
reference implementation.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sinh, cosh, exp, fabs

cnp.import_array()

# squared relative distance of exp(i z) below which the direct formula is used
cdef double CLOSE = 1e-2


cdef inline double complex _cot_half(double x, double y) nogil:
    # cot(w/2) = (sin x - i sinh y) / (2 (sinh^2(y/2) + sin^2(x/2)))
    cdef double sy = sinh(0.5 * y)
    cdef double sx = sin(0.5 * x)
    cdef double den = 2.0 * (sy * sy + sx * sx)
    return (sin(x) - 1j * sinh(y)) / den


cdef inline double complex _csc2_half(double x, double y) nogil:
    cdef double complex s = sin(0.5 * x) * cosh(0.5 * y) + 1j * cos(0.5 * x) * sinh(0.5 * y)
    return 1.0 / (s * s)


cdef void _exp_iz(double complex[::1] z, double[::1] er, double[::1] ei) noexcept nogil:
    # E_j = exp(i z_j); then cot((z_a - z_b)/2) = i (E_a + E_b)/(E_a - E_b)
    cdef Py_ssize_t j
    cdef double m
    for j in range(z.shape[0]):
        m = exp(-z[j].imag)
        er[j] = m * cos(z[j].real)
        ei[j] = m * sin(z[j].real)


def kernel_matrix(double complex[::1] z, double h, bint periodic):
    """``h * k(z_i - z_j)`` off the diagonal, zero on it.

    ``k(w) = cot(w/2)/2`` for periodic curves and ``1/w`` for closed ones.
    Only the upper triangle is computed; ``k`` is odd.
    """
    cdef Py_ssize_t n = z.shape[0], i, j
    out = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double[::1] er = np.empty(n), ei = np.empty(n)
    cdef double nr, ni, dr, di, q, vr, vi
    cdef double complex c
    with nogil:
        if periodic:
            _exp_iz(z, er, ei)
        for i in range(n):
            for j in range(i + 1, n):
                if periodic:
                    nr = er[i] + er[j]
                    ni = ei[i] + ei[j]
                    dr = er[i] - er[j]
                    di = ei[i] - ei[j]
                    q = dr * dr + di * di
                    if q < CLOSE * (er[i] * er[i] + ei[i] * ei[i]):
                        # nearly coincident points: the difference of exponentials cancels
                        c = 0.5 * h * _cot_half(z[i].real - z[j].real, z[i].imag - z[j].imag)
                        vr = c.real
                        vi = c.imag
                    else:
                        q = 0.5 * h / q
                        vr = -(ni * dr - nr * di) * q
                        vi = (nr * dr + ni * di) * q
                else:
                    dr = z[i].real - z[j].real
                    di = z[i].imag - z[j].imag
                    q = h / (dr * dr + di * di)
                    vr = dr * q
                    vi = -di * q
                o[i, j].real = vr
                o[i, j].imag = vi
                o[j, i].real = -vr
                o[j, i].imag = -vi
    return out


def dkernel_matrix(double complex[::1] z, double h, bint periodic):
    """``h * k'(z_i - z_j)`` off the diagonal, zero on it (``k'`` is even)."""
    cdef Py_ssize_t n = z.shape[0], i, j
    out = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef double[::1] er = np.empty(n), ei = np.empty(n)
    cdef double pr, pi_, dr, di, sr, si, q, vr, vi
    cdef double complex c
    with nogil:
        if periodic:
            _exp_iz(z, er, ei)
        for i in range(n):
            for j in range(i + 1, n):
                if periodic:
                    # -csc^2(w/2)/4 = E_a E_b / (E_a - E_b)^2
                    pr = er[i] * er[j] - ei[i] * ei[j]
                    pi_ = er[i] * ei[j] + ei[i] * er[j]
                    dr = er[i] - er[j]
                    di = ei[i] - ei[j]
                    if dr * dr + di * di < CLOSE * (er[i] * er[i] + ei[i] * ei[i]):
                        c = -0.25 * h * _csc2_half(z[i].real - z[j].real, z[i].imag - z[j].imag)
                        o[i, j] = c
                        o[j, i] = c
                        continue
                else:
                    pr = -1.0
                    pi_ = 0.0
                    dr = z[i].real - z[j].real
                    di = z[i].imag - z[j].imag
                sr = dr * dr - di * di
                si = 2.0 * dr * di
                q = h / (sr * sr + si * si)
                vr = (pr * sr + pi_ * si) * q
                vi = (pi_ * sr - pr * si) * q
                o[i, j].real = vr
                o[i, j].imag = vi
                o[j, i].real = vr
                o[j, i].imag = vi
    return out


def pole_series(double[::1] xi, int n, double first, double step, long K):
    """``sum_{k<K} 2 Re (xi + i(first + k step))^{-(n+1)}`` for each xi."""
    cdef Py_ssize_t m = xi.shape[0], p
    cdef long k
    cdef int e
    cdef double acc, c
    cdef double complex w, r, inv
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for p in range(m):
            acc = 0.0
            c = 0.0
            # sum small terms first for accuracy
            k = K - 1
            while k >= 0:
                w = xi[p] + 1j * (first + k * step)
                inv = 1.0 / w
                r = inv
                for e in range(n):
                    r = r * inv
                acc = acc + 2.0 * r.real
                k -= 1
            o[p] = acc
    return out
