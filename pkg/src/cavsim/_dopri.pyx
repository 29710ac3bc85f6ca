# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) integrator for linear systems ``y' = A y``.

``A`` is complex and given in CSR form. Output is sampled exactly on a time
grid by clipping steps at each output time. Returns a status code instead of
raising so the Python wrapper owns the error policy:
0 success, 1 step size underflow, 2 step budget exhausted.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow

cnp.import_array()

ctypedef double complex cplx

# Butcher tableau
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef inline void _matvec(Py_ssize_t n, const int* ip, const int* ix, const cplx* dat,
                         const cplx* x, cplx* out) noexcept nogil:
    cdef Py_ssize_t i
    cdef int k
    cdef cplx acc
    for i in range(n):
        acc = 0
        for k in range(ip[i], ip[i + 1]):
            acc = acc + dat[k] * x[ix[k]]
        out[i] = acc


cdef inline double _abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


def dopri_csr(int[::1] indptr, int[::1] indices, cplx[::1] data, cplx[::1] y0,
              double[::1] t_out, double rtol, double atol, double h_init, long max_steps):
    """Integrate and return ``(samples, status, n_accepted, n_rejected)``."""
    cdef Py_ssize_t n = y0.shape[0]
    cdef Py_ssize_t nt = t_out.shape[0]
    out_arr = np.zeros((nt, n), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    work_arr = np.zeros((9, n), dtype=np.complex128)
    cdef cplx[:, ::1] w = work_arr
    cdef cplx* y = &w[0, 0]
    cdef cplx* k1 = &w[1, 0]
    cdef cplx* k2 = &w[2, 0]
    cdef cplx* k3 = &w[3, 0]
    cdef cplx* k4 = &w[4, 0]
    cdef cplx* k5 = &w[5, 0]
    cdef cplx* k6 = &w[6, 0]
    cdef cplx* k7 = &w[7, 0]
    cdef cplx* yt = &w[8, 0]
    ynew_arr = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] ynew_v = ynew_arr
    cdef cplx* ynew = &ynew_v[0]
    cdef const int* ip = &indptr[0]
    cdef const int* ix = &indices[0] if indices.shape[0] else NULL
    cdef const cplx* dat = &data[0] if data.shape[0] else NULL

    cdef Py_ssize_t i, iout
    cdef double t, t_end, h, hu, err, sc, a, b, fac, d0, d1
    cdef cplx e
    cdef long n_acc = 0, n_rej = 0
    cdef int status = 0
    cdef bint clipped

    for i in range(n):
        y[i] = y0[i]
        out[0, i] = y0[i]
    if nt < 2:
        return out_arr, 0, 0, 0
    t = t_out[0]
    with nogil:
        _matvec(n, ip, ix, dat, y, k1)
        h = h_init
        if h <= 0:
            d0 = 0
            d1 = 0
            for i in range(n):
                sc = atol + rtol * sqrt(_abs2(y[i]))
                d0 += _abs2(y[i]) / (sc * sc)
                d1 += _abs2(k1[i]) / (sc * sc)
            d0 = sqrt(d0 / n)
            d1 = sqrt(d1 / n)
            if d0 < 1e-5 or d1 < 1e-5:
                h = 1e-6
            else:
                h = 0.01 * d0 / d1
        for iout in range(1, nt):
            t_end = t_out[iout]
            while t < t_end:
                if n_acc + n_rej >= max_steps:
                    status = 2
                    break
                hu = h
                clipped = False
                if t + hu >= t_end:
                    hu = t_end - t
                    clipped = True
                if hu < 1e-14 * (fabs(t) if fabs(t) > 1.0 else 1.0) and not clipped:
                    status = 1
                    break
                for i in range(n):
                    yt[i] = y[i] + hu * (A21 * k1[i])
                _matvec(n, ip, ix, dat, yt, k2)
                for i in range(n):
                    yt[i] = y[i] + hu * (A31 * k1[i] + A32 * k2[i])
                _matvec(n, ip, ix, dat, yt, k3)
                for i in range(n):
                    yt[i] = y[i] + hu * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                _matvec(n, ip, ix, dat, yt, k4)
                for i in range(n):
                    yt[i] = y[i] + hu * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                _matvec(n, ip, ix, dat, yt, k5)
                for i in range(n):
                    yt[i] = y[i] + hu * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
                _matvec(n, ip, ix, dat, yt, k6)
                for i in range(n):
                    ynew[i] = y[i] + hu * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
                _matvec(n, ip, ix, dat, ynew, k7)
                err = 0
                for i in range(n):
                    e = hu * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                    a = _abs2(y[i])
                    b = _abs2(ynew[i])
                    sc = atol + rtol * sqrt(a if a > b else b)
                    err += _abs2(e) / (sc * sc)
                err = sqrt(err / n)
                if err <= 1.0:
                    n_acc += 1
                    t = t_end if clipped else t + hu
                    for i in range(n):
                        y[i] = ynew[i]
                        k1[i] = k7[i]
                    fac = 5.0 if err == 0 else 0.9 * pow(err, -0.2)
                    if fac > 5.0:
                        fac = 5.0
                    if fac < 0.2:
                        fac = 0.2
                    if clipped:
                        if hu * fac > h:
                            h = hu * fac
                    else:
                        h = hu * fac
                else:
                    n_rej += 1
                    fac = 0.9 * pow(err, -0.2)
                    if fac < 0.2:
                        fac = 0.2
                    h = hu * fac
            if status != 0:
                break
            for i in range(n):
                out[iout, i] = y[i]
    return out_arr, status, n_acc, n_rej
