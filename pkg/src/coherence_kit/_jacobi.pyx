# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Cyclic complex Jacobi eigensolver for small dense Hermitian matrices."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


cdef inline double _cabs(double complex z) nogil:
    return hypot(z.real, z.imag)


def jacobi_eigh(a_in, double tol=1e-15, int max_sweeps=100):
    """Return ``(w, v, sweeps)`` for the Hermitian matrix ``a_in``.

    ``a_in`` is copied; only its Hermitian part is used. ``sweeps`` is -1
    if the off-diagonal mass did not fall below ``tol * ||A||_F`` within
    ``max_sweeps`` sweeps.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] arr = np.array(a_in, dtype=np.complex128, order="C")
    cdef Py_ssize_t n = arr.shape[0]
    cdef double complex[:, ::1] a = arr
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] varr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] v = varr
    cdef Py_ssize_t i, j, k, p, q
    cdef double fro = 0.0, off, h, app, aqq, theta, t, c, s
    cdef double complex ph, akp, akq, apk, aqk
    cdef int sweep, converged = 0

    with nogil:
        for i in range(n):
            a[i, i] = a[i, i].real
            for j in range(i + 1, n):
                a[i, j] = 0.5 * (a[i, j] + a[j, i].conjugate())
                a[j, i] = a[i, j].conjugate()
        for i in range(n):
            for j in range(n):
                fro += a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag
        fro = sqrt(fro)

        for sweep in range(max_sweeps + 1):
            off = 0.0
            for i in range(n):
                for j in range(i + 1, n):
                    off += 2.0 * (a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag)
            off = sqrt(off)
            if off <= tol * fro or off == 0.0:
                converged = 1
                break
            if sweep == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    h = _cabs(a[p, q])
                    if h == 0.0:
                        continue
                    ph = a[p, q] / h
                    app = a[p, p].real
                    aqq = a[q, q].real
                    theta = (aqq - app) / (2.0 * h)
                    if theta >= 0.0:
                        t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    # A <- A G with G = [[c, s], [-s conj(ph), c conj(ph)]]
                    for k in range(n):
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * ph.conjugate() * akq
                        a[k, q] = s * akp + c * ph.conjugate() * akq
                    # A <- G^dagger A
                    for k in range(n):
                        apk = a[p, k]
                        aqk = a[q, k]
                        a[p, k] = c * apk - s * ph * aqk
                        a[q, k] = s * apk + c * ph * aqk
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    a[p, p] = app - t * h
                    a[q, q] = aqq + t * h
                    for k in range(n):
                        akp = v[k, p]
                        akq = v[k, q]
                        v[k, p] = c * akp - s * ph.conjugate() * akq
                        v[k, q] = s * akp + c * ph.conjugate() * akq

    w = np.array([arr[i, i].real for i in range(n)], dtype=np.float64)
    order = np.argsort(w, kind="stable")
    return w[order], varr[:, order], (sweep if converged else -1)
