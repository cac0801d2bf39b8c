# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fine-step kernels.  Must match ``qtraj._fallback`` to rounding."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef enum:
    MAXD = 8


def evolve_fine_bin(
    const double complex[::1] psi_in,
    const double complex[:, ::1] c,
    const double complex[:, ::1] a0,
    const double complex[:, ::1] a1,
    const double complex[:, ::1] a2,
    const double[::1] xi,
    double dt_fine,
    double degenerate,
):
    """Advance one bin of fine Rouchon-Ralph steps driven by normals ``xi``.

    Returns ``(psi, y, status)``; status is the 1-based index of the step
    whose weight fell below ``degenerate`` (0 when all steps succeeded).
    """
    cdef Py_ssize_t d = psi_in.shape[0]
    cdef Py_ssize_t n = xi.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double complex psi[MAXD]
    cdef double complex out[MAXD]
    cdef double complex acc, cpsi
    cdef double mu, yk, y2, nrm, inv_sqrt_dt
    cdef int status = 0
    if d > MAXD:
        raise ValueError("dimension exceeds 8")
    y_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] y = y_arr
    for i in range(d):
        psi[i] = psi_in[i]
    inv_sqrt_dt = 1.0 / sqrt(dt_fine)
    for k in range(n):
        # mu = 2 Re <psi|c|psi>
        mu = 0.0
        for i in range(d):
            cpsi = 0.0
            for j in range(d):
                cpsi = cpsi + c[i, j] * psi[j]
            mu = mu + (psi[i].real * cpsi.real + psi[i].imag * cpsi.imag)
        mu = 2.0 * mu
        yk = mu + xi[k] * inv_sqrt_dt
        y[k] = yk
        y2 = yk * yk
        nrm = 0.0
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc = acc + (a0[i, j] + yk * a1[i, j] + y2 * a2[i, j]) * psi[j]
            out[i] = acc
            nrm = nrm + acc.real * acc.real + acc.imag * acc.imag
        if not nrm >= degenerate:
            status = k + 1
            break
        nrm = 1.0 / sqrt(nrm)
        for i in range(d):
            psi[i] = out[i] * nrm
    psi_arr = np.empty(d, dtype=np.complex128)
    cdef double complex[::1] po = psi_arr
    for i in range(d):
        po[i] = psi[i]
    return psi_arr, y_arr, status


def apply_fine_record(
    const double complex[::1] psi_in,
    const double complex[:, ::1] a0,
    const double complex[:, ::1] a1,
    const double complex[:, ::1] a2,
    const double[::1] y,
    double degenerate,
):
    """Apply the ordered product of fine steps for a given record ``y``.

    Returns ``(psi, status)`` with the same status convention as
    :func:`evolve_fine_bin`.
    """
    cdef Py_ssize_t d = psi_in.shape[0]
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double complex psi[MAXD]
    cdef double complex out[MAXD]
    cdef double complex acc
    cdef double yk, y2, nrm
    cdef int status = 0
    if d > MAXD:
        raise ValueError("dimension exceeds 8")
    for i in range(d):
        psi[i] = psi_in[i]
    for k in range(n):
        yk = y[k]
        y2 = yk * yk
        nrm = 0.0
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc = acc + (a0[i, j] + yk * a1[i, j] + y2 * a2[i, j]) * psi[j]
            out[i] = acc
            nrm = nrm + acc.real * acc.real + acc.imag * acc.imag
        if not nrm >= degenerate:
            status = k + 1
            break
        nrm = 1.0 / sqrt(nrm)
        for i in range(d):
            psi[i] = out[i] * nrm
    psi_arr = np.empty(d, dtype=np.complex128)
    cdef double complex[::1] po = psi_arr
    for i in range(d):
        po[i] = psi[i]
    return psi_arr, status
