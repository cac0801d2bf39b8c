"""Pure-numpy kernels; same signatures and results as ``qtraj._kernels``."""

import math

import numpy as np


def evolve_fine_bin(psi_in, c, a0, a1, a2, xi, dt_fine, degenerate):
    psi = np.array(psi_in, dtype=np.complex128)
    n = len(xi)
    y = np.empty(n)
    inv_sqrt_dt = 1.0 / math.sqrt(dt_fine)
    status = 0
    for k in range(n):
        mu = 2.0 * np.vdot(psi, c @ psi).real
        yk = mu + xi[k] * inv_sqrt_dt
        y[k] = yk
        out = (a0 + yk * a1 + (yk * yk) * a2) @ psi
        nrm = np.vdot(out, out).real
        if not nrm >= degenerate:
            status = k + 1
            break
        psi = out / math.sqrt(nrm)
    return psi, y, status


def apply_fine_record(psi_in, a0, a1, a2, y, degenerate):
    psi = np.array(psi_in, dtype=np.complex128)
    status = 0
    for k in range(len(y)):
        yk = y[k]
        out = (a0 + yk * a1 + (yk * yk) * a2) @ psi
        nrm = np.vdot(out, out).real
        if not nrm >= degenerate:
            status = k + 1
            break
        psi = out / math.sqrt(nrm)
    return psi, status
