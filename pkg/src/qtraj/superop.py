"""Density-matrix form of the Phi map and related record averages."""

from __future__ import annotations

import math
import warnings

import numpy as np

from . import linalg
from .maps import (
    SQRT3,
    BinnedRecord,
    MapKind,
    MeasurementSetup,
    StepSizeWarning,
    build_map,
    gauss_hermite_normal,
    record_quadrature,
)

NEGATIVITY_TOL = 1e-8


class StepSizeError(ValueError):
    """The truncated channel produced a clearly non-positive state."""


def lindbladian(setup: MeasurementSetup, rho: np.ndarray) -> np.ndarray:
    """Lindblad generator: Hamiltonian part, measured channel, extra channels."""
    H, c = setup.H, setup.c
    out = -1j * (H @ rho - rho @ H)
    for L in (c, *setup.extra_lindblads):
        Ld = L.conj().T
        LdL = Ld @ L
        out = out + L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def measurement_super(setup: MeasurementSetup, rho: np.ndarray) -> np.ndarray:
    """``C[rho] = sqrt(eta) (c rho + rho c^dag)``."""
    a = math.sqrt(setup.eta) * setup.c
    return a @ rho + rho @ a.conj().T


def lc_anticommutator(setup, rho):
    """``(LC + CL)[rho]``."""
    return lindbladian(setup, measurement_super(setup, rho)) + measurement_super(
        setup, lindbladian(setup, rho)
    )


def lc_commutator(setup, rho):
    """``(LC - CL)[rho]``."""
    return lindbladian(setup, measurement_super(setup, rho)) - measurement_super(
        setup, lindbladian(setup, rho)
    )


def phi_channel_unnormalized(
    setup: MeasurementSetup, rec: BinnedRecord, rho: np.ndarray
) -> np.ndarray:
    """Phi channel expanded through ``dt^{3/2}``, without ostensible weights."""
    I, phi, dt = rec.I, rec.phi, rec.dt_bin
    C = lambda r: measurement_super(setup, r)  # noqa: E731
    c1 = C(rho)
    c2 = C(c1)
    c3 = C(c2)
    lrho = lindbladian(setup, rho)
    lc = lindbladian(setup, c1)
    cl = C(lrho)
    return (
        rho
        + math.sqrt(dt) * I * c1
        + dt * (lrho + 0.5 * (I * I - 1.0) * c2)
        + 0.5
        * dt**1.5
        * (I * (lc + cl) + (I**3 - 3.0 * I) / 3.0 * c3 - phi / SQRT3 * (lc - cl))
    )


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def apply_superoperator_phi(
    setup: MeasurementSetup,
    rec: BinnedRecord,
    rho: np.ndarray,
    neg_tol: float = NEGATIVITY_TOL,
    strict: bool = False,
) -> tuple[np.ndarray, float]:
    """Apply the truncated Phi channel and renormalize by the trace.

    Returns ``(rho', weight)``.  An eigenvalue of ``rho'`` below ``-neg_tol``
    indicates the step is too large for the truncation; this warns, or
    raises :class:`StepSizeError` when ``strict``.
    """
    rho = linalg.as_matrix(rho)
    if rho.shape[0] != setup.dim:
        raise linalg.DimensionError("rho does not match the setup dimension")
    out = _hermitize(phi_channel_unnormalized(setup, rec, rho))
    w = float(np.trace(out).real)
    if not w > 0.0:
        raise StepSizeError(f"non-positive trace weight {w:.3e}")
    out = out / w
    lo = linalg.hermitian_eigenvalues(out)[0]
    if lo < -neg_tol:
        msg = f"eigenvalue {lo:.3e} below -{neg_tol:g}: step size too large"
        if strict:
            raise StepSizeError(msg)
        warnings.warn(msg, StepSizeWarning, stacklevel=2)
    return out, w


def error_superoperator_faucet(
    setup: MeasurementSetup, rec: BinnedRecord, rho: np.ndarray
) -> np.ndarray:
    """Leading difference between the Phi and robinet channels (phi-linear)."""
    rho = linalg.as_matrix(rho)
    return -rec.phi / (2.0 * SQRT3) * rec.dt_bin**1.5 * lc_commutator(setup, rho)


def average_sandwich(
    kind: MapKind,
    setup: MeasurementSetup,
    dt: float,
    rho: np.ndarray,
    quad_order: int = 40,
) -> np.ndarray:
    """``E[M rho M^dag]`` over the ostensible record distribution."""
    total = np.zeros_like(rho, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        for w, rec in record_quadrature(kind, dt, quad_order):
            m = build_map(kind, setup, rec)
            total += w * (m @ rho @ m.conj().T)
    return total


def lindblad_second_order(setup: MeasurementSetup, dt: float, rho: np.ndarray) -> np.ndarray:
    """``rho + dt L rho + dt^2/2 L^2 rho``."""
    l1 = lindbladian(setup, rho)
    l2 = lindbladian(setup, l1)
    return rho + dt * l1 + 0.5 * dt * dt * l2


def lindblad_residual(setup: MeasurementSetup, dt: float, rho: np.ndarray, quad_order=40) -> float:
    """Trace norm of record-averaged Phi evolution minus second-order Lindblad."""
    diff = average_sandwich(MapKind.PHI, setup, dt, rho, quad_order) - lindblad_second_order(
        setup, dt, rho
    )
    return float(np.sum(np.abs(linalg.hermitian_eigenvalues(_hermitize(diff)))))


def phi_averaged_state(
    setup: MeasurementSetup, dt: float, I: float, psi0: np.ndarray, quad_order: int = 40
) -> np.ndarray:
    """Average of the normalized Phi-map projector over ``phi ~ N(0, 1)`` at fixed ``I``."""
    nodes, weights = gauss_hermite_normal(quad_order)
    rho = np.zeros((setup.dim, setup.dim), complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        for x, w in zip(nodes, weights):
            m = build_map(MapKind.PHI, setup, BinnedRecord(I=I, phi=float(x), dt_bin=dt))
            v = m @ psi0
            v = v / np.linalg.norm(v)
            rho += w * np.outer(v, v.conj())
    return rho


def purity_deficit(rho: np.ndarray) -> float:
    return float(1.0 - np.trace(rho @ rho).real)


def predicted_purity_deficit(setup: MeasurementSetup, dt: float, rho0: np.ndarray) -> float:
    """``dt^3 / 12 * Tr[((LC - CL) rho0)^2]``."""
    x = lc_commutator(setup, rho0)
    return float(dt**3 / 12.0 * np.trace(x @ x).real)


def predicted_purity_deficit_renormalized(
    setup: MeasurementSetup, dt: float, rho0: np.ndarray
) -> float:
    """Same as :func:`predicted_purity_deficit` with ``X = (LC - CL) rho0`` replaced
    by its trace-free part ``X - Tr(X) rho0``.

    Each conditioned state is renormalized, which removes the component of
    ``X`` along ``rho0``.  The two predictions coincide when ``Tr X = 0``.
    """
    x = lc_commutator(setup, rho0)
    t = x - np.trace(x) * rho0
    return float(dt**3 / 12.0 * np.trace(t @ t).real)
