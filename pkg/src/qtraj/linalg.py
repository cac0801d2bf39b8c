"""Small dense complex linear algebra.

Operators and density matrices are plain ``complex128`` numpy arrays of
shape ``(d, d)`` with ``1 <= d <= 8``; state vectors are ``(d,)`` arrays.
Everything here validates its inputs and returns fresh arrays, so callers
may treat results as immutable values.
"""

from __future__ import annotations

import numpy as np

MAX_DIM = 8
HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 60


class DimensionError(ValueError):
    """Operands have incompatible or unsupported dimensions."""


class NotHermitianError(ValueError):
    """A Hermitian matrix was required."""


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a validated square complex matrix."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not 1 <= m.shape[0] <= MAX_DIM:
        raise DimensionError(f"dimension {m.shape[0]} outside [1, {MAX_DIM}]")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_state(v) -> np.ndarray:
    """Return ``v`` as a validated complex state vector (not normalized)."""
    s = np.array(v, dtype=np.complex128)
    if s.ndim != 1 or not 1 <= s.shape[0] <= MAX_DIM:
        raise DimensionError(f"expected a vector of length 1..{MAX_DIM}, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("state has non-finite entries")
    return s


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same(a, b)
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T.copy()


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _check_same(a, b)
    return a @ b + b @ a


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(a)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def hermitian_eigenvalues(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, ascending, by cyclic Jacobi.

    Each sweep visits every upper-triangle pair ``(p, q)`` and applies the
    unitary plane rotation that zeroes ``a[p, q]``.  Iteration stops once
    the off-diagonal Frobenius norm drops below ``JACOBI_TOL`` (scaled by
    ``max(1, ||a||_F)``).
    """
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        raise NotHermitianError("hermitian_eigenvalues requires a Hermitian matrix")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    threshold = JACOBI_TOL * max(1.0, float(np.linalg.norm(a)))
    for _ in range(_JACOBI_MAX_SWEEPS):
        if _offdiag_norm(a) < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = abs(apq)
                if g < 1e-300:
                    continue
                phase = apq / g
                tau = (a[q, q].real - a[p, p].real) / (2.0 * g)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # u = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane
                cp = np.conj(phase)
                col_p = c * a[:, p] - s * cp * a[:, q]
                col_q = s * a[:, p] + c * cp * a[:, q]
                a[:, p], a[:, q] = col_p, col_q
                row_p = c * a[p, :] - s * phase * a[q, :]
                row_q = s * a[p, :] + c * phase * a[q, :]
                a[p, :], a[q, :] = row_p, row_q
                a[p, q] = a[q, p] = 0.0
    else:  # pragma: no cover - Jacobi converges quadratically at these sizes
        raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(np.diag(a).real)


def operator_norm_hermitian(a) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    ev = hermitian_eigenvalues(a)
    return float(np.max(np.abs(ev)))


def norm_sq(psi) -> float:
    psi = np.asarray(psi)
    return float(np.vdot(psi, psi).real)


def normalize(psi) -> np.ndarray:
    psi = as_state(psi)
    n2 = norm_sq(psi)
    if n2 <= 0.0:
        raise ValueError("cannot normalize the zero vector")
    return psi / np.sqrt(n2)


def pure_overlap_sq(a, b) -> float:
    """``|<a|b>|^2`` for normalized states, clamped to ``[0, 1]``."""
    a, b = as_state(a), as_state(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    f = abs(np.vdot(a, b)) ** 2
    return float(min(1.0, max(0.0, f)))


def projector(psi) -> np.ndarray:
    psi = as_state(psi)
    return np.outer(psi, psi.conj())


def expect(op, psi) -> complex:
    """``<psi|op|psi>`` for a normalized state."""
    return complex(np.vdot(psi, op @ psi))
