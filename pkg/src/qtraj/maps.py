"""Finite-step measurement operators conditioned on binned records.

Five maps are provided (:class:`MapKind`).  Each takes the dimensionless
binned current ``I`` and, for the Phi map only, the linearly weighted record
``phi``.  Apart from Phi, the maps are defined with ``H = 0``; pass
``include_hamiltonian=True`` to left-multiply by ``1 - iH dt - H^2 dt^2 / 2``.

The Phi map keeps ``H``.  Its first-order Hamiltonian term is ``-i H dt``;
with half that coefficient the record-averaged completeness residual would
be ``O(dt^2)`` whenever ``H != 0`` instead of ``o(dt^2)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import linalg
from .linalg import DimensionError

SQRT3 = math.sqrt(3.0)
DEGENERATE_NORM_SQ = 1e-30


class MapKind(str, enum.Enum):
    ITO = "ito"
    ROUCHON_RALPH = "rouchon-ralph"
    WONGLAKHON = "wonglakhon"
    ROBINET = "robinet"
    PHI = "phi"

    @property
    def short(self) -> str:
        return _SHORT[self]

    @classmethod
    def parse(cls, text: str) -> "MapKind":
        key = text.strip().lower()
        for kind in cls:
            if key in (kind.value, kind.short.lower(), kind.name.lower()):
                return kind
        raise ValueError(f"unknown map kind {text!r}")


_SHORT = {
    MapKind.ITO: "I",
    MapKind.ROUCHON_RALPH: "R",
    MapKind.WONGLAKHON: "W",
    MapKind.ROBINET: "B",
    MapKind.PHI: "Phi",
}

ALL_KINDS = tuple(MapKind)


class DegenerateRecordError(ArithmeticError):
    """The record has (numerically) zero probability for the current state."""


class QuadratureWarning(RuntimeWarning):
    """Doubling the quadrature order changed a result by more than 1%."""


class StepSizeWarning(RuntimeWarning):
    """A map was applied outside its small-step regime."""


@dataclass(frozen=True, eq=False)
class MeasurementSetup:
    """Coupling ``c``, Hamiltonian ``H``, efficiency and extra channels.

    ``gamma`` is only used to report dimensionless step sizes.
    """

    c: np.ndarray
    H: np.ndarray | None = None
    eta: float = 1.0
    extra_lindblads: tuple = ()
    initial_state: np.ndarray | None = None
    gamma: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        c = linalg.as_matrix(self.c)
        d = c.shape[0]
        H = np.zeros((d, d), complex) if self.H is None else linalg.as_matrix(self.H)
        if H.shape != c.shape:
            raise DimensionError("H and c must have the same dimension")
        if not linalg.is_hermitian(H, 1e-12):
            raise ValueError("H must be Hermitian")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive")
        extra = tuple(linalg.as_matrix(L) for L in self.extra_lindblads)
        for L in extra:
            if L.shape != c.shape:
                raise DimensionError("extra Lindblad operators must match c")
        if self.initial_state is None:
            psi0 = np.zeros(d, complex)
            psi0[0] = 1.0
        else:
            psi0 = linalg.as_state(self.initial_state)
            if psi0.shape[0] != d:
                raise DimensionError("initial state dimension does not match c")
            if abs(linalg.norm_sq(psi0) - 1.0) > 1e-12:
                raise ValueError("initial state must be normalized")
        for arr in (c, H, psi0, *extra):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "extra_lindblads", extra)
        object.__setattr__(self, "initial_state", psi0)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @cached_property
    def ops(self) -> "_Operators":
        return _Operators(self.c, self.H)

    @cached_property
    def measured_ops(self) -> "_Operators":
        """Operator products built from ``sqrt(eta) c``."""
        if self.eta == 1.0:
            return self.ops
        return _Operators(math.sqrt(self.eta) * self.c, self.H)

    @cached_property
    def coupling_norm_sq(self) -> float:
        return float(np.linalg.norm(self.c, 2) ** 2)


@dataclass(frozen=True)
class BinnedRecord:
    """Dual statistic ``(I, phi)`` for one bin of width ``dt_bin``."""

    I: float
    phi: float = 0.0
    t: float = 0.0
    dt_bin: float = 1e-2

    def __post_init__(self):
        if not self.dt_bin > 0.0:
            raise ValueError("dt_bin must be positive")

    @property
    def Y(self) -> float:
        """Coarse-grained current, ``I / sqrt(dt)``."""
        return self.I / math.sqrt(self.dt_bin)

    @property
    def Z(self) -> float:
        """Linearly weighted integral, ``phi dt^{3/2} / (2 sqrt 3)``."""
        return self.phi * self.dt_bin**1.5 / (2.0 * SQRT3)


class _Operators:
    """Operator products reused by every map."""

    def __init__(self, c: np.ndarray, H: np.ndarray):
        d = c.shape[0]
        self.one = np.eye(d, dtype=complex)
        self.c = c
        self.cd = c.conj().T
        self.H = H
        self.cdc = self.cd @ c
        self.c2 = c @ c
        self.c3 = self.c2 @ c
        self.c4 = self.c3 @ c
        self.cdc_sq = self.cdc @ self.cdc
        self.anti_c_cdc = c @ self.cdc + self.cdc @ c
        self.comm_c_cdc = c @ self.cdc - self.cdc @ c
        self.robinet_mix = self.cd @ self.c3 + c @ self.cd @ self.c2 + self.c2 @ self.cd @ c
        drift = 1j * H + 0.5 * self.cdc
        self.anti_c_drift = c @ drift + drift @ c
        self.comm_c_drift = c @ drift - drift @ c
        self.H2 = H @ H
        self.commutes_with_H = bool(np.all(c @ H - H @ c == 0))
        self.normal = bool(np.all(c @ self.cd - self.cd @ c == 0))


def _check_record(kind: MapKind, rec: BinnedRecord) -> None:
    if kind is not MapKind.PHI and rec.phi != 0.0:
        raise ValueError(f"{kind.value} map does not depend on phi; got phi={rec.phi}")


def _hamiltonian_prefactor(setup: MeasurementSetup, dt: float) -> np.ndarray:
    H = setup.H
    return np.eye(setup.dim, dtype=complex) - 1j * H * dt - 0.5 * (H @ H) * dt**2


def build_map(
    kind: MapKind,
    setup: MeasurementSetup,
    rec: BinnedRecord,
    include_hamiltonian: bool = False,
) -> np.ndarray:
    """Measurement operator of ``kind`` for one binned record.

    Raises ``ValueError`` for a nonzero ``phi`` with a map that ignores it,
    and for ``eta < 1`` with any map other than Phi.
    """
    kind = MapKind(kind)
    _check_record(kind, rec)
    dt = rec.dt_bin
    if dt * setup.coupling_norm_sq > 1.0:
        warnings.warn(
            f"dt * ||c||^2 = {dt * setup.coupling_norm_sq:.3g} exceeds 1",
            StepSizeWarning,
            stacklevel=2,
        )
    if kind is MapKind.PHI:
        return _phi_operator(setup.measured_ops, rec.I, rec.phi, dt)
    if setup.eta != 1.0:
        raise ValueError("pure-state maps other than Phi require eta = 1")
    o = setup.ops
    I = rec.I
    sdt = math.sqrt(dt)
    m = o.one + I * sdt * o.c - 0.5 * o.cdc * dt
    if kind is not MapKind.ITO:
        m = m + 0.5 * o.c2 * (I * I - 1.0) * dt
    if kind in (MapKind.WONGLAKHON, MapKind.ROBINET):
        m = m - 0.25 * I * dt**1.5 * o.anti_c_cdc + 0.125 * dt**2 * o.cdc_sq
    if kind is MapKind.ROBINET:
        m = (
            m
            + dt**1.5 / 6.0 * (I**3 - 3.0 * I) * o.c3
            + dt**2
            / 12.0
            * (0.5 * (I**4 - 6.0 * I**2 + 3.0) * o.c4 - (I**2 - 1.0) * o.robinet_mix)
        )
    if include_hamiltonian:
        m = _hamiltonian_prefactor(setup, dt) @ m
    return m


def _phi_operator(o: _Operators, I: float, phi: float, dt: float) -> np.ndarray:
    sdt = math.sqrt(dt)
    return (
        o.one
        + I * sdt * o.c
        - 0.5 * dt * (o.cdc - o.c2 * (I * I - 1.0) + 2j * o.H)
        - 0.5
        * dt**1.5
        * (
            I * o.anti_c_drift
            + phi / SQRT3 * o.comm_c_drift
            - (I**3 - 3.0 * I) / 3.0 * o.c3
        )
        + 0.5 * dt**2 * (0.25 * o.cdc_sq - o.H2)
    )


# --------------------------------------------------------------------------
# Term ledger: one entry per non-empty cell of the comparison table.


class TableColumn(str, enum.Enum):
    ALL = "all"
    PHI_ROB_W_R = "phi-rob-w-r"
    PHI_ROB_W = "phi-rob-w"
    PHI_ROB = "phi-rob"
    ROB = "rob"
    PHI = "phi"


MAP_COLUMNS = {
    MapKind.ITO: (TableColumn.ALL,),
    MapKind.ROUCHON_RALPH: (TableColumn.ALL, TableColumn.PHI_ROB_W_R),
    MapKind.WONGLAKHON: (TableColumn.ALL, TableColumn.PHI_ROB_W_R, TableColumn.PHI_ROB_W),
    MapKind.ROBINET: (
        TableColumn.ALL,
        TableColumn.PHI_ROB_W_R,
        TableColumn.PHI_ROB_W,
        TableColumn.PHI_ROB,
        TableColumn.ROB,
    ),
    MapKind.PHI: (
        TableColumn.ALL,
        TableColumn.PHI_ROB_W_R,
        TableColumn.PHI_ROB_W,
        TableColumn.PHI_ROB,
        TableColumn.PHI,
    ),
}

TABLE_ORDERS = (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2))


def _cell(col: TableColumn, order: Fraction, o: _Operators, I: float, phi: float):
    if col is TableColumn.ALL:
        if order == 0:
            return o.one
        if order == Fraction(1, 2):
            return I * o.c
        if order == 1:
            return -0.5 * o.cdc
    elif col is TableColumn.PHI_ROB_W_R:
        if order == 1:
            return 0.5 * (I * I - 1.0) * o.c2
    elif col is TableColumn.PHI_ROB_W:
        if order == Fraction(3, 2):
            return -0.25 * I * o.anti_c_cdc
        if order == 2:
            return 0.125 * o.cdc_sq
    elif col is TableColumn.PHI_ROB:
        if order == Fraction(3, 2):
            return (I**3 - 3.0 * I) / 6.0 * o.c3
    elif col is TableColumn.ROB:
        if order == 2:
            return (
                -(I * I - 1.0) / 12.0 * o.robinet_mix
                + (I**4 - 6.0 * I**2 + 3.0) / 24.0 * o.c4
            )
    elif col is TableColumn.PHI:
        if order == Fraction(3, 2):
            return -phi / (4.0 * SQRT3) * o.comm_c_cdc
    return None


def table1_term(
    column: TableColumn, order, rec: BinnedRecord, setup: MeasurementSetup
) -> np.ndarray:
    """One cell of the term ledger, including its power of ``dt``.

    Blank cells return the zero matrix; ``order`` must be one of
    ``0, 1/2, 1, 3/2, 2``.
    """
    column = TableColumn(column)
    order = Fraction(order).limit_denominator(2)
    if order not in TABLE_ORDERS:
        raise ValueError(f"no table row for order {order}")
    m = _cell(column, order, setup.ops, rec.I, rec.phi)
    if m is None:
        return np.zeros((setup.dim, setup.dim), complex)
    return m * rec.dt_bin ** float(order)


def table1_sum(kind: MapKind, rec: BinnedRecord, setup: MeasurementSetup) -> np.ndarray:
    """Sum of every table cell belonging to ``kind`` (``H = 0``)."""
    total = np.zeros((setup.dim, setup.dim), complex)
    for col in MAP_COLUMNS[MapKind(kind)]:
        for order in TABLE_ORDERS:
            total = total + table1_term(col, order, rec, setup)
    return total


# --------------------------------------------------------------------------
# Fast path for trajectory loops: M = sum_j f_j(I, phi) B_j with fixed B_j.


class MapBuilder:
    """Precomputed operator basis for repeated map construction at one ``dt``."""

    def __init__(self, setup: MeasurementSetup, dt: float, include_hamiltonian: bool = False):
        self.setup = setup
        self.dt = float(dt)
        self.include_hamiltonian = include_hamiltonian
        o = setup.ops
        pre = _hamiltonian_prefactor(setup, dt) if include_hamiltonian else None
        base = [o.one, o.c, o.cdc, o.c2, o.anti_c_cdc, o.cdc_sq, o.c3, o.c4, o.robinet_mix]
        if pre is not None:
            base = [pre @ b for b in base]
        self._basis = np.array(base)
        m = setup.measured_ops
        self._phi_basis = np.array(
            [
                m.one + 0.5 * dt**2 * (0.25 * m.cdc_sq - m.H2) - 1j * dt * m.H,
                m.c,
                m.cdc,
                m.c2,
                m.anti_c_drift,
                m.comm_c_drift,
                m.c3,
            ]
        )

    def coefficients(self, kind: MapKind, I: float) -> np.ndarray:
        dt = self.dt
        sdt = math.sqrt(dt)
        dt15 = dt * sdt
        I2 = I * I
        coef = np.zeros(9)
        coef[0] = 1.0
        coef[1] = I * sdt
        coef[2] = -0.5 * dt
        if kind is MapKind.ITO:
            return coef
        coef[3] = 0.5 * (I2 - 1.0) * dt
        if kind is MapKind.ROUCHON_RALPH:
            return coef
        coef[4] = -0.25 * I * dt15
        coef[5] = 0.125 * dt * dt
        if kind is MapKind.WONGLAKHON:
            return coef
        coef[6] = dt15 / 6.0 * (I2 * I - 3.0 * I)
        coef[7] = dt * dt / 24.0 * (I2 * I2 - 6.0 * I2 + 3.0)
        coef[8] = -dt * dt / 12.0 * (I2 - 1.0)
        return coef

    def build(self, kind: MapKind, I: float, phi: float = 0.0) -> np.ndarray:
        if kind is MapKind.PHI:
            dt = self.dt
            sdt = math.sqrt(dt)
            dt15 = dt * sdt
            coef = np.array(
                [
                    1.0,
                    I * sdt,
                    -0.5 * dt,
                    0.5 * (I * I - 1.0) * dt,
                    -0.5 * I * dt15,
                    -0.5 * phi / SQRT3 * dt15,
                    dt15 / 6.0 * (I**3 - 3.0 * I),
                ]
            )
            return np.tensordot(coef, self._phi_basis, 1)
        if self.setup.eta != 1.0:
            raise ValueError("pure-state maps other than Phi require eta = 1")
        return np.tensordot(self.coefficients(kind, I), self._basis, 1)


# --------------------------------------------------------------------------
# Ostensible distributions and quadrature.

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def ostensible_density_I(I: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * I * I)


def ostensible_density_phi(phi: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * phi * phi)


def gauss_hermite_normal(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for expectations under a standard normal.

    ``sum(w * f(x))`` approximates ``E[f(X)]``, ``X ~ N(0, 1)``; exact for
    polynomials of degree ``< 2 * order``.
    """
    x, w = np.polynomial.hermite.hermgauss(order)
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


def record_quadrature(kind: MapKind, dt: float, order: int):
    """Yield ``(weight, BinnedRecord)`` covering the ostensible record law."""
    nodes, weights = gauss_hermite_normal(order)
    if MapKind(kind) is MapKind.PHI:
        for xi, wi in zip(nodes, weights):
            for xj, wj in zip(nodes, weights):
                yield wi * wj, BinnedRecord(I=float(xi), phi=float(xj), dt_bin=dt)
    else:
        for xi, wi in zip(nodes, weights):
            yield wi, BinnedRecord(I=float(xi), dt_bin=dt)


def _completeness_matrix(kind, setup, dt, order, include_hamiltonian):
    total = np.zeros((setup.dim, setup.dim), complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        for w, rec in record_quadrature(kind, dt, order):
            m = build_map(kind, setup, rec, include_hamiltonian)
            total += w * (m.conj().T @ m)
    r = total - np.eye(setup.dim)
    return 0.5 * (r + r.conj().T)


def completeness_residual(
    kind: MapKind,
    setup: MeasurementSetup,
    dt: float,
    quad_order: int = 40,
    include_hamiltonian: bool = False,
) -> float:
    """Operator norm of ``E[M^dag M] - 1`` under the ostensible record law."""
    if quad_order < 20:
        raise ValueError("quad_order must be at least 20")
    r1 = linalg.operator_norm_hermitian(
        _completeness_matrix(kind, setup, dt, quad_order, include_hamiltonian)
    )
    r2 = linalg.operator_norm_hermitian(
        _completeness_matrix(kind, setup, dt, 2 * quad_order, include_hamiltonian)
    )
    if abs(r2 - r1) > 0.01 * abs(r1) and abs(r2 - r1) > 1e-14:
        warnings.warn(
            f"completeness residual changed from {r1:.3e} to {r2:.3e} on doubling quad_order",
            QuadratureWarning,
            stacklevel=2,
        )
    return r1


def apply_pure_map(M: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, float]:
    """Apply ``M`` to ``psi``; return the normalized state and ``||M psi||^2``."""
    out = M @ psi
    w = float(np.vdot(out, out).real)
    if not w >= DEGENERATE_NORM_SQ:
        raise DegenerateRecordError(f"record weight {w:.3e} below {DEGENERATE_NORM_SQ:g}")
    return out / math.sqrt(w), w
