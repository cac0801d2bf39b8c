"""The five benchmark measurement setups (``H = 0``, ``eta = 1``)."""

import math

import numpy as np

from .maps import MeasurementSetup

SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
S_MINUS = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=complex)
S_Z = np.diag([1.0, 0.0, -1.0]).astype(complex)
# spin-3/2 lowering operator, entries as tabulated (no overall 1/2)
L_MINUS = np.array(
    [[0, 0, 0, 0], [math.sqrt(3), 0, 0, 0], [0, 2, 0, 0], [0, 0, math.sqrt(3), 0]],
    dtype=complex,
)

PLUS_X_QUBIT = np.array([1, 1], dtype=complex) / math.sqrt(2)
PLUS_X_SPIN1 = np.array([1, math.sqrt(2), 1], dtype=complex) / 2
PLUS_X_SPIN32 = np.array([1, math.sqrt(3), math.sqrt(3), 1], dtype=complex) / math.sqrt(8)

EXAMPLE_IDS = (
    "qubit-z",
    "qubit-fluorescence",
    "spin1-lowering",
    "spin1-z",
    "spin32-lowering",
)


def example_setup(example_id: str, gamma: float = 1.0) -> MeasurementSetup:
    """Measurement setup for one of :data:`EXAMPLE_IDS`."""
    g = gamma
    table = {
        "qubit-z": (math.sqrt(g / 2) * SIGMA_Z, PLUS_X_QUBIT),
        "qubit-fluorescence": (math.sqrt(g) * SIGMA_MINUS, PLUS_X_QUBIT),
        "spin1-lowering": (math.sqrt(g) * S_MINUS, PLUS_X_SPIN1),
        "spin1-z": (math.sqrt(g / 2) * S_Z, PLUS_X_SPIN1),
        "spin32-lowering": (math.sqrt(g) * L_MINUS, PLUS_X_SPIN32),
    }
    try:
        c, psi0 = table[example_id]
    except KeyError:
        raise ValueError(f"unknown example id {example_id!r}; expected one of {EXAMPLE_IDS}")
    return MeasurementSetup(c=c, initial_state=psi0, gamma=g, name=example_id)
