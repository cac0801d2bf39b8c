"""Two-resolution trajectory protocol.

A "true" trajectory is propagated with fine Rouchon-Ralph steps of width
``dt_fine`` driven by a physical homodyne record.  Each bin of ``n`` fine
samples is reduced to ``(I, phi)``, and every requested coarse map advances
its own state with that same binned record.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .maps import (
    ALL_KINDS,
    DEGENERATE_NORM_SQ,
    BinnedRecord,
    DegenerateRecordError,
    MapBuilder,
    MapKind,
    MeasurementSetup,
    apply_pure_map,
)
from .records import FineRecordSegment, RngStream, bin_weights

log = logging.getLogger(__name__)


class TrajectoryAborted(RuntimeError):
    def __init__(self, traj_index, bin_index, reason):
        super().__init__(f"trajectory {traj_index} aborted in bin {bin_index}: {reason}")
        self.traj_index = traj_index
        self.bin_index = bin_index
        self.reason = reason


def _exact_ratio(num: float, den: float, what: str) -> int:
    ratio = num / den
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"{what} = {ratio!r} is not a positive integer")
    return int(n)


@dataclass(frozen=True)
class ProtocolConfig:
    gamma_dt_bin: float = 1e-2
    gamma_dt_fine: float = 1e-4
    total_time_in_gamma: float = 1.0
    realizations: int = 5000
    seed: int = 0
    map_kinds: tuple = ALL_KINDS
    one_step: bool = False

    def __post_init__(self):
        if not (self.gamma_dt_bin > 0 and self.gamma_dt_fine > 0 and self.total_time_in_gamma > 0):
            raise ValueError("step sizes and total time must be positive")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        object.__setattr__(self, "map_kinds", tuple(MapKind(k) for k in self.map_kinds))
        # validate ratios eagerly
        self.n_per_bin
        self.n_bins

    @property
    def n_per_bin(self) -> int:
        return _exact_ratio(self.gamma_dt_bin, self.gamma_dt_fine, "gamma_dt_bin / gamma_dt_fine")

    @property
    def n_bins(self) -> int:
        return _exact_ratio(
            self.total_time_in_gamma, self.gamma_dt_bin, "total_time_in_gamma / gamma_dt_bin"
        )


@dataclass
class TrajectoryRun:
    """States at bin boundaries plus the binned records that produced them."""

    traj_index: int
    times: np.ndarray
    true_states: np.ndarray
    coarse_states: dict
    I: np.ndarray
    phi: np.ndarray
    dt_bin: float
    fine_y: np.ndarray | None = None
    one_step_states: dict = field(default_factory=dict)

    @property
    def records(self) -> list[BinnedRecord]:
        return [
            BinnedRecord(I=float(i), phi=float(p), t=float(t), dt_bin=self.dt_bin)
            for i, p, t in zip(self.I, self.phi, self.times[:-1])
        ]

    @property
    def n_bins(self) -> int:
        return len(self.I)


class FineStepper:
    """Precomputed Rouchon-Ralph pieces for fine steps of width ``dt_fine``.

    ``M_R(sqrt(dt) y) = a0 + y a1 + y^2 a2``.
    """

    def __init__(self, setup: MeasurementSetup, dt_fine: float):
        if setup.eta != 1.0:
            raise ValueError("pure-state trajectories require eta = 1")
        o = setup.ops
        dt = float(dt_fine)
        a0 = o.one - 0.5 * o.cdc * dt - 0.5 * o.c2 * dt
        a1 = o.c * dt
        a2 = 0.5 * o.c2 * dt * dt
        if np.any(setup.H != 0):
            pre = o.one - 1j * setup.H * dt - 0.5 * o.H2 * dt * dt
            a0, a1, a2 = pre @ a0, pre @ a1, pre @ a2
        self.dt = dt
        self.c = np.ascontiguousarray(o.c)
        self.a0 = np.ascontiguousarray(a0)
        self.a1 = np.ascontiguousarray(a1)
        self.a2 = np.ascontiguousarray(a2)

    def evolve(self, psi, xi):
        return kernels.evolve_fine_bin(
            np.ascontiguousarray(psi, dtype=np.complex128),
            self.c,
            self.a0,
            self.a1,
            self.a2,
            np.ascontiguousarray(xi, dtype=np.float64),
            self.dt,
            DEGENERATE_NORM_SQ,
        )

    def replay(self, psi, y):
        return kernels.apply_fine_record(
            np.ascontiguousarray(psi, dtype=np.complex128),
            self.a0,
            self.a1,
            self.a2,
            np.ascontiguousarray(y, dtype=np.float64),
            DEGENERATE_NORM_SQ,
        )


def step_true(setup: MeasurementSetup, psi: np.ndarray, dt_fine: float, rng: RngStream):
    """One fine true step; returns ``(psi', y)``."""
    stepper = FineStepper(setup, dt_fine)
    out, y, status = stepper.evolve(psi, np.array([rng.normal()]))
    if status:
        raise DegenerateRecordError("fine step produced a degenerate record")
    return out, float(y[0])


def fully_conditioned_oracle(
    setup: MeasurementSetup, seg: FineRecordSegment, psi: np.ndarray
) -> np.ndarray:
    """State conditioned on every fine sample of ``seg`` (product of fine steps)."""
    out, status = FineStepper(setup, seg.dt_fine).replay(psi, seg.samples)
    if status:
        raise DegenerateRecordError(f"fine record degenerate at sample {status - 1}")
    return out


def run_trajectory(
    setup: MeasurementSetup,
    cfg: ProtocolConfig,
    traj_index: int,
    keep_fine: bool = False,
) -> TrajectoryRun:
    """Run one realization of the two-resolution protocol.

    With ``cfg.one_step`` each coarse map is also applied once to the true
    state at the start of every bin; those one-step results are stored in
    ``one_step_states``.
    """
    gamma = setup.gamma
    dt_bin = cfg.gamma_dt_bin / gamma
    dt_fine = cfg.gamma_dt_fine / gamma
    n, N = cfg.n_per_bin, cfg.n_bins
    d = setup.dim
    stepper = FineStepper(setup, dt_fine)
    builder = MapBuilder(setup, dt_bin, include_hamiltonian=bool(np.any(setup.H != 0)))
    w_I, w_phi = bin_weights(n, dt_fine)
    rng = RngStream(cfg.seed, traj_index)

    psi0 = setup.initial_state
    true_states = np.empty((N + 1, d), complex)
    true_states[0] = psi0
    coarse = {k: np.empty((N + 1, d), complex) for k in cfg.map_kinds}
    for k in cfg.map_kinds:
        coarse[k][0] = psi0
    one_step = {k: np.empty((N, d), complex) for k in cfg.map_kinds} if cfg.one_step else {}
    I_arr = np.empty(N)
    phi_arr = np.empty(N)
    fine_y = np.empty((N, n)) if keep_fine else None

    psi = np.array(psi0)
    for j in range(N):
        xi = rng.normal(n)
        psi_next, y, status = stepper.evolve(psi, xi)
        if status:
            raise TrajectoryAborted(traj_index, j, f"degenerate fine step {status - 1}")
        I = float(w_I @ y)
        phi = float(w_phi @ y)
        I_arr[j], phi_arr[j] = I, phi
        if keep_fine:
            fine_y[j] = y
        for k in cfg.map_kinds:
            m = builder.build(k, I, phi if k is MapKind.PHI else 0.0)
            try:
                coarse[k][j + 1], _ = apply_pure_map(m, coarse[k][j])
                if cfg.one_step:
                    one_step[k][j], _ = apply_pure_map(m, psi)
            except DegenerateRecordError as exc:
                raise TrajectoryAborted(traj_index, j, f"{k.value}: {exc}") from exc
        psi = psi_next
        true_states[j + 1] = psi
    times = np.arange(N + 1) * dt_bin
    return TrajectoryRun(
        traj_index=traj_index,
        times=times,
        true_states=true_states,
        coarse_states=coarse,
        I=I_arr,
        phi=phi_arr,
        dt_bin=dt_bin,
        fine_y=fine_y,
        one_step_states=one_step,
    )


# --------------------------------------------------------------------------
# Single-bin mode: many independent one-bin records from a fixed state.


@dataclass
class SingleBinResult:
    gamma_dt_bin: float
    n_per_bin: int
    trae: dict  # kind -> array of per-record TrAE against the oracle
    aborted: int = 0

    def median(self, kind: MapKind) -> float:
        return float(np.median(self.trae[MapKind(kind)]))


def single_bin_errors(
    setup: MeasurementSetup,
    gamma_dt_bin: float,
    n_per_bin: int,
    n_records: int,
    seed: int,
    kinds=ALL_KINDS,
    psi0: np.ndarray | None = None,
) -> SingleBinResult:
    """TrAE of each map after one bin, against the fully conditioned oracle.

    Record ``r`` uses stream ``(seed, r)``: fine samples are generated by the
    true evolution from ``psi0``, the oracle replays them, and each map is
    applied to ``psi0`` with the binned ``(I, phi)``.
    """
    from .metrics import trae_pure

    kinds = tuple(MapKind(k) for k in kinds)
    dt_bin = gamma_dt_bin / setup.gamma
    dt_fine = dt_bin / n_per_bin
    psi0 = setup.initial_state if psi0 is None else np.asarray(psi0, complex)
    stepper = FineStepper(setup, dt_fine)
    builder = MapBuilder(setup, dt_bin)
    w_I, w_phi = bin_weights(n_per_bin, dt_fine)
    out = {k: [] for k in kinds}
    aborted = 0
    for r in range(n_records):
        rng = RngStream(seed, r)
        _, y, status = stepper.evolve(psi0, rng.normal(n_per_bin))
        if status:
            aborted += 1
            continue
        oracle = fully_conditioned_oracle(setup, FineRecordSegment(0.0, dt_fine, y), psi0)
        I = float(w_I @ y)
        phi = float(w_phi @ y)
        for k in kinds:
            m = builder.build(k, I, phi if k is MapKind.PHI else 0.0)
            state, _ = apply_pure_map(m, psi0)
            out[k].append(trae_pure(state, oracle))
    if aborted:
        log.warning("single-bin run: %d of %d records aborted", aborted, n_records)
    return SingleBinResult(
        gamma_dt_bin=gamma_dt_bin,
        n_per_bin=n_per_bin,
        trae={k: np.array(v) for k, v in out.items()},
        aborted=aborted,
    )


# --------------------------------------------------------------------------
# Ensembles.


@dataclass
class TrajectoryErrors:
    """Per-trajectory error reductions for every map kind."""

    traj_index: int
    aborted: bool
    sigma_sq: dict = field(default_factory=dict)  # time-averaged TrSE
    trae_mean: dict = field(default_factory=dict)  # time-averaged TrAE
    one_step_trae_mean: dict = field(default_factory=dict)
    reason: str = ""


def trajectory_errors(setup, cfg, traj_index) -> TrajectoryErrors:
    from .metrics import run_one_step_trae, time_avg_trae, time_avg_trse

    try:
        run = run_trajectory(setup, cfg, traj_index)
    except TrajectoryAborted as exc:
        log.warning("%s", exc)
        return TrajectoryErrors(traj_index, True, reason=str(exc))
    res = TrajectoryErrors(traj_index, False)
    for k in cfg.map_kinds:
        res.sigma_sq[k] = time_avg_trse(run, k)
        res.trae_mean[k] = time_avg_trae(run, k)
        if cfg.one_step:
            res.one_step_trae_mean[k] = float(np.mean(run_one_step_trae(run, k)))
    return res


def _chunk_worker(args):
    setup, cfg, indices = args
    return [trajectory_errors(setup, cfg, i) for i in indices]


def run_ensemble(setup: MeasurementSetup, cfg: ProtocolConfig, jobs: int = 1):
    """Errors for trajectories ``0 .. R-1``, ordered by index.

    Results do not depend on ``jobs``: each trajectory owns its stream.
    """
    indices = list(range(cfg.realizations))
    if jobs <= 1 or len(indices) < 2:
        return [trajectory_errors(setup, cfg, i) for i in indices]
    chunks = [indices[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(_chunk_worker, [(setup, cfg, ch) for ch in chunks if ch])
        merged = [r for part in parts for r in part]
    return sorted(merged, key=lambda r: r.traj_index)

