"""Error metrics, ensemble reductions and scaling fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .maps import MapKind

HIST_BINS = 50
HIST_RANGE = (1e-7, 1e-1)


def trae_pure(a, b) -> float:
    """Trace distance between pure states, ``sqrt(1 - |<a|b>|^2)``."""
    return math.sqrt(max(0.0, 1.0 - linalg.pure_overlap_sq(a, b)))


def trse_pure(a, b) -> float:
    """Trace squared error, ``2 (1 - |<a|b>|^2)``."""
    return 2.0 * (1.0 - linalg.pure_overlap_sq(a, b))


def trae_mixed(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    diff = linalg.as_matrix(rho) - linalg.as_matrix(sigma)
    return 0.5 * float(np.sum(np.abs(linalg.hermitian_eigenvalues(diff))))


def _overlaps(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    f = np.abs(np.einsum("ij,ij->i", a.conj(), b)) ** 2
    return np.clip(f, 0.0, 1.0)


def per_bin_trae(run, kind) -> np.ndarray:
    """``D(t_j)`` for ``j = 1..N``."""
    f = _overlaps(run.coarse_states[MapKind(kind)][1:], run.true_states[1:])
    return np.sqrt(np.maximum(0.0, 1.0 - f))


def time_avg_trse(run, kind) -> float:
    """Time-averaged TrSE over bins ``j = 1..N`` (a squared quantity)."""
    f = _overlaps(run.coarse_states[MapKind(kind)][1:], run.true_states[1:])
    return float(np.mean(2.0 * (1.0 - f)))


def time_avg_trae(run, kind) -> float:
    return float(np.mean(per_bin_trae(run, kind)))


def run_one_step_trae(run, kind) -> np.ndarray:
    """One-step TrAE per bin, re-anchored on the true state at each bin start."""
    f = _overlaps(run.one_step_states[MapKind(kind)], run.true_states[1:])
    return np.sqrt(np.maximum(0.0, 1.0 - f))


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray


def log_histogram(values, bins: int = HIST_BINS, value_range=HIST_RANGE) -> Histogram:
    """Histogram on log-spaced edges; values outside the range go to the end bins."""
    lo, hi = value_range
    edges = np.logspace(math.log10(lo), math.log10(hi), bins + 1)
    v = np.clip(np.asarray(values, dtype=float), lo, hi)
    counts, _ = np.histogram(v, bins=edges)
    return Histogram(edges, counts)


@dataclass
class MapErrorSummary:
    kind: MapKind
    sigma_time_avg: np.ndarray  # sqrt of time-averaged TrSE, one per trajectory
    mtrse: float  # mean of sigma_time_avg
    mtrae: float
    histogram: Histogram
    one_step_trae: float | None = None


@dataclass
class ErrorSummary:
    maps: dict = field(default_factory=dict)
    realizations: int = 0
    aborted_count: int = 0

    def __getitem__(self, kind) -> MapErrorSummary:
        return self.maps[MapKind(kind)]


def ensemble_reduce(per_traj, bins: int = HIST_BINS, value_range=HIST_RANGE) -> ErrorSummary:
    """Combine per-trajectory errors into ensemble means and histograms.

    ``per_traj`` is a sequence of :class:`~qtraj.trajectory.TrajectoryErrors`.
    Aborted trajectories are counted and excluded.
    """
    per_traj = list(per_traj)
    if not per_traj:
        raise ValueError("no trajectories to reduce")
    ok = sorted((r for r in per_traj if not r.aborted), key=lambda r: r.traj_index)
    summary = ErrorSummary(realizations=len(per_traj), aborted_count=len(per_traj) - len(ok))
    if not ok:
        return summary
    for kind in ok[0].sigma_sq:
        sig = np.sqrt(np.array([r.sigma_sq[kind] for r in ok]))
        dbar = np.array([r.trae_mean[kind] for r in ok])
        one = None
        if ok[0].one_step_trae_mean:
            one = float(np.mean([r.one_step_trae_mean[kind] for r in ok]))
        summary.maps[kind] = MapErrorSummary(
            kind=kind,
            sigma_time_avg=sig,
            mtrse=float(np.mean(sig)),
            mtrae=float(np.mean(dbar)),
            histogram=log_histogram(sig, bins, value_range),
            one_step_trae=one,
        )
    return summary


@dataclass
class ScalingFit:
    dt_values: np.ndarray
    error_values: np.ndarray
    slope: float
    intercept: float
    r_squared: float


def fit_scaling(points) -> ScalingFit:
    """Least-squares fit of ``log(error) = slope * log(dt) + intercept``."""
    pts = sorted((float(d), float(e)) for d, e in points)
    if len(pts) < 3:
        raise ValueError("need at least three points")
    dt = np.array([p[0] for p in pts])
    err = np.array([p[1] for p in pts])
    if np.any(dt <= 0) or np.any(np.diff(dt) <= 0):
        raise ValueError("dt values must be positive and distinct")
    if np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise ValueError("error values must be positive and finite")
    x, y = np.log(dt), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(dt, err, float(slope), float(intercept), r2)


def accumulated_trae(per_step_D: float, N: int) -> float:
    """Expected time-averaged TrAE after ``N`` steps of typical size ``per_step_D``."""
    return 2.0 / 3.0 * math.sqrt(N) * per_step_D


def appendixB_check(per_step_D: float, N: int, measured_Dbar: float) -> float:
    """Ratio of measured to predicted accumulated TrAE (1 when both vanish).

    The 2/3 prefactor is a large-``N`` result; small ``N`` is only indicative.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    predicted = accumulated_trae(per_step_D, N)
    if predicted == 0.0:
        return 1.0 if measured_Dbar == 0.0 else math.inf
    return measured_Dbar / predicted
