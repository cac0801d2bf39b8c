"""Invariant suite run by ``qtraj check`` and reused by the tests."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg, superop
from .maps import (
    ALL_KINDS,
    BinnedRecord,
    MapKind,
    MeasurementSetup,
    StepSizeWarning,
    build_map,
    completeness_residual,
    table1_sum,
)
from .metrics import fit_scaling
from .records import RngStream

CHECK_GRID = (1e-3, 1e-2, 1e-1)
IDENTITY_TOL = 1e-15
LEDGER_TOL = 1e-14
ROUNDOFF = 1e-15


@dataclass
class CheckResult:
    name: str
    status: str  # "PASS", "FAIL" or "SKIP"
    detail: str
    value: float = math.nan

    @property
    def passed(self) -> bool:
        return self.status != "FAIL"

    def line(self) -> str:
        return f"{self.name}: {self.status} ({self.detail})"


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def random_records(n: int, seed: int, dt_range=(1e-3, 1e-1)):
    """``n`` records with normal ``I``, ``phi`` and log-uniform ``dt``."""
    rng = RngStream(seed, 0)
    z = rng.normal((n, 3))
    lo, hi = (math.log(v) for v in dt_range)
    u = 0.5 * (1.0 + np.vectorize(math.erf)(z[:, 2] / math.sqrt(2.0)))
    return [
        BinnedRecord(I=float(a), phi=float(b), dt_bin=math.exp(lo + (hi - lo) * float(w)))
        for a, b, w in zip(z[:, 0], z[:, 1], u)
    ]


def _maps(kind, setup, recs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        out = []
        for r in recs:
            rr = r if kind is MapKind.PHI else BinnedRecord(I=r.I, dt_bin=r.dt_bin)
            out.append(build_map(kind, setup, rr))
        return out


def max_pair_diff(setup, a: MapKind, b: MapKind, recs) -> float:
    return max(float(np.max(np.abs(x - y))) for x, y in zip(_maps(a, setup, recs), _maps(b, setup, recs)))


def phi_dependence(setup, recs) -> float:
    """Largest entry change of ``M_Phi`` when ``phi`` is replaced by ``-phi + 1``."""
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        for r in recs:
            m1 = build_map(MapKind.PHI, setup, r)
            m2 = build_map(MapKind.PHI, setup, BinnedRecord(I=r.I, phi=1.0 - r.phi, dt_bin=r.dt_bin))
            worst = max(worst, float(np.max(np.abs(m1 - m2))))
    return worst


def ledger_max_diff(setup, recs, kinds=ALL_KINDS) -> float:
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        for kind in kinds:
            for r in recs:
                rr = r if kind is MapKind.PHI else BinnedRecord(I=r.I, dt_bin=r.dt_bin)
                diff = build_map(kind, setup, rr) - table1_sum(kind, rr, setup)
                worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def _slope(values, grid):
    """Fitted log-log slope, or ``None`` when every value is at roundoff."""
    if max(values) <= ROUNDOFF:
        return None
    return fit_scaling(list(zip(grid, values))).slope


def completeness_slopes(setup, grid=CHECK_GRID):
    res = {}
    for kind in (MapKind.ITO, MapKind.PHI):
        vals = [completeness_residual(kind, setup, g / setup.gamma) for g in grid]
        res[kind] = (vals, _slope(vals, grid))
    return res


def lindblad_slope(setup, grid=CHECK_GRID):
    rho0 = linalg.projector(setup.initial_state)
    vals = [superop.lindblad_residual(setup, g / setup.gamma, rho0) for g in grid]
    return vals, _slope(vals, grid)


def purity_scan(setup, grid=CHECK_GRID):
    """Measured deficit of the phi-averaged state at ``I = 0`` on ``grid``."""
    psi0 = setup.initial_state
    return [
        superop.purity_deficit(superop.phi_averaged_state(setup, g / setup.gamma, 0.0, psi0))
        for g in grid
    ]


def run_checks(setup: MeasurementSetup, seed: int = 0, n_records: int = 100) -> list[CheckResult]:
    recs = random_records(n_records, seed)
    out = []
    pure = setup.eta == 1.0 and not setup.extra_lindblads
    o = setup.ops

    if setup.eta == 1.0 and not np.any(setup.H):
        d = ledger_max_diff(setup, recs)
        out.append(CheckResult("term ledger", _status(d <= LEDGER_TOL), f"max entry diff {d:.3g}", d))
    else:
        out.append(CheckResult("term ledger", "SKIP", "table is defined for eta = 1, H = 0"))

    if setup.eta == 1.0 and np.all(o.c2 == 0):
        for a, b in ((MapKind.ITO, MapKind.ROUCHON_RALPH), (MapKind.WONGLAKHON, MapKind.ROBINET)):
            d = max_pair_diff(setup, a, b, recs)
            out.append(
                CheckResult(f"M_{a.short} == M_{b.short}", _status(d <= IDENTITY_TOL), f"max entry diff {d:.3g}", d)
            )
    else:
        out.append(CheckResult("M_I == M_R", "SKIP", "c^2 != 0"))
    if o.normal and not np.any(setup.H):
        d = phi_dependence(setup, recs)
        out.append(CheckResult("Phi φ-independence", _status(d <= IDENTITY_TOL), f"max entry diff {d:.3g}", d))
    else:
        out.append(CheckResult("Phi φ-independence", "SKIP", "c not normal or H != 0"))

    if not pure:
        for name in ("completeness slope Ito", "completeness slope Phi", "Lindblad consistency", "purity deficit"):
            out.append(CheckResult(name, "SKIP", "needs eta = 1 and no extra channels"))
        return out

    comp = completeness_slopes(setup)
    vals, s = comp[MapKind.ITO]
    if s is None:
        out.append(CheckResult("completeness slope Ito", "PASS", "residual at roundoff"))
    else:
        out.append(CheckResult("completeness slope Ito", _status(abs(s - 2.0) <= 0.1), f"slope {s:.3f}, want 2.0 ± 0.1", s))
    vals, s = comp[MapKind.PHI]
    if s is None:
        out.append(CheckResult("completeness slope Phi", "PASS", "residual at roundoff"))
    else:
        out.append(CheckResult("completeness slope Phi", _status(s > 2.2), f"slope {s:.3f}, want > 2.2", s))

    vals, s = lindblad_slope(setup)
    if s is None:
        out.append(CheckResult("Lindblad consistency", "PASS", "residual at roundoff"))
    else:
        out.append(CheckResult("Lindblad consistency", _status(s > 2.0), f"slope {s:.3f}, want > 2", s))

    rho0 = linalg.projector(setup.initial_state)
    pred = [superop.predicted_purity_deficit_renormalized(setup, g / setup.gamma, rho0) for g in CHECK_GRID]
    if max(pred) <= ROUNDOFF:
        out.append(CheckResult("purity deficit", "SKIP", "predicted deficit vanishes"))
        return out
    meas = purity_scan(setup)
    s = _slope(meas, CHECK_GRID)
    s = math.nan if s is None else s
    out.append(CheckResult("purity deficit slope", _status(abs(s - 3.0) <= 0.15), f"slope {s:.3f}, want 3.0 ± 0.15", s))
    ratio = meas[1] / pred[1]
    out.append(
        CheckResult(
            "purity deficit magnitude",
            _status(abs(ratio - 1.0) <= 0.1),
            f"measured/predicted {ratio:.4f} at γΔt = 1e-2 (trace-free prediction)",
            ratio,
        )
    )
    return out
