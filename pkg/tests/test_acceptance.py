"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Every test checks its numerical targets and its wall-clock budget.  Lines are
collected into an "acceptance criteria" section of the pytest summary.
"""

import math
import time
import warnings

import numpy as np
import pytest

from qtraj import cli, linalg, superop
from qtraj.checks import (
    CHECK_GRID,
    completeness_slopes,
    ledger_max_diff,
    lindblad_slope,
    max_pair_diff,
    phi_dependence,
    purity_scan,
    random_records,
)
from qtraj.config import parse_config
from qtraj.maps import MapKind, StepSizeWarning
from qtraj.metrics import ensemble_reduce, fit_scaling
from qtraj.presets import EXAMPLE_IDS, example_setup
from qtraj.records import RngStream, bin_weights
from qtraj.trajectory import ProtocolConfig, run_ensemble, single_bin_errors

I, R, W, B, PHI = (
    MapKind.ITO,
    MapKind.ROUCHON_RALPH,
    MapKind.WONGLAKHON,
    MapKind.ROBINET,
    MapKind.PHI,
)

SWEEP_GRID = (4e-3, 1e-2, 2.5e-2, 6.3e-2)
# fine samples per bin for the single-bin sweep, held fixed over the grid
SWEEP_N = 10000
SWEEP_RECORDS = 1000


def within(x, target, tol):
    return abs(x - target) <= tol


def test_criterion_1_operator_identities(acceptance_report):
    t0 = time.perf_counter()
    recs = random_records(100, seed=1)
    d_ir = max_pair_diff(example_setup("qubit-fluorescence"), I, R, recs)
    d_wb = max_pair_diff(example_setup("qubit-fluorescence"), W, B, recs)
    d_z = phi_dependence(example_setup("qubit-z"), recs)
    d_sz = phi_dependence(example_setup("spin1-z"), recs)
    elapsed = time.perf_counter() - t0
    ok = max(d_ir, d_wb, d_z, d_sz) <= 1e-15 and elapsed < 1.0
    acceptance_report(
        1,
        ok,
        f"|M_I-M_R| {d_ir:.1e}, |M_W-M_B| {d_wb:.1e}, dM_Phi/dphi sigma_z {d_z:.1e}, S_z {d_sz:.1e} (<= 1e-15)",
        elapsed,
    )
    assert ok


def test_criterion_2_ledger(acceptance_report):
    t0 = time.perf_counter()
    recs = random_records(100, seed=2)
    worst = max(ledger_max_diff(example_setup(ex), recs) for ex in EXAMPLE_IDS)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-14 and elapsed < 1.0
    acceptance_report(2, ok, f"max |map - sum of cells| {worst:.2e} over 5 examples x 5 maps (<= 1e-14)", elapsed)
    assert ok


def test_criterion_3_completeness(acceptance_report):
    t0 = time.perf_counter()
    res = completeness_slopes(example_setup("qubit-fluorescence"), CHECK_GRID)
    s_ito, s_phi = res[I][1], res[PHI][1]
    elapsed = time.perf_counter() - t0
    ok = within(s_ito, 2.0, 0.1) and s_phi > 2.2 and elapsed < 5.0
    acceptance_report(3, ok, f"Ito slope {s_ito:.3f} (2 +- 0.1), Phi slope {s_phi:.3f} (> 2.2)", elapsed)
    assert ok


def test_criterion_4_lindblad(acceptance_report):
    t0 = time.perf_counter()
    _, s = lindblad_slope(example_setup("qubit-fluorescence"), CHECK_GRID)
    elapsed = time.perf_counter() - t0
    ok = s > 2.0 and elapsed < 5.0
    acceptance_report(4, ok, f"averaged Phi channel residual slope {s:.3f} (> 2)", elapsed)
    assert ok


def test_criterion_5_purity_deficit(acceptance_report):
    t0 = time.perf_counter()
    s = example_setup("qubit-fluorescence")
    rho0 = linalg.projector(s.initial_state)
    meas = purity_scan(s, CHECK_GRID)
    slope = fit_scaling(list(zip(CHECK_GRID, meas))).slope
    pred = superop.predicted_purity_deficit(s, 1e-2, rho0)
    ratio = meas[1] / pred
    elapsed = time.perf_counter() - t0
    ok = within(ratio, 1.0, 0.1) and within(slope, 3.0, 0.15) and elapsed < 5.0
    acceptance_report(
        5,
        ok,
        f"deficit {meas[1]:.4e} vs (dt^3/12) Tr[(LC-CL rho0)^2] {pred:.4e}, ratio {ratio:.4f} (1 +- 0.1); "
        f"slope {slope:.3f} (3 +- 0.15)",
        elapsed,
    )
    assert ok


def _sweep(example, kinds, grid=SWEEP_GRID):
    s = example_setup(example)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        pts = [single_bin_errors(s, g, SWEEP_N, SWEEP_RECORDS, seed=7, kinds=kinds) for g in grid]
    return pts


def test_criterion_6_single_bin_scaling(acceptance_report):
    t0 = time.perf_counter()
    checks = []

    def slope(pts, k):
        return fit_scaling([(p.gamma_dt_bin, p.median(k)) for p in pts]).slope

    pts = _sweep("spin32-lowering", (I, R, W, B, PHI))
    for k, target in ((I, 1.0), (R, 1.5), (W, 1.5), (B, 1.5), (PHI, 2.0)):
        checks.append((f"Ex5 {k.short}", slope(pts, k), target, 0.15))
    pts = _sweep("spin1-z", (I, B))
    checks.append(("Ex4 B", slope(pts, B), 2.5, 0.2))
    checks.append(("Ex4 I", slope(pts, I), 1.0, 0.15))
    pts = _sweep("qubit-z", (I,))
    checks.append(("Ex1 I", slope(pts, I), 1.5, 0.15))
    (p,) = _sweep("spin1-lowering", (W, B), grid=(4e-3,))
    dw, db = p.median(W), p.median(B)
    rel = abs(dw - db) / db
    elapsed = time.perf_counter() - t0

    ok = all(within(v, t, tol) for _, v, t, tol in checks) and rel <= 0.05 and elapsed < 300
    parts = [f"{name} {v:.3f}" for name, v, _, _ in checks]
    parts.append(f"Ex3 |D_W-D_B|/D_B {rel:.3f} (<= 0.05)")
    acceptance_report(6, ok, "slopes " + ", ".join(parts), elapsed)
    assert ok


def test_criterion_7_ensemble_magnitudes(acceptance_report):
    t0 = time.perf_counter()
    cfg = ProtocolConfig(realizations=500, seed=1)
    ex1 = ensemble_reduce(run_ensemble(example_setup("qubit-z"), cfg))
    ex2 = ensemble_reduce(run_ensemble(example_setup("qubit-fluorescence"), cfg))
    ex4 = ensemble_reduce(run_ensemble(example_setup("spin1-z"), cfg))
    elapsed = time.perf_counter() - t0

    def target(pref):
        return 2 / 3 * math.sqrt(100) * pref * 1e-2**1.5

    rows = [
        ("Ex1 MTrAE_I", ex1[I].mtrae, abs(ex1[I].mtrae / target(0.2585) - 1) <= 0.3, f"{target(0.2585):.3e} +- 30%"),
        ("Ex2 MTrAE_I", ex2[I].mtrae, abs(ex2[I].mtrae / target(0.1152) - 1) <= 0.3, f"{target(0.1152):.3e} +- 30%"),
        ("Ex2 MTrAE_W", ex2[W].mtrae, abs(ex2[W].mtrae / target(0.0576) - 1) <= 0.3, f"{target(0.0576):.3e} +- 30%"),
        ("Ex1 sigma_B", ex1[B].mtrse, 3e-6 <= ex1[B].mtrse <= 3e-4, "[3e-6, 3e-4]"),
        ("Ex4 sigma_Phi", ex4[PHI].mtrse, 3e-5 <= ex4[PHI].mtrse <= 3e-3, "[3e-5, 3e-3]"),
    ]
    aborted = ex1.aborted_count + ex2.aborted_count + ex4.aborted_count
    ok = all(r[2] for r in rows) and aborted == 0 and elapsed < 600
    detail = "; ".join(f"{n} {v:.3e} vs {t} {'ok' if g else 'MISS'}" for n, v, g, t in rows)
    acceptance_report(7, ok, detail, elapsed)
    assert ok


def test_criterion_8_ostensible_statistics(acceptance_report):
    t0 = time.perf_counter()
    n, dt, bins = 100, 1e-4, 100_000
    w_I, w_phi = bin_weights(n, dt)
    rng = RngStream(0, 0)
    I_all, phi_all = np.empty(bins), np.empty(bins)
    chunk = 10_000
    for start in range(0, bins, chunk):
        # mu = 0: fine samples are pure white noise of variance 1/dt
        y = rng.normal((chunk, n)) / math.sqrt(dt)
        I_all[start : start + chunk] = y @ w_I
        phi_all[start : start + chunk] = y @ w_phi
    m = {
        "E[I^2]": (np.mean(I_all**2), 1.0, 0.02),
        "E[phi^2]": (np.mean(phi_all**2), 1.0, 0.02),
        "E[I phi]": (np.mean(I_all * phi_all), 0.0, 0.02),
        "E[I^4]": (np.mean(I_all**4), 3.0, 0.1),
        "E[phi^4]": (np.mean(phi_all**4), 3.0, 0.1),
    }
    elapsed = time.perf_counter() - t0
    ok = all(within(v, t, tol) for v, t, tol in m.values()) and elapsed < 10.0
    acceptance_report(8, ok, ", ".join(f"{k} {v:.4f}" for k, (v, _, _) in m.items()), elapsed)
    assert ok


def test_criterion_9_determinism(acceptance_report, tmp_path):
    text = (
        "example-id = qubit-fluorescence\n"
        "realizations = 500\n"
        "seed = 1\n"
        f"output-dir = {tmp_path / 'first'}\n"
    )
    cfg = parse_config(text)
    t0 = time.perf_counter()
    assert cli.cmd_run(cfg) == 0
    assert cli.cmd_run(cfg.with_overrides(output_dir=tmp_path / "second")) == 0
    elapsed = time.perf_counter() - t0
    names = sorted(p.name for p in (tmp_path / "first").glob("*.csv"))
    same = [(tmp_path / "first" / f).read_bytes() == (tmp_path / "second" / f).read_bytes() for f in names]
    ok = len(names) == 10 and all(same) and elapsed < 60
    acceptance_report(9, ok, f"{sum(same)}/{len(names)} CSV files byte-identical across two runs", elapsed)
    assert ok
