"""``qtraj run|sweep|check`` command-line harness.

Exit codes: 0 success, 2 config error, 3 more than 1% of trajectories
aborted, 4 invariant failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .checks import run_checks
from .config import ConfigError, ExperimentConfig, load_config
from .maps import MapKind, StepSizeWarning
from .metrics import ensemble_reduce, fit_scaling, per_bin_trae
from .trajectory import TrajectoryAborted, run_ensemble, run_trajectory, single_bin_errors

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORTS = 3
EXIT_INVARIANT = 4
ABORT_LIMIT = 0.01
MANIFEST = "manifest.json"

log = logging.getLogger("qtraj")


def _num(x) -> str:
    """Shortest round-trip text for a float; identical across runs."""
    return repr(float(x))


def _csv(path: Path, header, rows) -> None:
    buf = io.StringIO(newline="")
    buf.write(f"# manifest: {MANIFEST}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    path.write_bytes(buf.getvalue().encode("utf-8"))


def _json(path: Path, obj) -> None:
    path.write_bytes((json.dumps(obj, indent=2, ensure_ascii=False) + "\n").encode("utf-8"))


def z_operator(dim: int) -> np.ndarray:
    """``diag(1, ..., -1)`` evenly spaced: ``J_z / j`` with the top state first."""
    if dim == 1:
        return np.ones((1, 1))
    return np.diag(np.linspace(1.0, -1.0, dim))


def _expect_z(states: np.ndarray) -> np.ndarray:
    z = np.diag(z_operator(states.shape[1]))
    return np.einsum("ij,j,ij->i", states.conj(), z, states).real


def _write_manifest(cfg: ExperimentConfig, out: Path, command: str, t0: float, extra: dict) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "backend": kernels.BACKEND,
        "seed": cfg.protocol.seed,
        "config": cfg.snapshot(),
        "timing": {"wall_seconds": round(time.perf_counter() - t0, 3)},
    }
    manifest.update(extra)
    _json(out / MANIFEST, manifest)


def cmd_run(cfg: ExperimentConfig, jobs: int = 1) -> int:
    """Ensemble run: histograms, summary and one sample trajectory."""
    t0 = time.perf_counter()
    setup, proto = cfg.setup, cfg.protocol
    if setup.eta != 1.0:
        raise ConfigError("trajectory runs need eta = 1")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    log.info("run %s: R=%d N=%d n=%d", cfg.example_id, proto.realizations, proto.n_bins, proto.n_per_bin)

    per_traj = run_ensemble(setup, proto, jobs=jobs)
    summary = ensemble_reduce(per_traj)
    aborted = summary.aborted_count
    files = []

    if "csv" in cfg.formats:
        for kind, s in summary.maps.items():
            name = f"hist_{kind.value}.csv"
            h = s.histogram
            rows = (
                (_num(lo), _num(hi), str(int(c)))
                for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts)
            )
            _csv(out / name, ("bin_lo", "bin_hi", "count"), rows)
            files.append(name)
        try:
            run = run_trajectory(setup, proto, cfg.sample_trajectory)
        except TrajectoryAborted as exc:
            log.warning("sample trajectory not written: %s", exc)
        else:
            z_true = _expect_z(run.true_states)
            for kind in proto.map_kinds:
                name = f"trajectory_{kind.value}.csv"
                z_map = _expect_z(run.coarse_states[kind])
                D = np.concatenate([[0.0], per_bin_trae(run, kind)])
                rows = []
                for j, t in enumerate(run.times):
                    I = "" if j == 0 else _num(run.I[j - 1])
                    rows.append((_num(t), I, _num(z_true[j]), _num(z_map[j]), _num(D[j])))
                _csv(out / name, ("t", "y_or_I", "z_true", "z_map", "D_map"), rows)
                files.append(name)

    if "json" in cfg.formats:
        body = {
            "manifest": MANIFEST,
            "example_id": cfg.example_id,
            "realizations": summary.realizations,
            "aborted": aborted,
            "maps": {
                k.value: {
                    "mtrse": s.mtrse,
                    "mtrae": s.mtrae,
                    **({"one_step_trae": s.one_step_trae} if s.one_step_trae is not None else {}),
                }
                for k, s in summary.maps.items()
            },
        }
        _json(out / "summary.json", body)
        files.append("summary.json")

    _write_manifest(cfg, out, "run", t0, {"aborted": aborted, "realizations": summary.realizations, "outputs": files})
    for k, s in summary.maps.items():
        print(f"{k.short:>3}  mtrse {s.mtrse:.4e}  mtrae {s.mtrae:.4e}")
    if aborted > ABORT_LIMIT * summary.realizations:
        print(f"error: {aborted} of {summary.realizations} trajectories aborted", file=sys.stderr)
        return EXIT_ABORTS
    return EXIT_OK


def _sweep_point(args):
    setup, g, n, records, seed, kinds = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepSizeWarning)
        return single_bin_errors(setup, g, n, records, seed, kinds)


def cmd_sweep(cfg: ExperimentConfig, jobs: int = 1) -> int:
    """Single-bin error medians over the dt grid and their log-log fits."""
    t0 = time.perf_counter()
    setup, proto = cfg.setup, cfg.protocol
    if setup.eta != 1.0:
        raise ConfigError("sweeps need eta = 1")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [
        (setup, g, cfg.sweep_n_per_bin, cfg.sweep_records, proto.seed, proto.map_kinds)
        for g in cfg.dt_grid
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    aborted = sum(r.aborted for r in results)
    total = cfg.sweep_records * len(results)

    point_rows, fit_rows, fits = [], [], {}
    for kind in proto.map_kinds:
        pts = [(r.gamma_dt_bin, r.median(kind)) for r in results]
        for g, m in pts:
            point_rows.append((kind.value, _num(g), _num(m)))
        try:
            fit = fit_scaling(pts)
        except ValueError as exc:
            log.warning("%s: no fit (%s)", kind.value, exc)
            fit_rows.append((kind.value, "", "", ""))
            continue
        fits[kind] = fit
        fit_rows.append((kind.value, _num(fit.slope), _num(fit.intercept), _num(fit.r_squared)))

    files = []
    if "csv" in cfg.formats:
        _csv(out / "sweep.csv", ("map", "slope", "intercept", "r2"), fit_rows)
        _csv(out / "sweep_points.csv", ("map", "gamma_dt_bin", "median_trae"), point_rows)
        files += ["sweep.csv", "sweep_points.csv"]
    if "json" in cfg.formats:
        body = {
            "manifest": MANIFEST,
            "example_id": cfg.example_id,
            "n_per_bin": cfg.sweep_n_per_bin,
            "records": cfg.sweep_records,
            "fits": {k.value: {"slope": f.slope, "intercept": f.intercept, "r2": f.r_squared} for k, f in fits.items()},
        }
        _json(out / "sweep.json", body)
        files.append("sweep.json")
    _write_manifest(cfg, out, "sweep", t0, {"aborted": aborted, "records": total, "outputs": files})
    for kind in proto.map_kinds:
        if kind in fits:
            print(f"{kind.short:>3}  slope {fits[kind].slope:.3f}  r2 {fits[kind].r_squared:.4f}")
    if aborted > ABORT_LIMIT * total:
        print(f"error: {aborted} of {total} records aborted", file=sys.stderr)
        return EXIT_ABORTS
    return EXIT_OK


def cmd_check(cfg: ExperimentConfig) -> int:
    """Run the invariant suite; print one line per check."""
    results = run_checks(cfg.setup, seed=cfg.protocol.seed)
    print(f"# {cfg.example_id}")
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qtraj", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qtraj {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "ensemble run with histograms and summaries"),
        ("sweep", "single-bin error scaling over the dt grid"),
        ("check", "map invariants and slope checks"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True)
        s.add_argument("--seed", type=int)
        s.add_argument("--full", action="store_true", help="use R = 5000 realizations")
        s.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        s.add_argument("--out", help="output directory (overrides the config)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.full, args.out)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if args.command == "run":
            return cmd_run(cfg, args.jobs)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.jobs)
        return cmd_check(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
