"""Experiment configuration files.

A config is flat ``key = value`` text.  ``#`` and ``;`` start comments.
Custom setups give matrices as JSON arrays of ``[re, im]`` pairs::

    example-id = custom
    c = [[[0, 0], [0, 0]], [[1, 0], [0, 0]]]
    initial-state = [[0.7071067811865476, 0], [0.7071067811865476, 0]]

Keys may use ``-`` or ``_`` interchangeably.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .maps import ALL_KINDS, MapKind, MeasurementSetup
from .presets import EXAMPLE_IDS, example_setup
from .trajectory import ProtocolConfig

DEFAULT_REALIZATIONS = 500
FULL_REALIZATIONS = 5000
DEFAULT_DT_GRID = (4e-3, 1e-2, 2.5e-2, 6.3e-2)
DEFAULT_SWEEP_N = 10000
DEFAULT_SWEEP_RECORDS = 1000
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    example_id: str
    setup: MeasurementSetup
    protocol: ProtocolConfig
    output_dir: str = "out"
    formats: tuple = FORMATS
    dt_grid: tuple = DEFAULT_DT_GRID
    sweep_n_per_bin: int = DEFAULT_SWEEP_N
    sweep_records: int = DEFAULT_SWEEP_RECORDS
    sample_trajectory: int = 0
    raw: dict = field(default_factory=dict)

    def snapshot(self) -> dict:
        """JSON-friendly view of every resolved setting."""
        p = self.protocol
        return {
            "example_id": self.example_id,
            "gamma": self.setup.gamma,
            "eta": self.setup.eta,
            "c": matrix_to_json(self.setup.c),
            "H": matrix_to_json(self.setup.H),
            "extra_lindblads": [matrix_to_json(L) for L in self.setup.extra_lindblads],
            "initial_state": [[float(z.real), float(z.imag)] for z in self.setup.initial_state],
            "gamma_dt_bin": p.gamma_dt_bin,
            "gamma_dt_fine": p.gamma_dt_fine,
            "total_time_in_gamma": p.total_time_in_gamma,
            "n_per_bin": p.n_per_bin,
            "n_bins": p.n_bins,
            "realizations": p.realizations,
            "seed": p.seed,
            "map_kinds": [k.value for k in p.map_kinds],
            "one_step": p.one_step,
            "output_dir": self.output_dir,
            "formats": list(self.formats),
            "dt_grid": list(self.dt_grid),
            "sweep_n_per_bin": self.sweep_n_per_bin,
            "sweep_records": self.sweep_records,
            "sample_trajectory": self.sample_trajectory,
        }

    def with_overrides(self, seed=None, full=False, output_dir=None) -> "ExperimentConfig":
        p = self.protocol
        if seed is not None:
            if not 0 <= int(seed) < 2**64:
                raise ConfigError("seed must be a 64-bit unsigned integer")
            p = replace(p, seed=int(seed))
        if full:
            p = replace(p, realizations=FULL_REALIZATIONS)
        out = self.output_dir if output_dir is None else str(output_dir)
        return replace(self, protocol=p, output_dir=out)


def matrix_to_json(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a)]


def parse_complex_array(text: str, what: str) -> np.ndarray:
    """Parse a JSON array whose innermost entries are ``[re, im]`` pairs."""
    try:
        data = json.loads(text)
        arr = np.array(data, dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise ConfigError(f"{what}: not a numeric JSON array ({exc})") from None
    if arr.ndim < 2 or arr.shape[-1] != 2:
        raise ConfigError(f"{what}: entries must be [re, im] pairs")
    out = arr[..., 0] + 1j * arr[..., 1]
    if not np.all(np.isfinite(out)):
        raise ConfigError(f"{what}: non-finite entry")
    return out


def _read_pairs(text: str) -> dict:
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=None,
        interpolation=None,
        strict=True,
    )
    parser.optionxform = lambda k: k.strip().lower().replace("-", "_")
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    extra = [s for s in parser.sections() if s != "experiment"]
    if extra:
        raise ConfigError(f"sections are not supported: {extra}")
    return dict(parser["experiment"])


_KNOWN = {
    "example_id",
    "gamma",
    "eta",
    "c",
    "h",
    "extra_lindblads",
    "initial_state",
    "gamma_dt_bin",
    "gamma_dt_fine",
    "total_time_in_gamma",
    "realizations",
    "seed",
    "map_kinds",
    "one_step",
    "output_dir",
    "formats",
    "dt_grid",
    "sweep_n_per_bin",
    "sweep_records",
    "sample_trajectory",
}


def _float(kv, key, default):
    if key not in kv:
        return default
    try:
        v = float(kv[key])
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {kv[key]!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def _int(kv, key, default):
    if key not in kv:
        return default
    try:
        return int(kv[key])
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {kv[key]!r}") from None


def _bool(kv, key, default):
    if key not in kv:
        return default
    v = kv[key].strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {kv[key]!r}")


def _list(kv, key):
    return [s.strip() for s in kv[key].split(",") if s.strip()]


def _setup(kv) -> tuple[str, MeasurementSetup]:
    example = kv.get("example_id", "").strip()
    if not example:
        raise ConfigError("example-id is required")
    gamma = _float(kv, "gamma", 1.0)
    if example != "custom":
        if example not in EXAMPLE_IDS:
            raise ConfigError(f"unknown example-id {example!r}; expected custom or one of {EXAMPLE_IDS}")
        for key in ("c", "h", "initial_state", "extra_lindblads", "eta"):
            if key in kv:
                raise ConfigError(f"{key} may only be given with example-id = custom")
        try:
            return example, example_setup(example, gamma)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if "c" not in kv:
        raise ConfigError("custom setups need c")
    c = parse_complex_array(kv["c"], "c")
    H = parse_complex_array(kv["h"], "H") if "h" in kv else None
    psi0 = parse_complex_array(kv["initial_state"], "initial-state") if "initial_state" in kv else None
    extra = ()
    if "extra_lindblads" in kv:
        arr = parse_complex_array(kv["extra_lindblads"], "extra-lindblads")
        if arr.ndim != 3:
            raise ConfigError("extra-lindblads must be a list of matrices")
        extra = tuple(arr)
    try:
        setup = MeasurementSetup(
            c=c,
            H=H,
            eta=_float(kv, "eta", 1.0),
            extra_lindblads=extra,
            initial_state=psi0,
            gamma=gamma,
            name="custom",
        )
    except ValueError as exc:
        raise ConfigError(f"custom setup: {exc}") from None
    return example, setup


def parse_config(text: str) -> ExperimentConfig:
    kv = _read_pairs(text)
    unknown = sorted(set(kv) - _KNOWN)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    example, setup = _setup(kv)

    kinds = ALL_KINDS
    if "map_kinds" in kv:
        try:
            kinds = tuple(MapKind.parse(s) for s in _list(kv, "map_kinds"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not kinds:
            raise ConfigError("map-kinds is empty")
    realizations = _int(kv, "realizations", DEFAULT_REALIZATIONS)
    if realizations < 1:
        raise ConfigError(f"realizations must be at least 1, got {realizations}")
    try:
        protocol = ProtocolConfig(
            gamma_dt_bin=_float(kv, "gamma_dt_bin", 1e-2),
            gamma_dt_fine=_float(kv, "gamma_dt_fine", 1e-4),
            total_time_in_gamma=_float(kv, "total_time_in_gamma", 1.0),
            realizations=realizations,
            seed=_int(kv, "seed", 0),
            map_kinds=kinds,
            one_step=_bool(kv, "one_step", False),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not 0 <= protocol.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")

    formats = FORMATS
    if "formats" in kv:
        formats = tuple(_list(kv, "formats"))
        bad = [f for f in formats if f not in FORMATS]
        if bad or not formats:
            raise ConfigError(f"formats must be a non-empty subset of {FORMATS}")
    grid = DEFAULT_DT_GRID
    if "dt_grid" in kv:
        try:
            grid = tuple(float(s) for s in _list(kv, "dt_grid"))
        except ValueError:
            raise ConfigError("dt-grid must be a comma-separated list of numbers") from None
    if len(grid) < 3 or len(set(grid)) != len(grid) or min(grid) <= 0:
        raise ConfigError("dt-grid needs at least three distinct positive values")
    sweep_n = _int(kv, "sweep_n_per_bin", DEFAULT_SWEEP_N)
    sweep_records = _int(kv, "sweep_records", DEFAULT_SWEEP_RECORDS)
    if sweep_n < 1 or sweep_records < 1:
        raise ConfigError("sweep-n-per-bin and sweep-records must be positive")
    sample = _int(kv, "sample_trajectory", 0)
    if not 0 <= sample < protocol.realizations:
        raise ConfigError("sample-trajectory must index an existing realization")
    return ExperimentConfig(
        example_id=example,
        setup=setup,
        protocol=protocol,
        output_dir=kv.get("output_dir", "out").strip(),
        formats=formats,
        dt_grid=tuple(sorted(grid)),
        sweep_n_per_bin=sweep_n,
        sweep_records=sweep_records,
        sample_trajectory=sample,
        raw=kv,
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
