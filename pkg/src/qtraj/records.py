"""Fine-grained homodyne records and their dual binned statistic."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .maps import SQRT3, BinnedRecord, MeasurementSetup

MAGIC = b"QTRJREC1"
_HEADER = struct.Struct("<8sQdQQ")


class RngStream:
    """Independent normal-variate stream keyed by ``(seed, stream_id)``.

    Backed by PCG64 seeded through ``SeedSequence([seed, stream_id])``; normals
    come from numpy's ziggurat sampler, so a given key reproduces the same
    sequence bit for bit on one platform.  A stream belongs to one worker.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence([self.seed & (2**64 - 1), self.stream_id])
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


@dataclass(frozen=True, eq=False)
class FineRecordSegment:
    t0: float
    dt_fine: float
    samples: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.samples, dtype=np.float64)
        if y.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not self.dt_fine > 0.0:
            raise ValueError("dt_fine must be positive")
        object.__setattr__(self, "samples", y)

    @property
    def count(self) -> int:
        return int(self.samples.shape[0])

    @property
    def dt_bin(self) -> float:
        return self.dt_fine * self.count


def fine_steps_per_bin(dt_bin: float, dt_fine: float) -> int:
    """``dt_bin / dt_fine``, which must be an integer to 1e-9 relative."""
    ratio = dt_bin / dt_fine
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"dt_bin / dt_fine = {ratio!r} is not a positive integer")
    return int(n)


def sample_fine_increment(mu: float, dt_fine: float, rng: RngStream) -> float:
    """Homodyne sample ``y`` with ``y dt = mu dt + dW``, ``Var dW = dt``."""
    if not dt_fine > 0.0:
        raise ValueError("dt_fine must be positive")
    return mu + float(rng.normal()) / math.sqrt(dt_fine)


def bin_weights(n: int, dt_fine: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample weights giving ``(I, phi)`` as dot products with ``y``.

    Left-endpoint time ``k dt_fine`` is used for sample ``k``.
    """
    dt_bin = n * dt_fine
    w_I = np.full(n, math.sqrt(dt_bin) / n)
    k = np.arange(n, dtype=np.float64)
    w_phi = 2.0 * SQRT3 / math.sqrt(dt_bin) / n * (k * dt_fine - 0.5 * dt_bin)
    return w_I, w_phi


def bin_record(seg: FineRecordSegment) -> BinnedRecord:
    if seg.count == 0:
        raise ValueError("cannot bin an empty segment")
    w_I, w_phi = bin_weights(seg.count, seg.dt_fine)
    return BinnedRecord(
        I=float(w_I @ seg.samples),
        phi=float(w_phi @ seg.samples),
        t=seg.t0,
        dt_bin=seg.dt_bin,
    )


def sample_binned_direct(
    setup: MeasurementSetup, psi: np.ndarray, dt_bin: float, rng: RngStream, t: float = 0.0
) -> BinnedRecord:
    """Draw ``(I, phi)`` directly: ``I`` mean-shifted by ``sqrt(eta dt) <c + c^dag>``.

    Only accurate to ``O(sqrt(dt))`` in the mean; benchmarks use the
    fine-grained path instead.
    """
    c = setup.c
    mu = 2.0 * float(np.vdot(psi, c @ psi).real)
    shift = math.sqrt(setup.eta * dt_bin) * mu
    z = rng.normal(2)
    return BinnedRecord(I=shift + float(z[0]), phi=float(z[1]), t=t, dt_bin=dt_bin)


def write_records(path, segments, dim: int) -> None:
    """Write segments to the raw little-endian record format.

    Layout: header ``magic, dim (u64), dt_fine (f64), n (u64), count (u64)``
    followed by ``count`` blocks of ``t0`` and ``n`` samples, all f64.
    """
    segments = list(segments)
    if not segments:
        raise ValueError("no segments to write")
    n = segments[0].count
    dt_fine = segments[0].dt_fine
    for seg in segments:
        if seg.count != n or seg.dt_fine != dt_fine:
            raise ValueError("all segments must share n and dt_fine")
    body = np.empty((len(segments), n + 1), dtype="<f8")
    for i, seg in enumerate(segments):
        body[i, 0] = seg.t0
        body[i, 1:] = seg.samples
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, dim, dt_fine, n, len(segments)))
        fh.write(body.tobytes())


def read_records(path) -> tuple[int, list[FineRecordSegment]]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("file too short for a record header")
    magic, dim, dt_fine, n, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * count * (n + 1)
    if len(data) != expected:
        raise ValueError(f"expected {expected} bytes, found {len(data)}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(count, n + 1)
    segs = [FineRecordSegment(float(row[0]), dt_fine, row[1:].astype(np.float64)) for row in body]
    return int(dim), segs
