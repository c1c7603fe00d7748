"""Loading, gating, and preprocessing of vibration signal segments.

A segment is a fixed-rate sample vector with a timestamp (integer seconds
since epoch) and a machine identifier. Two on-disk formats are supported:

* CSV: one file per segment. The first line is a header carrying the
  metadata values ``timestamp,sample_rate,source_id``; every following
  line holds one sample as a decimal float.
* Raw binary: one file per segment of little-endian IEEE-754 float32 or
  float64 samples, with a sidecar ``<name>.meta`` text file holding
  ``timestamp=<int>``, ``sample_rate=<float>`` and ``source_id=<string>``
  lines.

Root-mean-square gating operates on raw amplitudes in physical units (G);
standardization to zero mean and unit variance happens afterwards.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError

RAW_DTYPES = {"raw_f32le": "<f4", "raw_f64le": "<f8"}
FORMATS = ("csv",) + tuple(RAW_DTYPES)

# PRNG used for block sampling; recorded in run configs so results replay.
PRNG_ALGORITHM = "pcg64"


@dataclass(frozen=True, eq=False)
class SignalSegment:
    """Timestamped fixed-rate sample vector.

    ``samples`` are acceleration values in G for raw field data, or
    dimensionless after :func:`preprocess`.
    """

    samples: np.ndarray
    sample_rate: float
    timestamp: int
    source_id: str

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a nonempty 1-D vector")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "timestamp", int(self.timestamp))

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class SegmentGate:
    """RMS inclusion gate; segments at or below the threshold are dropped."""

    rms_threshold: float = 0.5

    def __post_init__(self):
        if self.rms_threshold < 0:
            raise ValueError("rms_threshold must be >= 0")


def rms(samples: np.ndarray) -> float:
    """Root mean square of a sample vector."""
    x = np.asarray(samples, dtype=np.float64)
    return float(np.sqrt(np.mean(x * x)))


def _read_csv_segment(path: str) -> SignalSegment:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise DataError(f"{path}: empty file, expected metadata header")
        fields = [f.strip() for f in header.strip().split(",")]
        if len(fields) != 3:
            raise DataError(
                f"{path}: header must be 'timestamp,sample_rate,source_id', "
                f"got {len(fields)} field(s)"
            )
        try:
            timestamp = int(fields[0])
        except ValueError:
            raise DataError(f"{path}: timestamp missing or not an integer: {fields[0]!r}") from None
        try:
            sample_rate = float(fields[1])
        except ValueError:
            raise DataError(f"{path}: sample_rate not a number: {fields[1]!r}") from None
        source_id = fields[2]
        if not source_id:
            raise DataError(f"{path}: empty source_id in header")

        samples = []
        for lineno, line in enumerate(fh, start=2):
            text = line.strip()
            if not text:
                continue
            try:
                samples.append(float(text))
            except ValueError:
                raise DataError(f"{path}: malformed sample at line {lineno}: {text!r}") from None
    if not samples:
        raise DataError(f"{path}: no samples after header")
    return SignalSegment(np.array(samples), sample_rate, timestamp, source_id)


def _read_meta(path: str) -> dict:
    meta = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise DataError(f"{path}: malformed metadata at line {lineno}: {text!r}")
            key, _, value = text.partition("=")
            meta[key.strip()] = value.strip()
    return meta


def _read_raw_segment(path: str, dtype: str) -> SignalSegment:
    meta_path = path + ".meta"
    if not os.path.exists(meta_path):
        raise DataError(f"{path}: missing sidecar metadata file {meta_path}")
    meta = _read_meta(meta_path)
    if "timestamp" not in meta:
        raise DataError(f"{meta_path}: timestamp missing")
    try:
        timestamp = int(meta["timestamp"])
    except ValueError:
        raise DataError(f"{meta_path}: timestamp not an integer: {meta['timestamp']!r}") from None
    try:
        sample_rate = float(meta.get("sample_rate", ""))
    except ValueError:
        raise DataError(f"{meta_path}: sample_rate missing or not a number") from None
    source_id = meta.get("source_id", "")
    if not source_id:
        raise DataError(f"{meta_path}: source_id missing")
    try:
        samples = np.fromfile(path, dtype=dtype)
    except OSError as exc:
        raise DataError(f"{path}: unreadable file: {exc}") from exc
    if samples.size == 0:
        raise DataError(f"{path}: no samples in file")
    return SignalSegment(samples.astype(np.float64), sample_rate, timestamp, source_id)


def load_segments(path: str, format: str = "csv") -> list[SignalSegment]:
    """Load all segments under ``path`` (a file or a directory of files).

    Returns segments in ascending timestamp order; ties are broken by
    filename lexicographic order. An empty directory yields an empty list.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}, expected one of {FORMATS}")
    if not os.path.exists(path):
        raise DataError(f"{path}: no such file or directory")

    if os.path.isdir(path):
        names = sorted(os.listdir(path))
        if format == "csv":
            names = [n for n in names if n.endswith(".csv")]
        else:
            names = [n for n in names if not n.endswith(".meta") and not n.endswith(".csv")]
        files = [os.path.join(path, n) for n in names]
        files = [f for f in files if os.path.isfile(f)]
    else:
        files = [path]

    loaded = []
    for fpath in files:
        try:
            if format == "csv":
                seg = _read_csv_segment(fpath)
            else:
                seg = _read_raw_segment(fpath, RAW_DTYPES[format])
        except OSError as exc:
            raise DataError(f"{fpath}: unreadable file: {exc}") from exc
        loaded.append((seg.timestamp, os.path.basename(fpath), seg))
    loaded.sort(key=lambda item: (item[0], item[1]))
    return [seg for _, _, seg in loaded]


def save_segment_csv(segment: SignalSegment, path: str) -> None:
    """Write one segment in the CSV format read by :func:`load_segments`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{segment.timestamp},{float(segment.sample_rate)!r},{segment.source_id}\n")
        fh.writelines(f"{float(x)!r}\n" for x in segment.samples)


def save_segment_raw(segment: SignalSegment, path: str, format: str = "raw_f64le") -> None:
    """Write one segment as raw little-endian floats plus a ``.meta`` sidecar."""
    if format not in RAW_DTYPES:
        raise ValueError(f"unknown raw format {format!r}")
    segment.samples.astype(RAW_DTYPES[format]).tofile(path)
    with open(path + ".meta", "w", encoding="utf-8") as fh:
        fh.write(f"timestamp={segment.timestamp}\n")
        fh.write(f"sample_rate={float(segment.sample_rate)!r}\n")
        fh.write(f"source_id={segment.source_id}\n")


def gate_by_rms(segments: list[SignalSegment], gate: SegmentGate) -> list[SignalSegment]:
    """Keep segments whose raw-amplitude RMS is strictly above the threshold.

    Idempotent; preserves input order. Apply before :func:`preprocess`,
    since the threshold is physical (G).
    """
    return [seg for seg in segments if rms(seg.samples) > gate.rms_threshold]


def preprocess(segment: SignalSegment) -> SignalSegment:
    """Standardize a segment to zero mean and unit population variance."""
    x = segment.samples
    mean = x.mean()
    var = x.var()
    if var == 0.0:
        raise DataError(
            f"zero-variance segment (source {segment.source_id}, t={segment.timestamp})"
        )
    return SignalSegment(
        (x - mean) / np.sqrt(var), segment.sample_rate, segment.timestamp, segment.source_id
    )


def sample_blocks(
    segments: list[SignalSegment], block_len: int, count: int, seed: int
) -> list[SignalSegment]:
    """Draw ``count`` random contiguous blocks from a pool of segments.

    Each block comes from a uniformly chosen segment at a uniformly chosen
    valid offset and is standardized before being returned. The draw order
    is fixed by ``seed`` (PCG64), so identical inputs replay identically.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if block_len < 2:
        raise ValueError("block_len must be >= 2")
    if count > 0 and not segments:
        raise DataError("no segments available for block sampling")
    for seg in segments:
        if len(seg) < block_len:
            raise DataError(
                f"block_len {block_len} exceeds segment of length {len(seg)} "
                f"(source {seg.source_id}, t={seg.timestamp})"
            )
    rng = np.random.default_rng(seed)
    blocks = []
    for _ in range(count):
        seg = segments[int(rng.integers(len(segments)))]
        offset = int(rng.integers(len(seg) - block_len + 1))
        block = SignalSegment(
            seg.samples[offset : offset + block_len].copy(),
            seg.sample_rate,
            seg.timestamp,
            seg.source_id,
        )
        blocks.append(preprocess(block))
    return blocks
