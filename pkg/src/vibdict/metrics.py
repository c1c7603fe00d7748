"""Health indicators derived from sparse codes and dictionary geometry.

Covers reconstruction fidelity in dB, a shift-invariant dictionary
distance in degrees, the adaptation-rate series built from dictionary
snapshots, first-order lowpass smoothing, and robust MAD outlier scores
for fleet comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dictionary import Atom, Dictionary

# Fidelity is clamped to +/- FIDELITY_CAP_DB when one side of the ratio
# underflows, so downstream smoothing always sees finite values.
FIDELITY_CAP_DB = 200.0
_EPS_RATIO = 1e-12

# Floor applied to the MAD denominator; scores computed against the floor
# are flagged as saturated.
MAD_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    """A named time series of indicator values for one machine."""

    name: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=np.int64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("timestamps and values must be 1-D and the same length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.timestamps.size


def atom_coherence(a: Atom, b: Atom) -> float:
    """Maximum normalized absolute inner product over all shifts.

    Every relative alignment with at least one overlapping sample is
    scanned; the result lies in [0, 1], reaching 1 only when one atom is
    a scaled shift of the other over their overlap. Atoms are normalized
    by their full norms, so partial-overlap alignments are penalized.
    """
    wa, wb = a.waveform, b.waveform
    denom = float(np.linalg.norm(wa) * np.linalg.norm(wb))
    if denom == 0.0:
        raise ValueError("coherence undefined for zero-norm atom")
    inner = np.correlate(wa, wb, mode="full")
    ratio = float(np.max(np.abs(inner))) / denom
    # round-off in norm * norm vs the aligned inner product can leave an
    # identical pair a few ulps under 1; snap so matching atoms are exact
    if ratio >= 1.0 - 4.0 * np.finfo(np.float64).eps:
        return 1.0
    return ratio


def atom_similarity_beta(a: Atom, b: Atom) -> float:
    """Angle in degrees between two atoms under the best shift alignment."""
    return math.degrees(math.acos(atom_coherence(a, b)))


def _beta_to_set(atom: Atom, atoms: tuple[Atom, ...]) -> float:
    """Angle from an atom to the closest member of an atom set."""
    if not atoms:
        raise ValueError("cannot compare against an empty dictionary")
    return min(atom_similarity_beta(atom, other) for other in atoms)


def dictionary_distance(phi: Dictionary, other: Dictionary) -> float:
    """Symmetric shift-invariant distance between dictionaries, in degrees.

    Averages, over both directions, each atom's angle to its best match
    in the other dictionary:

        beta(Phi, Phi') = (1 / 2M) * (sum_j beta(Phi', phi_j)
                                      + sum_j beta(Phi, phi'_j))

    Zero iff every atom has an exact (up to shift and sign) counterpart.
    Dictionaries of different sizes are averaged over their own counts.
    """
    if not phi.atoms or not other.atoms:
        raise ValueError("cannot compare empty dictionaries")
    forward = sum(_beta_to_set(atom, other.atoms) for atom in phi.atoms) / len(phi.atoms)
    backward = sum(_beta_to_set(atom, phi.atoms) for atom in other.atoms) / len(other.atoms)
    return 0.5 * (forward + backward)


def dictionary_spread(phi: Dictionary) -> float:
    """Mean angle from each atom to its nearest *other* atom, in degrees.

    Unlike :func:`dictionary_distance` applied to (phi, phi), which is
    identically zero, this excludes self-matches and measures how spread
    out the dictionary is. Requires at least two atoms.
    """
    if len(phi.atoms) < 2:
        raise ValueError("spread needs at least two atoms")
    total = 0.0
    for i, atom in enumerate(phi.atoms):
        rest = tuple(a for j, a in enumerate(phi.atoms) if j != i)
        total += _beta_to_set(atom, rest)
    return total / len(phi.atoms)


def adaptation_rate(snapshots, lag: int = 1) -> IndicatorSeries:
    """Dictionary distance between snapshots ``lag`` steps apart.

    ``snapshots`` is a sequence of (timestamp, Dictionary) pairs in
    increasing time order. Point k of the result is the distance between
    the dictionaries at positions k and k - lag, stamped at time k, so a
    frozen dictionary yields an identically zero series.
    """
    if lag < 1:
        raise ValueError("lag must be >= 1")
    snapshots = list(snapshots)
    if len(snapshots) <= lag:
        raise ValueError(f"need more than lag={lag} snapshots, got {len(snapshots)}")
    times = []
    values = []
    for k in range(lag, len(snapshots)):
        t_now, d_now = snapshots[k]
        _, d_past = snapshots[k - lag]
        times.append(t_now)
        values.append(dictionary_distance(d_past, d_now))
    return IndicatorSeries("adaptation_rate", np.asarray(times), np.asarray(values))


def fidelity_db(segment_samples: np.ndarray, residual: np.ndarray) -> float:
    """Reconstruction fidelity 20*log10(||s_hat|| / ||eps||) in dB.

    s_hat is the reconstruction segment - residual. When the residual
    norm underflows relative to the reconstruction the value saturates at
    +200 dB; the mirror case saturates at -200 dB, keeping the indicator
    finite for smoothing and thresholding.
    """
    segment_samples = np.asarray(segment_samples, dtype=np.float64)
    residual = np.asarray(residual, dtype=np.float64)
    if segment_samples.shape != residual.shape:
        raise ValueError("segment and residual must have the same shape")
    recon_norm = float(np.linalg.norm(segment_samples - residual))
    resid_norm = float(np.linalg.norm(residual))
    if resid_norm < _EPS_RATIO * recon_norm:
        return FIDELITY_CAP_DB
    if recon_norm < _EPS_RATIO * resid_norm:
        return -FIDELITY_CAP_DB
    return 20.0 * math.log10(recon_norm / resid_norm)


def lowpass(values: np.ndarray, time_constant: float) -> np.ndarray:
    """First-order exponential lowpass, initialized at the first sample.

    y[t] = alpha * y[t-1] + (1 - alpha) * x[t] with
    alpha = exp(-1 / time_constant), time measured in samples.
    """
    if time_constant <= 0:
        raise ValueError("time_constant must be positive")
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("values must be a nonempty 1-D array")
    alpha = math.exp(-1.0 / time_constant)
    y = np.empty_like(x)
    y[0] = x[0]
    for t in range(1, x.size):
        y[t] = alpha * y[t - 1] + (1.0 - alpha) * x[t]
    return y


def mad_scores(values: np.ndarray) -> tuple[np.ndarray, bool]:
    """Robust outlier scores |v - median| / MAD across a fleet snapshot.

    MAD is the median absolute deviation from the median. The denominator
    is floored at MAD_FLOOR; the returned flag is True when the floor
    engaged (more than half the fleet identical), meaning score
    magnitudes are saturated and comparable only by rank.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("values must be a nonempty 1-D array")
    med = float(np.median(v))
    dev = np.abs(v - med)
    mad = float(np.median(dev))
    saturated = mad < MAD_FLOOR
    return dev / max(mad, MAD_FLOOR), saturated


def mad_series(series_by_machine: dict[str, IndicatorSeries]) -> dict[str, IndicatorSeries]:
    """Per-timestamp MAD scores for a fleet of aligned indicator series.

    All series must share identical timestamps; the score of machine m at
    time t compares its value against the fleet distribution at t.
    """
    if not series_by_machine:
        raise ValueError("need at least one series")
    machines = sorted(series_by_machine)
    base = series_by_machine[machines[0]]
    for m in machines[1:]:
        if not np.array_equal(series_by_machine[m].timestamps, base.timestamps):
            raise ValueError(f"series for {m!r} is not aligned with {machines[0]!r}")
    matrix = np.stack([series_by_machine[m].values for m in machines])
    scores = np.empty_like(matrix)
    for t in range(matrix.shape[1]):
        scores[:, t], _ = mad_scores(matrix[:, t])
    return {
        m: IndicatorSeries(f"mad[{base.name}]", base.timestamps, scores[i])
        for i, m in enumerate(machines)
    }


def save_indicator_csv(series: IndicatorSeries, path: str, machine: str = "",
                       comments: dict | None = None) -> None:
    """Write an indicator series as ``timestamp,value`` rows.

    Header comments record the machine, the indicator kind, and any
    filter settings passed in ``comments`` so the file is self-describing.
    """
    with open(path, "w", encoding="utf-8") as fh:
        if machine:
            fh.write(f"# machine={machine}\n")
        fh.write(f"# kind={series.name}\n")
        for key, value in (comments or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write("timestamp,value\n")
        for t, v in zip(series.timestamps, series.values):
            fh.write(f"{int(t)},{float(v)!r}\n")


def load_indicator_csv(path: str) -> tuple[IndicatorSeries, dict]:
    """Read a ``timestamp,value`` indicator CSV and its header comments."""
    from .errors import DataError

    meta: dict = {}
    times: list[int] = []
    values: list[float] = []
    saw_header = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            if not saw_header:
                if line != "timestamp,value":
                    raise DataError(f"{path}:{lineno}: expected 'timestamp,value' header, got {line!r}")
                saw_header = True
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
            try:
                times.append(int(parts[0]))
                values.append(float(parts[1]))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not saw_header:
        raise DataError(f"{path}: missing 'timestamp,value' header")
    name = meta.get("kind", "indicator")
    return IndicatorSeries(name, np.asarray(times), np.asarray(values)), meta


def center_frequency(atom: Atom, sample_rate: float) -> float:
    """Spectral centroid of an atom in Hz (power-weighted mean frequency)."""
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    spectrum = np.abs(np.fft.rfft(atom.waveform)) ** 2
    freqs = np.fft.rfftfreq(len(atom), d=1.0 / sample_rate)
    total = float(np.sum(spectrum))
    if total == 0.0:
        raise ValueError("center frequency undefined for zero atom")
    return float(np.sum(freqs * spectrum) / total)


def peak_frequency(atom: Atom, sample_rate: float) -> float:
    """Frequency of the magnitude-spectrum peak of an atom, in Hz."""
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    magnitude = np.abs(np.fft.rfft(atom.waveform))
    freqs = np.fft.rfftfreq(len(atom), d=1.0 / sample_rate)
    return float(freqs[int(np.argmax(magnitude))])
