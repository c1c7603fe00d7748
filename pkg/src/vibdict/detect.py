"""Fault classification from indicator series and ROC evaluation.

Turns indicator series into scalar detector outputs (trailing-window
slope, minimum fleet difference), labels samples against ground-truth
time windows, and sweeps decision thresholds into an ROC curve with a
trapezoid AUC. Each (machine, timestamp) indicator value is one
classification instance; a sample is predicted faulty when its value is
at or above the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .metrics import IndicatorSeries

HEALTHY = "healthy"
FAULTY = "faulty"
LABELS = (HEALTHY, FAULTY)

SECONDS_PER_DAY = 86400.0

# Default trailing window for the slope detector, matching the indicator
# smoothing horizon of 30 segments.
DEFAULT_SLOPE_WINDOW = 30


@dataclass(frozen=True)
class LabeledWindow:
    """Ground-truth health label over the half-open time span [start, end)."""

    machine_id: str
    start: int
    end: int
    label: str

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"window start {self.start} must precede end {self.end}")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    def contains(self, timestamp: int) -> bool:
        return self.start <= timestamp < self.end


@dataclass(frozen=True)
class RocPoint:
    """One operating point of the threshold sweep."""

    threshold: float
    fpr: float
    tpr: float

    def __post_init__(self):
        if not 0.0 <= self.fpr <= 1.0 or not 0.0 <= self.tpr <= 1.0:
            raise ValueError("tpr and fpr must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Operating points sorted by descending threshold, plus the AUC."""

    points: tuple[RocPoint, ...]
    auc: float


def validate_windows(windows) -> None:
    """Check the per-machine non-overlap invariant of a window set."""
    by_machine: dict[str, list[LabeledWindow]] = {}
    for w in windows:
        by_machine.setdefault(w.machine_id, []).append(w)
    for machine, group in by_machine.items():
        group.sort(key=lambda w: w.start)
        for prev, cur in zip(group, group[1:]):
            if cur.start < prev.end:
                raise ValueError(
                    f"overlapping windows for machine {machine!r}: "
                    f"[{prev.start}, {prev.end}) and [{cur.start}, {cur.end})"
                )


def label_of(machine_id: str, timestamp: int, windows) -> str:
    """Label of one sample; the sample must fall in exactly one window."""
    hits = [w for w in windows if w.machine_id == machine_id and w.contains(timestamp)]
    if len(hits) != 1:
        raise DataError(
            f"sample ({machine_id!r}, t={timestamp}) falls in {len(hits)} labeled windows"
        )
    return hits[0].label


def slope_indicator(series: IndicatorSeries, window: int = DEFAULT_SLOPE_WINDOW) -> IndicatorSeries:
    """Trailing least-squares slope of an indicator, in units per day.

    Point k of the output is the ordinary least-squares slope fitted to
    the ``window`` most recent points ending at k; emission starts at
    index window - 1. Timestamps are converted from seconds to days for
    the fit, so a dictionary-distance input yields degrees/day.
    """
    if window < 2:
        raise ValueError("window must be >= 2")
    if len(series) < window:
        raise ValueError(f"series of length {len(series)} shorter than window {window}")
    days = series.timestamps.astype(np.float64) / SECONDS_PER_DAY
    out = np.empty(len(series) - window + 1)
    for k in range(window - 1, len(series)):
        t = days[k - window + 1 : k + 1]
        v = series.values[k - window + 1 : k + 1]
        t_mean = t.mean()
        v_mean = v.mean()
        denom = float(np.sum((t - t_mean) ** 2))
        if denom == 0.0:
            raise ValueError("slope undefined: identical timestamps in window")
        out[k - window + 1] = float(np.sum((t - t_mean) * (v - v_mean)) / denom)
    return IndicatorSeries(
        f"slope[{series.name}]", series.timestamps[window - 1 :], out
    )


def min_diff_indicator(population, machine: str, t: int) -> float:
    """Minimum gap between one machine and every other machine at time t.

    Positive exactly when the machine's indicator exceeds all others at
    that timestamp, which is the fleet-consensus fault signature. Series
    are matched to machines by their ``name`` field.
    """
    by_name = {s.name: s for s in population}
    if machine not in by_name:
        raise ValueError(f"machine {machine!r} not in population")

    def value_at(series):
        idx = np.nonzero(series.timestamps == t)[0]
        return float(series.values[idx[0]]) if idx.size else None

    own = value_at(by_name[machine])
    if own is None:
        raise ValueError(f"machine {machine!r} has no sample at t={t}")
    others = [value_at(s) for name, s in by_name.items() if name != machine]
    others = [v for v in others if v is not None]
    if not others:
        raise ValueError(f"no other machine has a sample at t={t}")
    return min(own - v for v in others)


def min_diff_series(population) -> dict[str, IndicatorSeries]:
    """Apply :func:`min_diff_indicator` at every timestamp, per machine.

    All series must be aligned on identical timestamps.
    """
    series = list(population)
    if len(series) < 2:
        raise ValueError("need at least two machines")
    base = series[0]
    for s in series[1:]:
        if not np.array_equal(s.timestamps, base.timestamps):
            raise ValueError(f"series {s.name!r} is not aligned with {base.name!r}")
    matrix = np.stack([s.values for s in series])
    out = {}
    for i, s in enumerate(series):
        others = np.delete(matrix, i, axis=0)
        values = np.min(matrix[i][None, :] - others, axis=0)
        out[s.name] = IndicatorSeries(s.name, base.timestamps, values)
    return out


def roc_curve(samples, windows) -> RocCurve:
    """Threshold sweep over labeled (machine, timestamp, value) samples.

    Thresholds are +inf, every distinct observed value in descending
    order, then -inf, so the curve always starts at (0, 0) and ends at
    (1, 1) and tied values collapse onto a single operating point. The
    AUC is the trapezoid integral of TPR over FPR.
    """
    samples = list(samples)
    if not samples:
        raise DataError("no indicator samples to evaluate")
    validate_windows(windows)
    values = np.array([v for _, _, v in samples], dtype=np.float64)
    truth = np.array(
        [label_of(m, t, windows) == FAULTY for m, t, _ in samples], dtype=bool
    )
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError(
            f"ROC undefined: {n_pos} faulty and {n_neg} healthy samples"
        )
    thresholds = np.concatenate(
        ([np.inf], np.unique(values)[::-1], [-np.inf])
    )
    points = []
    for theta in thresholds:
        pred = values >= theta
        tp = int(np.sum(pred & truth))
        fp = int(np.sum(pred & ~truth))
        points.append(RocPoint(float(theta), fp / n_neg, tp / n_pos))
    fpr = np.array([p.fpr for p in points])
    tpr = np.array([p.tpr for p in points])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(tuple(points), auc)


def series_samples(series_by_machine: dict[str, IndicatorSeries]):
    """Flatten per-machine series into (machine, timestamp, value) samples."""
    out = []
    for machine in sorted(series_by_machine):
        s = series_by_machine[machine]
        out.extend((machine, int(t), float(v)) for t, v in zip(s.timestamps, s.values))
    return out


def save_labels_csv(windows, path: str) -> None:
    """Write ground-truth windows as ``machine_id,start,end,label`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("machine_id,start,end,label\n")
        for w in windows:
            fh.write(f"{w.machine_id},{w.start},{w.end},{w.label}\n")


def load_labels_csv(path: str) -> tuple[LabeledWindow, ...]:
    """Read a labels CSV written by :func:`save_labels_csv`."""
    windows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "machine_id,start,end,label":
            raise DataError(f"{path}: unexpected labels header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                windows.append(
                    LabeledWindow(parts[0], int(parts[1]), int(parts[2]), parts[3])
                )
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    validate_windows(windows)
    return tuple(windows)


def save_roc_csv(curve: RocCurve, path: str) -> None:
    """Write an ROC curve as ``threshold,fpr,tpr`` rows with an AUC footer."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("threshold,fpr,tpr\n")
        for p in curve.points:
            fh.write(f"{p.threshold!r},{p.fpr!r},{p.tpr!r}\n")
        fh.write(f"# auc={curve.auc!r}\n")


def load_roc_csv(path: str) -> RocCurve:
    """Read an ROC CSV written by :func:`save_roc_csv`."""
    points = []
    auc = None
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "threshold,fpr,tpr":
            raise DataError(f"{path}: unexpected ROC header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("auc="):
                    auc = float(body[4:])
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            try:
                points.append(RocPoint(float(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if auc is None:
        raise DataError(f"{path}: missing '# auc=' footer")
    return RocCurve(tuple(points), auc)
