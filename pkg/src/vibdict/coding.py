"""Convolutional sparse coding by Matching Pursuit and Orthogonal MP.

A segment s is approximated as a linear superposition of scaled, shifted
atoms plus a residual:

    s[t] = sum_i a_i * phi_{m(i)}[t - tau_i] + eps[t]

The triple (m(i), tau_i, a_i) is one atom instance. Both coders greedily
select the (atom, shift) pair with maximum absolute cross-correlation
against the current residual and stop after a fixed instance budget
derived from the configured sparsity level. MP subtracts each selected
instance from the residual directly; OMP re-fits all selected amplitudes
by least squares after every selection, which leaves the residual
orthogonal to the selected shifted atoms.

Only fully interior shifts are valid: an atom's support must lie entirely
inside the segment, with no partial overlap at the edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dictionary import Atom, Dictionary
from .errors import NumericError
from .ingest import SignalSegment

MP = "mp"
OMP = "omp"
ALGORITHMS = (MP, OMP)

# Diagonal damping applied to the OMP Gram system when it is not
# numerically positive definite: lambda = RIDGE_SCALE * trace(G) / k.
RIDGE_SCALE = 1e-12


@dataclass(frozen=True)
class AtomInstance:
    """One placement of a scaled atom: id, 0-based offset, signed amplitude."""

    atom_id: int
    offset: int
    amplitude: float


@dataclass(frozen=True, eq=False)
class SparseCode:
    """Result of coding one segment: instances plus the final residual.

    ``exhausted`` is set when the coder stopped before reaching the
    instance budget because every remaining correlation was exactly zero
    (or, for OMP, every valid placement was already selected). Downstream
    consumers treat the missing instances as amplitude zero.
    """

    instances: tuple[AtomInstance, ...]
    residual: np.ndarray
    dictionary_generation: int
    exhausted: bool = False


@dataclass(frozen=True)
class CodingConfig:
    """Sparse coding algorithm selection and stopping rule.

    The instance budget is ceil((1 - sparsity) * segment_len), evaluated
    in exact decimal arithmetic. ``n_instances`` overrides the derived
    budget with an explicit count, e.g. to reproduce a published protocol
    that fixed the count directly.
    """

    algorithm: str = MP
    sparsity: float = 0.9
    n_instances: int | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not 0.0 <= self.sparsity < 1.0:
            raise ValueError(f"sparsity must be in [0, 1), got {self.sparsity}")
        if self.n_instances is not None and self.n_instances < 1:
            raise ValueError("n_instances must be >= 1 when given")


def instance_budget(segment_len: int, cfg: CodingConfig) -> int:
    """Number of atom instances the coder will emit for a segment."""
    if segment_len < 1:
        raise ValueError("segment_len must be >= 1")
    if cfg.n_instances is not None:
        return cfg.n_instances
    exact = (1 - Fraction(str(cfg.sparsity))) * segment_len
    return max(1, math.ceil(exact))


def cross_correlate(signal: np.ndarray, atom: Atom) -> np.ndarray:
    """Inner products of an atom against a signal at every interior shift.

    out[tau] = sum_t signal[tau + t] * atom.waveform[t], for tau in
    [0, len(signal) - len(atom)].
    """
    signal = np.asarray(signal, dtype=np.float64)
    if len(atom) > signal.size:
        raise ValueError(f"atom of length {len(atom)} longer than signal of length {signal.size}")
    return np.correlate(signal, atom.waveform, mode="valid")


def _scan_atoms(dictionary: Dictionary):
    """Atoms in ascending-id order with their original positions.

    Argmax ties across atoms are broken toward the lowest atom id, so all
    scans walk this order.
    """
    return sorted(enumerate(dictionary.atoms), key=lambda item: item[1].id)


def _argmax_correlation(corr_by_pos, scan_order, masks=None):
    """Deterministic argmax of |correlation| over atoms and shifts.

    Ties go to the lowest atom id, then the lowest offset. Returns
    (position, offset, signed value) or None when no unmasked candidate
    has nonzero magnitude.
    """
    best = None
    best_abs = 0.0
    for pos, _atom in scan_order:
        corr = corr_by_pos[pos]
        if masks is None:
            magnitudes = np.abs(corr)
        else:
            magnitudes = np.where(masks[pos], np.abs(corr), -1.0)
        offset = int(np.argmax(magnitudes))
        value = magnitudes[offset]
        if value > best_abs:
            best_abs = value
            best = (pos, offset, float(corr[offset]))
    return best


def select_best(residual: np.ndarray, dictionary: Dictionary) -> AtomInstance | None:
    """Pick the single best atom instance for a residual.

    Maximizes the absolute inner product over all atoms and all interior
    shifts; the amplitude keeps the sign of the inner product. Returns
    None when every correlation is exactly zero (zero residual).
    """
    residual = np.asarray(residual, dtype=np.float64)
    if residual.size == 0:
        raise ValueError("residual must be nonempty")
    scan = _scan_atoms(dictionary)
    corr = {pos: cross_correlate(residual, atom) for pos, atom in scan}
    hit = _argmax_correlation(corr, scan)
    if hit is None:
        return None
    pos, offset, amplitude = hit
    return AtomInstance(dictionary.atoms[pos].id, offset, amplitude)


def _check_fits(segment: SignalSegment, dictionary: Dictionary) -> None:
    n = len(segment)
    for atom in dictionary.atoms:
        if len(atom) > n:
            raise ValueError(
                f"atom {atom.id} of length {len(atom)} does not fit in segment of length {n}"
            )


def mp_encode(segment: SignalSegment, dictionary: Dictionary, cfg: CodingConfig) -> SparseCode:
    """Matching Pursuit: subtract the best-correlated instance each step.

    After selecting (m, tau, a) the residual is updated in place over the
    atom's support, R <- R - a * phi_m(. - tau), and only correlation
    entries whose support overlaps the changed window are recomputed.
    """
    if cfg.algorithm != MP:
        raise ValueError(f"mp_encode called with algorithm {cfg.algorithm!r}")
    _check_fits(segment, dictionary)
    x = segment.samples
    n = x.size
    budget = instance_budget(n, cfg)
    scan = _scan_atoms(dictionary)
    waveforms = [atom.waveform for atom in dictionary.atoms]

    residual = x.copy()
    corr = {pos: np.correlate(residual, w, mode="valid") for pos, w in enumerate(waveforms)}

    instances = []
    exhausted = False
    for _ in range(budget):
        hit = _argmax_correlation(corr, scan)
        if hit is None:
            exhausted = True
            break
        pos, tau, amplitude = hit
        w = waveforms[pos]
        instances.append(AtomInstance(dictionary.atoms[pos].id, tau, amplitude))
        residual[tau : tau + w.size] -= amplitude * w

        for other, ow in enumerate(waveforms):
            lo = max(0, tau - ow.size + 1)
            hi = min(n - ow.size, tau + w.size - 1)
            if lo <= hi:
                corr[other][lo : hi + 1] = np.correlate(
                    residual[lo : hi + ow.size], ow, mode="valid"
                )
    return SparseCode(tuple(instances), residual, dictionary.generation, exhausted)


def _shifted_inner(w_a: np.ndarray, tau_a: int, w_b: np.ndarray, tau_b: int) -> float:
    """Inner product of two atoms placed at absolute offsets in a segment."""
    start = max(tau_a, tau_b)
    end = min(tau_a + w_a.size, tau_b + w_b.size)
    if end <= start:
        return 0.0
    return float(np.dot(w_a[start - tau_a : end - tau_a], w_b[start - tau_b : end - tau_b]))


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the symmetric positive semi-definite normal equations.

    Uses a Cholesky factorization as the conditioning probe; when it
    fails, retries with ridge damping RIDGE_SCALE * trace / k on the
    diagonal rather than crashing on a rank-deficient selection.
    """
    k = gram.shape[0]
    try:
        np.linalg.cholesky(gram)
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        pass
    ridge = RIDGE_SCALE * np.trace(gram) / k
    damped = gram + ridge * np.eye(k)
    try:
        np.linalg.cholesky(damped)
        return np.linalg.solve(damped, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Gram system of size {k} not solvable even with ridge damping") from exc


def omp_encode(segment: SignalSegment, dictionary: Dictionary, cfg: CodingConfig) -> SparseCode:
    """Orthogonal Matching Pursuit over the selected shifted-atom set.

    Selection works exactly as in MP, but after each pick all amplitudes
    are re-fit by least squares over the selected shifted atoms (a Gram
    system of size at most the instance budget), and the residual becomes
    the projection remainder. A selected (atom, offset) pair is excluded
    from later scans since re-picking it adds no new basis vector.
    """
    if cfg.algorithm != OMP:
        raise ValueError(f"omp_encode called with algorithm {cfg.algorithm!r}")
    _check_fits(segment, dictionary)
    x = segment.samples
    n = x.size
    budget = instance_budget(n, cfg)
    scan = _scan_atoms(dictionary)
    waveforms = [atom.waveform for atom in dictionary.atoms]

    signal_corr = {pos: np.correlate(x, w, mode="valid") for pos, w in enumerate(waveforms)}
    corr = {pos: c.copy() for pos, c in signal_corr.items()}
    masks = {pos: np.ones(c.size, dtype=bool) for pos, c in corr.items()}

    selected: list[tuple[int, int]] = []
    rhs: list[float] = []
    gram = np.zeros((budget, budget))
    amplitudes = np.empty(0)
    residual = x.copy()
    exhausted = False

    for _ in range(budget):
        hit = _argmax_correlation(corr, scan, masks)
        if hit is None:
            exhausted = True
            break
        pos, tau, _ = hit
        masks[pos][tau] = False
        w = waveforms[pos]

        k = len(selected)
        for j, (pos_j, tau_j) in enumerate(selected):
            inner = _shifted_inner(w, tau, waveforms[pos_j], tau_j)
            gram[k, j] = gram[j, k] = inner
        gram[k, k] = float(np.dot(w, w))
        selected.append((pos, tau))
        rhs.append(float(signal_corr[pos][tau]))

        amplitudes = _solve_gram(gram[: k + 1, : k + 1], np.asarray(rhs))

        reconstruction = np.zeros(n)
        for (pos_j, tau_j), a_j in zip(selected, amplitudes):
            w_j = waveforms[pos_j]
            reconstruction[tau_j : tau_j + w_j.size] += a_j * w_j
        residual = x - reconstruction
        corr = {pos_c: np.correlate(residual, w_c, mode="valid")
                for pos_c, w_c in enumerate(waveforms)}

    instances = tuple(
        AtomInstance(dictionary.atoms[pos].id, tau, float(a))
        for (pos, tau), a in zip(selected, amplitudes)
    )
    return SparseCode(instances, residual, dictionary.generation, exhausted)


def encode(segment: SignalSegment, dictionary: Dictionary, cfg: CodingConfig) -> SparseCode:
    """Dispatch to the configured sparse coding algorithm."""
    if cfg.algorithm == MP:
        return mp_encode(segment, dictionary, cfg)
    return omp_encode(segment, dictionary, cfg)


def reconstruct(instances, dictionary: Dictionary, length: int) -> np.ndarray:
    """Superpose atom instances into a dense signal of the given length."""
    atoms_by_id = {atom.id: atom for atom in dictionary.atoms}
    out = np.zeros(length)
    for inst in instances:
        if inst.atom_id not in atoms_by_id:
            raise ValueError(f"unknown atom_id {inst.atom_id}")
        w = atoms_by_id[inst.atom_id].waveform
        if inst.offset < 0 or inst.offset + w.size > length:
            raise ValueError(
                f"instance at offset {inst.offset} (atom length {w.size}) "
                f"does not fit in length {length}"
            )
        out[inst.offset : inst.offset + w.size] += inst.amplitude * w
    return out


def save_code_csv(code: SparseCode, path: str) -> None:
    """Export a sparse code as ``atom_id,offset,amplitude`` CSV rows.

    The residual norm is appended as a footer comment so the export is
    self-checking against the reconstruction identity.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("atom_id,offset,amplitude\n")
        for inst in code.instances:
            fh.write(f"{inst.atom_id},{inst.offset},{inst.amplitude!r}\n")
        fh.write(f"# residual_l2={float(np.linalg.norm(code.residual))!r}\n")
        if code.exhausted:
            fh.write("# exhausted=true\n")
