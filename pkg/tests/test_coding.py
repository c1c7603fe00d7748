import numpy as np
import pytest

from vibdict.coding import (
    AtomInstance,
    CodingConfig,
    cross_correlate,
    encode,
    instance_budget,
    mp_encode,
    omp_encode,
    reconstruct,
    save_code_csv,
    select_best,
)
from vibdict.dictionary import Atom, Dictionary, init_pseudorandom, unit_normalize
from vibdict.ingest import SignalSegment, preprocess

from oracles import lstsq_amplitudes, naive_correlation, naive_mp


def random_dictionary(rng, num_atoms=3, min_len=8, max_len=32):
    atoms = tuple(
        Atom(unit_normalize(rng.standard_normal(int(rng.integers(min_len, max_len + 1)))), i)
        for i in range(num_atoms)
    )
    return Dictionary(atoms)


def random_segment(rng, n=128, t=0):
    return preprocess(SignalSegment(rng.standard_normal(n), 1000.0, t, "m"))


class TestBudget:
    def test_examples(self):
        cfg = CodingConfig("mp", sparsity=0.9)
        assert instance_budget(12800, cfg) == 1280
        assert instance_budget(100, cfg) == 10
        assert instance_budget(101, cfg) == 11  # ceil, not round

    def test_exact_decimal_arithmetic(self):
        # 0.9 is not exactly representable in binary; the budget must not
        # pick up a spurious +1 from 0.1 * n landing just above an integer
        cfg = CodingConfig("mp", sparsity=0.9)
        for n in (10, 20, 12800, 16000):
            assert instance_budget(n, cfg) == n // 10

    def test_override_takes_precedence(self):
        cfg = CodingConfig("mp", sparsity=0.9, n_instances=1600)
        assert instance_budget(16384, cfg) == 1600

    def test_minimum_one_instance(self):
        assert instance_budget(5, CodingConfig("mp", sparsity=0.9)) == 1

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            CodingConfig("nope")
        with pytest.raises(ValueError):
            CodingConfig("mp", sparsity=1.0)
        with pytest.raises(ValueError):
            CodingConfig("mp", n_instances=0)


class TestCrossCorrelate:
    def test_matches_naive_loop(self):
        rng = np.random.default_rng(0)
        sig = rng.standard_normal(64)
        atom = Atom(unit_normalize(rng.standard_normal(9)), 0)
        np.testing.assert_allclose(
            cross_correlate(sig, atom), naive_correlation(sig, atom.waveform), atol=1e-12
        )

    def test_valid_shift_count(self):
        atom = Atom(unit_normalize(np.ones(10)), 0)
        assert cross_correlate(np.ones(64), atom).shape == (55,)

    def test_atom_longer_than_signal_rejected(self):
        atom = Atom(unit_normalize(np.ones(10)), 0)
        with pytest.raises(ValueError, match="longer"):
            cross_correlate(np.ones(5), atom)


class TestSelectBest:
    def test_finds_planted_atom(self):
        rng = np.random.default_rng(1)
        d = random_dictionary(rng)
        sig = np.zeros(100)
        atom = d.atoms[1]
        sig[17 : 17 + len(atom)] += -2.5 * atom.waveform
        best = select_best(sig, d)
        assert (best.atom_id, best.offset) == (1, 17)
        assert best.amplitude == pytest.approx(-2.5, abs=1e-12)

    def test_zero_residual_returns_none(self):
        rng = np.random.default_rng(2)
        assert select_best(np.zeros(50), random_dictionary(rng)) is None

    def test_tie_breaks_to_lowest_id_then_offset(self):
        w = unit_normalize(np.ones(4))
        d = Dictionary((Atom(w, 0), Atom(w.copy(), 1)))
        best = select_best(np.ones(12), d)
        assert (best.atom_id, best.offset) == (0, 0)


class TestMpEncode:
    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            d = random_dictionary(rng, num_atoms=int(rng.integers(1, 4)))
            seg = random_segment(rng, n=int(rng.integers(48, 128)))
            cfg = CodingConfig("mp", n_instances=6)
            code = mp_encode(seg, d, cfg)
            waveforms = {a.id: a.waveform for a in d.atoms}
            expected, expected_residual = naive_mp(seg.samples, waveforms, 6)
            got = [(i.atom_id, i.offset, i.amplitude) for i in code.instances]
            assert [(m, t) for m, t, _ in got] == [(m, t) for m, t, _ in expected]
            np.testing.assert_allclose(
                [a for *_, a in got], [a for *_, a in expected], atol=1e-10
            )
            np.testing.assert_allclose(code.residual, expected_residual, atol=1e-10)

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(4)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=200)
        code = mp_encode(seg, d, CodingConfig("mp", sparsity=0.9))
        recon = reconstruct(code.instances, d, len(seg))
        np.testing.assert_allclose(
            recon + code.residual, seg.samples,
            atol=1e-6 * np.linalg.norm(seg.samples),
        )

    def test_pythagoras_energy_identity(self):
        rng = np.random.default_rng(5)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=160)
        code = mp_encode(seg, d, CodingConfig("mp", sparsity=0.9))
        start = float(np.dot(seg.samples, seg.samples))
        final = start - sum(i.amplitude**2 for i in code.instances)
        assert final == pytest.approx(float(np.dot(code.residual, code.residual)),
                                      rel=1e-9)

    def test_residual_energy_monotone(self):
        rng = np.random.default_rng(6)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=100)
        energies = []
        for n in range(1, 8):
            code = mp_encode(seg, d, CodingConfig("mp", n_instances=n))
            energies.append(float(np.dot(code.residual, code.residual)))
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))

    def test_exhaustion_flag_on_exactly_representable_signal(self):
        w = unit_normalize(np.sin(np.arange(8)) + 2.0)
        d = Dictionary((Atom(w, 0),))
        sig = np.zeros(32)
        sig[4:12] = 3.0 * w
        seg = SignalSegment(sig, 100.0, 0, "m")
        code = mp_encode(seg, d, CodingConfig("mp", n_instances=5))
        assert code.exhausted
        assert len(code.instances) == 1
        np.testing.assert_allclose(code.residual, 0.0, atol=1e-12)

    def test_budget_reached_without_exhaustion(self):
        rng = np.random.default_rng(7)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=100)
        code = mp_encode(seg, d, CodingConfig("mp", sparsity=0.9))
        assert not code.exhausted
        assert len(code.instances) == instance_budget(100, CodingConfig("mp", sparsity=0.9))


class TestOmpEncode:
    def test_amplitudes_match_dense_least_squares(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            d = random_dictionary(rng, num_atoms=int(rng.integers(1, 4)))
            seg = random_segment(rng, n=int(rng.integers(48, 128)))
            code = omp_encode(seg, d, CodingConfig("omp", n_instances=6))
            waveforms = {a.id: a.waveform for a in d.atoms}
            placements = [(i.atom_id, i.offset) for i in code.instances]
            expected = lstsq_amplitudes(seg.samples, placements, waveforms)
            np.testing.assert_allclose(
                [i.amplitude for i in code.instances], expected, atol=1e-8
            )

    def test_residual_orthogonal_to_selection(self):
        rng = np.random.default_rng(9)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=150)
        code = omp_encode(seg, d, CodingConfig("omp", sparsity=0.9))
        for inst in code.instances:
            atom = d.atom_by_id(inst.atom_id)
            window = code.residual[inst.offset : inst.offset + len(atom)]
            assert abs(float(np.dot(window, atom.waveform))) < 1e-6

    def test_no_duplicate_placements(self):
        rng = np.random.default_rng(10)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=80)
        code = omp_encode(seg, d, CodingConfig("omp", sparsity=0.85))
        placements = [(i.atom_id, i.offset) for i in code.instances]
        assert len(placements) == len(set(placements))

    def test_beats_or_matches_mp_residual(self):
        rng = np.random.default_rng(11)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=120)
        mp = mp_encode(seg, d, CodingConfig("mp", n_instances=12))
        omp = omp_encode(seg, d, CodingConfig("omp", n_instances=12))
        assert np.linalg.norm(omp.residual) <= np.linalg.norm(mp.residual) + 1e-9

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(12)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=90)
        code = omp_encode(seg, d, CodingConfig("omp", n_instances=9))
        recon = reconstruct(code.instances, d, len(seg))
        np.testing.assert_allclose(
            recon + code.residual, seg.samples,
            atol=1e-6 * np.linalg.norm(seg.samples),
        )


class TestEncodeDispatch:
    def test_dispatches_by_algorithm(self):
        rng = np.random.default_rng(13)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=64)
        mp = encode(seg, d, CodingConfig("mp", n_instances=4))
        omp = encode(seg, d, CodingConfig("omp", n_instances=4))
        assert len(mp.instances) == len(omp.instances) == 4

    def test_wrong_algorithm_rejected(self):
        rng = np.random.default_rng(14)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=64)
        with pytest.raises(ValueError):
            mp_encode(seg, d, CodingConfig("omp"))
        with pytest.raises(ValueError):
            omp_encode(seg, d, CodingConfig("mp"))

    def test_atom_longer_than_segment_rejected(self):
        d = Dictionary((Atom(unit_normalize(np.ones(20)), 0),))
        seg = SignalSegment(np.ones(10), 100.0, 0, "m")
        with pytest.raises(ValueError, match="fit"):
            encode(seg, d, CodingConfig("mp"))

    def test_deterministic_replay(self):
        rng = np.random.default_rng(15)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=100)
        a = encode(seg, d, CodingConfig("mp", sparsity=0.9))
        b = encode(seg, d, CodingConfig("mp", sparsity=0.9))
        assert a.instances == b.instances
        np.testing.assert_array_equal(a.residual, b.residual)


class TestCodeExport:
    def test_csv_round_trip_fields(self, tmp_path):
        rng = np.random.default_rng(16)
        d = random_dictionary(rng)
        seg = random_segment(rng, n=64)
        code = mp_encode(seg, d, CodingConfig("mp", n_instances=5))
        path = tmp_path / "code.csv"
        save_code_csv(code, str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "atom_id,offset,amplitude"
        body = [line for line in lines[1:] if not line.startswith("#")]
        assert len(body) == 5
        for line, inst in zip(body, code.instances):
            m, tau, a = line.split(",")
            assert (int(m), int(tau)) == (inst.atom_id, inst.offset)
            assert float(a) == inst.amplitude
        footer = [line for line in lines if line.startswith("# residual_l2=")]
        assert float(footer[0].split("=")[1]) == pytest.approx(
            float(np.linalg.norm(code.residual))
        )


class TestReconstruct:
    def test_superposition(self):
        w0 = unit_normalize(np.ones(4))
        w1 = unit_normalize(np.arange(1.0, 6.0))
        d = Dictionary((Atom(w0, 0), Atom(w1, 1)))
        instances = (AtomInstance(0, 2, 2.0), AtomInstance(1, 4, -1.0))
        out = reconstruct(instances, d, 12)
        expected = np.zeros(12)
        expected[2:6] += 2.0 * w0
        expected[4:9] -= w1
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_out_of_range_offset_rejected(self):
        d = Dictionary((Atom(unit_normalize(np.ones(4)), 0),))
        with pytest.raises(ValueError):
            reconstruct((AtomInstance(0, 9, 1.0),), d, 12)
        with pytest.raises(ValueError):
            reconstruct((AtomInstance(0, -1, 1.0),), d, 12)

    def test_unknown_atom_rejected(self):
        d = Dictionary((Atom(unit_normalize(np.ones(4)), 0),))
        with pytest.raises(ValueError, match="unknown"):
            reconstruct((AtomInstance(5, 0, 1.0),), d, 12)
