"""Encode a short vibration segment with MP and OMP and compare them.

A single Gabor-like burst is planted at a few known offsets inside white
noise. Matching pursuit should land instances on those offsets, and
orthogonal matching pursuit should refit the amplitudes so the residual
is orthogonal to every selected atom shift.
"""

import numpy as np

from vibdict import (
    Atom,
    CodingConfig,
    Dictionary,
    SignalSegment,
    encode,
    fidelity_db,
    gabor_atom,
    reconstruct,
)


def main():
    rng = np.random.default_rng(3)
    atom = gabor_atom(40, cycles=5.0)
    dictionary = Dictionary((Atom(atom, 0),))

    # plant three bursts, then bury them in noise
    samples = 0.1 * rng.standard_normal(400)
    truth = [(60, 3.0), (180, -2.2), (310, 2.6)]
    for offset, amplitude in truth:
        samples[offset:offset + len(atom)] += amplitude * atom
    segment = SignalSegment(samples, sample_rate=12800.0, timestamp=0, source_id="demo")

    for algorithm in ("mp", "omp"):
        code = encode(segment, dictionary, CodingConfig(algorithm, n_instances=3))
        print(f"\n{algorithm.upper()} picked:")
        for inst in code.instances:
            print(f"  atom {inst.atom_id} at offset {inst.offset:3d} "
                  f"amplitude {inst.amplitude:+.3f}")
        recon = reconstruct(code.instances, dictionary, len(samples))
        err = np.linalg.norm(segment.samples - recon - code.residual)
        print(f"  fidelity {fidelity_db(segment.samples, code.residual):.2f} dB, "
              f"reconstruction identity error {err:.2e}")
        if algorithm == "omp":
            worst = max(
                abs(float(np.dot(code.residual[i.offset:i.offset + len(atom)], atom)))
                for i in code.instances
            )
            print(f"  max |<residual, shifted atom>| = {worst:.2e}")

    print("\nplanted truth:", [(o, round(a, 2)) for o, a in truth])


if __name__ == "__main__":
    main()
