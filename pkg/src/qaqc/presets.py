"""Named target constructions for the experiment runner.

Single-gate presets are one- or two-qubit circuits; the scaling presets are
the two families used in the larger runs: a tensor product of z rotations
with random angles, and the same product sandwiching two brick layers of
CNOTs (the second layer shifted down by one qubit). Two-qubit fixed targets
(SWAP, CH, QFT2) are exact matrix blocks placed on qubits (1, 0) so the
block's basis order coincides with the little-endian register index.
"""
from __future__ import annotations

import numpy as np

from .errors import CircuitParseError
from .gates import (
    GateSequence,
    TWO_PI,
    cnot,
    cz,
    fixed_2q,
    hadamard,
    identity_sequence,
    pauli_x,
    rz,
    t_gate,
)
from .seeding import generator

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


def swap_matrix() -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = m[3, 3] = 1.0
    m[1, 2] = m[2, 1] = 1.0
    return m


def controlled_hadamard_matrix() -> np.ndarray:
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = _H
    return m


def qft2_matrix() -> np.ndarray:
    # Two-qubit Fourier transform over the integer basis index.
    omega = 1j
    j = np.arange(4)
    return omega ** np.outer(j, j) / 2.0


def example_one(n: int, rng_seed: int) -> GateSequence:
    """Tensor product of z rotations with seeded random angles."""
    rng = generator(rng_seed)
    return GateSequence(n, tuple(rz(q, float(rng.uniform(0.0, TWO_PI))) for q in range(n)))


def example_two(n: int, rng_seed: int) -> GateSequence:
    """Rotation layer, CNOT brick, shifted CNOT brick, rotation layer."""
    if n < 3:
        raise ValueError("the entangling preset needs at least 3 qubits")
    rng = generator(rng_seed)
    gs = [rz(q, float(rng.uniform(0.0, TWO_PI))) for q in range(n)]
    gs += [cnot(k, k + 1) for k in range(0, n - 1, 2)]
    gs += [cnot(k, k + 1) for k in range(1, n - 1, 2)]
    gs += [rz(q, float(rng.uniform(0.0, TWO_PI))) for q in range(n)]
    return GateSequence(n, tuple(gs))


def preset_target(name: str, n: int | None = None, rng_seed: int = 0) -> GateSequence:
    """Resolve a preset name to its target circuit.

    ``Example1``/``Example2`` require a qubit count and draw their angles
    from ``rng_seed``.
    """
    key = name.strip()
    simple = {
        "I": lambda: identity_sequence(1),
        "T": lambda: GateSequence(1, (t_gate(0),)),
        "X": lambda: GateSequence(1, (pauli_x(0),)),
        "H": lambda: GateSequence(1, (hadamard(0),)),
        "CNOT": lambda: GateSequence(2, (cnot(0, 1),)),
        "CZ": lambda: GateSequence(2, (cz(0, 1),)),
        "CH": lambda: GateSequence(2, (fixed_2q((1, 0), controlled_hadamard_matrix()),)),
        "SWAP": lambda: GateSequence(2, (fixed_2q((1, 0), swap_matrix()),)),
        "QFT2": lambda: GateSequence(2, (fixed_2q((1, 0), qft2_matrix()),)),
    }
    if key in simple:
        return simple[key]()
    if key in ("Example1", "Example2"):
        if n is None:
            raise CircuitParseError(f"preset {key} needs a qubit count", field="target")
        return example_one(n, rng_seed) if key == "Example1" else example_two(n, rng_seed)
    raise CircuitParseError(f"unknown preset {name!r}", field="target")


PRESET_NAMES = ("I", "T", "X", "H", "CNOT", "CZ", "CH", "SWAP", "QFT2", "Example1", "Example2")
