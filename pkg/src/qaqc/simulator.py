"""Dense statevector simulation and brute-force matrix oracles.

Amplitude ordering is little-endian: qubit 0 is the least-significant bit of
the basis index. Gates are applied by stride iteration over amplitude pairs
(quads for two-qubit gates), never by building the full 2^m x 2^m operator,
so registers of 18-20 qubits (the doubled Hilbert-Schmidt-test width) stay
cheap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .gates import Gate, GateSequence
from .seeding import generator

#: Hard cap on simulated register width (2^24 amplitudes = 256 MiB).
MAX_SIM_QUBITS = 24
#: Hard cap on explicit matrix construction (4^12 entries).
MAX_MATRIX_QUBITS = 12


@dataclass(eq=False)
class StateVector:
    """A normalized pure state on ``num_qubits`` qubits."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes, got {self.amplitudes.shape}"
            )

    def copy(self) -> StateVector:
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm_error(self) -> float:
        return abs(float(np.sum(np.abs(self.amplitudes) ** 2)) - 1.0)


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """A dense unitary, the brute-force oracle representation."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("unitary must be square")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if dev > 1e-9:
            raise ValueError(f"matrix is not unitary (deviation {dev:.2e})")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class MeasurementSample:
    """Counts for one observed bitstring (bit i belongs to the i-th measured
    qubit, in the order they were requested)."""

    bits: tuple[int, ...]
    count: int


def zero_state(num_qubits: int) -> StateVector:
    if num_qubits < 1:
        raise CapacityError("register needs at least one qubit")
    if num_qubits > MAX_SIM_QUBITS:
        raise CapacityError(f"{num_qubits} qubits exceeds the {MAX_SIM_QUBITS}-qubit cap")
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def basis_state(num_qubits: int, index: int) -> StateVector:
    state = zero_state(num_qubits)
    state.amplitudes[0] = 0.0
    state.amplitudes[index] = 1.0
    return state


def prepare_bell(n: int) -> StateVector:
    """Maximally entangled state on 2n qubits: qubits 0..n-1 are half A,
    qubits n..2n-1 are half B, amplitude 1/sqrt(2^n) wherever the halves
    carry the same bit pattern."""
    if n < 1:
        raise CapacityError("need at least one qubit pair")
    if 2 * n > MAX_SIM_QUBITS:
        raise CapacityError(f"{2 * n} qubits exceeds the {MAX_SIM_QUBITS}-qubit cap")
    d = 1 << n
    amps = np.zeros(d * d, dtype=complex)
    scale = 1.0 / np.sqrt(d)
    for a in range(d):
        amps[a + (a << n)] = scale
    return StateVector(2 * n, amps)


# ---------------------------------------------------------------------------
# Gate application kernels. ``arr`` is the amplitude vector, or a
# (2^m, batch) column block when building matrices; both are C-contiguous so
# the stride reshapes below are views.


def _apply_1q(arr: np.ndarray, qubit: int, mat: np.ndarray) -> None:
    cols = arr.shape[1] if arr.ndim == 2 else 1
    view = arr.reshape(-1, 2, (1 << qubit) * cols)
    if mat[0, 1] == 0 and mat[1, 0] == 0:
        view[:, 0, :] *= mat[0, 0]
        view[:, 1, :] *= mat[1, 1]
        return
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = mat[0, 0] * a0 + mat[0, 1] * a1
    view[:, 1, :] = mat[1, 0] * a0 + mat[1, 1] * a1


def _apply_2q(arr: np.ndarray, qubits: tuple[int, int], mat: np.ndarray) -> None:
    cols = arr.shape[1] if arr.ndim == 2 else 1
    qa, qb = qubits
    hi, lo = max(qa, qb), min(qa, qb)
    view = arr.reshape(-1, 2, 1 << (hi - lo - 1), 2, (1 << lo) * cols)

    def row(b_hi: int, b_lo: int) -> int:
        # Gate matrix index 2*b_first + b_second for the listed qubit order.
        return (b_hi << 1) | b_lo if qa == hi else (b_lo << 1) | b_hi

    blocks = {(bh, bl): view[:, bh, :, bl, :].copy() for bh in (0, 1) for bl in (0, 1)}
    for bh in (0, 1):
        for bl in (0, 1):
            r = row(bh, bl)
            acc = None
            for ch in (0, 1):
                for cl in (0, 1):
                    term = mat[r, row(ch, cl)] * blocks[(ch, cl)]
                    acc = term if acc is None else acc + term
            view[:, bh, :, bl, :] = acc


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply ``gate`` in place and return the state. Norm is preserved up to
    floating rounding; no renormalization happens here."""
    for q in gate.qubits:
        if q >= state.num_qubits:
            raise IndexError(f"qubit {q} out of range for {state.num_qubits}-qubit state")
    mat = gate.to_matrix()
    if len(gate.qubits) == 1:
        _apply_1q(state.amplitudes, gate.qubits[0], mat)
    else:
        _apply_2q(state.amplitudes, gate.qubits, mat)
    return state


def apply_sequence(state: StateVector, seq: GateSequence) -> StateVector:
    for g in seq.gates:
        apply_gate(state, g)
    return state


def run_sequence(seq: GateSequence) -> StateVector:
    """Simulate ``seq`` from the all-zeros state."""
    return apply_sequence(zero_state(seq.num_qubits), seq)


# ---------------------------------------------------------------------------
# Measurement probabilities and sampling


def _check_measured_qubits(state: StateVector, qubits) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"measured qubits must be distinct, got {qubits}")
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range for {state.num_qubits}-qubit state")
    return qubits


def prob_all_zero(state: StateVector, qubits) -> float:
    """Exact marginal probability that every listed qubit measures 0."""
    qubits = _check_measured_qubits(state, qubits)
    m = state.num_qubits
    view = state.amplitudes.reshape([2] * m)
    index: list = [slice(None)] * m
    for q in qubits:
        index[m - 1 - q] = 0
    sub = view[tuple(index)]
    return float(np.sum(np.abs(sub) ** 2))


def marginal_probs(state: StateVector, qubits) -> np.ndarray:
    """Joint outcome distribution over the listed qubits.

    Outcome index bit layout: the first listed qubit is the most significant
    bit, so ``probs[0]`` is the all-zeros outcome.
    """
    qubits = _check_measured_qubits(state, qubits)
    m = state.num_qubits
    probs = np.abs(state.amplitudes.reshape([2] * m)) ** 2
    keep = [m - 1 - q for q in qubits]
    drop = tuple(ax for ax in range(m) if ax not in set(keep))
    p = probs.sum(axis=drop) if drop else probs
    order = sorted(keep)
    p = p.transpose([order.index(ax) for ax in keep])
    return np.ascontiguousarray(p.reshape(-1))


def apply_readout_flips(probs: np.ndarray, flip0: float, flip1: float) -> np.ndarray:
    """Push an outcome distribution through independent per-bit readout
    flips: P(read 1 | 0) = flip0, P(read 0 | 1) = flip1."""
    if flip0 == 0.0 and flip1 == 0.0:
        return probs
    k = probs.size.bit_length() - 1
    p = probs.reshape([2] * k).copy()
    for ax in range(k):
        p0 = np.take(p, 0, axis=ax)
        p1 = np.take(p, 1, axis=ax)
        new0 = (1.0 - flip0) * p0 + flip1 * p1
        new1 = flip0 * p0 + (1.0 - flip1) * p1
        p = np.stack([new0, new1], axis=ax)
    return p.reshape(-1)


def sample_bitstrings(
    state: StateVector,
    qubits,
    shots: int,
    rng_seed: int,
    readout=None,
) -> list[MeasurementSample]:
    """Draw ``shots`` samples from the exact marginal over ``qubits``.

    With a readout model, each bit flips independently with its configured
    probability (applied to the distribution before sampling, which is
    statistically identical to flipping sampled bits). Seeded runs are
    bit-reproducible.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    qubits = _check_measured_qubits(state, qubits)
    probs = marginal_probs(state, qubits)
    if readout is not None:
        probs = apply_readout_flips(probs, readout.readout_flip0, readout.readout_flip1)
    probs = np.maximum(probs, 0.0)
    probs = probs / probs.sum()
    counts = generator(rng_seed).multinomial(shots, probs)
    k = len(qubits)
    out = []
    for idx in np.flatnonzero(counts):
        bits = tuple((int(idx) >> (k - 1 - i)) & 1 for i in range(k))
        out.append(MeasurementSample(bits, int(counts[idx])))
    return out


# ---------------------------------------------------------------------------
# Matrix oracles


def sequence_to_matrix(seq: GateSequence) -> UnitaryMatrix:
    """Dense product of the sequence's gates (last gate leftmost).

    This is the brute-force oracle used by tests and trace identities; it is
    capped at 12 qubits.
    """
    if seq.num_qubits > MAX_MATRIX_QUBITS:
        raise CapacityError(
            f"matrix construction capped at {MAX_MATRIX_QUBITS} qubits, got {seq.num_qubits}"
        )
    d = 1 << seq.num_qubits
    arr = np.eye(d, dtype=complex)
    for g in seq.gates:
        mat = g.to_matrix()
        if len(g.qubits) == 1:
            _apply_1q(arr, g.qubits[0], mat)
        else:
            _apply_2q(arr, g.qubits, mat)
    return UnitaryMatrix(arr)


def haar_random_unitary(n: int, rng_seed: int) -> UnitaryMatrix:
    """Haar-distributed unitary on n qubits (QR of a complex Gaussian with
    the R-diagonal phase fix)."""
    if n > MAX_MATRIX_QUBITS:
        raise CapacityError(f"random unitary capped at {MAX_MATRIX_QUBITS} qubits")
    rng = generator(rng_seed)
    d = 1 << n
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return UnitaryMatrix(q * phases)


def haar_random_state(m: int, rng_seed: int) -> StateVector:
    """State drawn uniformly from the unit sphere on m qubits."""
    if m > MAX_SIM_QUBITS:
        raise CapacityError(f"{m} qubits exceeds the {MAX_SIM_QUBITS}-qubit cap")
    rng = generator(rng_seed)
    d = 1 << m
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return StateVector(m, z / np.linalg.norm(z))


def global_phase_distance(a, b) -> float:
    """max-entry norm of A - e^{i phi} B at the aligning phase
    phi = arg Tr(B^dag A); falls back to a phase grid when the trace
    vanishes."""
    a = a.entries if isinstance(a, UnitaryMatrix) else np.asarray(a, dtype=complex)
    b = b.entries if isinstance(b, UnitaryMatrix) else np.asarray(b, dtype=complex)
    tr = np.trace(b.conj().T @ a)
    if abs(tr) > 1e-12:
        return float(np.max(np.abs(a - np.exp(1j * np.angle(tr)) * b)))
    phases = np.exp(1j * np.linspace(0.0, 2 * np.pi, 256, endpoint=False))
    return float(min(np.max(np.abs(a - ph * b)) for ph in phases))
