"""Parameterized stochastic noise for sampled-backend runs.

This is a desk-scale stand-in for calibrated hardware noise: per-gate
depolarizing Pauli kicks, amplitude damping simulated as quantum-jump
trajectories, and independent readout bit flips. The default magnitudes are
invented (realistic order, not calibrated to any device) and fully
configurable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import Gate, GateSequence
from .seeding import derive_seed, generator
from .simulator import StateVector, apply_gate, apply_readout_flips, marginal_probs, zero_state

_PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate stochastic error and readout-flip parameters.

    ``p1``/``p2`` are the probabilities that a one-/two-qubit gate is
    followed by a uniformly random non-identity Pauli on each touched qubit.
    ``gamma`` is the per-gate, per-qubit amplitude-damping jump probability
    scale. ``readout_flip0``/``readout_flip1`` are P(read 1 | 0) and
    P(read 0 | 1).
    """

    p1: float = 0.0
    p2: float = 0.0
    gamma: float = 0.0
    readout_flip0: float = 0.0
    readout_flip1: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "gamma", "readout_flip0", "readout_flip1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")

    @classmethod
    def default(cls) -> NoiseModel:
        """Invented desk-scale defaults (flagged: not calibrated to hardware)."""
        return cls(p1=0.001, p2=0.01, gamma=0.001, readout_flip0=0.02, readout_flip1=0.02)

    def gate_noise_free(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.gamma == 0.0

    def is_zero(self) -> bool:
        return self.gate_noise_free() and self.readout_flip0 == 0.0 and self.readout_flip1 == 0.0

    def to_json(self) -> dict:
        return {
            "p1": self.p1,
            "p2": self.p2,
            "gamma": self.gamma,
            "readout_flip0": self.readout_flip0,
            "readout_flip1": self.readout_flip1,
        }

    @classmethod
    def from_json(cls, doc: dict) -> NoiseModel:
        return cls(**{k: float(v) for k, v in doc.items()})


def _prob_one(state: StateVector, qubit: int) -> float:
    view = state.amplitudes.reshape(-1, 2, 1 << qubit)
    return float(np.sum(np.abs(view[:, 1, :]) ** 2))


def _apply_1q_matrix(state: StateVector, qubit: int, mat: np.ndarray) -> None:
    view = state.amplitudes.reshape(-1, 2, 1 << qubit)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = mat[0, 0] * a0 + mat[0, 1] * a1
    view[:, 1, :] = mat[1, 0] * a0 + mat[1, 1] * a1


def noisy_apply(
    state: StateVector, gate: Gate, model: NoiseModel, rng: np.random.Generator
) -> StateVector:
    """Apply the ideal gate, then one stochastic error round per touched
    qubit: with probability p1 (p2 for two-qubit gates) a uniformly random
    non-identity Pauli, then an amplitude-damping trajectory step (jump to
    |0> with probability gamma * P(|1>), else the no-jump Kraus). The state
    is renormalized after every trajectory step.
    """
    apply_gate(state, gate)
    if model.gate_noise_free():
        return state
    p_err = model.p1 if len(gate.qubits) == 1 else model.p2
    for q in gate.qubits:
        if p_err > 0.0 and rng.random() < p_err:
            _apply_1q_matrix(state, q, _PAULIS[rng.integers(3)])
        if model.gamma > 0.0:
            p1q = _prob_one(state, q)
            view = state.amplitudes.reshape(-1, 2, 1 << q)
            if rng.random() < model.gamma * p1q:
                # Jump: project the qubit's |1> component onto |0>.
                view[:, 0, :] = view[:, 1, :]
                view[:, 1, :] = 0.0
            else:
                # No-jump Kraus diag(1, sqrt(1-gamma)).
                view[:, 1, :] *= np.sqrt(1.0 - model.gamma)
            state.amplitudes /= np.linalg.norm(state.amplitudes)
    return state


def _column_prob_one(batch: np.ndarray, qubit: int) -> np.ndarray:
    # batch has shape (2^m, shots): columns are independent trajectories.
    shots = batch.shape[1]
    ones = batch.reshape(-1, 2, 1 << qubit, shots)[:, 1, :, :]
    return np.einsum("ois,ois->s", ones.real, ones.real) + np.einsum(
        "ois,ois->s", ones.imag, ones.imag
    )


def _column_pauli_kick(batch: np.ndarray, qubit: int, column: int, which: int) -> None:
    col = np.ascontiguousarray(batch[:, column])
    view = col.reshape(-1, 2, 1 << qubit)
    pauli = _PAULIS[which]
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = pauli[0, 0] * a0 + pauli[0, 1] * a1
    view[:, 1, :] = pauli[1, 0] * a0 + pauli[1, 1] * a1
    batch[:, column] = col


def sample_circuit_noisy(
    seq: GateSequence,
    measured_qubits,
    shots: int,
    model: NoiseModel,
    seed: int,
) -> np.ndarray:
    """Outcome counts over the measured qubits, one fresh trajectory per shot.

    Returns a length-2^k count vector indexed like
    ``simulator.marginal_probs`` (first measured qubit = most significant
    bit). When the model has no gate noise the trajectories are all
    identical, so a single simulation plus the readout channel is sampled
    instead. Otherwise the independent trajectories evolve as columns of one
    batched amplitude array, with every stochastic draw taken from a single
    seeded stream in gate order (bit-reproducible).
    """
    from .simulator import _apply_1q, _apply_2q

    measured = tuple(measured_qubits)
    k = len(measured)
    counts = np.zeros(1 << k, dtype=np.int64)
    if model.gate_noise_free():
        state = zero_state(seq.num_qubits)
        for g in seq.gates:
            apply_gate(state, g)
        probs = apply_readout_flips(
            marginal_probs(state, measured), model.readout_flip0, model.readout_flip1
        )
        probs = np.maximum(probs, 0.0)
        counts += generator(seed).multinomial(shots, probs / probs.sum())
        return counts

    rng = generator(seed)
    m = seq.num_qubits
    batch = np.zeros((1 << m, shots), dtype=complex)
    batch[0, :] = 1.0
    sqrt_keep = np.sqrt(1.0 - model.gamma)
    for g in seq.gates:
        mat = g.to_matrix()
        if len(g.qubits) == 1:
            _apply_1q(batch, g.qubits[0], mat)
        else:
            _apply_2q(batch, g.qubits, mat)
        p_err = model.p1 if len(g.qubits) == 1 else model.p2
        for q in g.qubits:
            if p_err > 0.0:
                kicked = np.flatnonzero(rng.random(shots) < p_err)
                if kicked.size:
                    choices = rng.integers(3, size=kicked.size)
                    for column, which in zip(kicked, choices):
                        _column_pauli_kick(batch, q, int(column), int(which))
            if model.gamma > 0.0:
                p_one = _column_prob_one(batch, q)
                jumps = rng.random(shots) < model.gamma * p_one
                view = batch.reshape(-1, 2, 1 << q, shots)
                jump_cols = np.flatnonzero(jumps)
                if jump_cols.size:
                    norm = np.sqrt(np.maximum(p_one[jump_cols], 1e-300))
                    view[:, 0, :, jump_cols] = view[:, 1, :, jump_cols] / norm[:, None, None]
                    view[:, 1, :, jump_cols] = 0.0
                keep_cols = np.flatnonzero(~jumps)
                if keep_cols.size:
                    view[:, 1, :, keep_cols] *= sqrt_keep
                    batch[:, keep_cols] /= np.sqrt(1.0 - model.gamma * p_one[keep_cols])

    # Per-column marginal over the measured qubits, then one outcome each.
    probs = np.abs(batch.reshape([2] * m + [shots])) ** 2
    axes_keep = [m - 1 - q for q in measured]
    drop = tuple(ax for ax in range(m) if ax not in set(axes_keep))
    p = probs.sum(axis=drop) if drop else probs
    order = sorted(axes_keep)
    p = p.transpose([order.index(ax) for ax in axes_keep] + [len(axes_keep)])
    p = p.reshape(-1, shots).T  # (shots, 2^k)
    cum = np.cumsum(p, axis=1)
    draws = rng.random(shots) * cum[:, -1]
    outcomes = (draws[:, None] >= cum).sum(axis=1)
    outcomes = np.minimum(outcomes, (1 << k) - 1)

    for i in range(k):
        bit_mask = 1 << (k - 1 - i)
        bits = (outcomes & bit_mask) > 0
        flip_p = np.where(bits, model.readout_flip1, model.readout_flip0)
        flips = rng.random(shots) < flip_p
        outcomes = np.where(flips, outcomes ^ bit_mask, outcomes)

    np.add.at(counts, outcomes, 1)
    return counts


def noisy_cost(u_seq, v_seq, cost_kind, shots: int, model: NoiseModel, seed: int):
    """Sampled cost with every gate of the cost circuit (Bell preparation and
    unpreparation included) run through ``noisy_apply`` and measurement
    through readout flips."""
    from .cost import SampledBackend, evaluate_cost

    return evaluate_cost(u_seq, v_seq, cost_kind, SampledBackend(shots, seed, noise=model))
