"""Overlap-test circuits and cost estimators.

All cost circuits place the target-unitary register A on qubits ``0..n-1``.
The doubled-register tests (global and local overlap tests, the two-ancilla
trace circuit) put register B on qubits ``n..2n-1`` with pair ``j`` mapped to
qubits ``(j-1, n+j-1)`` (``j`` is 1-based to match the per-qubit cost index).
Ancillas, where present, sit above both registers.

Estimators come in two backends: exact (probabilities straight from the
statevector, ``shots=0``, ``std_error=0``) and sampled (seeded binomial /
multinomial draws, optional stochastic noise, binomial standard errors).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .gates import (
    FULL_ALPHABET,
    Gate,
    GateSequence,
    cnot,
    conjugate_sequence,
    controlled_sequence,
    hadamard,
    identity_sequence,
    rz,
    transpose_sequence,
)
from .noise import NoiseModel, sample_circuit_noisy
from .seeding import derive_seed, generator
from .simulator import (
    MAX_SIM_QUBITS,
    StateVector,
    apply_gate,
    apply_readout_flips,
    basis_state,
    marginal_probs,
    zero_state,
)


# ---------------------------------------------------------------------------
# Backends and estimate containers


@dataclass(frozen=True)
class ExactBackend:
    """Probabilities computed exactly from the statevector."""


@dataclass(frozen=True)
class SampledBackend:
    """Finite-shot estimation with a fixed seed and optional noise model."""

    shots: int
    seed: int
    noise: NoiseModel | None = None

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be positive")

    def effective_noise(self) -> NoiseModel | None:
        if self.noise is None or self.noise.is_zero():
            return None
        return self.noise

    def child(self, *path: int) -> SampledBackend:
        return SampledBackend(self.shots, derive_seed(self.seed, *path), self.noise)

    def with_shots(self, shots: int) -> SampledBackend:
        return SampledBackend(shots, self.seed, self.noise)


EXACT = ExactBackend()

Backend = ExactBackend | SampledBackend


@dataclass(frozen=True)
class CostEstimate:
    """A cost value with its shot count and binomial standard error.

    ``shots == 0`` marks the exact backend (``std_error == 0``). Composite
    costs combine member standard errors in quadrature.
    """

    value: float
    shots: int = 0
    std_error: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "shots", int(self.shots))
        object.__setattr__(self, "std_error", float(self.std_error))


@dataclass(frozen=True)
class Estimate:
    """A real estimated quantity (used for trace extraction)."""

    value: float
    shots: int = 0
    std_error: float = 0.0


@dataclass(frozen=True)
class ComplexEstimate:
    """A complex estimated quantity with per-part standard errors."""

    value: complex
    shots: int = 0
    std_error_re: float = 0.0
    std_error_im: float = 0.0


@dataclass(frozen=True)
class CostKind:
    """Which cost function to evaluate; ``weighted`` carries the weight q
    given to the global term (None = resolve by problem size)."""

    name: str
    q: float | None = None


HST = CostKind("hst")
LHST = CostKind("lhst")
POTQ = CostKind("potq")
FIXED_INPUT = CostKind("fixed_input")
FIXED_INPUT_LOCAL = CostKind("fixed_input_local")


def weighted(q: float | None = None) -> CostKind:
    if q is not None and not 0.0 <= q <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {q}")
    return CostKind("weighted", q)


def default_weight(n: int) -> float:
    """Global-term weight used when none is given: all-global for small
    problems, all-local once the global overlap starts to vanish."""
    return 1.0 if n <= 4 else 0.0


# ---------------------------------------------------------------------------
# Circuit builders


def _shift_gates(seq: GateSequence, offset: int) -> list[Gate]:
    return [Gate(g.kind, tuple(q + offset for q in g.qubits), g.theta, g.matrix) for g in seq.gates]


def _check_pair(u_seq: GateSequence, v_seq: GateSequence) -> int:
    if u_seq.num_qubits != v_seq.num_qubits:
        raise ValueError("target and trainable sequences must act on the same qubit count")
    return u_seq.num_qubits


def _check_width(width: int) -> None:
    if width > MAX_SIM_QUBITS:
        raise CapacityError(f"{width}-qubit circuit exceeds the {MAX_SIM_QUBITS}-qubit cap")


def _overlap_front_gates(u_seq: GateSequence, v_seq: GateSequence) -> list[Gate]:
    """Bell preparation on (A, B), then U on A in parallel with V* on B."""
    n = u_seq.num_qubits
    gs: list[Gate] = [hadamard(a) for a in range(n)]
    gs += [cnot(a, a + n) for a in range(n)]
    gs += list(u_seq.gates)
    gs += _shift_gates(conjugate_sequence(v_seq, FULL_ALPHABET), n)
    return gs


def _pair_unprep_gates(j: int, n: int) -> list[Gate]:
    # Inverse Bell-basis rotation on pair j (1-based): CNOT then Hadamard.
    return [cnot(j - 1, n + j - 1), hadamard(j - 1)]


def build_hst_circuit(u_seq: GateSequence, v_seq: GateSequence) -> GateSequence:
    """Global overlap test on 2n qubits; the all-zeros probability of the
    final state equals |Tr(V^dag U)|^2 / d^2. Measurement is left to the
    estimator."""
    n = _check_pair(u_seq, v_seq)
    _check_width(2 * n)
    gs = _overlap_front_gates(u_seq, v_seq)
    for j in range(1, n + 1):
        gs += _pair_unprep_gates(j, n)
    return GateSequence(2 * n, tuple(gs))


def build_lhst_circuit(u_seq: GateSequence, v_seq: GateSequence, j: int) -> GateSequence:
    """Local overlap test for pair ``j`` (1-based): same front half as the
    global test, but only pair (A_j, B_j) is rotated back and measured."""
    n = _check_pair(u_seq, v_seq)
    if not 1 <= j <= n:
        raise IndexError(f"pair index {j} out of range 1..{n}")
    _check_width(2 * n)
    gs = _overlap_front_gates(u_seq, v_seq) + _pair_unprep_gates(j, n)
    return GateSequence(2 * n, tuple(gs))


def build_pooq_circuit(u_seq: GateSequence, part: str = "re") -> GateSequence:
    """One-ancilla trace circuit on n+1 qubits (ancilla = qubit n).

    With the system register maximally mixed, the ancilla Z readout after
    this circuit gives Re Tr(U)/d (``part="re"``) or Im Tr(U)/d
    (``part="im"``). Input preparation is left to the estimator.
    """
    n = u_seq.num_qubits
    _check_width(n + 1)
    anc = n
    gs: list[Gate] = [hadamard(anc)]
    gs += list(controlled_sequence(u_seq, anc).gates)
    gs += _measure_x_or_y_gates(anc, part)
    return GateSequence(n + 1, tuple(gs))


def _measure_x_or_y_gates(qubit: int, part: str) -> list[Gate]:
    if part == "re":
        return [hadamard(qubit)]
    if part == "im":
        # S^dag then H (up to a global phase), turning a Z readout into <Y>.
        return [rz(qubit, -math.pi / 2), hadamard(qubit)]
    raise ValueError(f"part must be 're' or 'im', got {part!r}")


def build_potq_circuit(u_seq: GateSequence, v_seq: GateSequence, part: str = "re") -> GateSequence:
    """Two-ancilla overlap circuit on 2n+2 qubits (Q = 2n, Q' = 2n+1).

    The Z readout of ancilla Q after this circuit gives
    Re Tr(V^dag U)/d (``part="re"``) or the imaginary part (``part="im"``).
    Controlled-U acts on register A; anticontrolled-V^T acts on register B.
    """
    n = _check_pair(u_seq, v_seq)
    _check_width(2 * n + 2)
    q_anc, q_prime = 2 * n, 2 * n + 1
    gs: list[Gate] = [hadamard(a) for a in range(n)]
    gs.append(hadamard(q_anc))
    gs += [cnot(a, a + n) for a in range(n)]
    gs.append(cnot(q_anc, q_prime))

    controlled_u = controlled_sequence(u_seq, q_anc)
    gs += list(controlled_u.gates)

    v_t = GateSequence(2 * n, tuple(_shift_gates(transpose_sequence(v_seq), n)))
    gs += list(controlled_sequence(v_t, q_prime, anticontrol=True).gates)

    gs.append(cnot(q_anc, q_prime))
    gs += _measure_x_or_y_gates(q_anc, part)
    return GateSequence(2 * n + 2, tuple(gs))


# ---------------------------------------------------------------------------
# Shared estimation helpers


def _run_gates(num_qubits: int, gate_lists) -> StateVector:
    state = zero_state(num_qubits)
    for gs in gate_lists:
        for g in gs:
            apply_gate(state, g)
    return state


def _zero_outcome_estimate(
    width: int,
    gates: list[Gate],
    measured: tuple[int, ...],
    backend: Backend,
) -> tuple[float, float]:
    """(p_hat, std_error) for the all-zeros outcome over ``measured``."""
    if isinstance(backend, ExactBackend):
        state = _run_gates(width, [gates])
        return marginal_probs(state, measured)[0], 0.0
    noise = backend.effective_noise()
    if noise is not None and not noise.gate_noise_free():
        counts = sample_circuit_noisy(
            GateSequence(width, tuple(gates)), measured, backend.shots, noise, backend.seed
        )
        p_hat = counts[0] / backend.shots
    else:
        state = _run_gates(width, [gates])
        probs = marginal_probs(state, measured)
        if noise is not None:
            probs = apply_readout_flips(probs, noise.readout_flip0, noise.readout_flip1)
        p = float(min(max(probs[0], 0.0), 1.0))
        p_hat = generator(backend.seed).binomial(backend.shots, p) / backend.shots
    return p_hat, math.sqrt(p_hat * (1.0 - p_hat) / backend.shots)


def _split_shots(total: int, parts: int) -> list[int]:
    # Equal split, remainder to the low indices.
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


# ---------------------------------------------------------------------------
# Cost functions


def cost_hst(u_seq: GateSequence, v_seq: GateSequence, backend: Backend = EXACT) -> CostEstimate:
    """Global compilation cost 1 - |Tr(V^dag U)|^2 / d^2, evaluated as one
    minus the all-zeros probability of the overlap-test circuit."""
    n = _check_pair(u_seq, v_seq)
    circuit = build_hst_circuit(u_seq, v_seq)
    measured = tuple(range(2 * n))
    p_hat, err = _zero_outcome_estimate(2 * n, list(circuit.gates), measured, backend)
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return CostEstimate(1.0 - p_hat, shots, err)


def cost_lhst_j(
    u_seq: GateSequence, v_seq: GateSequence, j: int, backend: Backend = EXACT
) -> CostEstimate:
    """Per-qubit local cost 1 - F_j where F_j is the probability that pair
    (A_j, B_j) reads (0, 0): the entanglement fidelity of the local channel
    seen by qubit j."""
    n = _check_pair(u_seq, v_seq)
    circuit = build_lhst_circuit(u_seq, v_seq, j)
    measured = (j - 1, n + j - 1)
    p_hat, err = _zero_outcome_estimate(2 * n, list(circuit.gates), measured, backend)
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return CostEstimate(1.0 - p_hat, shots, err)


def _lhst_pair_costs(u_seq: GateSequence, v_seq: GateSequence, backend: Backend) -> list[CostEstimate]:
    n = _check_pair(u_seq, v_seq)
    _check_width(2 * n)
    if isinstance(backend, SampledBackend) and backend.effective_noise() is not None \
            and not backend.effective_noise().gate_noise_free():
        # Fresh trajectories per pair circuit; the shot budget is split
        # equally with the remainder on low j.
        shots = _split_shots(backend.shots, n)
        out = []
        for j in range(1, n + 1):
            child = SampledBackend(shots[j - 1], derive_seed(backend.seed, j), backend.noise)
            out.append(cost_lhst_j(u_seq, v_seq, j, child))
        return out

    # Noiseless paths share the simulated front half across pairs.
    front = _run_gates(2 * n, [_overlap_front_gates(u_seq, v_seq)])
    out = []
    if isinstance(backend, ExactBackend):
        for j in range(1, n + 1):
            state = front.copy()
            for g in _pair_unprep_gates(j, n):
                apply_gate(state, g)
            p = marginal_probs(state, (j - 1, n + j - 1))[0]
            out.append(CostEstimate(1.0 - float(p), 0, 0.0))
        return out

    noise = backend.effective_noise()
    shots = _split_shots(backend.shots, n)
    for j in range(1, n + 1):
        state = front.copy()
        for g in _pair_unprep_gates(j, n):
            apply_gate(state, g)
        probs = marginal_probs(state, (j - 1, n + j - 1))
        if noise is not None:
            probs = apply_readout_flips(probs, noise.readout_flip0, noise.readout_flip1)
        p = float(min(max(probs[0], 0.0), 1.0))
        s_j = shots[j - 1]
        p_hat = generator(derive_seed(backend.seed, j)).binomial(s_j, p) / s_j
        out.append(CostEstimate(1.0 - p_hat, s_j, math.sqrt(p_hat * (1.0 - p_hat) / s_j)))
    return out


def cost_lhst(u_seq: GateSequence, v_seq: GateSequence, backend: Backend = EXACT) -> CostEstimate:
    """Local compilation cost: the arithmetic mean of the n per-qubit costs."""
    n = u_seq.num_qubits
    parts = _lhst_pair_costs(u_seq, v_seq, backend)
    value = sum(p.value for p in parts) / n
    err = math.sqrt(sum(p.std_error**2 for p in parts)) / n
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return CostEstimate(value, shots, err)


def cost_weighted(
    u_seq: GateSequence, v_seq: GateSequence, q: float | None, backend: Backend = EXACT
) -> CostEstimate:
    """Convex combination q * global + (1-q) * local; standard errors combine
    in quadrature. ``q=None`` resolves via ``default_weight``."""
    if q is None:
        q = default_weight(u_seq.num_qubits)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {q}")
    if q == 1.0:
        return cost_hst(u_seq, v_seq, backend)
    if q == 0.0:
        return cost_lhst(u_seq, v_seq, backend)
    b_hst = backend.child(1) if isinstance(backend, SampledBackend) else backend
    b_lhst = backend.child(2) if isinstance(backend, SampledBackend) else backend
    hst = cost_hst(u_seq, v_seq, b_hst)
    lhst = cost_lhst(u_seq, v_seq, b_lhst)
    value = q * hst.value + (1.0 - q) * lhst.value
    err = math.sqrt((q * hst.std_error) ** 2 + ((1.0 - q) * lhst.std_error) ** 2)
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return CostEstimate(value, shots, err)


def _expectation_from_zero_prob(p_hat: float) -> float:
    return 2.0 * p_hat - 1.0


def cost_potq(u_seq: GateSequence, v_seq: GateSequence, backend: Backend = EXACT) -> CostEstimate:
    """Phase-sensitive cost 1 - Re Tr(V^dag U)/d from the two-ancilla overlap
    circuit; ranges over [0, 2]."""
    n = _check_pair(u_seq, v_seq)
    circuit = build_potq_circuit(u_seq, v_seq, "re")
    p_hat, err = _zero_outcome_estimate(2 * n + 2, list(circuit.gates), (2 * n,), backend)
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return CostEstimate(1.0 - _expectation_from_zero_prob(p_hat), shots, 2.0 * err)


def overlap_via_potq(
    u_seq: GateSequence, v_seq: GateSequence, backend: Backend = EXACT
) -> ComplexEstimate:
    """Tr(V^dag U) from the two ancilla readout branches (the imaginary
    branch exists for trace diagnostics; no cost consumes it)."""
    n = _check_pair(u_seq, v_seq)
    d = 1 << n
    parts = []
    for idx, part in enumerate(("re", "im")):
        circuit = build_potq_circuit(u_seq, v_seq, part)
        b = backend.child(idx + 1) if isinstance(backend, SampledBackend) else backend
        p_hat, err = _zero_outcome_estimate(2 * n + 2, list(circuit.gates), (2 * n,), b)
        parts.append((_expectation_from_zero_prob(p_hat), 2.0 * err))
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return ComplexEstimate(
        complex(d * parts[0][0], d * parts[1][0]),
        shots,
        d * parts[0][1],
        d * parts[1][1],
    )


def cost_fixed_input(
    u_seq: GateSequence, v_seq: GateSequence, backend: Backend = EXACT
) -> CostEstimate:
    """Fixed-input cost 1 - |<0..0| V^dag U |0..0>|^2: an n-qubit circuit
    applying U then the inverse of V to the all-zeros state."""
    from .gates import adjoint_sequence

    n = _check_pair(u_seq, v_seq)
    _check_width(n)
    gatelist = list(u_seq.gates) + list(adjoint_sequence(v_seq).gates)
    p_hat, err = _zero_outcome_estimate(n, gatelist, tuple(range(n)), backend)
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return CostEstimate(1.0 - p_hat, shots, err)


def cost_fixed_input_local(
    u_seq: GateSequence, v_seq: GateSequence, backend: Backend = EXACT
) -> CostEstimate:
    """Local fixed-input cost 1 - (1/n) sum_j p0_j with p0_j the marginal
    zero probability of qubit j after U then V-inverse."""
    from .gates import adjoint_sequence

    n = _check_pair(u_seq, v_seq)
    _check_width(n)
    gatelist = list(u_seq.gates) + list(adjoint_sequence(v_seq).gates)
    measured = tuple(range(n))

    if isinstance(backend, ExactBackend):
        state = _run_gates(n, [gatelist])
        p0 = [marginal_probs(state, (j,))[0] for j in range(n)]
        return CostEstimate(1.0 - float(np.mean(p0)), 0, 0.0)

    noise = backend.effective_noise()
    if noise is not None and not noise.gate_noise_free():
        counts = sample_circuit_noisy(
            GateSequence(n, tuple(gatelist)), measured, backend.shots, noise, backend.seed
        )
    else:
        state = _run_gates(n, [gatelist])
        probs = marginal_probs(state, measured)
        if noise is not None:
            probs = apply_readout_flips(probs, noise.readout_flip0, noise.readout_flip1)
        probs = np.maximum(probs, 0.0)
        counts = generator(backend.seed).multinomial(backend.shots, probs / probs.sum())
    # Outcome index: qubit 0 is the most significant bit (marginal layout).
    idx = np.arange(counts.size)
    p0, var = [], 0.0
    for j in range(n):
        zero_mask = (idx >> (n - 1 - j)) & 1 == 0
        p_hat = counts[zero_mask].sum() / backend.shots
        p0.append(p_hat)
        var += p_hat * (1.0 - p_hat) / backend.shots
    return CostEstimate(1.0 - float(np.mean(p0)), backend.shots, math.sqrt(var) / n)


def evaluate_cost(
    u_seq: GateSequence, v_seq: GateSequence, kind: CostKind, backend: Backend = EXACT
) -> CostEstimate:
    """Dispatch a cost evaluation by kind."""
    if kind.name == "hst":
        return cost_hst(u_seq, v_seq, backend)
    if kind.name == "lhst":
        return cost_lhst(u_seq, v_seq, backend)
    if kind.name == "weighted":
        return cost_weighted(u_seq, v_seq, kind.q, backend)
    if kind.name == "potq":
        return cost_potq(u_seq, v_seq, backend)
    if kind.name == "fixed_input":
        return cost_fixed_input(u_seq, v_seq, backend)
    if kind.name == "fixed_input_local":
        return cost_fixed_input_local(u_seq, v_seq, backend)
    raise ValueError(f"unknown cost kind {kind.name!r}")


# ---------------------------------------------------------------------------
# Fidelity identities


def avg_fidelity_from_hst(c_hst: float, n: int) -> float:
    """Haar-average input-output fidelity implied by the global cost:
    F = 1 - (d/(d+1)) * C."""
    d = 1 << n
    return 1.0 - (d / (d + 1.0)) * c_hst


def fidelity_bound_from_cq(c_q: float, n: int, q: float) -> float:
    """Lower bound on the Haar-average fidelity from the weighted cost:
    F >= 1 - (n/(1-q+n*q)) * (d/(d+1)) * C_q."""
    d = 1 << n
    return 1.0 - (n / (1.0 - q + n * q)) * (d / (d + 1.0)) * c_q


def epsilon_from_cost(cost: float, n: int, q: float) -> float:
    """Compilation error epsilon = 1 - (fidelity bound) for a weighted-cost
    value (q=1 reduces to the pure-global form)."""
    return 1.0 - fidelity_bound_from_cq(cost, n, q)


# ---------------------------------------------------------------------------
# Trace extraction


def trace_via_pooq(u_seq: GateSequence, backend: Backend = EXACT) -> ComplexEstimate:
    """Tr(U) from the one-ancilla circuit with a maximally mixed system
    register.

    Exact backend: the ancilla expectation is averaged over all 2^n basis
    inputs for n <= 6, and over 4096 seeded basis samples above (the sampling
    spread is then recorded as the standard error). Sampled backend: basis
    inputs are drawn uniformly per shot; ``shots`` applies to each part.
    """
    n = u_seq.num_qubits
    d = 1 << n
    anc = n
    values, errors = [], []
    for idx, part in enumerate(("re", "im")):
        circuit = build_pooq_circuit(u_seq, part)
        gates = list(circuit.gates)
        if isinstance(backend, ExactBackend):
            if n <= 6:
                exps = [_pooq_expectation(gates, n, b, anc) for b in range(d)]
                values.append(float(np.mean(exps)))
                errors.append(0.0)
            else:
                rng = generator(derive_seed(0x900B, n, idx))
                draws = rng.integers(0, d, size=4096)
                exps = np.array([_pooq_expectation(gates, n, int(b), anc) for b in draws])
                values.append(float(exps.mean()))
                errors.append(float(exps.std(ddof=1) / math.sqrt(len(exps))))
        else:
            seed = derive_seed(backend.seed, idx + 1)
            rng = generator(seed)
            basis_counts = rng.multinomial(backend.shots, np.full(d, 1.0 / d))
            plus = 0
            for b in np.flatnonzero(basis_counts):
                exp_b = _pooq_expectation(gates, n, int(b), anc)
                p0 = min(max((exp_b + 1.0) / 2.0, 0.0), 1.0)
                plus += rng.binomial(int(basis_counts[b]), p0)
            x_hat = 2.0 * plus / backend.shots - 1.0
            values.append(x_hat)
            errors.append(math.sqrt(max(1.0 - x_hat**2, 0.0) / backend.shots))
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return ComplexEstimate(
        complex(d * values[0], d * values[1]), shots, d * errors[0], d * errors[1]
    )


def _pooq_expectation(gates: list[Gate], n: int, basis: int, anc: int) -> float:
    state = basis_state(n + 1, basis)  # ancilla (qubit n) starts in |0>
    for g in gates:
        apply_gate(state, g)
    p = marginal_probs(state, (anc,))
    return float(p[0] - p[1])


def trace_via_lhst(uprime_seq: GateSequence, backend: Backend = EXACT) -> Estimate:
    """Re Tr(U') from two local-cost evaluations against the identity.

    With B(U) = 1 - C_local(U, I), evaluated once on U' and once on
    controlled-U' (control above the register), the combination
    2^n * ((n+1) * (2 B_2 - 1) - n * B_1) recovers the real part of the
    trace. Standard errors propagate through the same linear combination.
    """
    n = uprime_seq.num_qubits
    d = 1 << n
    controlled = controlled_sequence(uprime_seq, n)
    b1_backend = backend.child(1) if isinstance(backend, SampledBackend) else backend
    b2_backend = backend.child(2) if isinstance(backend, SampledBackend) else backend
    c1 = cost_lhst(uprime_seq, identity_sequence(n), b1_backend)
    c2 = cost_lhst(controlled, identity_sequence(n + 1), b2_backend)
    b1, b2 = 1.0 - c1.value, 1.0 - c2.value
    value = d * ((n + 1) * (2.0 * b2 - 1.0) - n * b1)
    err = d * math.sqrt(((n + 1) * 2.0 * c2.std_error) ** 2 + (n * c1.std_error) ** 2)
    shots = 0 if isinstance(backend, ExactBackend) else backend.shots
    return Estimate(value, shots, err)
