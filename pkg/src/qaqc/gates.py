"""Gates, gate sequences, alphabets, ansatz constructors, and sequence transforms.

Conventions used throughout the package:

* Qubits are little-endian: qubit 0 is the least-significant bit of a basis
  index.
* ``GateSequence.gates`` is in time order: ``gates[0]`` is applied first, so
  the sequence's matrix is ``M(gates[-1]) @ ... @ M(gates[0])``.
* Rotations follow ``R_P(theta) = exp(-i * theta * P / 2)`` for Pauli ``P``.
* A two-qubit gate's 4x4 matrix is indexed by ``2*b_first + b_second`` where
  ``b_first`` is the bit of the first listed qubit (e.g. the control for
  CNOT).
* Rz angles are normalized to ``[0, 2*pi)`` at construction; all angle
  comparisons are mod ``2*pi``.

The continuous parameters of a sequence are the thetas of its Rz gates, in
gate order. Every other kind is fixed. Ry is not a native kind; it is
synthesized through the exact identity ``Ry(t) = Rx(pi/2) Rz(-t) Rx(-pi/2)``
(verified in the test suite), which costs one Rz parameter per Y rotation.
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedGateError

TWO_PI = 2.0 * math.pi

_SQ2 = 1.0 / math.sqrt(2.0)
_MAT_H = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
_MAT_X = np.array([[0, 1], [1, 0]], dtype=complex)
_MAT_T = np.diag([1.0, np.exp(1j * math.pi / 4)]).astype(complex)
_MAT_S = np.diag([1.0, 1j]).astype(complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]).astype(complex)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


_MAT_RX_PLUS = rx_matrix(math.pi / 2)
_MAT_RX_MINUS = rx_matrix(-math.pi / 2)
_MAT_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_MAT_CZ = np.diag([1, 1, 1, -1]).astype(complex)


class GateKind(enum.Enum):
    RX_PLUS = "rx+"      # Rx(+pi/2)
    RX_MINUS = "rx-"     # Rx(-pi/2)
    RZ = "rz"            # Rz(theta), the only parameterized kind
    CNOT = "cnot"        # qubits = (control, target)
    CZ = "cz"
    H = "h"
    X = "x"
    T = "t"
    S = "s"
    FIXED1 = "fixed1"    # arbitrary 2x2 unitary
    FIXED2 = "fixed2"    # arbitrary 4x4 unitary


_ONE_QUBIT_KINDS = {
    GateKind.RX_PLUS, GateKind.RX_MINUS, GateKind.RZ, GateKind.H,
    GateKind.X, GateKind.T, GateKind.S, GateKind.FIXED1,
}
_TWO_QUBIT_KINDS = {GateKind.CNOT, GateKind.CZ, GateKind.FIXED2}
_FIXED_KINDS = {GateKind.FIXED1, GateKind.FIXED2}


@dataclass(frozen=True, eq=False)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    theta: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        arity = 1 if self.kind in _ONE_QUBIT_KINDS else 2
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind.value} takes {arity} qubit(s), got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise IndexError(f"negative qubit index in {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"two-qubit gate addresses one qubit twice: {self.qubits}")
        if self.kind is GateKind.RZ:
            if self.theta is None:
                raise ValueError("rz requires an angle")
            object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        elif self.theta is not None:
            raise ValueError(f"{self.kind.value} does not take an angle")
        if self.kind in _FIXED_KINDS:
            if self.matrix is None:
                raise ValueError(f"{self.kind.value} requires a matrix")
            dim = 2 if self.kind is GateKind.FIXED1 else 4
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (dim, dim):
                raise ValueError(f"{self.kind.value} matrix must be {dim}x{dim}")
            if np.max(np.abs(m.conj().T @ m - np.eye(dim))) > 1e-9:
                raise ValueError("fixed gate matrix is not unitary")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.matrix is not None:
            raise ValueError(f"{self.kind.value} does not take a matrix")

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.kind, self.qubits, self.theta) != (other.kind, other.qubits, other.theta):
            return False
        if self.matrix is None:
            return other.matrix is None
        return other.matrix is not None and np.array_equal(self.matrix, other.matrix)

    __hash__ = None

    def to_matrix(self) -> np.ndarray:
        """Local 2x2 or 4x4 matrix (see module docstring for pair indexing)."""
        if self.kind is GateKind.RZ:
            return rz_matrix(self.theta)
        if self.kind in _FIXED_KINDS:
            return self.matrix
        return {
            GateKind.RX_PLUS: _MAT_RX_PLUS,
            GateKind.RX_MINUS: _MAT_RX_MINUS,
            GateKind.CNOT: _MAT_CNOT,
            GateKind.CZ: _MAT_CZ,
            GateKind.H: _MAT_H,
            GateKind.X: _MAT_X,
            GateKind.T: _MAT_T,
            GateKind.S: _MAT_S,
        }[self.kind]


def rz(qubit: int, theta: float) -> Gate:
    return Gate(GateKind.RZ, (qubit,), theta=theta)


def rx_plus(qubit: int) -> Gate:
    return Gate(GateKind.RX_PLUS, (qubit,))


def rx_minus(qubit: int) -> Gate:
    return Gate(GateKind.RX_MINUS, (qubit,))


def cnot(control: int, target: int) -> Gate:
    return Gate(GateKind.CNOT, (control, target))


def cz(a: int, b: int) -> Gate:
    return Gate(GateKind.CZ, (a, b))


def hadamard(qubit: int) -> Gate:
    return Gate(GateKind.H, (qubit,))


def pauli_x(qubit: int) -> Gate:
    return Gate(GateKind.X, (qubit,))


def t_gate(qubit: int) -> Gate:
    return Gate(GateKind.T, (qubit,))


def s_gate(qubit: int) -> Gate:
    return Gate(GateKind.S, (qubit,))


def fixed_1q(qubit: int, matrix: np.ndarray) -> Gate:
    return Gate(GateKind.FIXED1, (qubit,), matrix=matrix)


def fixed_2q(qubits: tuple[int, int], matrix: np.ndarray) -> Gate:
    return Gate(GateKind.FIXED2, qubits, matrix=matrix)


def _ry_gates(qubit: int, theta: float) -> list[Gate]:
    # Exact: Ry(t) = Rx(pi/2) Rz(-t) Rx(-pi/2); time order is right-to-left.
    return [rx_minus(qubit), rz(qubit, -theta), rx_plus(qubit)]


@dataclass(frozen=True, eq=False)
class GateSequence:
    """An ordered gate list on ``num_qubits`` qubits (the trainable object).

    The discrete structure is the list of (kind, qubits) pairs; the
    continuous parameters are the Rz thetas, exposed via ``angles`` /
    ``with_angles``.
    """

    num_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise ValueError("a sequence needs at least one qubit")
        for g in self.gates:
            if any(q >= self.num_qubits for q in g.qubits):
                raise IndexError(
                    f"gate on {g.qubits} out of range for {self.num_qubits} qubits"
                )

    def __eq__(self, other):
        if not isinstance(other, GateSequence):
            return NotImplemented
        return (
            self.num_qubits == other.num_qubits
            and len(self.gates) == len(other.gates)
            and all(a == b for a, b in zip(self.gates, other.gates))
        )

    __hash__ = None

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(g.theta for g in self.gates if g.kind is GateKind.RZ)

    def with_angles(self, values) -> GateSequence:
        """Copy of the sequence with its Rz thetas replaced, in gate order."""
        values = list(values)
        if len(values) != len(self.angles):
            raise ValueError(f"expected {len(self.angles)} angles, got {len(values)}")
        out, i = [], 0
        for g in self.gates:
            if g.kind is GateKind.RZ:
                out.append(rz(g.qubits[0], values[i]))
                i += 1
            else:
                out.append(g)
        return GateSequence(self.num_qubits, tuple(out))

    def structure_hash(self) -> str:
        """Stable hex digest of the (kind, qubits) structure, angle-free."""
        text = ";".join(f"{g.kind.value}@{','.join(map(str, g.qubits))}" for g in self.gates)
        return hashlib.sha1(f"{self.num_qubits}|{text}".encode()).hexdigest()[:12]

    def extended(self, gates) -> GateSequence:
        return GateSequence(self.num_qubits, self.gates + tuple(gates))


def identity_sequence(num_qubits: int) -> GateSequence:
    return GateSequence(num_qubits, ())


# ---------------------------------------------------------------------------
# Alphabets


@dataclass(frozen=True)
class Alphabet:
    """Native gate kinds plus an undirected connectivity edge set.

    An empty ``connectivity`` means all-to-all. Violations are hard errors:
    qubit routing is out of scope, so callers must search inside the edge set.
    """

    name: str
    kinds: frozenset[GateKind]
    connectivity: frozenset[tuple[int, int]] = frozenset()

    def allows(self, gate: Gate) -> bool:
        if gate.kind not in self.kinds:
            return False
        if len(gate.qubits) == 2 and self.connectivity:
            a, b = gate.qubits
            return (min(a, b), max(a, b)) in self.connectivity
        return True

    def validate(self, seq: GateSequence) -> None:
        for g in seq.gates:
            if not self.allows(g):
                raise UnsupportedGateError(
                    f"gate {g.kind.value}@{g.qubits} not allowed by alphabet {self.name!r}"
                )

    def one_qubit_kinds(self) -> list[GateKind]:
        return sorted((k for k in self.kinds if k in _ONE_QUBIT_KINDS), key=lambda k: k.value)

    def two_qubit_kinds(self) -> list[GateKind]:
        return sorted((k for k in self.kinds if k in _TWO_QUBIT_KINDS), key=lambda k: k.value)


IBM_ALPHABET = Alphabet("ibm", frozenset({GateKind.RX_PLUS, GateKind.RZ, GateKind.CNOT}))
RIGETTI_ALPHABET = Alphabet(
    "rigetti",
    frozenset({GateKind.RX_PLUS, GateKind.RX_MINUS, GateKind.RZ, GateKind.CZ}),
)
# Permissive alphabet used internally by circuit builders and tests.
FULL_ALPHABET = Alphabet("full", frozenset(GateKind))

_ALPHABETS = {a.name: a for a in (IBM_ALPHABET, RIGETTI_ALPHABET, FULL_ALPHABET)}


def alphabet_by_name(name: str) -> Alphabet:
    try:
        return _ALPHABETS[name]
    except KeyError:
        raise KeyError(f"unknown alphabet {name!r}; choose from {sorted(_ALPHABETS)}") from None


# ---------------------------------------------------------------------------
# Sequence transforms


def conjugate_sequence(seq: GateSequence, alphabet: Alphabet = FULL_ALPHABET) -> GateSequence:
    """Sequence whose matrix is the entrywise conjugate of ``seq``'s, up to a
    global phase, expressed inside ``alphabet``.

    Real gates map to themselves. ``Rz(t)* = Rz(-t)``. ``Rx(pi/2)*`` becomes
    ``Rx(-pi/2)`` where that kind is native, else the triple
    ``Rz(pi) Rx(pi/2) Rz(pi)``. T and S conjugate to Rz gates (phase slips by
    ``e^{i pi/8}`` resp. ``e^{i pi/4}``, absorbed into the global phase).
    """
    out: list[Gate] = []
    for g in seq.gates:
        k = g.kind
        if k is GateKind.RZ:
            out.append(rz(g.qubits[0], -g.theta))
        elif k in (GateKind.CNOT, GateKind.CZ, GateKind.H, GateKind.X):
            out.append(g)
        elif k is GateKind.RX_PLUS:
            q = g.qubits[0]
            if GateKind.RX_MINUS in alphabet.kinds:
                out.append(rx_minus(q))
            elif GateKind.RZ in alphabet.kinds:
                out.extend([rz(q, math.pi), rx_plus(q), rz(q, math.pi)])
            else:
                raise UnsupportedGateError(f"cannot conjugate rx+ under {alphabet.name!r}")
        elif k is GateKind.RX_MINUS:
            q = g.qubits[0]
            if GateKind.RX_PLUS in alphabet.kinds:
                out.append(rx_plus(q))
            else:
                raise UnsupportedGateError(f"cannot conjugate rx- under {alphabet.name!r}")
        elif k in (GateKind.T, GateKind.S):
            if GateKind.RZ not in alphabet.kinds:
                raise UnsupportedGateError(f"cannot conjugate {k.value} under {alphabet.name!r}")
            angle = -math.pi / 4 if k is GateKind.T else -math.pi / 2
            out.append(rz(g.qubits[0], angle))
        elif k in _FIXED_KINDS:
            out.append(Gate(k, g.qubits, matrix=np.conj(g.matrix)))
        else:  # pragma: no cover
            raise UnsupportedGateError(f"no conjugation rule for {k.value}")
    return GateSequence(seq.num_qubits, tuple(out))


def transpose_sequence(seq: GateSequence) -> GateSequence:
    """Sequence whose matrix is exactly the transpose of ``seq``'s.

    Every native kind here has a symmetric matrix, so the transform is just
    gate-order reversal; fixed gates carry their transposed matrix.
    """
    out = []
    for g in reversed(seq.gates):
        if g.kind in _FIXED_KINDS:
            out.append(Gate(g.kind, g.qubits, matrix=g.matrix.T.copy()))
        else:
            out.append(g)
    return GateSequence(seq.num_qubits, tuple(out))


def adjoint_sequence(seq: GateSequence) -> GateSequence:
    """Sequence realizing the inverse of ``seq``'s matrix, up to global phase.

    T and S invert to Rz gates, slipping only a global phase; everything else
    is exact.
    """
    out = []
    for g in reversed(seq.gates):
        k = g.kind
        if k is GateKind.RZ:
            out.append(rz(g.qubits[0], -g.theta))
        elif k is GateKind.RX_PLUS:
            out.append(rx_minus(g.qubits[0]))
        elif k is GateKind.RX_MINUS:
            out.append(rx_plus(g.qubits[0]))
        elif k in (GateKind.CNOT, GateKind.CZ, GateKind.H, GateKind.X):
            out.append(g)
        elif k is GateKind.T:
            out.append(rz(g.qubits[0], -math.pi / 4))
        elif k is GateKind.S:
            out.append(rz(g.qubits[0], -math.pi / 2))
        elif k in _FIXED_KINDS:
            out.append(Gate(k, g.qubits, matrix=g.matrix.conj().T))
        else:  # pragma: no cover
            raise UnsupportedGateError(f"no adjoint rule for {k.value}")
    return GateSequence(seq.num_qubits, tuple(out))


def _controlled_rz_gates(control: int, target: int, theta: float) -> list[Gate]:
    # Standard two-CNOT identity (exact up to a global sign; callers repair
    # the phase, see _controlled_gate_gates).
    return [
        rz(target, theta / 2),
        cnot(control, target),
        rz(target, -theta / 2),
        cnot(control, target),
    ]


def _cphase_gates(a: int, b: int, phi: float) -> list[Gate]:
    # diag(1,1,1,e^{i phi}) up to a global phase.
    return [rz(a, phi / 2)] + _controlled_rz_gates(a, b, phi)


def _ccz_gates(x: int, y: int, z: int) -> list[Gate]:
    # CCZ up to a global phase: three controlled-phase blocks.
    gs: list[Gate] = [cnot(x, y)]
    gs += _cphase_gates(y, z, -math.pi / 2)
    gs.append(cnot(x, y))
    gs += _cphase_gates(y, z, math.pi / 2)
    gs += _cphase_gates(x, z, math.pi / 2)
    return gs


def _phase_fix_gates(qubit: int, m: int) -> list[Gate]:
    """Gate list whose matrix is exactly e^{i m pi/8} * I.

    Because stored Rz angles live in [0, 2*pi), the pair
    [Rz(7*pi/4), T] multiplies the identity by e^{i 9 pi/8}; since 9 is
    invertible mod 16, repeating it reaches every multiple of pi/8. The
    half-turn gets the shorter Clifford form (ZX)^2 = -I.
    """
    m %= 16
    if m == 0:
        return []
    q = qubit
    if m == 8:
        return [pauli_x(q), s_gate(q), s_gate(q), pauli_x(q), s_gate(q), s_gate(q)]
    reps = (9 * m) % 16
    gs: list[Gate] = []
    for _ in range(reps):
        gs += [rz(q, 7 * math.pi / 4), t_gate(q)]
    return gs


def _embed_matrix(mat: np.ndarray, qubits: list[int], width: int) -> np.ndarray:
    """Expand a 2^k x 2^k gate matrix onto ``width`` little-endian qubits.

    Independent of the simulator kernels on purpose: it double-checks the
    controlled decompositions below at build time.
    """
    k = len(qubits)
    d = 1 << width
    full = np.zeros((d, d), dtype=complex)
    for col in range(d):
        sub = 0
        for pos, q in enumerate(qubits):
            sub |= ((col >> q) & 1) << (k - 1 - pos)
        base = col
        for q in qubits:
            base &= ~(1 << q)
        for row_sub in range(1 << k):
            amp = mat[row_sub, sub]
            if amp != 0:
                row = base
                for pos, q in enumerate(qubits):
                    row |= ((row_sub >> (k - 1 - pos)) & 1) << q
                full[row, col] += amp
    return full


def _compose_block(gates: list[Gate], qubit_map: dict[int, int], width: int) -> np.ndarray:
    out = np.eye(1 << width, dtype=complex)
    for g in gates:
        local = [qubit_map[q] for q in g.qubits]
        out = _embed_matrix(g.to_matrix(), local, width) @ out
    return out


def _controlled_gate_gates(gate: Gate, control: int) -> list[Gate]:
    """Exact controlled version of one gate as a native gate list.

    The raw decompositions below are correct up to a global phase (angle
    wrapping makes Rz(t + 2*pi) = -Rz(t)); the residual phase is always a
    multiple of pi/8, measured here against an independently embedded oracle
    and cancelled with a synthesized phase-gate tail so the block matrix is
    exact.
    """
    raw = _controlled_gate_core(gate, control)
    if len(raw) == 1 and raw[0].kind is GateKind.FIXED2:
        return raw
    involved = sorted({control, *gate.qubits})
    local = {q: i for i, q in enumerate(involved)}
    width = len(involved)
    built = _compose_block(raw, local, width)

    g_mat = gate.to_matrix()
    arity = len(gate.qubits)
    ctrl_mat = np.eye(2 << arity, dtype=complex)
    ctrl_mat[1 << arity:, 1 << arity:] = g_mat
    target = _embed_matrix(
        ctrl_mat, [local[control]] + [local[q] for q in gate.qubits], width
    )

    tr = np.trace(target.conj().T @ built) / (1 << width)
    phi = float(np.angle(tr))
    m = round(phi / (math.pi / 8)) % 16
    if abs(tr) < 1.0 - 1e-9 or abs(phi - round(phi / (math.pi / 8)) * (math.pi / 8)) > 1e-9:
        raise UnsupportedGateError(
            f"controlled decomposition of {gate.kind.value} drifted off target"
        )
    fix = _phase_fix_gates(control, -m)
    if fix:
        built = _compose_block(fix, local, width) @ built
    if np.max(np.abs(built - target)) > 1e-9:  # pragma: no cover
        raise UnsupportedGateError(
            f"controlled decomposition of {gate.kind.value} failed verification"
        )
    return raw + fix


def _controlled_gate_core(gate: Gate, control: int) -> list[Gate]:
    k = gate.kind
    if k is GateKind.RZ:
        return _controlled_rz_gates(control, gate.qubits[0], gate.theta)
    if k in (GateKind.RX_PLUS, GateKind.RX_MINUS):
        # Rx(t) = H Rz(t) H exactly, so conjugate the controlled-Rz.
        q = gate.qubits[0]
        theta = math.pi / 2 if k is GateKind.RX_PLUS else -math.pi / 2
        return [hadamard(q)] + _controlled_rz_gates(control, q, theta) + [hadamard(q)]
    if k is GateKind.X:
        return [cnot(control, gate.qubits[0])]
    if k is GateKind.H:
        # H = Ry(-pi/4) X Ry(pi/4) exactly.
        q = gate.qubits[0]
        return _ry_gates(q, math.pi / 4) + [cnot(control, q)] + _ry_gates(q, -math.pi / 4)
    if k is GateKind.S:
        # CS = T(control) * CRz(pi/2), exact.
        return [t_gate(control)] + _controlled_rz_gates(control, gate.qubits[0], math.pi / 2)
    if k in (GateKind.T, GateKind.FIXED1):
        # Controlled-T needs an e^{i pi/16} phase gate that the native set
        # cannot express exactly; embed the exact 4x4 block instead.
        m = gate.to_matrix()
        block = np.eye(4, dtype=complex)
        block[2:, 2:] = m
        return [fixed_2q((control, gate.qubits[0]), block)]
    if k is GateKind.CNOT:
        c2, tgt = gate.qubits
        return [hadamard(tgt)] + _ccz_gates(control, c2, tgt) + [hadamard(tgt)]
    if k is GateKind.CZ:
        a, b = gate.qubits
        return _ccz_gates(control, a, b)
    raise UnsupportedGateError(f"no controlled decomposition for {k.value}")


def controlled_sequence(
    seq: GateSequence, control_qubit: int, anticontrol: bool = False
) -> GateSequence:
    """Sequence applying ``seq`` when the control qubit is |1> (|0> for
    ``anticontrol``) and the identity otherwise.

    Each gate is replaced by its controlled decomposition into native gates
    (controlled-T and controlled fixed one-qubit gates fall back to an exact
    4x4 block; controlled fixed two-qubit gates are unsupported). The result
    is exact as a matrix, not merely up to phase.
    """
    if control_qubit in {q for g in seq.gates for q in g.qubits}:
        raise ValueError(f"control qubit {control_qubit} is used by the sequence")
    n_out = max(seq.num_qubits, control_qubit + 1)
    out: list[Gate] = []
    if anticontrol:
        out.append(pauli_x(control_qubit))
    for g in seq.gates:
        out.extend(_controlled_gate_gates(g, control_qubit))
    if anticontrol:
        out.append(pauli_x(control_qubit))
    return GateSequence(n_out, tuple(out))


# ---------------------------------------------------------------------------
# Ansatz constructors


def ansatz_universal_1q(angles, qubit: int = 0, num_qubits: int = 1) -> GateSequence:
    """Three-rotation single-qubit template Rz(a_z2) Ry(a_y) Rz(a_z1).

    ``angles = (a_z1, a_y, a_z2)``; a_z1 is applied first. The Y rotation is
    synthesized natively, so the sequence carries exactly 3 Rz parameters.
    Every single-qubit unitary is reachable up to a global phase.
    """
    angles = tuple(float(a) for a in angles)
    if len(angles) != 3:
        raise ValueError(f"expected 3 angles, got {len(angles)}")
    a_z1, a_y, a_z2 = angles
    gs = [rz(qubit, a_z1)] + _ry_gates(qubit, a_y) + [rz(qubit, a_z2)]
    return GateSequence(max(num_qubits, qubit + 1), tuple(gs))


def ansatz_universal_2q(angles, qubits: tuple[int, int] = (0, 1), num_qubits: int = 2) -> GateSequence:
    """Universal two-qubit template: 3 CNOTs and 15 rotation parameters.

    Layout (time order) on the pair ``(a, b)``:

    * a 3-rotation block on each qubit (angles 0-2 on ``a``, 3-5 on ``b``),
    * CNOT(b->a), then Rz on ``a`` (angle 6) and Ry on ``b`` (angle 7),
    * CNOT(a->b), then Ry on ``b`` (angle 8),
    * CNOT(b->a), then a 3-rotation block on each qubit (angles 9-11 on
      ``a``, 12-14 on ``b``).

    The CNOT count (3) and parameter count (15) are minimal for a universal
    two-qubit circuit; universality is exercised in the test suite by fitting
    random targets.
    """
    angles = tuple(float(a) for a in angles)
    if len(angles) != 15:
        raise ValueError(f"expected 15 angles, got {len(angles)}")
    a, b = qubits
    gs: list[Gate] = []
    gs += ansatz_universal_1q(angles[0:3], qubit=a).gates
    gs += ansatz_universal_1q(angles[3:6], qubit=b).gates
    gs.append(cnot(b, a))
    gs.append(rz(a, angles[6]))
    gs += _ry_gates(b, angles[7])
    gs.append(cnot(a, b))
    gs += _ry_gates(b, angles[8])
    gs.append(cnot(b, a))
    gs += ansatz_universal_1q(angles[9:12], qubit=a).gates
    gs += ansatz_universal_1q(angles[12:15], qubit=b).gates
    return GateSequence(max(num_qubits, a + 1, b + 1), tuple(gs))


def _brick_pairs(n: int) -> list[tuple[int, int]]:
    # 0-based brick pattern: odd pairs, then even pairs plus the ring-closing
    # pair (n-1, 0) when n > 2.
    first = [(i, i + 1) for i in range(0, n - 1, 2)]
    second = [(i, i + 1) for i in range(1, n - 1, 2)]
    if n > 2:
        second.append((n - 1, 0))
    return first + second


def ansatz_layered(n: int, layers: int, rng_seed: int) -> GateSequence:
    """Fixed-structure ansatz: ``layers`` repetitions of a depth-two brick of
    generic two-qubit blocks on neighboring pairs (ring-closed), each block a
    randomly initialized universal two-qubit template.
    """
    from .seeding import generator

    if n < 2:
        raise ValueError("layered ansatz needs at least 2 qubits")
    if layers < 1:
        raise ValueError("need at least one layer")
    rng = generator(rng_seed)
    gs: list[Gate] = []
    for _ in range(layers):
        for pair in _brick_pairs(n):
            block = ansatz_universal_2q(rng.uniform(0.0, TWO_PI, 15), qubits=pair, num_qubits=n)
            gs.extend(block.gates)
    return GateSequence(n, tuple(gs))


# ---------------------------------------------------------------------------
# Depth accounting


def depth(seq: GateSequence, alphabet: Alphabet | None = None) -> int:
    """Number of parallel layers under a greedy as-soon-as-possible schedule."""
    if alphabet is not None:
        alphabet.validate(seq)
    frontier = [0] * seq.num_qubits
    for g in seq.gates:
        layer = max(frontier[q] for q in g.qubits) + 1
        for q in g.qubits:
            frontier[q] = layer
    return max(frontier, default=0)


def hst_depth(u_seq: GateSequence, v_seq: GateSequence, alphabet: Alphabet = FULL_ALPHABET) -> int:
    """Depth of the Hilbert-Schmidt test circuit: 4 + max(D(U), D(V*))."""
    return 4 + max(depth(u_seq), depth(conjugate_sequence(v_seq, alphabet)))


def potq_depth(u_seq: GateSequence, v_seq: GateSequence) -> int:
    """Depth of the two-ancilla overlap circuit:
    4 + max(D(controlled-U), D(anticontrolled-V^T))."""
    c_u = controlled_sequence(u_seq, u_seq.num_qubits)
    c_vt = controlled_sequence(transpose_sequence(v_seq), v_seq.num_qubits, anticontrol=True)
    return 4 + max(depth(c_u), depth(c_vt))


# ---------------------------------------------------------------------------
# Reporting helpers


def fold_rz(seq: GateSequence, tol: float = 1e-9) -> GateSequence:
    """Merge adjacent same-qubit Rz runs and drop Rz gates that are identity
    mod 2*pi within ``tol``. Used to canonicalize discovered structures for
    reports and structure-matching tests.
    """
    out: list[Gate] = []
    for g in seq.gates:
        if (
            g.kind is GateKind.RZ
            and out
            and out[-1].kind is GateKind.RZ
            and out[-1].qubits == g.qubits
        ):
            out[-1] = rz(g.qubits[0], out[-1].theta + g.theta)
        else:
            out.append(g)
    kept = [
        g
        for g in out
        if not (g.kind is GateKind.RZ and min(g.theta, TWO_PI - g.theta) <= tol)
    ]
    return GateSequence(seq.num_qubits, tuple(kept))


def angle_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def pi_multiple_label(theta: float) -> str:
    """Cosmetic annotation: the nearest hundredth multiple of pi (always
    within 0.005 pi of the angle), e.g. '0.25pi'. Reporting only; never used
    in computation."""
    return f"{round(theta / math.pi, 2):.2f}pi"
