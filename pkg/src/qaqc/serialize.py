"""Circuit serialization: OpenQASM-2.0-subset export and lossless JSON I/O.

QASM grammar emitted (one statement per line)::

    OPENQASM 2.0;
    include "qelib1.inc";
    qreg q[<n>];
    rz(<float>) q[<i>];
    rx(<float>) q[<i>];          # only +/- pi/2 occur
    cx q[<i>],q[<j>];
    cz q[<i>],q[<j>];
    h q[<i>]; x q[<i>]; t q[<i>]; s q[<i>];

Floats are shortest round-trip decimals. Fixed-matrix gates have no QASM
form and raise ``UnsupportedGateError``.

The JSON schema is ``{"num_qubits": n, "gates": [{"kind", "qubits",
"theta"?, "matrix"?}]}`` with angles as hex-float strings so a round trip is
lossless at full binary precision. Fixed gates carry their matrix as nested
``[re, im]`` hex-float pairs.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import CircuitParseError, UnsupportedGateError
from .gates import Gate, GateKind, GateSequence

_QASM_SIMPLE = {
    GateKind.H: "h",
    GateKind.X: "x",
    GateKind.T: "t",
    GateKind.S: "s",
}


def export_qasm(seq: GateSequence) -> str:
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"qreg q[{seq.num_qubits}];",
    ]
    for g in seq.gates:
        k = g.kind
        if k is GateKind.RZ:
            lines.append(f"rz({g.theta!r}) q[{g.qubits[0]}];")
        elif k is GateKind.RX_PLUS:
            lines.append(f"rx({(math.pi / 2)!r}) q[{g.qubits[0]}];")
        elif k is GateKind.RX_MINUS:
            lines.append(f"rx({(-math.pi / 2)!r}) q[{g.qubits[0]}];")
        elif k is GateKind.CNOT:
            lines.append(f"cx q[{g.qubits[0]}],q[{g.qubits[1]}];")
        elif k is GateKind.CZ:
            lines.append(f"cz q[{g.qubits[0]}],q[{g.qubits[1]}];")
        elif k in _QASM_SIMPLE:
            lines.append(f"{_QASM_SIMPLE[k]} q[{g.qubits[0]}];")
        else:
            raise UnsupportedGateError(f"{k.value} has no QASM form")
    return "\n".join(lines) + "\n"


def _matrix_to_json(matrix: np.ndarray) -> list:
    return [[[float(c.real).hex(), float(c.imag).hex()] for c in row] for row in matrix]


def _matrix_from_json(rows, field: str) -> np.ndarray:
    try:
        return np.array(
            [[complex(float.fromhex(c[0]), float.fromhex(c[1])) for c in row] for row in rows],
            dtype=complex,
        )
    except (TypeError, ValueError, IndexError):
        raise CircuitParseError("matrix entries must be [re, im] hex-float pairs", field=field)


def export_json(seq: GateSequence) -> str:
    gates = []
    for g in seq.gates:
        entry: dict = {"kind": g.kind.value, "qubits": list(g.qubits)}
        if g.theta is not None:
            entry["theta"] = float(g.theta).hex()
        if g.matrix is not None:
            entry["matrix"] = _matrix_to_json(g.matrix)
        gates.append(entry)
    return json.dumps({"num_qubits": seq.num_qubits, "gates": gates}, indent=2)


def import_json(text: str) -> GateSequence:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    if not isinstance(doc, dict):
        raise CircuitParseError("circuit document must be an object", field="$")
    if not isinstance(doc.get("num_qubits"), int):
        raise CircuitParseError("num_qubits must be an integer", field="num_qubits")
    raw_gates = doc.get("gates")
    if not isinstance(raw_gates, list):
        raise CircuitParseError("gates must be a list", field="gates")

    gates = []
    for i, entry in enumerate(raw_gates):
        field = f"gates[{i}]"
        if not isinstance(entry, dict):
            raise CircuitParseError("gate entry must be an object", field=field)
        try:
            kind = GateKind(entry.get("kind"))
        except ValueError:
            raise CircuitParseError(f"unknown gate kind {entry.get('kind')!r}", field=field)
        qubits = entry.get("qubits")
        if not isinstance(qubits, list) or not all(isinstance(q, int) for q in qubits):
            raise CircuitParseError("qubits must be a list of integers", field=field)
        theta = None
        if "theta" in entry:
            if not isinstance(entry["theta"], str):
                raise CircuitParseError("theta must be a hex-float string", field=field)
            try:
                theta = float.fromhex(entry["theta"])
            except ValueError:
                raise CircuitParseError(f"bad hex float {entry['theta']!r}", field=field)
        matrix = None
        if "matrix" in entry:
            matrix = _matrix_from_json(entry["matrix"], field)
        try:
            gates.append(Gate(kind, tuple(qubits), theta=theta, matrix=matrix))
        except (ValueError, IndexError) as exc:
            raise CircuitParseError(str(exc), field=field) from None
    try:
        return GateSequence(doc["num_qubits"], tuple(gates))
    except (ValueError, IndexError) as exc:
        raise CircuitParseError(str(exc), field="gates") from None
