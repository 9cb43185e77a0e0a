"""Presets, config-driven runs, CSV/JSON outputs, and the CLI surface."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qaqc import gates as G
from qaqc import simulator as sim
from qaqc.cost import EXACT, cost_hst
from qaqc.errors import CircuitParseError
from qaqc.experiments import load_spec, run_experiment, scan_depth, spec_from_json
from qaqc.gates import GateKind, GateSequence
from qaqc.presets import (
    controlled_hadamard_matrix,
    example_two,
    preset_target,
    qft2_matrix,
    swap_matrix,
)
from conftest import kron_chain

I2 = np.eye(2, dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)


class TestPresets:
    def test_single_qubit_targets(self):
        np.testing.assert_allclose(
            sim.sequence_to_matrix(preset_target("H")).entries, H, atol=1e-12
        )
        np.testing.assert_allclose(
            sim.sequence_to_matrix(preset_target("X")).entries, X, atol=1e-12
        )
        np.testing.assert_allclose(
            sim.sequence_to_matrix(preset_target("T")).entries,
            np.diag([1, np.exp(1j * math.pi / 4)]),
            atol=1e-12,
        )

    def test_two_qubit_targets_match_textbook_matrices(self):
        # Independent textbook constructions in the little-endian basis.
        swap = np.eye(4)[[0, 2, 1, 3]].astype(complex)
        np.testing.assert_allclose(
            sim.sequence_to_matrix(preset_target("SWAP")).entries, swap, atol=1e-12
        )
        cz = np.diag([1.0, 1, 1, -1]).astype(complex)
        np.testing.assert_allclose(
            sim.sequence_to_matrix(preset_target("CZ")).entries, cz, atol=1e-12
        )
        # CH: control = qubit 1, target = qubit 0.
        ch = np.eye(4, dtype=complex)
        ch[2:, 2:] = H
        np.testing.assert_allclose(
            sim.sequence_to_matrix(preset_target("CH")).entries, ch, atol=1e-12
        )
        omega = np.exp(2j * math.pi / 4)
        qft = np.array([[omega ** (j * k) for k in range(4)] for j in range(4)]) / 2.0
        np.testing.assert_allclose(
            sim.sequence_to_matrix(preset_target("QFT2")).entries, qft, atol=1e-12
        )

    def test_product_preset_structure(self):
        seq = preset_target("Example1", 5, rng_seed=3)
        assert len(seq.gates) == 5
        assert all(g.kind is GateKind.RZ for g in seq.gates)

    def test_entangling_preset_structure(self):
        seq = example_two(5, rng_seed=3)
        kinds = [(g.kind, g.qubits) for g in seq.gates]
        cnots = [q for k, q in kinds if k is GateKind.CNOT]
        assert cnots == [(0, 1), (2, 3), (1, 2), (3, 4)]
        assert sum(1 for k, _ in kinds if k is GateKind.RZ) == 10

    def test_preset_seeding(self):
        a = preset_target("Example1", 4, rng_seed=1)
        b = preset_target("Example1", 4, rng_seed=1)
        c = preset_target("Example1", 4, rng_seed=2)
        assert a == b
        assert a != c

    def test_unknown_preset(self):
        with pytest.raises(CircuitParseError):
            preset_target("TOFFOLI")


def t_bisection_doc(seed=0, shots=0):
    return {
        "name": "t-bisection",
        "target": "T",
        "alphabet": "full",
        "cost": {"kind": "hst"},
        "optimizer": "bisection",
        "ansatz": {
            "circuit": {
                "num_qubits": 1,
                "gates": [{"kind": "rz", "qubits": [0], "theta": (1.0).hex()}],
            }
        },
        "config": {
            "tolerance": 1e-9,
            "max_iterations": 30,
            "bisection_levels": 2,
            "shots_per_eval": shots,
            "seed": seed,
        },
    }


class TestSpecParsing:
    def test_valid_document(self):
        spec = spec_from_json(t_bisection_doc())
        assert spec.optimizer == "bisection"
        assert spec.target_label == "T"

    def test_example_preset_with_argument_syntax(self):
        doc = {
            "target": "Example1(4)",
            "optimizer": "gradient",
            "cost": {"kind": "lhst"},
            "ansatz": "target",
            "config": {"tolerance": 1e-3, "seed": 5},
        }
        spec = spec_from_json(doc)
        assert spec.target.num_qubits == 4
        assert spec.ansatz is not None and len(spec.ansatz.angles) == 4

    def test_unknown_optimizer(self):
        doc = t_bisection_doc()
        doc["optimizer"] = "genetic"
        with pytest.raises(CircuitParseError):
            spec_from_json(doc)

    def test_missing_ansatz_for_fixed_structure_optimizer(self):
        doc = t_bisection_doc()
        del doc["ansatz"]
        with pytest.raises(CircuitParseError):
            spec_from_json(doc)

    def test_noise_requires_sampled_backend(self):
        doc = t_bisection_doc(shots=0)
        doc["noise"] = {"p1": 0.001}
        with pytest.raises(CircuitParseError):
            spec_from_json(doc)

    def test_seed_override(self):
        spec = spec_from_json(t_bisection_doc(seed=1), seed_override=99)
        assert spec.config.seed == 99


class TestRunExperiment:
    def test_t_bisection_report(self, tmp_path):
        spec = spec_from_json(t_bisection_doc())
        report = run_experiment(spec, output_dir=tmp_path)
        assert report.succeeded
        assert report.result.best_cost.value < 1e-9
        folded = G.fold_rz(report.result.best_sequence, tol=1e-6)
        assert [g.kind for g in folded.gates] == [GateKind.RZ]
        assert G.angle_distance(folded.gates[0].theta, math.pi / 4) < 1e-9
        assert report.csv_path.exists() and report.json_path.exists()
        doc = json.loads(report.json_path.read_text())
        assert doc["succeeded"] is True
        assert doc["best_circuit"]["num_qubits"] == 1
        labels = [a["nearest_pi_multiple"] for a in doc["angle_report"]]
        assert "0.25pi" in labels

    def test_csv_columns_and_determinism(self, tmp_path):
        doc = t_bisection_doc(shots=2000)
        spec = spec_from_json(doc)
        r1 = run_experiment(spec, output_dir=tmp_path / "a")
        r2 = run_experiment(spec_from_json(doc), output_dir=tmp_path / "b")
        assert r1.csv_path.read_bytes() == r2.csv_path.read_bytes()
        header = r1.csv_path.read_text().splitlines()[0]
        assert header == "iteration,cost,std_error"

    def test_lhst_run_reports_global_cost_column(self, tmp_path):
        doc = {
            "name": "ex1-grad",
            "target": "Example1(3)",
            "cost": {"kind": "lhst"},
            "optimizer": "gradient",
            "ansatz": "target",
            "config": {"tolerance": 1e-6, "max_iterations": 40, "seed": 7},
        }
        report = run_experiment(spec_from_json(doc), output_dir=tmp_path)
        assert report.columns == [
            "iteration", "cost", "std_error", "gradient_norm", "hst_via_lhst_cost",
        ]
        last = report.rows[-1]
        assert float(last["hst_via_lhst_cost"]) < 1e-6

    def test_unreachable_tolerance_flags_failure(self, tmp_path):
        # A single z rotation can never reach the X gate: the run completes
        # but reports the tolerance as unmet.
        doc = t_bisection_doc()
        doc["target"] = "X"
        doc["name"] = "x-hopeless"
        doc["config"]["max_iterations"] = 5
        doc["config"]["bisection_levels"] = 1
        report = run_experiment(spec_from_json(doc), output_dir=tmp_path)
        assert not report.succeeded
        assert report.result.best_cost.value > 0.9


class TestScanDepth:
    def test_identity_compiles_at_depth_one(self):
        doc = {
            "name": "i-scan",
            "target": "I",
            "alphabet": "ibm",
            "optimizer": "anneal",
            "config": {
                "tolerance": 1e-7, "max_restarts": 2, "max_iterations": 20, "seed": 3,
            },
            "initial_length": 2,
        }
        rows = scan_depth(spec_from_json(doc), 1)
        assert rows[0][0] == 1
        assert rows[0][1] < 1e-6

    def test_hadamard_needs_depth_three(self, tmp_path):
        doc = {
            "name": "h-scan",
            "target": "H",
            "alphabet": "ibm",
            "optimizer": "anneal",
            "config": {
                "tolerance": 1e-7, "max_restarts": 3, "max_iterations": 60, "seed": 2,
            },
            "initial_length": 3,
        }
        rows = scan_depth(spec_from_json(doc), 3, output_dir=tmp_path)
        costs = {depth: cost for depth, cost, _ in rows}
        assert costs[1] > 0.1 and costs[2] > 0.1
        assert costs[3] < 1e-6
        scan_csv = tmp_path / "h-scan-depth-scan.csv"
        assert scan_csv.read_text().splitlines()[0] == "depth,best_cost,std_error"


class TestCli:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "qaqc.cli", *args], capture_output=True, text=True
        )

    def test_run_success_exit_zero(self, tmp_path):
        config = tmp_path / "t.json"
        config.write_text(json.dumps(t_bisection_doc()))
        proc = self.run_cli("run", str(config), "--output-dir", str(tmp_path / "out"))
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "out" / "t-bisection.csv").exists()

    def test_invalid_config_exit_one_no_outputs(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text('{"target": "T", "optimizer": "genetic"}')
        out_dir = tmp_path / "out"
        proc = self.run_cli("run", str(config), "--output-dir", str(out_dir))
        assert proc.returncode == 1
        assert "invalid config" in proc.stderr
        assert not out_dir.exists()

    def test_malformed_json_diagnostics(self, tmp_path):
        config = tmp_path / "trunc.json"
        config.write_text('{"target": "T", ')
        proc = self.run_cli("run", str(config))
        assert proc.returncode == 1
        assert "line" in proc.stderr

    def test_tolerance_not_reached_exit_two(self, tmp_path):
        doc = t_bisection_doc()
        doc["target"] = "X"
        doc["config"]["max_iterations"] = 5
        doc["config"]["bisection_levels"] = 1
        config = tmp_path / "x.json"
        config.write_text(json.dumps(doc))
        proc = self.run_cli("run", str(config), "--output-dir", str(tmp_path / "out"))
        assert proc.returncode == 2

    def test_seed_override_changes_nothing_for_exact_t(self, tmp_path):
        config = tmp_path / "t.json"
        config.write_text(json.dumps(t_bisection_doc()))
        proc = self.run_cli(
            "run", str(config), "--seed", "123", "--output-dir", str(tmp_path / "out")
        )
        assert proc.returncode == 0
