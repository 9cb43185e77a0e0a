"""Cost circuits and estimators against closed forms and matrix oracles."""

import math

import numpy as np
import pytest

from qaqc import cost as C
from qaqc import gates as G
from qaqc import simulator as sim
from qaqc.cost import EXACT, SampledBackend
from qaqc.errors import CapacityError
from qaqc.gates import GateSequence, TWO_PI, identity_sequence
from qaqc.verify import (
    hst_cost_oracle,
    lhst_cost_oracle,
    phase_equal_pair,
    random_pair,
    random_sequence,
)


def rz_product(n, angles):
    return GateSequence(n, tuple(G.rz(q, a) for q, a in enumerate(angles)))


class TestHstCircuit:
    def test_identity_pair_single_qubit(self):
        u = identity_sequence(1)
        circuit = C.build_hst_circuit(u, u)
        assert len(circuit.gates) == 4  # H, CNOT, CNOT, H
        state = sim.run_sequence(circuit)
        assert sim.prob_all_zero(state, (0, 1)) == pytest.approx(1.0)

    def test_depth_obeys_formula(self, rng):
        u = random_sequence(rng, 2, 9)
        v = random_sequence(rng, 2, 5)
        circuit = C.build_hst_circuit(u, v)
        assert G.depth(circuit) == G.hst_depth(u, v)

    def test_traceless_target(self):
        u = GateSequence(1, (G.pauli_x(0),))
        est = C.cost_hst(u, identity_sequence(1), EXACT)
        assert est.value == pytest.approx(1.0, abs=1e-12)

    def test_width_capacity(self):
        with pytest.raises(CapacityError):
            C.build_hst_circuit(identity_sequence(13), identity_sequence(13))


class TestCostHst:
    def test_phase_equivalent_pair_vanishes(self):
        u = GateSequence(1, (G.t_gate(0),))
        v = GateSequence(1, (G.rz(0, math.pi / 4),))
        assert C.cost_hst(u, v, EXACT).value == pytest.approx(0.0, abs=1e-10)

    def test_rz_closed_form(self):
        theta, phi = 2.1, 0.7
        est = C.cost_hst(rz_product(1, [theta]), rz_product(1, [phi]), EXACT)
        assert est.value == pytest.approx(math.sin((theta - phi) / 2) ** 2, abs=1e-12)
        est = C.cost_hst(rz_product(1, [phi + math.pi]), rz_product(1, [phi]), EXACT)
        assert est.value == pytest.approx(1.0, abs=1e-12)

    def test_product_case_is_one_minus_product(self):
        thetas, phis = (0.4, 1.9, 5.1), (2.2, 0.3, 4.4)
        est = C.cost_hst(rz_product(3, thetas), rz_product(3, phis), EXACT)
        expected = 1.0 - np.prod([math.cos((t - p) / 2) ** 2 for t, p in zip(thetas, phis)])
        assert est.value == pytest.approx(expected, abs=1e-12)

    def test_matches_matrix_oracle(self, rng):
        for n in (1, 2, 3, 4):
            u, v = random_pair(rng, n)
            assert abs(C.cost_hst(u, v, EXACT).value - hst_cost_oracle(u, v)) < 1e-10

    def test_sampled_estimate_and_error(self):
        u = rz_product(1, [1.0])
        v = rz_product(1, [2.4])
        backend = SampledBackend(shots=20_000, seed=5)
        est = C.cost_hst(u, v, backend)
        exact = C.cost_hst(u, v, EXACT).value
        assert est.shots == 20_000
        p_hat = 1.0 - est.value
        assert est.std_error == pytest.approx(math.sqrt(p_hat * (1 - p_hat) / 20_000))
        assert abs(est.value - exact) < 4 * est.std_error + 1e-3

    def test_sampled_is_seed_deterministic(self, rng):
        u, v = random_pair(rng, 2)
        a = C.cost_hst(u, v, SampledBackend(1000, seed=42))
        b = C.cost_hst(u, v, SampledBackend(1000, seed=42))
        assert a == b


class TestCostLhst:
    def test_identity_channel(self, rng):
        u = random_sequence(rng, 3, 8)
        for j in (1, 2, 3):
            assert C.cost_lhst_j(u, u, j, EXACT).value == pytest.approx(0.0, abs=1e-10)
        assert C.cost_lhst(u, u, EXACT).value == pytest.approx(0.0, abs=1e-10)

    def test_product_case_per_qubit(self):
        thetas, phis = (0.9, 4.0), (2.5, 1.2)
        u, v = rz_product(2, thetas), rz_product(2, phis)
        for j in (1, 2):
            expected = 1.0 - math.cos((thetas[j - 1] - phis[j - 1]) / 2) ** 2
            assert C.cost_lhst_j(u, v, j, EXACT).value == pytest.approx(expected, abs=1e-12)
        mean = 1.0 - np.mean([math.cos((t - p) / 2) ** 2 for t, p in zip(thetas, phis)])
        assert C.cost_lhst(u, v, EXACT).value == pytest.approx(mean, abs=1e-12)

    def test_matches_channel_oracle(self, rng):
        for _ in range(10):
            u, v = random_pair(rng, 2)
            for j in (1, 2):
                got = C.cost_lhst_j(u, v, j, EXACT).value
                assert abs(got - lhst_cost_oracle(u, v, j)) < 1e-10

    def test_pair_index_range(self, rng):
        u, v = random_pair(rng, 2)
        with pytest.raises(IndexError):
            C.cost_lhst_j(u, v, 0, EXACT)
        with pytest.raises(IndexError):
            C.cost_lhst_j(u, v, 3, EXACT)

    def test_sandwich_bounds(self, rng):
        for i in range(60):
            n = 1 + i % 4
            u, v = random_pair(rng, n)
            c_l = C.cost_lhst(u, v, EXACT).value
            c_h = C.cost_hst(u, v, EXACT).value
            assert c_l <= c_h + 1e-9
            assert c_h <= n * c_l + 1e-9

    def test_shot_split_remainder_to_low_pairs(self, rng):
        u, v = random_pair(rng, 3)
        backend = SampledBackend(shots=1000, seed=1)
        parts = C._lhst_pair_costs(u, v, backend)
        assert [p.shots for p in parts] == [334, 333, 333]


class TestCostWeighted:
    def test_endpoints_equal_components(self, rng):
        u, v = random_pair(rng, 2)
        backend = SampledBackend(5000, seed=9)
        assert C.cost_weighted(u, v, 1.0, backend) == C.cost_hst(u, v, backend)
        assert C.cost_weighted(u, v, 0.0, backend) == C.cost_lhst(u, v, backend)

    def test_half_weight_product_example(self):
        delta = math.pi / 2
        u = rz_product(2, [delta, delta])
        v = rz_product(2, [0.0, 0.0])
        est = C.cost_weighted(u, v, 0.5, EXACT)
        assert est.value == pytest.approx(0.625, abs=1e-12)

    def test_weight_validation(self, rng):
        u, v = random_pair(rng, 1)
        with pytest.raises(ValueError):
            C.cost_weighted(u, v, 1.5, EXACT)

    def test_default_weight_rule(self):
        assert C.default_weight(4) == 1.0
        assert C.default_weight(5) == 0.0


class TestFidelityIdentities:
    def test_zero_cost_full_fidelity(self):
        assert C.avg_fidelity_from_hst(0.0, 3) == pytest.approx(1.0)

    def test_single_qubit_extreme(self):
        assert C.avg_fidelity_from_hst(1.0, 1) == pytest.approx(1.0 / 3.0)

    def test_bound_reduces_to_identity_at_q1(self):
        c = 0.37
        assert C.fidelity_bound_from_cq(c, 2, 1.0) == pytest.approx(C.avg_fidelity_from_hst(c, 2))

    def test_monte_carlo_identity(self):
        from qaqc.verify import check_avg_fidelity

        ok, detail = check_avg_fidelity(samples=100_000, seed=77)
        assert ok, detail


class TestPooq:
    def test_identity_trace(self):
        est = C.trace_via_pooq(identity_sequence(2), EXACT)
        assert est.value == pytest.approx(4.0 + 0.0j, abs=1e-10)

    def test_rz_trace(self):
        theta = 1.3
        est = C.trace_via_pooq(rz_product(1, [theta]), EXACT)
        assert est.value.real == pytest.approx(2 * math.cos(theta / 2), abs=1e-10)
        assert est.value.imag == pytest.approx(0.0, abs=1e-10)

    def test_random_two_qubit_matches_oracle_exact(self, rng):
        seq = random_sequence(rng, 2, 10)
        oracle = np.trace(sim.sequence_to_matrix(seq).entries)
        est = C.trace_via_pooq(seq, EXACT)
        assert abs(est.value - oracle) < 1e-9

    def test_random_two_qubit_sampled_within_five_sigma(self, rng):
        seq = random_sequence(rng, 2, 10)
        oracle = np.trace(sim.sequence_to_matrix(seq).entries)
        est = C.trace_via_pooq(seq, SampledBackend(100_000, seed=13))
        assert abs(est.value.real - oracle.real) < 5 * est.std_error_re
        assert abs(est.value.imag - oracle.imag) < 5 * est.std_error_im


class TestPotq:
    def test_pure_phase_offset(self):
        # V differs from U by a global phase only (a T * Rz tail, whose angle
        # wrapping lands the phase at 9 pi/8); the cost must read 1 - cos(phi).
        u = GateSequence(1, (G.rz(0, 0.9),))
        v = u.extended([G.t_gate(0), G.rz(0, -math.pi / 4)])
        mu = sim.sequence_to_matrix(u).entries
        mv = sim.sequence_to_matrix(v).entries
        phi = float(np.angle(np.trace(mu.conj().T @ mv) / 2.0))
        assert np.max(np.abs(mv - np.exp(1j * phi) * mu)) < 1e-12  # pure phase pair
        est = C.cost_potq(u, v, EXACT)
        assert est.value == pytest.approx(1 - math.cos(phi), abs=1e-10)

    def test_equal_pair_vanishes(self, rng):
        u = random_sequence(rng, 2, 6)
        assert C.cost_potq(u, u, EXACT).value == pytest.approx(0.0, abs=1e-9)

    def test_reduces_to_pooq_at_identity_v(self, rng):
        u = random_sequence(rng, 2, 8)
        overlap = C.overlap_via_potq(u, identity_sequence(2), EXACT)
        trace = C.trace_via_pooq(u, EXACT)
        assert abs(overlap.value - trace.value) < 1e-10

    def test_range_is_zero_to_two(self):
        u = GateSequence(1, (G.rz(0, 0.3),))
        v = u.extended([G.pauli_x(0), G.s_gate(0), G.s_gate(0), G.pauli_x(0), G.s_gate(0), G.s_gate(0)])
        # The tail is exactly -I, so Re Tr(V^dag U) = -d and the cost is 2.
        assert C.cost_potq(u, v, EXACT).value == pytest.approx(2.0, abs=1e-10)


class TestFixedInputCosts:
    def test_equal_pair(self, rng):
        u = random_sequence(rng, 2, 8)
        assert C.cost_fixed_input(u, u, EXACT).value == pytest.approx(0.0, abs=1e-10)
        assert C.cost_fixed_input_local(u, u, EXACT).value == pytest.approx(0.0, abs=1e-10)

    def test_one_flipped_qubit(self):
        u = GateSequence(2, (G.pauli_x(1),))
        v = identity_sequence(2)
        assert C.cost_fixed_input(u, v, EXACT).value == pytest.approx(1.0, abs=1e-12)
        assert C.cost_fixed_input_local(u, v, EXACT).value == pytest.approx(0.5, abs=1e-12)

    def test_matches_matrix_oracle(self, rng):
        for _ in range(10):
            u, v = random_pair(rng, 2)
            m = sim.sequence_to_matrix(v).entries.conj().T @ sim.sequence_to_matrix(u).entries
            expected = 1.0 - abs(m[0, 0]) ** 2
            assert abs(C.cost_fixed_input(u, v, EXACT).value - expected) < 1e-10

    def test_local_averages_marginals(self, rng):
        u, v = random_pair(rng, 3)
        state = sim.run_sequence(
            GateSequence(3, u.gates + G.adjoint_sequence(v).gates)
        )
        expected = 1.0 - np.mean([sim.marginal_probs(state, (j,))[0] for j in range(3)])
        assert C.cost_fixed_input_local(u, v, EXACT).value == pytest.approx(expected, abs=1e-10)


class TestTraceViaLhst:
    def test_identity(self):
        assert C.trace_via_lhst(identity_sequence(2), EXACT).value == pytest.approx(4.0, abs=1e-9)

    def test_traceless(self):
        seq = GateSequence(1, (G.rz(0, math.pi),))  # -iZ, trace 0
        assert abs(C.trace_via_lhst(seq, EXACT).value) < 1e-9

    def test_random_exact(self, rng):
        for _ in range(5):
            seq = random_sequence(rng, 2, 8)
            oracle = float(np.trace(sim.sequence_to_matrix(seq).entries).real)
            assert abs(C.trace_via_lhst(seq, EXACT).value - oracle) < 1e-9

    def test_random_sampled_within_five_sigma(self, rng):
        seq = random_sequence(rng, 2, 8)
        oracle = float(np.trace(sim.sequence_to_matrix(seq).entries).real)
        est = C.trace_via_lhst(seq, SampledBackend(100_000, seed=3))
        assert est.std_error > 0
        assert abs(est.value - oracle) < 5 * est.std_error


class TestEstimateInvariants:
    def test_exact_backend_zero_error(self, rng):
        u, v = random_pair(rng, 2)
        est = C.cost_hst(u, v, EXACT)
        assert est.shots == 0 and est.std_error == 0.0

    def test_costs_in_range(self, rng):
        for i in range(40):
            n = 1 + i % 3
            u, v = random_pair(rng, n)
            assert -1e-12 <= C.cost_hst(u, v, EXACT).value <= 1 + 1e-12
            assert -1e-12 <= C.cost_lhst(u, v, EXACT).value <= 1 + 1e-12
            assert -1e-12 <= C.cost_fixed_input(u, v, EXACT).value <= 1 + 1e-12
        u, v = random_pair(rng, 2)
        assert -1e-12 <= C.cost_potq(u, v, EXACT).value <= 2 + 1e-12

    def test_faithfulness_both_ways(self, rng):
        hits = 0
        for i in range(60):
            n = 1 + i % 3
            if i % 5 == 0:
                u, v = phase_equal_pair(rng, n)
            else:
                u, v = random_pair(rng, n)
            dist = sim.global_phase_distance(
                sim.sequence_to_matrix(u), sim.sequence_to_matrix(v)
            )
            aligned = dist < 1e-6
            hits += aligned
            assert (C.cost_hst(u, v, EXACT).value < 1e-9) == aligned
            assert (C.cost_lhst(u, v, EXACT).value < 1e-9) == aligned
        assert hits >= 10  # the corpus exercises both branches


class TestLocalRepair:
    def test_every_qubit_repairable_below_three_quarters(self):
        from qaqc.verify import check_local_repair

        ok, detail = check_local_repair(pairs=100, seed=114)
        assert ok, detail
