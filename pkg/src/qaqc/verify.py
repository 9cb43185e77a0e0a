"""Self-check suite: every derived oracle and invariant, runnable from the
CLI (``qaqc verify``). Each check returns (ok, detail); the suite prints one
line per check and fails if any check fails.

The checks deliberately compute expected values through independent routes
(dense matrix oracles, finite differences, Monte-Carlo averages, closed
forms) and compare them against the circuit-based estimators.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import minimize

from . import gates as G
from . import simulator as sim
from .cost import (
    EXACT,
    HST,
    LHST,
    SampledBackend,
    avg_fidelity_from_hst,
    cost_fixed_input,
    cost_hst,
    cost_lhst,
    cost_lhst_j,
    cost_potq,
    trace_via_lhst,
)
from .gates import GateSequence, TWO_PI
from .noise import NoiseModel, sample_circuit_noisy
from .optimize import accept_proposal, gradient_potq, gradient_shift
from .seeding import derive_seed, generator


def random_sequence(
    rng: np.random.Generator, n: int, length: int, two_qubit: bool = True
) -> GateSequence:
    """Random circuit over the native kinds (Rz, Rx(+/-pi/2), H, X, T, S,
    CNOT, CZ), used as the test corpus everywhere."""
    kinds = ["rz", "rx+", "rx-", "h", "x", "t", "s"]
    if two_qubit and n >= 2:
        kinds += ["cnot", "cz"]
    gs = []
    for _ in range(length):
        kind = kinds[int(rng.integers(len(kinds)))]
        q = int(rng.integers(n))
        if kind == "rz":
            gs.append(G.rz(q, float(rng.uniform(0.0, TWO_PI))))
        elif kind == "rx+":
            gs.append(G.rx_plus(q))
        elif kind == "rx-":
            gs.append(G.rx_minus(q))
        elif kind == "h":
            gs.append(G.hadamard(q))
        elif kind == "x":
            gs.append(G.pauli_x(q))
        elif kind == "t":
            gs.append(G.t_gate(q))
        elif kind == "s":
            gs.append(G.s_gate(q))
        else:
            p = int(rng.integers(n - 1))
            p = p if p < q else p + 1
            gs.append(G.cnot(q, p) if kind == "cnot" else G.cz(q, p))
    return GateSequence(n, tuple(gs))


def random_pair(rng, n: int, length: int = 12) -> tuple[GateSequence, GateSequence]:
    return random_sequence(rng, n, length), random_sequence(rng, n, length)


def hst_cost_oracle(u_seq: GateSequence, v_seq: GateSequence) -> float:
    """1 - |Tr(V^dag U)|^2 / d^2 straight from the dense matrices."""
    u = sim.sequence_to_matrix(u_seq).entries
    v = sim.sequence_to_matrix(v_seq).entries
    d = u.shape[0]
    return 1.0 - abs(np.trace(v.conj().T @ u)) ** 2 / d**2


def lhst_cost_oracle(u_seq: GateSequence, v_seq: GateSequence, j: int) -> float:
    """Per-qubit cost through the explicit local-channel construction: the
    entanglement fidelity (1/4) sum |Tr K_i|^2 of the channel obtained by
    tracing all other qubits out of W = U V^dag."""
    u = sim.sequence_to_matrix(u_seq).entries
    v = sim.sequence_to_matrix(v_seq).entries
    blocks = _kraus_blocks(u @ v.conj().T, u_seq.num_qubits, j)
    fid = sum(abs(np.trace(k)) ** 2 for k in blocks) / 4.0
    return 1.0 - fid


def _kraus_blocks(w: np.ndarray, n: int, j: int) -> np.ndarray:
    """Kraus operators of the local channel on qubit j (1-based): 2x2 blocks
    <m|_rest W |k>_rest / sqrt(2^(n-1))."""
    q = j - 1
    t = w.reshape([2] * n + [2] * n)
    t = np.moveaxis(t, (n - 1 - q, 2 * n - 1 - q), (0, 1))
    rest = t.reshape(2, 2, 1 << (n - 1), 1 << (n - 1))
    blocks = np.transpose(rest, (2, 3, 0, 1)) / math.sqrt(1 << (n - 1))
    return blocks.reshape(-1, 2, 2)


def phase_equal_pair(rng, n: int, length: int = 10) -> tuple[GateSequence, GateSequence]:
    """A pair equal up to a global phase: V is U with an appended
    phase-only tail T * Rz(-pi/4) (= e^{i pi/8} after angle wrapping)."""
    u = random_sequence(rng, n, length)
    q = int(rng.integers(n))
    v = u.extended([G.t_gate(q), G.rz(q, -math.pi / 4)])
    return u, v


# ---------------------------------------------------------------------------
# Checks. Each returns (ok, detail).


def check_hst_oracle(pairs: int = 120, seed: int = 101, tol: float = 1e-10):
    rng = generator(seed)
    worst = 0.0
    for i in range(pairs):
        n = 1 + i % 4
        u, v = random_pair(rng, n)
        got = cost_hst(u, v, EXACT).value
        worst = max(worst, abs(got - hst_cost_oracle(u, v)))
    return worst < tol, f"max |circuit - matrix| = {worst:.2e} over {pairs} pairs"


def check_cost_bounds(pairs: int = 120, seed: int = 102, tol: float = 1e-9):
    rng = generator(seed)
    worst = 0.0
    for i in range(pairs):
        n = 1 + i % 4
        u, v = random_pair(rng, n)
        c_l = cost_lhst(u, v, EXACT).value
        c_h = cost_hst(u, v, EXACT).value
        worst = max(worst, c_l - c_h, c_h - n * c_l)
    return worst < tol, f"max bound violation = {worst:.2e}"


def check_faithfulness(pairs: int = 60, seed: int = 103):
    rng = generator(seed)
    ok = True
    for i in range(pairs):
        n = 1 + i % 3
        if i % 5 == 0:
            u, v = phase_equal_pair(rng, n)
        else:
            u, v = random_pair(rng, n)
        dist = sim.global_phase_distance(sim.sequence_to_matrix(u), sim.sequence_to_matrix(v))
        for value in (cost_lhst(u, v, EXACT).value, cost_hst(u, v, EXACT).value):
            ok = ok and ((value < 1e-9) == (dist < 1e-6))
    return ok, f"vanishing-cost iff phase-aligned over {pairs} pairs"


def check_avg_fidelity(samples: int = 100_000, seed: int = 104, n: int = 2):
    rng = generator(seed)
    u, v = random_pair(rng, n)
    w = sim.sequence_to_matrix(u).entries @ sim.sequence_to_matrix(v).entries.conj().T
    d = 1 << n
    z = rng.standard_normal((samples, d)) + 1j * rng.standard_normal((samples, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    fids = np.abs(np.einsum("si,ij,sj->s", z.conj(), w, z)) ** 2
    mc, sigma = float(fids.mean()), float(fids.std(ddof=1) / math.sqrt(samples))
    predicted = avg_fidelity_from_hst(cost_hst(u, v, EXACT).value, n)
    return abs(mc - predicted) < 3 * sigma, (
        f"MC {mc:.6f} vs identity {predicted:.6f} (3 sigma = {3 * sigma:.2e})"
    )


def check_shift_gradient(configs: int = 30, seed: int = 105, tol: float = 1e-6):
    rng = generator(seed)
    h, worst = 1e-5, 0.0
    for i in range(configs):
        n = 1 + i % 3
        u = random_sequence(rng, n, 8)
        v = random_sequence(rng, n, 8)
        if not v.angles:
            v = v.extended([G.rz(int(rng.integers(n)), float(rng.uniform(0, TWO_PI)))])
        kind = HST if i % 2 == 0 else LHST
        grad = gradient_shift(u, v, kind, EXACT)
        angles = np.asarray(v.angles)
        for k in range(len(angles)):
            plus, minus = angles.copy(), angles.copy()
            plus[k] += h
            minus[k] -= h
            from .cost import evaluate_cost

            fd = (
                evaluate_cost(u, v.with_angles(plus), kind, EXACT).value
                - evaluate_cost(u, v.with_angles(minus), kind, EXACT).value
            ) / (2 * h)
            worst = max(worst, abs(grad[k] - fd))
    return worst < tol, f"max |shift - fd| = {worst:.2e} over {configs} configs"


def check_potq_gradient(configs: int = 12, seed: int = 106, tol: float = 1e-6):
    rng = generator(seed)
    h, worst = 1e-5, 0.0
    for i in range(configs):
        n = 1 + i % 2
        u = random_sequence(rng, n, 6)
        v = random_sequence(rng, n, 6)
        if not v.angles:
            v = v.extended([G.rz(int(rng.integers(n)), float(rng.uniform(0, TWO_PI)))])
        grad = gradient_potq(u, v, EXACT)
        angles = np.asarray(v.angles)
        for k in range(len(angles)):
            plus, minus = angles.copy(), angles.copy()
            plus[k] += h
            minus[k] -= h
            fd = (
                cost_potq(u, v.with_angles(plus), EXACT).value
                - cost_potq(u, v.with_angles(minus), EXACT).value
            ) / (2 * h)
            worst = max(worst, abs(grad[k] - fd))
    return worst < tol, f"max |potq - fd| = {worst:.2e} over {configs} configs"


def check_conjugation_involution(cases: int = 200, seed: int = 107, tol: float = 1e-8):
    rng = generator(seed)
    worst = 0.0
    for i in range(cases):
        n = 1 + i % 3
        seq = random_sequence(rng, n, int(rng.integers(1, 21)))
        twice = G.conjugate_sequence(G.conjugate_sequence(seq))
        worst = max(
            worst,
            sim.global_phase_distance(sim.sequence_to_matrix(twice), sim.sequence_to_matrix(seq)),
        )
    return worst < tol, f"max phase-aligned distance = {worst:.2e} over {cases} cases"


def check_controlled_oracle(cases: int = 40, seed: int = 108, tol: float = 1e-9):
    rng = generator(seed)
    worst = 0.0
    for i in range(cases):
        n = 1 + i % 2
        seq = random_sequence(rng, n, 5)
        anti = bool(i % 2)
        ctrl = G.controlled_sequence(seq, n, anticontrol=anti)
        built = sim.sequence_to_matrix(ctrl).entries
        v = sim.sequence_to_matrix(seq).entries
        d = v.shape[0]
        oracle = np.eye(2 * d, dtype=complex)
        if anti:
            oracle[:d, :d] = v
        else:
            oracle[d:, d:] = v
        worst = max(worst, float(np.max(np.abs(built - oracle))))
    return worst < tol, f"max |built - block oracle| = {worst:.2e}"


def check_sampling_consistency(seed: int = 109):
    rng = generator(seed)
    state = sim.haar_random_state(3, int(rng.integers(2**31)))
    shots = 40_000
    qubits = (0, 2)
    probs = sim.marginal_probs(state, qubits)
    counts = {s.bits: s.count for s in sim.sample_bitstrings(state, qubits, shots, seed)}
    worst = 0.0
    for idx in range(4):
        bits = ((idx >> 1) & 1, idx & 1)
        p = probs[idx]
        freq = counts.get(bits, 0) / shots
        sigma = math.sqrt(max(p * (1 - p), 1e-12) / shots)
        worst = max(worst, abs(freq - p) / (3 * sigma))
    return worst < 1.0, f"max |freq - p| / (3 sigma) = {worst:.2f}"


def check_acceptance_rate(seed: int = 110):
    rng = generator(seed)
    trials, delta, temp = 10_000, 0.1, 0.1
    hits = sum(accept_proposal(delta, temp, rng) for _ in range(trials))
    expected = math.exp(-1.0)
    sigma = math.sqrt(expected * (1 - expected) / trials)
    dev = abs(hits / trials - expected)
    return dev < 3 * sigma, f"rate {hits / trials:.4f} vs e^-1 {expected:.4f} (3s={3 * sigma:.4f})"


def check_trace_extraction(cases: int = 10, seed: int = 111, tol: float = 1e-9):
    rng = generator(seed)
    worst = 0.0
    for _ in range(cases):
        seq = random_sequence(rng, 2, 8)
        target = float(np.trace(sim.sequence_to_matrix(seq).entries).real)
        got = trace_via_lhst(seq, EXACT).value
        worst = max(worst, abs(got - target))
    return worst < tol, f"max |extracted - oracle Re trace| = {worst:.2e}"


def check_noiseless_trajectories(seed: int = 112):
    rng = generator(seed)
    seq = random_sequence(rng, 2, 8)
    shots = 20_000
    counts = sample_circuit_noisy(seq, (0, 1), shots, NoiseModel(), seed)
    state = sim.run_sequence(seq)
    probs = sim.marginal_probs(state, (0, 1))
    worst = 0.0
    for idx in range(4):
        p = probs[idx]
        sigma = math.sqrt(max(p * (1 - p), 1e-12) / shots)
        worst = max(worst, abs(counts[idx] / shots - p) / (3 * sigma + 1e-12))
    return worst < 1.0, f"max deviation {worst:.2f} of 3 sigma"


def check_fixed_input_oracle(cases: int = 30, seed: int = 113, tol: float = 1e-10):
    rng = generator(seed)
    worst = 0.0
    for _ in range(cases):
        u, v = random_pair(rng, 2, 8)
        got = cost_fixed_input(u, v, EXACT).value
        m = sim.sequence_to_matrix(v).entries.conj().T @ sim.sequence_to_matrix(u).entries
        worst = max(worst, abs(got - (1.0 - abs(m[0, 0]) ** 2)))
    return worst < tol, f"max |circuit - matrix| = {worst:.2e}"


# ---------------------------------------------------------------------------
# Local-unitary repair


def _zxz(a: float, b: float, c: float) -> np.ndarray:
    return G.rz_matrix(c) @ G.rx_matrix(b) @ G.rz_matrix(a)


def best_local_repair(u_seq: GateSequence, v_seq: GateSequence, j: int) -> tuple[float, np.ndarray]:
    """Search single-qubit unitaries appended to V for the one minimizing the
    per-qubit local cost on pair j: a coarse Euler-angle grid, a polar-
    decomposition candidate, and a simplex polish. Returns the cost found
    (evaluated through the circuit estimator) and the repair unitary."""
    u = sim.sequence_to_matrix(u_seq).entries
    v = sim.sequence_to_matrix(v_seq).entries
    blocks = _kraus_blocks(u @ v.conj().T, u_seq.num_qubits, j)

    vecs = blocks.reshape(-1, 4)
    p_mat = vecs.conj().T @ vecs  # F(Vj) = (1/4) vec(Vj)^dag P vec(Vj), conj-layout

    def fidelity(vj: np.ndarray) -> float:
        w = vj.reshape(-1)
        return float(np.real(w.conj() @ p_mat.conj() @ w)) / 4.0

    candidates = []
    grid = np.linspace(0.0, TWO_PI, 8, endpoint=False)
    triples = np.array([(a, b, c) for a in grid for b in grid for c in grid])
    grid_vecs = np.array([_zxz(a, b, c).reshape(-1) for a, b, c in triples])
    grid_f = np.real(np.einsum("si,ij,sj->s", grid_vecs.conj(), p_mat.conj(), grid_vecs)) / 4.0
    best_angles = tuple(triples[int(np.argmax(grid_f))])
    res = minimize(
        lambda x: -fidelity(_zxz(*x)),
        np.asarray(best_angles),
        method="Nelder-Mead",
        options={"maxfev": 400, "xatol": 1e-8, "fatol": 1e-12},
    )
    candidates.append(_zxz(*res.x))
    # Polar-decomposition candidate from the dominant eigenvector of P.
    evals, evecs = np.linalg.eigh(p_mat.conj())
    w_mat = evecs[:, -1].reshape(2, 2)
    uu, _, vvh = np.linalg.svd(w_mat)
    candidates.append(uu @ vvh)

    best_cost, best_vj = math.inf, None
    for vj in candidates:
        repaired = v_seq.extended([G.fixed_1q(j - 1, vj)])
        value = cost_lhst_j(u_seq, repaired, j, EXACT).value
        if value < best_cost:
            best_cost, best_vj = value, vj
    return best_cost, best_vj


def check_local_repair(pairs: int = 25, seed: int = 114, n: int = 3):
    rng = generator(seed)
    worst = 0.0
    for _ in range(pairs):
        u, v = random_pair(rng, n, 10)
        for j in range(1, n + 1):
            value, _ = best_local_repair(u, v, j)
            worst = max(worst, value)
    return worst <= 0.75 + 1e-9, f"max repaired local cost = {worst:.6f} (bound 0.75)"


# ---------------------------------------------------------------------------
# Barren-plateau contrast


def plateau_contrast(
    n: int = 9, shots: int = 1000, points: int = 25, seed: int = 115
) -> tuple[float, float]:
    """Fraction of random starting points whose measured gradient clears
    three standard errors, for the global and the local cost (product-of-
    rotations target family).

    Detection standard errors are floored at the add-one smoothed binomial
    error: an all-zeros count gives a zero plug-in error, which would turn
    every stray count into a fake detection on the flat global-cost
    landscape.
    """
    rng = generator(seed)
    # Per-component error floor: both shifted evaluations at the smoothed
    # zero-count probability 1/(shots+2).
    p0 = 1.0 / (shots + 2.0)
    floor = 0.5 * math.sqrt(2.0 * p0 * (1.0 - p0) / shots)
    detect_h = detect_l = 0
    for p in range(points):
        u = GateSequence(n, tuple(G.rz(q, float(rng.uniform(0, TWO_PI))) for q in range(n)))
        v = GateSequence(n, tuple(G.rz(q, float(rng.uniform(0, TWO_PI))) for q in range(n)))
        for kind, bucket in ((HST, "h"), (LHST, "l")):
            backend = SampledBackend(shots, derive_seed(seed, p, 0 if bucket == "h" else 1))
            grad, errs = gradient_shift(u, v, kind, backend, return_errors=True)
            norm = float(np.linalg.norm(grad))
            err_norm = float(np.linalg.norm(np.maximum(errs, floor)))
            if norm > 3.0 * err_norm:
                if bucket == "h":
                    detect_h += 1
                else:
                    detect_l += 1
    return detect_h / points, detect_l / points


def check_plateau_contrast(points: int = 12, seed: int = 115):
    frac_h, frac_l = plateau_contrast(points=points, seed=seed)
    ok = frac_h < 0.10 and frac_l > 0.90
    return ok, f"global-cost detectable {frac_h:.0%}, local-cost detectable {frac_l:.0%}"


CHECKS = [
    ("hst-matches-matrix-oracle", check_hst_oracle),
    ("local-global-bounds", check_cost_bounds),
    ("faithfulness", check_faithfulness),
    ("avg-fidelity-identity", check_avg_fidelity),
    ("shift-gradient-vs-fd", check_shift_gradient),
    ("potq-gradient-vs-fd", check_potq_gradient),
    ("conjugation-involution", check_conjugation_involution),
    ("controlled-blocks", check_controlled_oracle),
    ("sampling-consistency", check_sampling_consistency),
    ("annealing-acceptance", check_acceptance_rate),
    ("trace-extraction", check_trace_extraction),
    ("noiseless-trajectories", check_noiseless_trajectories),
    ("fixed-input-oracle", check_fixed_input_oracle),
    ("local-unitary-repair", check_local_repair),
    ("plateau-contrast", check_plateau_contrast),
]


def verify_suite(jobs: int = 1, stream=None) -> bool:
    """Run every check, print one pass/fail line each, return overall pass."""
    import sys

    stream = stream or sys.stdout

    def run(item):
        name, fn = item
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        return name, ok, detail

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, CHECKS))
    else:
        results = [run(item) for item in CHECKS]

    width = max(len(name) for name, _, _ in results)
    all_ok = True
    for name, ok, detail in results:
        all_ok &= ok
        stream.write(f"{name.ljust(width)}  {'PASS' if ok else 'FAIL'}  {detail}\n")
    stream.write(("all checks passed" if all_ok else "FAILURES present") + "\n")
    return all_ok
