"""Continuous and structural optimizers for compiling a target unitary.

Four continuous procedures plus structure search:

* ``optimize_continuous_free`` - restarted derivative-free search (the
  default searcher is a budgeted Nelder-Mead simplex with restart jitter;
  any callable with the same signature can be plugged in).
* ``optimize_bisection`` - multi-scale bisection of the angle grid with
  simulated-annealing acceptance, plus a fine continuous pass.
* ``optimize_gradient`` - shift-rule gradient descent with the two-step
  adaptive learning rate and the four-consecutive-small-gradients stopping
  rule (plain fixed-rate restarted descent for the phase-sensitive cost).
* ``anneal_structure`` / ``layered_refinement`` - simulated annealing over
  gate structures, optionally growing the circuit segment by segment.

All optimizers are bit-reproducible given ``OptimizerConfig.seed``: every
cost evaluation and proposal derives its own child seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .cost import (
    EXACT,
    CostEstimate,
    CostKind,
    HST,
    SampledBackend,
    cost_hst,
    cost_potq,
    default_weight,
    epsilon_from_cost,
    evaluate_cost,
)
from .errors import UnsupportedGateError
from .gates import (
    Alphabet,
    Gate,
    GateKind,
    GateSequence,
    TWO_PI,
    depth,
    rz,
)
from .noise import NoiseModel
from .seeding import derive_seed, generator

#: Cost evaluations per continuous-optimization chunk (one "iteration" of the
#: derivative-free search).
EVALS_PER_UPDATE = 50

# Seed-stream ids so different work items never share draws.
_S_INIT, _S_RESTART, _S_EVAL, _S_GRAD, _S_STEP, _S_PROPOSAL, _S_ANNEAL = range(7)


@dataclass(frozen=True)
class OptimizerConfig:
    """Tolerances, budgets, and schedules shared by the optimizers.

    ``tolerance`` is the cost threshold for the search-based optimizers and
    the squared-gradient-norm threshold for gradient descent.
    ``max_iterations`` is the per-restart evaluation budget for the free
    search, the per-level proposal budget for bisection, the iteration cap
    for gradient descent, and the structure-proposal budget for annealing.
    ``shots_per_eval = 0`` selects the exact backend.
    """

    tolerance: float = 1e-2
    max_restarts: int = 3
    max_iterations: int = 100
    shots_per_eval: int = 0
    learning_rate: float = 1.0
    bisection_levels: int = 6
    fine_deltas: tuple[float, ...] = (0.1, 0.05, 0.02, 0.01)
    initial_temperature: float = 0.2
    cooling_ratio: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")
        deltas = tuple(float(d) for d in self.fine_deltas)
        if any(d <= 0 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
            raise ValueError("fine deltas must be positive and strictly decreasing")
        object.__setattr__(self, "fine_deltas", deltas)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    cost: CostEstimate
    gradient_norm: float | None
    structure_hash: str
    accepted: bool
    angles: tuple[float, ...]
    learning_rate: float | None = None


@dataclass
class ConvergenceTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def add(self, record: TraceRecord) -> None:
        if self.records and record.iteration <= self.records[-1].iteration:
            record = replace(record, iteration=self.records[-1].iteration + 1)
        self.records.append(record)

    def best_cost_curve(self) -> list[float]:
        out, best = [], math.inf
        for r in self.records:
            best = min(best, r.cost.value)
            out.append(best)
        return out


@dataclass
class CompilationResult:
    best_sequence: GateSequence
    best_cost: CostEstimate
    epsilon_approx: float
    trace: ConvergenceTrace


def _result(
    u_seq: GateSequence,
    best_seq: GateSequence,
    best_cost: CostEstimate,
    kind: CostKind,
    trace: ConvergenceTrace,
) -> CompilationResult:
    n = u_seq.num_qubits
    if kind.name == "hst":
        eps = epsilon_from_cost(best_cost.value, n, 1.0)
    elif kind.name == "lhst":
        eps = epsilon_from_cost(best_cost.value, n, 0.0)
    elif kind.name == "weighted":
        q = kind.q if kind.q is not None else default_weight(n)
        eps = epsilon_from_cost(best_cost.value, n, q)
    else:
        # The phase-sensitive and fixed-input costs carry no direct average
        # fidelity form; report epsilon from an exact global-cost evaluation
        # of the compiled sequence.
        eps = epsilon_from_cost(cost_hst(u_seq, best_seq, EXACT).value, n, 1.0)
    return CompilationResult(best_seq, best_cost, eps, trace)


def _backend(config: OptimizerConfig, noise: NoiseModel | None, *path: int):
    if config.shots_per_eval <= 0:
        return EXACT
    return SampledBackend(config.shots_per_eval, derive_seed(config.seed, *path), noise)


def simplex_searcher(fun, x0: np.ndarray, budget: int, rng: np.random.Generator):
    """Default derivative-free searcher: one Nelder-Mead run capped at
    ``budget`` evaluations, starting from ``x0`` jittered by the caller's
    rng between chunks."""
    res = minimize(
        fun,
        x0,
        method="Nelder-Mead",
        options={"maxfev": budget, "xatol": 1e-6, "fatol": 1e-9, "adaptive": True},
    )
    return np.asarray(res.x, dtype=float), float(res.fun)


def optimize_continuous_free(
    u_seq: GateSequence,
    v_structure: GateSequence,
    cost_kind: CostKind,
    config: OptimizerConfig,
    noise: NoiseModel | None = None,
    searcher=None,
) -> CompilationResult:
    """Restarted derivative-free continuous optimization.

    Up to ``max_restarts`` starts from random angles; each restart spends at
    most ``max_iterations`` cost evaluations, in searcher chunks of
    ``EVALS_PER_UPDATE``. Stops early once the best cost reaches
    ``tolerance``. With no free angles the structure's cost is returned
    unchanged.
    """
    searcher = searcher or simplex_searcher
    trace = ConvergenceTrace()
    n_angles = len(v_structure.angles)

    def record_eval(angles, *path) -> CostEstimate:
        seq = v_structure.with_angles(np.asarray(angles) % TWO_PI)
        return evaluate_cost(u_seq, seq, cost_kind, _backend(config, noise, *path))

    if n_angles == 0:
        est = record_eval((), _S_INIT, 0)
        trace.add(TraceRecord(1, est, None, v_structure.structure_hash(), True, ()))
        return _result(u_seq, v_structure, est, cost_kind, trace)

    best_angles = np.asarray(v_structure.angles, dtype=float)
    best_est: CostEstimate | None = None
    iteration = 0
    for restart in range(max(1, config.max_restarts)):
        rng = generator(derive_seed(config.seed, _S_RESTART, restart))
        current = rng.uniform(0.0, TWO_PI, n_angles)
        used = 0
        chunk = 0
        while used < config.max_iterations:
            budget = min(EVALS_PER_UPDATE, config.max_iterations - used)
            counter = [0]

            def fun(x, _restart=restart, _chunk=chunk, _counter=counter):
                _counter[0] += 1
                return record_eval(x, _S_EVAL, _restart, _chunk, _counter[0]).value

            x_new, _ = searcher(fun, current, budget, rng)
            used += counter[0]
            chunk += 1
            est = record_eval(x_new, _S_EVAL, restart, chunk, 0)
            iteration += 1
            trace.add(
                TraceRecord(
                    iteration, est, None, v_structure.structure_hash(), True,
                    tuple(np.asarray(x_new) % TWO_PI),
                )
            )
            if best_est is None or est.value < best_est.value:
                best_est, best_angles = est, np.asarray(x_new) % TWO_PI
            if best_est.value <= config.tolerance:
                break
            current = x_new + rng.normal(0.0, 0.15, n_angles)
            if counter[0] == 0:
                break
        if best_est is not None and best_est.value <= config.tolerance:
            break
    best_seq = v_structure.with_angles(best_angles)
    return _result(u_seq, best_seq, best_est, cost_kind, trace)


# ---------------------------------------------------------------------------
# Multi-scale bisection


def accept_proposal(delta_cost: float, temperature: float, rng: np.random.Generator) -> bool:
    """Annealing rule: accept improvements, else accept with probability
    exp(-delta/T)."""
    if delta_cost <= 0.0:
        return True
    if temperature <= 0.0:
        return False
    return rng.random() < math.exp(-delta_cost / temperature)


def _bisection_levels(t_max: int) -> list[np.ndarray]:
    """Angle grids per level: level 0 is the four quarter-turn angles; each
    later level keeps the previous grid and adds the midpoints
    ``a +/- pi/2^(t+1)`` of the previous level (true multi-scale
    refinement)."""
    levels = [np.array([0.0, 0.5, 1.0, 1.5]) * math.pi]
    for t in range(1, t_max + 1):
        prev = levels[-1]
        step = math.pi / (1 << (t + 1))
        vals = np.concatenate([prev, (prev + step) % TWO_PI, (prev - step) % TWO_PI])
        levels.append(np.unique(np.round(vals, 15)))
    return levels


def optimize_bisection(
    u_seq: GateSequence,
    v_structure: GateSequence,
    config: OptimizerConfig,
    noise: NoiseModel | None = None,
) -> CompilationResult:
    """Multi-scale bisection of the Rz angle grid under the global cost.

    Level 0 anneals over the quarter-turn angles; level t adds midpoints at
    pitch pi/2^(t+1); after the discrete levels a fine pass perturbs each
    angle by the configured deltas. Acceptance follows the annealing rule;
    the best angles ever seen are returned.
    """
    for g in v_structure.gates:
        if g.theta is not None and g.kind is not GateKind.RZ:  # pragma: no cover
            raise UnsupportedGateError("bisection requires all free parameters to be Rz angles")
    trace = ConvergenceTrace()
    n_angles = len(v_structure.angles)

    eval_counter = [0]

    def cost_at(angles) -> CostEstimate:
        eval_counter[0] += 1
        seq = v_structure.with_angles(np.asarray(angles) % TWO_PI)
        return cost_hst(u_seq, seq, _backend(config, noise, _S_EVAL, eval_counter[0]))

    if n_angles == 0:
        est = cost_at(())
        trace.add(TraceRecord(1, est, None, v_structure.structure_hash(), True, ()))
        return _result(u_seq, v_structure, est, HST, trace)

    rng = generator(derive_seed(config.seed, _S_ANNEAL))
    # Snap the starting angles onto the level-0 grid.
    current = (np.round(np.asarray(v_structure.angles) / (math.pi / 2)) * (math.pi / 2)) % TWO_PI
    current_est = cost_at(current)
    best, best_est = current.copy(), current_est
    accepted = 0

    def consider(candidate, est) -> bool:
        nonlocal current, current_est, best, best_est, accepted
        temperature = config.initial_temperature * config.cooling_ratio**accepted
        if accept_proposal(est.value - current_est.value, temperature, rng):
            current, current_est = np.asarray(candidate, dtype=float) % TWO_PI, est
            accepted += 1
            trace.add(
                TraceRecord(
                    accepted, est, None, v_structure.structure_hash(), True, tuple(current)
                )
            )
            if est.value < best_est.value:
                best, best_est = current.copy(), est
            return True
        return False

    for grid in _bisection_levels(config.bisection_levels):
        if best_est.value <= config.tolerance:
            break
        step = grid[1] - grid[0] if len(grid) > 1 else math.pi / 2
        # Greedy coordinate sweep (always-accepted improvements), bounded by
        # a neighborhood when the full grid would be too wide.
        for i in range(n_angles):
            if len(grid) * n_angles <= 4096:
                candidates = grid
            else:
                candidates = np.array([current[i], (current[i] + step) % TWO_PI,
                                       (current[i] - step) % TWO_PI])
            for val in candidates:
                if math.isclose(val, current[i], abs_tol=1e-12):
                    continue
                cand = current.copy()
                cand[i] = val
                est = cost_at(cand)
                if est.value < current_est.value:
                    consider(cand, est)
        # Random annealed proposals on the same grid.
        for _ in range(config.max_iterations):
            if best_est.value <= config.tolerance:
                break
            cand = current.copy()
            cand[int(rng.integers(n_angles))] = grid[int(rng.integers(len(grid)))]
            consider(cand, cost_at(cand))

    # Fine continuous pass: shrinking +/- delta perturbations.
    for delta in config.fine_deltas:
        if best_est.value <= config.tolerance:
            break
        for i in range(n_angles):
            for sign in (1.0, -1.0):
                cand = current.copy()
                cand[i] = (cand[i] + sign * delta) % TWO_PI
                est = cost_at(cand)
                if est.value < current_est.value:
                    consider(cand, est)
        for _ in range(config.max_iterations // max(1, len(config.fine_deltas))):
            cand = current.copy()
            i = int(rng.integers(n_angles))
            cand[i] = (cand[i] + rng.choice([1.0, -1.0]) * delta) % TWO_PI
            consider(cand, cost_at(cand))

    best_seq = v_structure.with_angles(best)
    return _result(u_seq, best_seq, best_est, HST, trace)


# ---------------------------------------------------------------------------
# Gradients


def _rz_positions(seq: GateSequence) -> list[int]:
    return [i for i, g in enumerate(seq.gates) if g.kind is GateKind.RZ]


def _insert_after(seq: GateSequence, position: int, gate: Gate) -> GateSequence:
    gs = list(seq.gates)
    gs.insert(position + 1, gate)
    return GateSequence(seq.num_qubits, tuple(gs))


def gradient_shift(
    u_seq: GateSequence,
    v_seq: GateSequence,
    cost_kind: CostKind,
    backend=EXACT,
    return_errors: bool = False,
):
    """Cost gradient via the rotation-insertion shift rule.

    The derivative with respect to each free angle is half the difference of
    the cost with an extra ``Rz(+pi/2)`` resp. ``Rz(-pi/2)`` inserted right
    after the parameterized gate: two cost evaluations per angle (the local
    cost's per-qubit average reuses the same pair of circuits).
    """
    if cost_kind.name not in ("hst", "lhst", "weighted"):
        raise ValueError("shift-rule gradients apply to the overlap-test costs")
    positions = _rz_positions(v_seq)
    grad = np.zeros(len(positions))
    errs = np.zeros(len(positions))
    for i, pos in enumerate(positions):
        qubit = v_seq.gates[pos].qubits[0]
        plus = _insert_after(v_seq, pos, rz(qubit, math.pi / 2))
        minus = _insert_after(v_seq, pos, rz(qubit, -math.pi / 2))
        b_plus = backend.child(_S_GRAD, i, 0) if isinstance(backend, SampledBackend) else backend
        b_minus = backend.child(_S_GRAD, i, 1) if isinstance(backend, SampledBackend) else backend
        c_plus = evaluate_cost(u_seq, plus, cost_kind, b_plus)
        c_minus = evaluate_cost(u_seq, minus, cost_kind, b_minus)
        grad[i] = 0.5 * (c_plus.value - c_minus.value)
        errs[i] = 0.5 * math.sqrt(c_plus.std_error**2 + c_minus.std_error**2)
    return (grad, errs) if return_errors else grad


def gradient_potq(u_seq: GateSequence, v_seq: GateSequence, backend=EXACT) -> np.ndarray:
    """Gradient of the phase-sensitive cost: one overlap-circuit evaluation
    per angle with the rotation's generator (as the exact gate ``Rz(pi)``,
    which equals -i Z) inserted after the parameterized gate."""
    positions = _rz_positions(v_seq)
    grad = np.zeros(len(positions))
    for i, pos in enumerate(positions):
        qubit = v_seq.gates[pos].qubits[0]
        tilted = _insert_after(v_seq, pos, rz(qubit, math.pi))
        b = backend.child(_S_GRAD, i) if isinstance(backend, SampledBackend) else backend
        est = cost_potq(u_seq, tilted, b)
        # cost = 1 - Re Tr(Vt^dag U)/d, and dRe/dalpha = Re Tr(tilted)/2.
        grad[i] = -0.5 * (1.0 - est.value)
    return grad


# ---------------------------------------------------------------------------
# Gradient descent


def optimize_gradient(
    u_seq: GateSequence,
    v_structure: GateSequence,
    cost_kind: CostKind,
    config: OptimizerConfig,
    noise: NoiseModel | None = None,
) -> CompilationResult:
    """Gradient descent over the free angles.

    For the overlap-test costs this is the adaptive two-step scheme: from the
    current angles take one and two steps along the negative gradient; if the
    two-step point improves the cost by at least ``eta * |grad|^2`` the rate
    doubles and the two-step point is accepted, else the one-step point is
    accepted (halving the rate when even it misses half the expected
    decrease). Convergence is declared after four consecutive iterations
    with squared gradient norm at most ``tolerance``. The phase-sensitive
    cost uses plain fixed-rate descent with restarts instead.
    """
    if cost_kind.name == "potq":
        return _optimize_gradient_potq(u_seq, v_structure, config, noise)

    trace = ConvergenceTrace()
    n_angles = len(v_structure.angles)
    if n_angles == 0:
        est = evaluate_cost(u_seq, v_structure, cost_kind, _backend(config, noise, _S_INIT, 0))
        trace.add(TraceRecord(1, est, 0.0, v_structure.structure_hash(), True, ()))
        return _result(u_seq, v_structure, est, cost_kind, trace)

    rng = generator(derive_seed(config.seed, _S_INIT))
    angles = rng.uniform(0.0, TWO_PI, n_angles)

    def cost_at(a, *path) -> CostEstimate:
        seq = v_structure.with_angles(np.asarray(a) % TWO_PI)
        return evaluate_cost(u_seq, seq, cost_kind, _backend(config, noise, *path))

    current_est = cost_at(angles, _S_INIT, 1)
    best_angles, best_est = angles.copy(), current_est
    eta = config.learning_rate
    grad_count = 0
    structure = v_structure.structure_hash()

    for tau in range(1, config.max_iterations + 1):
        seq = v_structure.with_angles(angles % TWO_PI)
        grad = gradient_shift(
            u_seq, seq, cost_kind, _backend(config, noise, _S_GRAD, tau)
        )
        grad_sq = float(np.dot(grad, grad))
        grad_count = grad_count + 1 if grad_sq <= config.tolerance else 0

        a1 = angles - eta * grad
        a2 = a1 - eta * grad
        c2 = cost_at(a2, _S_STEP, tau, 2)
        if current_est.value - c2.value >= eta * grad_sq:
            eta *= 2.0
            angles, current_est = a2, c2
        else:
            c1 = cost_at(a1, _S_STEP, tau, 1)
            if current_est.value - c1.value < (eta / 2.0) * grad_sq:
                eta /= 2.0
            angles, current_est = a1, c1

        trace.add(
            TraceRecord(
                tau, current_est, math.sqrt(grad_sq), structure, True,
                tuple(np.asarray(angles) % TWO_PI), learning_rate=eta,
            )
        )
        if current_est.value < best_est.value:
            best_angles, best_est = angles.copy(), current_est
        if grad_count >= 4:
            break

    best_seq = v_structure.with_angles(best_angles % TWO_PI)
    return _result(u_seq, best_seq, best_est, cost_kind, trace)


def _optimize_gradient_potq(
    u_seq: GateSequence,
    v_structure: GateSequence,
    config: OptimizerConfig,
    noise: NoiseModel | None,
) -> CompilationResult:
    trace = ConvergenceTrace()
    n_angles = len(v_structure.angles)
    structure = v_structure.structure_hash()
    best_angles = np.asarray(v_structure.angles, dtype=float)
    best_est: CostEstimate | None = None
    iteration = 0

    def cost_at(a, *path) -> CostEstimate:
        seq = v_structure.with_angles(np.asarray(a) % TWO_PI)
        return cost_potq(u_seq, seq, _backend(config, noise, *path))

    if n_angles == 0:
        est = cost_at((), _S_INIT, 0)
        trace.add(TraceRecord(1, est, 0.0, structure, True, ()))
        return _result(u_seq, v_structure, est, CostKind("potq"), trace)

    for restart in range(max(1, config.max_restarts)):
        rng = generator(derive_seed(config.seed, _S_RESTART, restart))
        angles = rng.uniform(0.0, TWO_PI, n_angles)
        for tau in range(1, config.max_iterations + 1):
            seq = v_structure.with_angles(angles % TWO_PI)
            grad = gradient_potq(
                u_seq, seq, _backend(config, noise, _S_GRAD, restart, tau)
            )
            angles = angles - config.learning_rate * grad
            est = cost_at(angles, _S_STEP, restart, tau)
            iteration += 1
            trace.add(
                TraceRecord(
                    iteration, est, float(np.linalg.norm(grad)), structure, True,
                    tuple(np.asarray(angles) % TWO_PI),
                )
            )
            if best_est is None or est.value < best_est.value:
                best_angles, best_est = angles.copy() % TWO_PI, est
        if best_est is not None and best_est.value <= config.tolerance:
            break
    best_seq = v_structure.with_angles(best_angles)
    return _result(u_seq, best_seq, best_est, CostKind("potq"), trace)


# ---------------------------------------------------------------------------
# Structure search


def _random_gate(rng: np.random.Generator, alphabet: Alphabet, n: int) -> Gate:
    kinds = alphabet.one_qubit_kinds()
    if n >= 2:
        kinds = kinds + alphabet.two_qubit_kinds()
    kinds = [k for k in kinds if k not in (GateKind.FIXED1, GateKind.FIXED2)]
    for _ in range(100):
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind is GateKind.RZ:
            return rz(int(rng.integers(n)), float(rng.uniform(0.0, TWO_PI)))
        if kind in (GateKind.CNOT, GateKind.CZ):
            a = int(rng.integers(n))
            b = int(rng.integers(n - 1))
            b = b if b < a else b + 1
            gate = Gate(kind, (a, b))
            if alphabet.allows(gate):
                return gate
            continue
        return Gate(kind, (int(rng.integers(n)),))
    raise UnsupportedGateError(f"could not sample a gate allowed by {alphabet.name!r}")


def _propose_structure(
    rng: np.random.Generator,
    seq: GateSequence,
    alphabet: Alphabet,
    frozen: int,
    depth_cap: int | None,
) -> GateSequence | None:
    """Replace a random subset of 1-3 movable gates with fresh random gates;
    the movable length may grow or shrink by at most one. Proposals that
    would violate the depth cap (or empty the sequence) are redrawn, up to
    100 attempts."""
    n = seq.num_qubits
    for _ in range(100):
        gs = list(seq.gates)
        movable = len(gs) - frozen
        if movable <= 0:
            count = 1
            positions: list[int] = []
        else:
            count = int(rng.integers(1, min(3, movable) + 1))
            positions = sorted(
                int(p) + frozen for p in rng.choice(movable, size=count, replace=False)
            )
        new_len = count + int(rng.integers(-1, 2))
        new_len = max(new_len, 0)
        if movable - count + new_len < 1 and frozen == 0:
            new_len = max(new_len, 1)
        insert_at = positions[0] if positions else len(gs)
        for p in reversed(positions):
            gs.pop(p)
        replacement = [_random_gate(rng, alphabet, n) for _ in range(new_len)]
        gs[insert_at:insert_at] = replacement
        if not gs:
            continue
        candidate = GateSequence(n, tuple(gs))
        if depth_cap is not None and depth(candidate) > depth_cap:
            continue
        return candidate
    return None


def _continuous_polish(
    u_seq: GateSequence,
    structure: GateSequence,
    cost_kind: CostKind,
    config: OptimizerConfig,
    noise: NoiseModel | None,
    proposal_index: int,
    rng: np.random.Generator | None = None,
) -> tuple[GateSequence, CostEstimate]:
    """One structure-search iteration's continuous half: a budget of
    ``EVALS_PER_UPDATE`` cost evaluations split between random angle probes
    (restarts in miniature, so fresh structures are judged fairly) and a
    simplex descent from the best probe."""
    angles = np.asarray(structure.angles, dtype=float)

    def backend_for(k: int):
        return _backend(config, noise, _S_EVAL, proposal_index, k)

    if angles.size == 0:
        return structure, evaluate_cost(u_seq, structure, cost_kind, backend_for(0))
    counter = [0]

    def fun(x):
        counter[0] += 1
        seq = structure.with_angles(np.asarray(x) % TWO_PI)
        return evaluate_cost(u_seq, seq, cost_kind, backend_for(counter[0])).value

    # Greedy coordinate sweep over the quarter-turn grid first (compiled
    # angles tend to sit at simple fractions of pi), then a simplex descent
    # from the sweep's winner with the remaining budget.
    best_x = angles.copy()
    best_f = fun(best_x)
    order = rng.permutation(angles.size) if rng is not None else range(angles.size)
    sweep_cap = max(EVALS_PER_UPDATE - 2 * angles.size, EVALS_PER_UPDATE // 2)
    for i in order:
        if counter[0] >= sweep_cap:
            break
        for value in (0.0, math.pi / 2, math.pi, 1.5 * math.pi):
            cand = best_x.copy()
            cand[i] = value
            f = fun(cand)
            if f < best_f:
                best_x, best_f = cand, f
    budget = max(EVALS_PER_UPDATE - counter[0], 5)
    x_best, _ = simplex_searcher(fun, best_x, budget, rng)
    seq = structure.with_angles(np.asarray(x_best) % TWO_PI)
    return seq, evaluate_cost(u_seq, seq, cost_kind, backend_for(0))


def _better(candidate: tuple[CostEstimate, GateSequence], incumbent: tuple[CostEstimate, GateSequence]) -> bool:
    # Strictly lower cost wins; on exact ties the shorter sequence wins.
    c_est, c_seq = candidate
    i_est, i_seq = incumbent
    if c_est.value != i_est.value:
        return c_est.value < i_est.value
    return len(c_seq) < len(i_seq)


def anneal_structure(
    u_seq: GateSequence,
    alphabet: Alphabet,
    initial_length: int,
    cost_kind: CostKind,
    config: OptimizerConfig,
    noise: NoiseModel | None = None,
    depth_cap: int | None = None,
    initial_sequence: GateSequence | None = None,
    frozen_prefix: int = 0,
) -> CompilationResult:
    """Simulated annealing over gate structures.

    Runs up to ``max_restarts`` independent chains (compilations are
    conventionally repeated from scratch several times); within a chain each
    of up to ``max_iterations`` proposals replaces a random subset of 1-3
    gates (length drift at most one) or re-polishes the incumbent's angles,
    and is accepted by the annealing rule with temperature
    ``T0 * ratio^accepted``. The best sequence ever seen is returned; ties
    prefer shorter sequences. ``initial_sequence`` / ``frozen_prefix`` let
    the layered search keep an already-found prefix fixed while proposals
    only touch the fresh tail (angles are always polished jointly).
    """
    if initial_length < 1 and initial_sequence is None:
        raise ValueError("initial structure length must be at least 1")
    n = u_seq.num_qubits
    trace = ConvergenceTrace()
    best_seq: GateSequence | None = None
    best_est: CostEstimate | None = None

    for chain in range(max(1, config.max_restarts)):
        rng = generator(derive_seed(config.seed, _S_PROPOSAL, chain))
        if initial_sequence is not None:
            structure = initial_sequence
        else:
            # Build the start incrementally so a tight depth cap still yields
            # a (possibly shorter) valid structure.
            gs: list[Gate] = []
            while len(gs) < initial_length:
                for _ in range(20):
                    gate = _random_gate(rng, alphabet, n)
                    cand = GateSequence(n, tuple(gs) + (gate,))
                    if depth_cap is None or depth(cand) <= depth_cap:
                        gs.append(gate)
                        break
                else:
                    break
            if not gs:
                gs.append(_random_gate(rng, alphabet, n))
            structure = GateSequence(n, tuple(gs))
            if depth_cap is not None and depth(structure) > depth_cap:
                raise UnsupportedGateError(
                    "could not draw an initial structure under the depth cap"
                )

        current_seq, current_est = _continuous_polish(
            u_seq, structure, cost_kind, config, noise, 1000 * chain, rng
        )
        if best_est is None or _better((current_est, current_seq), (best_est, best_seq)):
            best_seq, best_est = current_seq, current_est
        accepted = 0
        trace.add(
            TraceRecord(
                0, current_est, None, current_seq.structure_hash(), True, current_seq.angles
            )
        )

        for proposal in range(1, config.max_iterations + 1):
            if best_est.value <= config.tolerance:
                break
            if current_seq.angles and rng.random() < 0.3:
                # Angle-only move: re-polish the incumbent structure with
                # fresh evaluation seeds so its continuous solution keeps
                # improving alongside the structural search.
                candidate = current_seq
            else:
                candidate = _propose_structure(
                    rng, current_seq, alphabet, frozen_prefix, depth_cap
                )
            if candidate is None:
                continue
            cand_seq, cand_est = _continuous_polish(
                u_seq, candidate, cost_kind, config, noise, 1000 * chain + proposal, rng
            )
            temperature = config.initial_temperature * config.cooling_ratio**accepted
            if accept_proposal(cand_est.value - current_est.value, temperature, rng):
                current_seq, current_est = cand_seq, cand_est
                accepted += 1
                trace.add(
                    TraceRecord(
                        accepted, cand_est, None, cand_seq.structure_hash(), True,
                        cand_seq.angles,
                    )
                )
                if _better((cand_est, cand_seq), (best_est, best_seq)):
                    best_seq, best_est = cand_seq, cand_est
        if best_est.value <= config.tolerance:
            break
    return _result(u_seq, best_seq, best_est, cost_kind, trace)


def layered_refinement(
    u_seq: GateSequence,
    alphabet: Alphabet,
    segment_length: int,
    rounds: int,
    cost_kind: CostKind,
    config: OptimizerConfig,
    noise: NoiseModel | None = None,
) -> CompilationResult:
    """Structure search that grows the circuit segment by segment.

    Each round freezes the structure found so far, appends a fresh random
    segment, and anneals only the new segment while polishing all angles
    jointly. The best-ever result is retained, so the returned cost is
    non-increasing across rounds. ``segment_length = 0`` degenerates to a
    single plain structure anneal.
    """
    if rounds < 1:
        raise ValueError("need at least one round")
    if segment_length == 0:
        return anneal_structure(u_seq, alphabet, max(1, config.max_iterations // 10),
                                cost_kind, config, noise)

    merged = ConvergenceTrace()
    prefix: GateSequence | None = None
    best: tuple[CostEstimate, GateSequence] | None = None
    for round_idx in range(rounds):
        # Each chain of the round gets its own fresh random segment, so the
        # restarts explore genuinely different extensions of the prefix.
        for chain in range(max(1, config.max_restarts)):
            rng = generator(derive_seed(config.seed, _S_RESTART, round_idx, chain))
            fresh = [
                _random_gate(rng, alphabet, u_seq.num_qubits) for _ in range(segment_length)
            ]
            if prefix is None:
                start = GateSequence(u_seq.num_qubits, tuple(fresh))
                frozen = 0
            else:
                start = prefix.extended(fresh)
                frozen = len(prefix)
            chain_config = replace(
                config,
                seed=derive_seed(config.seed, _S_ANNEAL, round_idx, chain),
                max_restarts=1,
            )
            result = anneal_structure(
                u_seq, alphabet, segment_length, cost_kind, chain_config, noise,
                initial_sequence=start, frozen_prefix=frozen,
            )
            for rec in result.trace.records:
                merged.add(rec)
            if best is None or _better((result.best_cost, result.best_sequence), best):
                best = (result.best_cost, result.best_sequence)
            if best[0].value <= config.tolerance:
                break
        prefix = best[1]
        if best[0].value <= config.tolerance:
            break
    return _result(u_seq, best[1], best[0], cost_kind, merged)
