"""Variational quantum-compiler toolkit.

Compiles target unitaries into native gate alphabets by minimizing
overlap-test costs evaluated on a dense statevector simulator, exactly or by
seeded shot sampling with optional stochastic noise.
"""

from .cost import (
    EXACT,
    CostEstimate,
    CostKind,
    ExactBackend,
    FIXED_INPUT,
    FIXED_INPUT_LOCAL,
    HST,
    LHST,
    POTQ,
    SampledBackend,
    avg_fidelity_from_hst,
    build_hst_circuit,
    build_lhst_circuit,
    build_pooq_circuit,
    build_potq_circuit,
    cost_fixed_input,
    cost_fixed_input_local,
    cost_hst,
    cost_lhst,
    cost_lhst_j,
    cost_potq,
    cost_weighted,
    evaluate_cost,
    fidelity_bound_from_cq,
    overlap_via_potq,
    trace_via_lhst,
    trace_via_pooq,
    weighted,
)
from .errors import CapacityError, CircuitParseError, UnsupportedGateError
from .gates import (
    Alphabet,
    FULL_ALPHABET,
    Gate,
    GateKind,
    GateSequence,
    IBM_ALPHABET,
    RIGETTI_ALPHABET,
    alphabet_by_name,
    ansatz_layered,
    ansatz_universal_1q,
    ansatz_universal_2q,
    conjugate_sequence,
    controlled_sequence,
    depth,
    fold_rz,
    hst_depth,
    identity_sequence,
    potq_depth,
    transpose_sequence,
)
from .noise import NoiseModel, noisy_apply, noisy_cost
from .optimize import (
    CompilationResult,
    ConvergenceTrace,
    OptimizerConfig,
    TraceRecord,
    anneal_structure,
    gradient_potq,
    gradient_shift,
    layered_refinement,
    optimize_bisection,
    optimize_continuous_free,
    optimize_gradient,
)
from .presets import preset_target
from .serialize import export_json, export_qasm, import_json
from .simulator import (
    MeasurementSample,
    StateVector,
    UnitaryMatrix,
    apply_gate,
    global_phase_distance,
    haar_random_state,
    haar_random_unitary,
    marginal_probs,
    prepare_bell,
    prob_all_zero,
    sample_bitstrings,
    sequence_to_matrix,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
