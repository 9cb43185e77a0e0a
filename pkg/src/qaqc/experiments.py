"""Config-driven experiment runs with CSV/JSON outputs.

A run is described by one JSON document (schema in ``docs/config.schema.json``):
target, alphabet, cost kind, optimizer, optimizer config, optional noise
model, and an ansatz for the fixed-structure optimizers. Outputs are a
per-iteration CSV trace and a JSON report; identical spec + seed gives
byte-identical CSV.
"""
from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass
from pathlib import Path

from .cost import (
    CostKind,
    EXACT,
    FIXED_INPUT,
    FIXED_INPUT_LOCAL,
    HST,
    LHST,
    POTQ,
    cost_hst,
    weighted,
)
from .errors import CircuitParseError
from .gates import (
    Alphabet,
    GateSequence,
    TWO_PI,
    alphabet_by_name,
    ansatz_layered,
    ansatz_universal_1q,
    ansatz_universal_2q,
    pi_multiple_label,
)
from .noise import NoiseModel
from .optimize import (
    CompilationResult,
    OptimizerConfig,
    anneal_structure,
    layered_refinement,
    optimize_bisection,
    optimize_continuous_free,
    optimize_gradient,
)
from .presets import PRESET_NAMES, preset_target
from .seeding import derive_seed, generator
from .serialize import export_json, import_json

_COST_KINDS = {
    "hst": HST,
    "lhst": LHST,
    "potq": POTQ,
    "fixed_input": FIXED_INPUT,
    "fixed_input_local": FIXED_INPUT_LOCAL,
}
_OPTIMIZERS = ("free", "bisection", "gradient", "anneal", "layered")

_TARGET_SEED_STREAM = 97
_ANSATZ_SEED_STREAM = 98


@dataclass
class ExperimentSpec:
    name: str
    target: GateSequence
    target_label: str
    alphabet: Alphabet
    cost_kind: CostKind
    optimizer: str
    config: OptimizerConfig
    noise: NoiseModel | None
    ansatz: GateSequence | None
    initial_length: int
    segment_length: int
    rounds: int
    depth_cap: int | None
    doc: dict

    def describe(self) -> dict:
        return dict(self.doc)


@dataclass
class RunReport:
    spec: ExperimentSpec
    result: CompilationResult
    wall_clock: float
    rows: list[dict]
    columns: list[str]
    succeeded: bool
    csv_path: Path | None = None
    json_path: Path | None = None


def _parse_config(doc: dict, seed_override: int | None) -> OptimizerConfig:
    cfg = dict(doc.get("config", {}))
    annealing = cfg.pop("annealing", None)
    if annealing is not None:
        cfg["initial_temperature"] = annealing.get("initial_temperature", 0.2)
        cfg["cooling_ratio"] = annealing.get("cooling_ratio", 0.9)
    if seed_override is not None:
        cfg["seed"] = seed_override
    if "fine_deltas" in cfg:
        cfg["fine_deltas"] = tuple(cfg["fine_deltas"])
    try:
        return OptimizerConfig(**cfg)
    except (TypeError, ValueError) as exc:
        raise CircuitParseError(str(exc), field="config") from None


def _parse_target(doc: dict, config: OptimizerConfig) -> tuple[GateSequence, str]:
    target = doc.get("target")
    if isinstance(target, dict) and "circuit" in target:
        return import_json(json.dumps(target["circuit"])), "circuit"
    if not isinstance(target, str):
        raise CircuitParseError("target must be a preset name or {'circuit': ...}", field="target")
    label = target
    match = re.fullmatch(r"(Example[12])\((\d+)\)", target)
    n = doc.get("target_qubits")
    if match:
        target, n = match.group(1), int(match.group(2))
    if target not in PRESET_NAMES:
        raise CircuitParseError(f"unknown preset {target!r}", field="target")
    seq = preset_target(target, n, derive_seed(config.seed, _TARGET_SEED_STREAM))
    return seq, label


def _parse_ansatz(doc: dict, target: GateSequence, config: OptimizerConfig) -> GateSequence | None:
    spec = doc.get("ansatz")
    if spec is None:
        return None
    rng = generator(derive_seed(config.seed, _ANSATZ_SEED_STREAM))
    if isinstance(spec, str):
        if spec == "target":
            # Same discrete structure as the target; angles are (re)drawn by
            # the optimizer itself.
            return target.with_angles(rng.uniform(0.0, TWO_PI, len(target.angles)))
        if spec == "universal":
            if target.num_qubits == 1:
                return ansatz_universal_1q(rng.uniform(0.0, TWO_PI, 3))
            if target.num_qubits == 2:
                return ansatz_universal_2q(rng.uniform(0.0, TWO_PI, 15))
            raise CircuitParseError("universal ansatz covers 1 or 2 qubits", field="ansatz")
        raise CircuitParseError(f"unknown ansatz {spec!r}", field="ansatz")
    if isinstance(spec, dict):
        if "circuit" in spec:
            return import_json(json.dumps(spec["circuit"]))
        if "layered" in spec:
            return ansatz_layered(target.num_qubits, int(spec["layered"]),
                                  derive_seed(config.seed, _ANSATZ_SEED_STREAM))
    raise CircuitParseError("ansatz must be a name or an object", field="ansatz")


def spec_from_json(doc: dict, seed_override: int | None = None) -> ExperimentSpec:
    """Validate and resolve a run document. Raises ``CircuitParseError`` with
    the offending field on any problem; nothing is written to disk here."""
    if not isinstance(doc, dict):
        raise CircuitParseError("run config must be an object", field="$")
    optimizer = doc.get("optimizer", "free")
    if optimizer not in _OPTIMIZERS:
        raise CircuitParseError(f"unknown optimizer {optimizer!r}", field="optimizer")

    config = _parse_config(doc, seed_override)
    target, label = _parse_target(doc, config)

    cost_doc = doc.get("cost", {"kind": "hst"})
    kind_name = cost_doc.get("kind", "hst")
    if kind_name == "weighted":
        kind = weighted(cost_doc.get("q"))
    elif kind_name in _COST_KINDS:
        kind = _COST_KINDS[kind_name]
    else:
        raise CircuitParseError(f"unknown cost kind {kind_name!r}", field="cost.kind")

    noise = None
    if doc.get("noise") is not None:
        try:
            noise = NoiseModel.from_json(doc["noise"])
        except (TypeError, ValueError) as exc:
            raise CircuitParseError(str(exc), field="noise") from None
        if config.shots_per_eval <= 0:
            raise CircuitParseError(
                "a noise model requires a sampled backend (config.shots_per_eval > 0)",
                field="noise",
            )

    try:
        alphabet = alphabet_by_name(doc.get("alphabet", "full"))
    except KeyError as exc:
        raise CircuitParseError(str(exc), field="alphabet") from None

    ansatz = _parse_ansatz(doc, target, config)
    if optimizer in ("free", "bisection", "gradient") and ansatz is None:
        raise CircuitParseError(f"optimizer {optimizer!r} needs an ansatz", field="ansatz")
    if ansatz is not None and ansatz.num_qubits != target.num_qubits:
        raise CircuitParseError("ansatz width does not match the target", field="ansatz")
    if optimizer == "bisection" and kind.name != "hst":
        raise CircuitParseError("bisection optimizes the global cost only", field="cost.kind")

    return ExperimentSpec(
        name=str(doc.get("name", label.lower())),
        target=target,
        target_label=label,
        alphabet=alphabet,
        cost_kind=kind,
        optimizer=optimizer,
        config=config,
        noise=noise,
        ansatz=ansatz,
        initial_length=int(doc.get("initial_length", 6)),
        segment_length=int(doc.get("segment_length", 4)),
        rounds=int(doc.get("rounds", 2)),
        depth_cap=doc.get("depth_cap"),
        doc=doc,
    )


def load_spec(path: str | Path, seed_override: int | None = None) -> ExperimentSpec:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    return spec_from_json(doc, seed_override)


def _dispatch(spec: ExperimentSpec) -> CompilationResult:
    if spec.optimizer == "free":
        return optimize_continuous_free(
            spec.target, spec.ansatz, spec.cost_kind, spec.config, spec.noise
        )
    if spec.optimizer == "bisection":
        return optimize_bisection(spec.target, spec.ansatz, spec.config, spec.noise)
    if spec.optimizer == "gradient":
        return optimize_gradient(
            spec.target, spec.ansatz, spec.cost_kind, spec.config, spec.noise
        )
    if spec.optimizer == "anneal":
        return anneal_structure(
            spec.target, spec.alphabet, spec.initial_length, spec.cost_kind,
            spec.config, spec.noise, depth_cap=spec.depth_cap,
        )
    return layered_refinement(
        spec.target, spec.alphabet, spec.segment_length, spec.rounds,
        spec.cost_kind, spec.config, spec.noise,
    )


def _format_float(x: float) -> str:
    return repr(float(x))


def run_experiment(spec: ExperimentSpec, output_dir: str | Path | None = None) -> RunReport:
    """Execute a run. For local-cost runs the per-iteration angles are also
    scored with the exact noiseless global cost (the ``hst_via_lhst_cost``
    column), which is the quantity the barren-plateau and noise-floor
    figures track."""
    start = time.perf_counter()
    result = _dispatch(spec)
    wall = time.perf_counter() - start

    fixed_structure = spec.optimizer in ("free", "bisection", "gradient")
    with_hst_via_lhst = spec.cost_kind.name == "lhst" and fixed_structure and spec.ansatz is not None
    with_gradient = spec.optimizer == "gradient"

    columns = ["iteration", "cost", "std_error"]
    if with_gradient:
        columns.append("gradient_norm")
    if with_hst_via_lhst:
        columns.append("hst_via_lhst_cost")

    rows = []
    for rec in result.trace.records:
        row = {
            "iteration": rec.iteration,
            "cost": _format_float(rec.cost.value),
            "std_error": _format_float(rec.cost.std_error),
        }
        if with_gradient:
            row["gradient_norm"] = (
                "" if rec.gradient_norm is None else _format_float(rec.gradient_norm)
            )
        if with_hst_via_lhst:
            seq = spec.ansatz.with_angles(rec.angles)
            row["hst_via_lhst_cost"] = _format_float(cost_hst(spec.target, seq, EXACT).value)
        rows.append(row)

    succeeded = bool(result.best_cost.value <= spec.config.tolerance)
    report = RunReport(spec, result, wall, rows, columns, succeeded)
    if output_dir is not None:
        _write_report(report, Path(output_dir))
    return report


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    import csv

    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def _angle_report(seq: GateSequence) -> list[dict]:
    out = []
    for theta in seq.angles:
        out.append(
            {
                "theta": float(theta),
                "turns_of_pi": float(theta / math.pi),
                "nearest_pi_multiple": pi_multiple_label(theta),
            }
        )
    return out


def _write_report(report: RunReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    base = report.spec.name
    report.csv_path = out_dir / f"{base}.csv"
    report.json_path = out_dir / f"{base}.json"
    _write_csv(report.csv_path, report.columns, report.rows)
    doc = {
        "spec": report.spec.describe(),
        "best_circuit": json.loads(export_json(report.result.best_sequence)),
        "best_cost": report.result.best_cost.value,
        "std_error": report.result.best_cost.std_error,
        "shots": report.result.best_cost.shots,
        "epsilon_approx": float(report.result.epsilon_approx),
        "succeeded": report.succeeded,
        "iterations": len(report.rows),
        "wall_clock_seconds": report.wall_clock,
        "angle_report": _angle_report(report.result.best_sequence),
    }
    report.json_path.write_text(json.dumps(doc, indent=2) + "\n")


def scan_depth(
    spec: ExperimentSpec, max_depth: int, output_dir: str | Path | None = None
) -> list[tuple[int, float, float]]:
    """Best cost found by the structure annealer under each depth budget
    1..max_depth. Each depth gets its own derived seed; rows are
    (depth, best_cost, std_error)."""
    if max_depth < 1:
        raise ValueError("max depth must be at least 1")
    from dataclasses import replace

    rows = []
    for cap in range(1, max_depth + 1):
        cfg = replace(spec.config, seed=derive_seed(spec.config.seed, 11, cap))
        length = max(1, min(spec.initial_length, cap * spec.target.num_qubits))
        result = anneal_structure(
            spec.target, spec.alphabet, length, spec.cost_kind, cfg, spec.noise,
            depth_cap=cap,
        )
        rows.append((cap, result.best_cost.value, result.best_cost.std_error))
    if output_dir is not None:
        out_dir = Path(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{spec.name}-depth-scan.csv"
        _write_csv(
            path,
            ["depth", "best_cost", "std_error"],
            [
                {
                    "depth": d,
                    "best_cost": _format_float(c),
                    "std_error": _format_float(e),
                }
                for d, c, e in rows
            ],
        )
    return rows
