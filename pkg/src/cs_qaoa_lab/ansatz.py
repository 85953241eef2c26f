"""Variational compressors: continuous (C) and discrete (D) ansatz training.

Both ansatz circuits describe U_cs dagger: they are applied to |0...0>|q>
inputs and produce the original-space states. The trained stage discards
the first ``n - m`` qubits of its active register.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Sequence

import numpy as np
from numpy.typing import NDArray

from cs_qaoa_lab.compression import (
    BasisPermutation,
    Compressor,
    GateForm,
    StageBuilder,
    compressed_feasible_mass,
    identity,
    survival_rate,
)
from cs_qaoa_lab.constraints import CompressedHamiltonian, ConstraintSpec, build_hcs
from cs_qaoa_lab.errors import TrainingThresholdError
from cs_qaoa_lab.gates import CNOT, CSWAP, RY, Circuit, ControlledRY, GateOp, PauliX, track_indices
from cs_qaoa_lab.optimizers import PowellConfig, SaConfig, anneal_binary, powell_minimize
from cs_qaoa_lab.simulator import apply_matrix, zero_sector_mask

logger = logging.getLogger(__name__)

ANSATZ_KINDS = ("C", "D")
C_THRESHOLD = 0.98
D_THRESHOLD = 1.0
MAX_ESCALATIONS = 3


def c_param_count(n: int, layers: int) -> int:
    return n + layers * (3 * n - 3)


def c_ansatz_circuit(theta: Sequence[float], qubits: Sequence[int], layers: int) -> Circuit:
    """Initial RY column, then per layer CRY(i -> i+1), CRY(i -> i+2), RY column.

    Angles enter as RY(2 theta) so theta in [0, pi) spans a full rotation.
    """
    q = tuple(qubits)
    n = len(q)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != c_param_count(n, layers):
        raise ValueError(f"C-ansatz with n={n}, layers={layers} needs {c_param_count(n, layers)} angles, got {theta.size}")
    values = iter(theta)
    gates: list[GateOp] = [RY(q[i], 2.0 * next(values)) for i in range(n)]
    for _ in range(layers):
        gates += [ControlledRY(q[i], q[i + 1], 2.0 * next(values)) for i in range(n - 1)]
        gates += [ControlledRY(q[i], q[i + 2], 2.0 * next(values)) for i in range(n - 2)]
        gates += [RY(q[i], 2.0 * next(values)) for i in range(n)]
    return Circuit(tuple(gates))


def d_param_count(n: int, m: int, layers: int) -> int:
    return (n - m) + layers * (n * (n - 1) * (n - 2) // 2 + n * (n - 1) + n)


@lru_cache(maxsize=64)
def d_slots(n: int, m: int, layers: int) -> tuple[tuple[str, tuple[int, ...]], ...]:
    """Gate slot per parameter bit, in decode order, on local qubit indices."""
    slots: list[tuple[str, tuple[int, ...]]] = [("x", (i,)) for i in range(n - m)]
    for _ in range(layers):
        for c in range(n):
            others = [i for i in range(n) if i != c]
            slots += [("cswap", (c, a, b)) for ai, a in enumerate(others) for b in others[ai + 1 :]]
        slots += [("cnot", (c, t)) for c in range(n) for t in range(n) if c != t]
        slots += [("x", (i,)) for i in range(n)]
    return tuple(slots)


def decode_d_ansatz(
    bits: Sequence[int],
    n: int,
    m: int,
    layers: int,
    qubits: Sequence[int] | None = None,
) -> Circuit:
    q = tuple(range(n)) if qubits is None else tuple(qubits)
    if len(q) != n:
        raise ValueError(f"Expected {n} qubits, got {len(q)}")
    slots = d_slots(n, m, layers)
    if len(bits) != len(slots):
        raise ValueError(f"D-ansatz with (n, m, layers)=({n}, {m}, {layers}) needs {len(slots)} bits, got {len(bits)}")
    gates: list[GateOp] = []
    for bit, (kind, local) in zip(bits, slots):
        if not bit:
            continue
        if kind == "x":
            gates.append(PauliX(q[local[0]]))
        elif kind == "cnot":
            gates.append(CNOT(q[local[0]], q[local[1]]))
        else:
            gates.append(CSWAP(q[local[0]], q[local[1]], q[local[2]]))
    return Circuit(tuple(gates))


@dataclass(frozen=True)
class AnsatzParams:
    kind: str
    values: tuple[float, ...]
    n: int
    m: int
    layers: int

    def __post_init__(self) -> None:
        if self.kind not in ANSATZ_KINDS:
            raise ValueError(f"Unknown ansatz '{self.kind}'. Use 'C' or 'D'")
        expected = c_param_count(self.n, self.layers) if self.kind == "C" else d_param_count(self.n, self.m, self.layers)
        if len(self.values) != expected:
            raise ValueError(f"{self.kind}-ansatz needs {expected} parameters, got {len(self.values)}")

    def circuit(self, qubits: Sequence[int] | None = None) -> Circuit:
        """U_cs dagger on ``qubits`` (default 0..n-1)."""
        q = tuple(range(self.n)) if qubits is None else tuple(qubits)
        if self.kind == "C":
            return c_ansatz_circuit(self.values, q, self.layers)
        return decode_d_ansatz([int(v) for v in self.values], self.n, self.m, self.layers, q)


@dataclass
class TrainingResult:
    compressor: Compressor
    stage: Compressor
    params: AnsatzParams | None
    energy: float
    p_sur: float
    threshold: float
    attempts: list[dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.p_sur >= self.threshold - 1e-9


def _stage_support(stage: BasisPermutation | GateForm) -> set[int]:
    if isinstance(stage, BasisPermutation):
        return set(stage.qubits)
    return {q for gate in stage.circuit.gates for q in gate.qubits}


def active_qubits(base: Compressor, variables: Sequence[int]) -> tuple[int, ...]:
    """Kept qubits of ``base`` entangled with ``variables`` by its stages."""
    support = set(variables)
    changed = True
    while changed:
        changed = False
        for stage in base.stages:
            touched = _stage_support(stage)
            if touched & support and not touched <= support:
                support |= touched
                changed = True
    return tuple(q for q in base.kept if q in support)


@dataclass(frozen=True, eq=False)
class _StageProblem:
    """Register bookkeeping for training one stage on top of a frozen base."""

    base: Compressor
    hcs: CompressedHamiltonian
    active: tuple[int, ...]
    n_drop: int

    @property
    def n_local(self) -> int:
        return len(self.active)

    @property
    def m_local(self) -> int:
        return self.n_local - self.n_drop

    def stage_for(self, circuit_dagger: Circuit, name: str) -> Compressor:
        rest = tuple(q for q in self.base.kept if q not in self.active) + self.base.discard
        kept = self.active[self.n_drop :] + rest
        return Compressor(
            self.base.n_qubits,
            self.active[: self.n_drop],
            kept,
            (GateForm(circuit_dagger.inverse()),),
            name,
        )

    def compressed_inputs(self) -> NDArray[np.int64]:
        return self.base.then(self.stage_for(Circuit(), "inputs")).embed(np.arange(1 << (self.base.m - self.n_drop)))


def _stage_problem(
    hcs: CompressedHamiltonian,
    base: Compressor | None,
    m: int | None,
) -> _StageProblem:
    base = base or identity(hcs.n_qubits)
    if base.n_qubits != hcs.n_qubits:
        raise ValueError(f"Base compressor acts on {base.n_qubits} qubits but H_cs on {hcs.n_qubits}")
    active = active_qubits(base, hcs.variables)
    if not active:
        raise ValueError("Every constraint variable is already discarded and untouched by earlier stages")
    if m is None:
        count = _count_feasible(base, hcs.feasible)
        m = min(max(math.ceil(math.log2(max(count, 1))), 1), base.m)
    n_drop = base.m - m
    if not 0 <= n_drop <= len(active):
        raise ValueError(f"Cannot reach m={m} by discarding among {len(active)} active qubits (current m={base.m})")
    return _StageProblem(base, hcs, active, n_drop)


def _count_feasible(base: Compressor, mask: NDArray[np.bool_]) -> int:
    return int(round(float(np.sum(compressed_feasible_mass(base, mask)))))


def _feasible_for_survival(problem: _StageProblem) -> NDArray[np.bool_]:
    """Feasible states of this constraint that the base keeps in its sector."""
    feasible = problem.hcs.feasible.copy()
    if problem.base.is_permutation() and problem.base.discard:
        sector = zero_sector_mask(problem.base.n_qubits, problem.base.discard)
        feasible &= sector[problem.base.permutation()]
    return feasible


def _stage_energy_dense(problem: _StageProblem, circuit_dagger: Circuit, inputs: NDArray[np.int64]) -> float:
    n = problem.base.n_qubits
    amps = np.zeros((1 << n, inputs.size), dtype=np.complex128)
    amps[inputs, np.arange(inputs.size)] = 1.0
    for gate in circuit_dagger.gates:
        amps = apply_matrix(amps, n, gate.qubits, gate.matrix())
    amps = problem.base.apply_dagger(amps)
    return float(np.sum(problem.hcs.diagonal @ (np.abs(amps) ** 2)) / inputs.size)


def _finish(
    problem: _StageProblem,
    params: AnsatzParams | None,
    circuit_dagger: Circuit,
    energy: float,
    threshold: float,
    name: str,
) -> TrainingResult:
    stage = problem.stage_for(circuit_dagger, name)
    compressor = problem.base.then(stage)
    feasible = _feasible_for_survival(problem)
    p_sur = survival_rate(compressor, feasible) if feasible.any() else 0.0
    return TrainingResult(compressor, stage, params, energy, p_sur, threshold)


def train_c_ansatz(
    hcs: CompressedHamiltonian,
    layers: int,
    n_rep: int,
    rng: np.random.Generator,
    powell: PowellConfig | None = None,
    *,
    base: Compressor | None = None,
    m: int | None = None,
    threshold: float = C_THRESHOLD,
) -> TrainingResult:
    """Powell-minimize E(U(theta) U_base, H) from ``n_rep`` starts in [0, pi)."""
    if layers < 1:
        raise ValueError(f"C-ansatz needs at least one layer, got {layers}")
    if n_rep < 1:
        raise ValueError(f"n_rep must be >= 1, got {n_rep}")
    problem = _stage_problem(hcs, base, m)
    if problem.n_drop == 0:
        return _finish(problem, None, Circuit(), float("nan"), threshold, "C-identity")

    inputs = problem.compressed_inputs()
    count = c_param_count(problem.n_local, layers)

    def energy(theta: NDArray[np.float64]) -> float:
        return _stage_energy_dense(problem, c_ansatz_circuit(theta, problem.active, layers), inputs)

    best = None
    for rep in range(n_rep):
        result = powell_minimize(energy, rng.uniform(0.0, math.pi, size=count), powell)
        logger.debug("C-ansatz start %d/%d: E=%.6g", rep + 1, n_rep, result.fun)
        if best is None or result.fun < best.fun:
            best = result
    assert best is not None
    params = AnsatzParams("C", tuple(float(v) for v in best.x), problem.n_local, problem.m_local, layers)
    return _finish(problem, params, params.circuit(problem.active), best.fun, threshold, f"C{layers}")


def train_d_ansatz(
    hcs: CompressedHamiltonian,
    layers: int,
    sa: SaConfig,
    rng: np.random.Generator,
    *,
    base: Compressor | None = None,
    m: int | None = None,
    threshold: float = D_THRESHOLD,
) -> TrainingResult:
    """Anneal the D-ansatz slot bits; one sweep over all bits per outer loop."""
    if layers < 1:
        raise ValueError(f"D-ansatz needs at least one layer, got {layers}")
    problem = _stage_problem(hcs, base, m)
    if problem.n_drop == 0:
        return _finish(problem, None, Circuit(), float("nan"), threshold, "D-identity")

    inputs = problem.compressed_inputs()
    n_local, m_local = problem.n_local, problem.m_local
    count = d_param_count(n_local, m_local, layers)
    base_inverse = np.argsort(problem.base.permutation()) if problem.base.is_permutation() else None

    def energy(bits: NDArray[np.int8]) -> float:
        circuit = decode_d_ansatz(bits, n_local, m_local, layers, problem.active)
        if base_inverse is None:
            return _stage_energy_dense(problem, circuit, inputs)
        labels = base_inverse[track_indices(circuit.gates, inputs)]
        return float(np.mean(hcs.diagonal[labels]))

    result = anneal_binary(energy, count, sa, rng, x0=np.zeros(count, dtype=np.int8))
    params = AnsatzParams("D", tuple(int(b) for b in result.x), n_local, m_local, layers)
    return _finish(problem, params, params.circuit(problem.active), result.fun, threshold, f"D{layers}")


@dataclass(frozen=True)
class TrainingBudget:
    ansatz: str = "D"
    layers: int = 1
    n_rep: int = 10
    sa: SaConfig = field(default_factory=SaConfig)
    powell: PowellConfig = field(default_factory=PowellConfig)
    threshold: float | None = None
    max_escalations: int = MAX_ESCALATIONS

    def __post_init__(self) -> None:
        if self.ansatz not in ANSATZ_KINDS:
            raise ValueError(f"Unknown ansatz '{self.ansatz}'. Use 'C' or 'D'")

    @property
    def effective_threshold(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return C_THRESHOLD if self.ansatz == "C" else D_THRESHOLD

    def escalated(self) -> TrainingBudget:
        if self.ansatz == "C":
            return replace(self, n_rep=self.n_rep * 2)
        return replace(self, sa=replace(self.sa, n_loop=self.sa.n_loop * 2))

    def describe(self) -> dict[str, Any]:
        data: dict[str, Any] = {"ansatz": self.ansatz, "layers": self.layers}
        if self.ansatz == "C":
            data["n_rep"] = self.n_rep
        else:
            data.update(n_loop=self.sa.n_loop, t_initial=self.sa.t_initial, t_final=self.sa.t_final)
        return data


def train_once(
    hcs: CompressedHamiltonian,
    budget: TrainingBudget,
    rng: np.random.Generator,
    *,
    base: Compressor | None = None,
    m: int | None = None,
) -> TrainingResult:
    threshold = budget.effective_threshold
    if budget.ansatz == "C":
        return train_c_ansatz(hcs, budget.layers, budget.n_rep, rng, budget.powell, base=base, m=m, threshold=threshold)
    return train_d_ansatz(hcs, budget.layers, budget.sa, rng, base=base, m=m, threshold=threshold)


def train_with_escalation(
    hcs: CompressedHamiltonian,
    budget: TrainingBudget,
    rng: np.random.Generator,
    *,
    base: Compressor | None = None,
    m: int | None = None,
) -> TrainingResult:
    """Retry below threshold: double n_rep (C) or n_loop (D) up to
    ``max_escalations`` times, then add one layer. Returns the best attempt;
    check ``passed``.
    """
    schedule = [budget]
    for _ in range(budget.max_escalations):
        schedule.append(schedule[-1].escalated())
    schedule.append(replace(schedule[-1], layers=budget.layers + 1))

    attempts: list[dict[str, Any]] = []
    best: TrainingResult | None = None
    for attempt, current in enumerate(schedule):
        result = train_once(hcs, current, rng, base=base, m=m)
        attempts.append({**current.describe(), "p_sur": result.p_sur, "energy": result.energy})
        logger.info(
            "Training attempt %d (%s): p_sur=%.4f (threshold %.2f)",
            attempt + 1,
            ", ".join(f"{k}={v}" for k, v in current.describe().items()),
            result.p_sur,
            result.threshold,
        )
        if best is None or result.p_sur > best.p_sur:
            best = result
        if result.passed:
            break
    assert best is not None
    best.attempts = attempts
    if not best.passed:
        logger.warning("Training stayed below threshold: best p_sur=%.4f", best.p_sur)
    return best


def trained_stage(budget: TrainingBudget, m: int | None = None) -> StageBuilder:
    """Stage builder for compose_constraints that trains against each constraint's H_cs."""

    def build(spec: ConstraintSpec, current: Compressor, rng: np.random.Generator) -> Compressor:
        hcs = build_hcs(spec, rng, n_qubits=current.n_qubits)
        result = train_with_escalation(hcs, budget, rng, base=current, m=m)
        if not result.passed:
            raise TrainingThresholdError(
                f"{budget.ansatz}-ansatz reached p_sur={result.p_sur:.4f} below {result.threshold}",
                p_sur=result.p_sur,
            )
        return result.stage

    return build


def compressor_from_params(params: AnsatzParams, qubits: Sequence[int] | None = None, n_qubits: int | None = None) -> Compressor:
    """Standalone compressor from stored ansatz parameters."""
    q = tuple(range(params.n)) if qubits is None else tuple(qubits)
    n = max(q) + 1 if n_qubits is None else n_qubits
    drop = params.n - params.m
    kept = q[drop:] + tuple(i for i in range(n) if i not in q)
    circuit = params.circuit(q)
    return Compressor(n, q[:drop], kept, (GateForm(circuit.inverse()),), f"{params.kind}{params.layers}")
