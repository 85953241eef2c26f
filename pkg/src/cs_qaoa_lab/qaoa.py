"""Conventional and compressed-space QAOA: state construction, optimization, metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Callable, Generic, Sequence, TypeVar

import numpy as np
from numpy.typing import NDArray

from cs_qaoa_lab.compression import Compressor
from cs_qaoa_lab.encoders import encode
from cs_qaoa_lab.errors import FullyDiscardedError
from cs_qaoa_lab.gates import RZ, RZZ, BlockXY, Circuit, GateOp, GlobalPhase, NoiseEvent, XRot
from cs_qaoa_lab.instances import brute_force
from cs_qaoa_lab.noise import compile_to_noisy, count_two_qubit_gates
from cs_qaoa_lab.optimizers import PowellConfig, powell_minimize
from cs_qaoa_lab.problems import CopInstance, feasible_mask as problem_feasible_mask
from cs_qaoa_lab.qubo import IsingModel, assemble, qubo_to_ising
from cs_qaoa_lab.simulator import Statevector, apply_matrix, apply_noise_event, project_zeros

logger = logging.getLogger(__name__)

MODES = ("x", "xy", "cs")
XY_SCOPES = ("block", "global")
MAX_GLOBAL_XY = 10
DEFAULT_STARTS = 11


@dataclass(frozen=True, eq=False)
class QaoaConfig:
    ising: IsingModel
    layers: int
    mode: str = "x"
    compressor: Compressor | None = None
    groups: tuple[tuple[int, ...], ...] = ()
    xy_scope: str = "block"
    epsilon: float = 0.0
    trajectories: int = 10
    seed: int = 0
    n_starts: int = DEFAULT_STARTS
    start_range: float = 2.0 * math.pi

    def __post_init__(self) -> None:
        if self.layers < 0:
            raise ValueError(f"Layer count must be >= 0, got {self.layers}")
        if self.mode not in MODES:
            raise ValueError(f"Unknown QAOA mode '{self.mode}'. Use one of {', '.join(MODES)}")
        if self.mode == "cs":
            if self.compressor is None:
                raise ValueError("CS mode needs a compressor")
            if self.compressor.n_qubits != self.ising.n:
                raise ValueError(f"Compressor acts on {self.compressor.n_qubits} qubits but the model has {self.ising.n}")
        if self.xy_scope not in XY_SCOPES:
            raise ValueError(f"Unknown XY scope '{self.xy_scope}'. Use 'block' or 'global'")
        if self.mode == "xy" and self.xy_scope == "global" and self.ising.n > MAX_GLOBAL_XY:
            raise ValueError(f"Global XY mixer is dense and limited to {MAX_GLOBAL_XY} qubits")
        if self.mode == "xy" and self.xy_scope == "block" and not self.groups:
            raise ValueError("Blockwise XY mixing needs one-hot groups")
        if self.trajectories < 1:
            raise ValueError(f"Trajectory count must be >= 1, got {self.trajectories}")
        if self.n_starts < 1:
            raise ValueError(f"n_starts must be >= 1, got {self.n_starts}")

    @property
    def n_qubits(self) -> int:
        return self.ising.n

    @property
    def noisy(self) -> bool:
        return self.epsilon > 0.0

    @cached_property
    def diagonal(self) -> NDArray[np.float64]:
        return self.ising.diagonal()


@dataclass
class Evaluation:
    """Outcome of one (beta, gamma) point, averaged over trajectories when noisy."""

    energy: float
    kept: float
    layer_discards: list[float]
    states: list[Statevector]
    weights: list[float]

    @property
    def p_dis(self) -> float:
        return 1.0 - self.kept

    @property
    def fully_discarded(self) -> bool:
        return self.kept <= 0.0


@dataclass
class QaoaResult:
    betas: list[float]
    gammas: list[float]
    energy: float
    p_suc: float
    p_dis: float
    layer_discards: list[float]
    infeasible_mass: float | None = None
    trace: list[float] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)


def _w_product_mask(n: int, groups: Sequence[Sequence[int]]) -> NDArray[np.bool_]:
    idx = np.arange(1 << n, dtype=np.int64)
    mask = np.ones(1 << n, dtype=bool)
    for group in groups:
        weight = np.zeros_like(idx)
        for q in group:
            weight += (idx >> q) & 1
        mask &= weight == 1
    return mask


def prepare_initial(config: QaoaConfig) -> Statevector:
    """|+^n> (x), product of per-group W-states (xy), |0^(N-m)>|+^m> (cs)."""
    n = config.n_qubits
    if config.mode == "x" or (config.mode == "xy" and config.xy_scope == "global" and not config.groups):
        return Statevector.uniform(n)
    if config.mode == "xy":
        mask = _w_product_mask(n, config.groups)
    else:
        compressor = config.compressor
        assert compressor is not None
        mask = np.zeros(1 << n, dtype=bool)
        mask[compressor.embed(np.arange(1 << compressor.m))] = True
    amps = mask.astype(np.complex128) / math.sqrt(int(mask.sum()))
    return Statevector(n, amps)


def phase_circuit(ising: IsingModel, gamma: float) -> list[GateOp]:
    """exp(-i gamma H) as RZZ per coupling, RZ per bias and a global phase."""
    gates: list[GateOp] = [RZZ(i, j, 2.0 * gamma * value) for i, j, value in ising.couplings()]
    gates += [RZ(i, 2.0 * gamma * float(ising.h[i])) for i in range(ising.n) if ising.h[i] != 0.0]
    if ising.H0 != 0.0:
        gates.append(GlobalPhase(-gamma * ising.H0))
    return gates


def mixer_gates(config: QaoaConfig, beta: float) -> list[GateOp]:
    if config.mode == "cs":
        assert config.compressor is not None
        return [XRot(q, beta) for q in config.compressor.kept]
    if config.mode == "x":
        return [XRot(q, beta) for q in range(config.n_qubits)]
    if config.xy_scope == "global":
        return [BlockXY(tuple(range(config.n_qubits)), beta)]
    return [BlockXY(tuple(group), beta) for group in config.groups]


def _apply_gates(amps: NDArray[np.complex128], n: int, gates: Sequence[GateOp]) -> NDArray[np.complex128]:
    for gate in gates:
        amps = apply_matrix(amps, n, gate.qubits, gate.matrix())
    return amps


def _check_angles(config: QaoaConfig, betas: Sequence[float], gammas: Sequence[float]) -> None:
    if len(betas) != config.layers or len(gammas) != config.layers:
        raise ValueError(f"Expected {config.layers} betas and gammas, got {len(betas)} and {len(gammas)}")


def build_state(
    config: QaoaConfig,
    betas: Sequence[float],
    gammas: Sequence[float],
) -> tuple[Statevector, list[float]]:
    """Coherent variational state and per-layer discard probabilities.

    CS mode runs U_cs^dagger, then per layer U_C, U_cs, projection of the
    discarded qubits onto 0, X mixer on the kept qubits, U_cs^dagger. A layer
    that discards everything returns an invalid state.
    """
    _check_angles(config, betas, gammas)
    n = config.n_qubits
    diag = config.diagonal
    state = prepare_initial(config)
    discards: list[float] = []
    if config.mode != "cs":
        amps = state.amplitudes
        for beta, gamma in zip(betas, gammas):
            amps = amps * np.exp(-1j * gamma * diag)
            amps = _apply_gates(amps, n, mixer_gates(config, beta))
        return Statevector(n, amps), discards

    compressor = config.compressor
    assert compressor is not None
    amps = compressor.apply_dagger(state.amplitudes)
    for beta, gamma in zip(betas, gammas):
        amps = compressor.apply(amps * np.exp(-1j * gamma * diag))
        if compressor.discard:
            prob, projected = project_zeros(Statevector(n, amps), compressor.discard)
            discards.append(1.0 - prob)
            if not projected.valid:
                return projected, discards
            amps = projected.amplitudes
        else:
            discards.append(0.0)
        amps = compressor.apply_dagger(_apply_gates(amps, n, mixer_gates(config, beta)))
    return Statevector(n, amps), discards


def noisy_circuit(config: QaoaConfig, betas: Sequence[float], gammas: Sequence[float]) -> Circuit:
    """Gate-level circuit after the initial state; marks sit at the projections."""
    _check_angles(config, betas, gammas)
    gates: list[GateOp] = []
    marks: list[int] = []
    if config.mode != "cs":
        for beta, gamma in zip(betas, gammas):
            gates += phase_circuit(config.ising, gamma)
            gates += mixer_gates(config, beta)
        return Circuit(tuple(gates))

    assert config.compressor is not None
    u_cs = config.compressor.circuit()
    u_dag = u_cs.inverse()
    gates += u_dag.gates
    for beta, gamma in zip(betas, gammas):
        gates += phase_circuit(config.ising, gamma)
        gates += u_cs.gates
        marks.append(len(gates))
        gates += mixer_gates(config, beta)
        gates += u_dag.gates
    return Circuit(tuple(gates), tuple(marks))


def layer_two_qubit_gates(config: QaoaConfig) -> int:
    """Two-qubit noise positions in one layer: phase separator, mixer and, in CS mode, U_cs and U_cs^dagger."""
    gates: list[GateOp] = phase_circuit(config.ising, 0.0) + mixer_gates(config, 0.0)
    if config.mode == "cs":
        assert config.compressor is not None
        u_cs = config.compressor.circuit()
        gates += list(u_cs.gates) + list(u_cs.inverse().gates)
    return count_two_qubit_gates(Circuit(tuple(gates)))


def run_trajectory(
    initial: Statevector,
    circuit: Circuit,
    discard: Sequence[int],
    rng: np.random.Generator,
) -> tuple[Statevector, list[float]]:
    """Apply a compiled circuit, projecting ``discard`` onto 0 at each mark."""
    marks = set(circuit.layer_marks)
    state = initial
    probs: list[float] = []
    for index, gate in enumerate(circuit.gates):
        if index in marks:
            state, prob = _project(state, discard)
            probs.append(prob)
            if not state.valid:
                return state, probs
        if isinstance(gate, NoiseEvent):
            state = apply_noise_event(state, gate.q, gate.xi, rng)
        else:
            amps = apply_matrix(state.amplitudes, state.n_qubits, gate.qubits, gate.matrix())
            state = Statevector(state.n_qubits, amps)
    if len(circuit.gates) in marks:
        state, prob = _project(state, discard)
        probs.append(prob)
    return state, probs


def _project(state: Statevector, discard: Sequence[int]) -> tuple[Statevector, float]:
    if not discard:
        return state, 1.0
    prob, projected = project_zeros(state, discard)
    return projected, prob


def evaluate(config: QaoaConfig, betas: Sequence[float], gammas: Sequence[float]) -> Evaluation:
    """Energy of the kept state; noisy runs average ``trajectories`` seeded runs."""
    diag = config.diagonal
    if not config.noisy:
        state, discards = build_state(config, betas, gammas)
        kept = float(np.prod([1.0 - d for d in discards])) if state.valid else 0.0
        energy = float(np.dot(diag, state.probabilities())) if state.valid else math.nan
        return Evaluation(energy, kept, discards, [state], [kept])

    circuit = compile_to_noisy(noisy_circuit(config, betas, gammas), config.epsilon)
    initial = prepare_initial(config)
    discard = config.compressor.discard if config.mode == "cs" and config.compressor else ()
    rng = np.random.default_rng(config.seed)
    states: list[Statevector] = []
    weights: list[float] = []
    per_layer = np.zeros(config.layers if config.mode == "cs" else 0)
    for _ in range(config.trajectories):
        state, probs = run_trajectory(initial, circuit, discard, rng)
        kept = float(np.prod(probs)) if state.valid else 0.0
        states.append(state)
        weights.append(kept)
        padded = np.ones(per_layer.size)
        padded[: len(probs)] = probs
        if not state.valid:
            padded[len(probs) :] = 0.0
        per_layer += 1.0 - padded
    w = np.asarray(weights)
    energy = math.nan
    if w.sum() > 0.0:
        energies = [float(np.dot(diag, s.probabilities())) if s.valid else 0.0 for s in states]
        energy = float(np.dot(w, energies) / w.sum())
    layer_discards = list(per_layer / config.trajectories)
    return Evaluation(energy, float(w.mean()), layer_discards, states, weights)


def success_probability(
    state: Statevector,
    optima: Sequence[int] | NDArray[np.int64],
    discards: Sequence[float] = (),
) -> float:
    """prod(1 - p_dis^(j)) * sum_{x in optima} |<x|psi>|^2."""
    indices = np.asarray(list(optima), dtype=np.int64)
    if indices.size == 0:
        raise ValueError("success_probability needs at least one optimal state")
    if not state.valid:
        return 0.0
    kept = float(np.prod([1.0 - d for d in discards]))
    return kept * float(np.sum(state.probabilities()[indices]))


def evaluation_success(evaluation: Evaluation, optima: Sequence[int] | NDArray[np.int64]) -> float:
    """Trajectory mean of kept weight times optimal overlap."""
    values = [
        w * success_probability(s, optima) if s.valid else 0.0
        for s, w in zip(evaluation.states, evaluation.weights)
    ]
    return float(np.mean(values))


def infeasible_mass(state: Statevector, feasible_mask: NDArray[np.bool_]) -> float:
    return float(np.sum(state.probabilities()[~feasible_mask]))


def _result(
    config: QaoaConfig,
    betas: Sequence[float],
    gammas: Sequence[float],
    evaluation: Evaluation,
    optima: Sequence[int] | NDArray[np.int64],
    feasible_mask: NDArray[np.bool_] | None,
    trace: list[float],
) -> QaoaResult:
    mass = None
    if feasible_mask is not None and evaluation.states and evaluation.states[0].valid:
        mass = float(np.mean([infeasible_mass(s, feasible_mask) for s in evaluation.states if s.valid]))
    return QaoaResult(
        betas=[float(b) for b in betas],
        gammas=[float(g) for g in gammas],
        energy=evaluation.energy,
        p_suc=evaluation_success(evaluation, optima),
        p_dis=evaluation.p_dis,
        layer_discards=[float(d) for d in evaluation.layer_discards],
        infeasible_mass=mass,
        trace=trace,
        metadata={
            "mode": config.mode,
            "layers": config.layers,
            "epsilon": config.epsilon,
            "trajectories": config.trajectories if config.noisy else 1,
            "seed": config.seed,
        },
    )


def evaluate_qaoa(
    config: QaoaConfig,
    betas: Sequence[float],
    gammas: Sequence[float],
    optima: Sequence[int] | NDArray[np.int64],
    feasible_mask: NDArray[np.bool_] | None = None,
) -> QaoaResult:
    """Metrics at fixed angles; the only entry point for p = 0."""
    evaluation = evaluate(config, betas, gammas)
    return _result(config, betas, gammas, evaluation, optima, feasible_mask, [evaluation.energy])


def optimize_qaoa(
    config: QaoaConfig,
    optima: Sequence[int] | NDArray[np.int64],
    powell: PowellConfig | None = None,
    rng: np.random.Generator | None = None,
    feasible_mask: NDArray[np.bool_] | None = None,
) -> QaoaResult:
    """Powell from (0, 0) plus ``n_starts - 1`` uniform starts; keep the lowest energy.

    A point whose projection discards everything scores the model's largest
    energy so the optimizer steers away from it.
    """
    if config.layers < 1:
        raise ValueError("optimize_qaoa needs at least one layer; use evaluate_qaoa for p = 0")
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    p = config.layers
    worst = float(np.max(config.diagonal))

    def objective(x: NDArray[np.float64]) -> float:
        evaluation = evaluate(config, x[:p], x[p:])
        return worst if evaluation.fully_discarded else evaluation.energy

    starts = [np.zeros(2 * p)] + [rng.uniform(0.0, config.start_range, size=2 * p) for _ in range(config.n_starts - 1)]
    best_x, best_eval, trace = None, None, []
    for index, x0 in enumerate(starts):
        result = powell_minimize(objective, x0, powell)
        evaluation = evaluate(config, result.x[:p], result.x[p:])
        trace.append(result.fun)
        logger.debug("Start %d/%d: E=%.6g", index + 1, len(starts), result.fun)
        if evaluation.fully_discarded:
            continue
        if best_eval is None or evaluation.energy < best_eval.energy:
            best_x, best_eval = result.x, evaluation
    if best_eval is None or best_x is None:
        raise FullyDiscardedError(f"All {len(starts)} starts ended fully discarded (mode={config.mode}, p={p})")
    return _result(config, best_x[:p], best_x[p:], best_eval, optima, feasible_mask, trace)


def solve_qaoa(
    config: QaoaConfig,
    optima: Sequence[int] | NDArray[np.int64],
    powell: PowellConfig | None = None,
    feasible_mask: NDArray[np.bool_] | None = None,
) -> QaoaResult:
    """evaluate_qaoa at p = 0, optimize_qaoa otherwise."""
    if config.layers == 0:
        return evaluate_qaoa(config, [], [], optima, feasible_mask)
    return optimize_qaoa(config, optima, powell, feasible_mask=feasible_mask)


R = TypeVar("R")


@dataclass
class PenaltyScan(Generic[R]):
    penalty: float
    score: float
    payload: R
    evaluated: dict[float, float]
    bracket: float


def scan_penalty(
    run: Callable[[float], tuple[float, R]],
    lower: float,
    upper: float,
    precision: float,
    grid_points: int = 5,
) -> PenaltyScan[R]:
    """Maximize ``run(A)[0]`` by a grid scan refined around the best point.

    Stops once the bracket around the best A is no wider than ``precision``.
    Ties go to the smaller A; each A is evaluated at most once.
    """
    if precision <= 0:
        raise ValueError(f"Penalty precision must be positive, got {precision}")
    if not 0 <= lower <= upper:
        raise ValueError(f"Penalty range needs 0 <= lower <= upper, got [{lower}, {upper}]")
    if grid_points < 4:
        raise ValueError(f"grid_points must be >= 4, got {grid_points}")

    cache: dict[float, tuple[float, R]] = {}

    def scored(a: float) -> float:
        a = round(a, 12)
        if a not in cache:
            cache[a] = run(a)
            logger.info("Penalty A=%.6g -> score %.6f", a, cache[a][0])
        return cache[a][0]

    def best_of(points: NDArray[np.float64]) -> float:
        best_a = None
        for a in sorted(round(float(x), 12) for x in points):
            s = scored(a)
            if best_a is None or s > cache[best_a][0] + 1e-9:
                best_a = a
        assert best_a is not None
        return best_a

    lo, hi = float(lower), float(upper)
    if hi == lo:
        best = best_of(np.array([lo]))
        return PenaltyScan(best, cache[best][0], cache[best][1], {k: v[0] for k, v in cache.items()}, 0.0)

    step = (hi - lo) / (grid_points - 1)
    best = best_of(np.linspace(lo, hi, grid_points))
    while 2.0 * step > precision:
        lo, hi = max(lower, best - step), min(upper, best + step)
        step = (hi - lo) / (grid_points - 1)
        candidates = np.concatenate([np.linspace(lo, hi, grid_points), list(cache)])
        best = best_of(candidates[(candidates >= lower) & (candidates <= upper)])
    return PenaltyScan(best, cache[best][0], cache[best][1], {k: v[0] for k, v in cache.items()}, 2.0 * step)


def tune_penalty(
    problem: CopInstance,
    config: QaoaConfig,
    precision: float,
    lower: float = 0.0,
    upper: float = 10.0,
    grid_points: int = 5,
    powell: PowellConfig | None = None,
    optima: Sequence[int] | None = None,
) -> tuple[float, QaoaResult | None]:
    """Penalty coefficient A* maximizing p_suc of ``problem`` and the result at A*.

    ``config`` fixes mode, layers, compressor and seeds; its Ising model is
    replaced by the normalized encoding of ``problem`` at each scanned A. A
    point whose starts all end fully discarded scores 0 and carries no result.
    """
    objective, constraint, _ = encode(problem)
    mask = problem_feasible_mask(problem)
    targets = brute_force(problem).optima if optima is None else tuple(optima)

    def run(a: float) -> tuple[float, QaoaResult | None]:
        trial = replace(config, ising=qubo_to_ising(assemble(objective, constraint, a)))
        try:
            result = solve_qaoa(trial, targets, powell, feasible_mask=mask)
        except FullyDiscardedError as e:
            logger.warning("A=%.6g: %s", a, e)
            return 0.0, None
        return result.p_suc, result

    scan = scan_penalty(run, lower, upper, precision, grid_points)
    return scan.penalty, scan.payload


@dataclass(frozen=True)
class Fluctuation:
    delta_e: float
    e_ave: float
    ratio: float | None

    @property
    def undefined(self) -> bool:
        return self.ratio is None


def energy_fluctuation(config: QaoaConfig, n_samples: int = 100, rng: np.random.Generator | None = None) -> Fluctuation:
    """Std and mean of the coherent energy over uniform (beta, gamma) in [0, 2 pi)."""
    if n_samples < 2:
        raise ValueError(f"energy_fluctuation needs at least 2 samples, got {n_samples}")
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    p = config.layers
    diag = config.diagonal
    energies = []
    for _ in range(n_samples):
        x = rng.uniform(0.0, 2.0 * math.pi, size=2 * p)
        state, _discards = build_state(config, x[:p], x[p:])
        if state.valid:
            energies.append(float(np.dot(diag, state.probabilities())))
    if len(energies) < 2:
        raise FullyDiscardedError("Fewer than two fluctuation samples survived the projections")
    values = np.asarray(energies)
    delta, mean = float(np.std(values, ddof=1)), float(np.mean(values))
    ratio = None if mean == 0.0 else delta / abs(mean)
    return Fluctuation(delta, mean, ratio)
