"""Two-qubit depolarizing noise: strength algebra and circuit compilation.

Noise attaches only to two-qubit gate positions. Each position receives an
independent single-qubit depolarizing channel of strength p on both
participants, unraveled as a random rotation exp(i xi n.sigma) with
p = sin^2 xi. The resulting two-qubit gate error is (4p/5)(2 - p).
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from cs_qaoa_lab.gates import (
    CNOT,
    CSWAP,
    RZZ,
    BlockXY,
    Circuit,
    ControlledRY,
    GateOp,
    NoiseEvent,
    decompose_cswap,
)

MAX_GATE_ERROR = 0.8


def two_qubit_error(p: float) -> float:
    return 0.8 * p * (2.0 - p)


def depolarizing_strength(epsilon: float) -> float:
    """Invert epsilon = (4p/5)(2 - p) on the branch p in [0, 1)."""
    if not 0.0 <= epsilon < MAX_GATE_ERROR:
        raise ValueError(f"Two-qubit error rate must lie in [0, 0.8), got {epsilon}")
    return 1.0 - math.sqrt(1.0 - 1.25 * epsilon)


def noise_angle(p: float) -> float:
    return math.asin(math.sqrt(p))


def _noise_pairs(gate: GateOp) -> list[tuple[int, int]]:
    if isinstance(gate, (CNOT, ControlledRY, RZZ)):
        return [gate.qubits]  # type: ignore[list-item]
    if isinstance(gate, BlockXY):
        block = gate.block
        return [(block[i], block[j]) for i in range(len(block)) for j in range(i + 1, len(block))]
    return []


def compile_to_noisy(circuit: Circuit, epsilon: float) -> Circuit:
    """Insert NoiseEvents after every two-qubit gate position.

    CSWAP is expanded to its 8-CNOT form first. A BlockXY on b qubits is
    charged as b(b-1)/2 pairwise positions. Layer marks follow their gates.
    """
    p = depolarizing_strength(epsilon)
    if p == 0.0:
        return circuit
    xi = noise_angle(p)

    out: list[GateOp] = []
    new_marks: list[int] = []
    marks = set(circuit.layer_marks)
    for index, gate in enumerate(circuit.gates):
        if index in marks:
            new_marks.append(len(out))
        expanded = decompose_cswap(gate.c, gate.a, gate.b) if isinstance(gate, CSWAP) else [gate]
        for g in expanded:
            out.append(g)
            for a, b in _noise_pairs(g):
                out.append(NoiseEvent(a, xi))
                out.append(NoiseEvent(b, xi))
    if len(circuit.gates) in marks:
        new_marks.append(len(out))
    return Circuit(tuple(out), tuple(new_marks))


def count_two_qubit_gates(circuit: Circuit) -> int:
    """Noise positions the circuit would carry after compilation."""
    total = 0
    for gate in circuit.gates:
        if isinstance(gate, CSWAP):
            total += 8
        else:
            total += len(_noise_pairs(gate))
    return total


def estimate_discard_rate(n_two: float, epsilon: float, layers: int, constant: float = 1.0) -> float:
    """p_dis ~ 1 - exp(-C epsilon p N_two) with N_two counted per layer."""
    return 1.0 - math.exp(-constant * epsilon * layers * n_two)


def fit_discard_constant(samples: Sequence[tuple[float, float, int, float]]) -> float:
    """Least-squares C from (epsilon, n_two, layers, measured p_dis) tuples.

    Uses -log(1 - p_dis) = C * epsilon * layers * n_two through the origin.
    """
    xs, ys = [], []
    for epsilon, n_two, layers, p_dis in samples:
        if p_dis >= 1.0:
            continue
        xs.append(epsilon * layers * n_two)
        ys.append(-math.log1p(-p_dis))
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise ValueError("Need at least one sample with nonzero epsilon * layers * n_two")
    return float(np.dot(x, y) / denom)
