"""Dense statevector engine.

Amplitude arrays may carry trailing batch axes, ``shape == (2**n, ...)``;
gates act on the first axis only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from cs_qaoa_lab.gates import Circuit, GateOp, NoiseEvent, validate_gate


@dataclass(frozen=True, eq=False)
class Statevector:
    n_qubits: int
    amplitudes: NDArray[np.complex128]
    valid: bool = True

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"Expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zeros(cls, n_qubits: int) -> Statevector:
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> Statevector:
        if not 0 <= index < (1 << n_qubits):
            raise ValueError(f"Basis index {index} out of range for {n_qubits} qubits")
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def uniform(cls, n_qubits: int) -> Statevector:
        dim = 1 << n_qubits
        return cls(n_qubits, np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128))

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex] | NDArray, normalize: bool = False) -> Statevector:
        amps = np.asarray(amplitudes, dtype=np.complex128).copy()
        n_qubits = int(amps.size).bit_length() - 1
        if amps.ndim != 1 or (1 << n_qubits) != amps.size:
            raise ValueError(f"Amplitude count {amps.size} is not a power of two")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0.0:
                raise ValueError("Cannot normalize an all-zero amplitude vector")
            amps /= norm
        return cls(n_qubits, amps)

    def probabilities(self) -> NDArray[np.float64]:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def apply_matrix(
    amplitudes: NDArray[np.complex128],
    n_qubits: int,
    qubits: Sequence[int],
    matrix: NDArray[np.complex128],
) -> NDArray[np.complex128]:
    """Apply a local matrix (qubits[0] least significant) to an amplitude array."""
    k = len(qubits)
    if k == 0:
        return amplitudes * matrix[0, 0]
    batch = amplitudes.shape[1:]
    psi = amplitudes.reshape((2,) * n_qubits + batch)
    # axis 0 of the tensor is the most significant qubit
    axes = [n_qubits - 1 - q for q in reversed(qubits)]
    tensor = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(tensor, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return np.ascontiguousarray(out).reshape(amplitudes.shape)


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    validate_gate(gate, state.n_qubits)
    amps = apply_matrix(state.amplitudes, state.n_qubits, gate.qubits, gate.matrix())
    return Statevector(state.n_qubits, amps, state.valid)


def apply_circuit(
    state: Statevector,
    circuit: Circuit,
    rng: np.random.Generator | None = None,
) -> Statevector:
    """Apply every gate in order.

    Layer marks are ignored here; projections are the caller's business.
    NoiseEvents without a drawn axis consume ``rng``.
    """
    for gate in circuit.gates:
        if isinstance(gate, NoiseEvent) and gate.axis is None:
            if rng is None:
                raise ValueError("Circuit contains noise events but no generator was given")
            state = apply_noise_event(state, gate.q, gate.xi, rng)
        else:
            state = apply_gate(state, gate)
    return state


def expectation_diagonal(state: Statevector, diag: NDArray[np.float64] | Sequence[float]) -> float:
    values = np.asarray(diag, dtype=np.float64)
    if values.shape != state.amplitudes.shape:
        raise ValueError(f"Diagonal length {values.size} does not match state dimension {state.amplitudes.size}")
    return float(np.dot(values, state.probabilities()))


def zero_sector_mask(n_qubits: int, qubits: Sequence[int]) -> NDArray[np.bool_]:
    """Basis indices whose listed qubits are all 0."""
    mask = 0
    for q in qubits:
        mask |= 1 << q
    return (np.arange(1 << n_qubits) & mask) == 0


def project_zeros(state: Statevector, qubits: Sequence[int]) -> tuple[float, Statevector]:
    """Project the listed qubits onto |0> and renormalize.

    A zero-probability projection returns an all-zero state with ``valid=False``.
    """
    if len(qubits) == 0:
        raise ValueError("project_zeros needs at least one qubit")
    for q in qubits:
        if not 0 <= q < state.n_qubits:
            raise ValueError(f"Qubit index {q} out of range for {state.n_qubits} qubits")

    keep = zero_sector_mask(state.n_qubits, qubits)
    kept = np.where(keep, state.amplitudes, 0.0)
    prob_zero = float(np.sum(np.abs(kept) ** 2))
    if prob_zero <= 0.0:
        return 0.0, Statevector(state.n_qubits, np.zeros_like(state.amplitudes), valid=False)
    return prob_zero, Statevector(state.n_qubits, kept / math.sqrt(prob_zero))


def sample_basis(state: Statevector, rng: np.random.Generator, shots: int | None = None) -> int | NDArray[np.int64]:
    probs = state.probabilities()
    probs = probs / probs.sum()
    if shots is None:
        return int(rng.choice(probs.size, p=probs))
    return rng.choice(probs.size, size=shots, p=probs)


def random_axis(rng: np.random.Generator) -> tuple[float, float, float]:
    """Uniform point on the unit sphere."""
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return float(v[0]), float(v[1]), float(v[2])


def apply_noise_event(state: Statevector, qubit: int, xi: float, rng: np.random.Generator) -> Statevector:
    """Apply exp(i xi n.sigma) with a freshly drawn axis n."""
    if not -1e-12 <= xi <= math.pi / 2 + 1e-12:
        raise ValueError(f"Noise angle {xi} outside [0, pi/2]")
    if xi == 0.0:
        return state
    return apply_gate(state, NoiseEvent(qubit, xi, random_axis(rng)))
