"""Gate descriptors and circuits.

Qubit ``i`` is bit ``i`` of a basis index. A gate's dense ``matrix()`` uses
local ordering: ``qubits[0]`` is the least significant bit of the local index.

The z sign convention is sigma^z |x> = (2x - 1) |x>, so |0> has eigenvalue -1.
RZ and RZZ are written in terms of that operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Union

import numpy as np
from numpy.typing import NDArray

_I2 = np.eye(2, dtype=np.complex128)
_PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)


def _ry(theta: float) -> NDArray[np.complex128]:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


@dataclass(frozen=True)
class PauliX:
    q: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> NDArray[np.complex128]:
        return _PAULI_X

    def dagger(self) -> PauliX:
        return self


@dataclass(frozen=True)
class Hadamard:
    q: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> NDArray[np.complex128]:
        return _HADAMARD

    def dagger(self) -> Hadamard:
        return self


@dataclass(frozen=True)
class RY:
    """exp(-i theta Y / 2)."""

    q: int
    theta: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> NDArray[np.complex128]:
        return _ry(self.theta)

    def dagger(self) -> RY:
        return RY(self.q, -self.theta)


@dataclass(frozen=True)
class ControlledRY:
    c: int
    q: int
    theta: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.c, self.q)

    def matrix(self) -> NDArray[np.complex128]:
        m = np.eye(4, dtype=np.complex128)
        r = _ry(self.theta)
        # local index = b_c + 2 b_q; control set on indices 1 and 3
        m[1, 1], m[1, 3] = r[0, 0], r[0, 1]
        m[3, 1], m[3, 3] = r[1, 0], r[1, 1]
        return m

    def dagger(self) -> ControlledRY:
        return ControlledRY(self.c, self.q, -self.theta)


@dataclass(frozen=True)
class CNOT:
    c: int
    t: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.c, self.t)

    def matrix(self) -> NDArray[np.complex128]:
        m = np.eye(4, dtype=np.complex128)
        m[[1, 3]] = m[[3, 1]]
        return m

    def dagger(self) -> CNOT:
        return self


@dataclass(frozen=True)
class CSWAP:
    """Fredkin gate: swap ``a`` and ``b`` when ``c`` is set."""

    c: int
    a: int
    b: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.c, self.a, self.b)

    def matrix(self) -> NDArray[np.complex128]:
        m = np.eye(8, dtype=np.complex128)
        # local index = b_c + 2 b_a + 4 b_b
        m[[3, 5]] = m[[5, 3]]
        return m

    def dagger(self) -> CSWAP:
        return self


@dataclass(frozen=True)
class RZ:
    """exp(-i theta sigma^z / 2) with sigma^z |x> = (2x - 1) |x>."""

    q: int
    theta: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> NDArray[np.complex128]:
        half = self.theta / 2.0
        return np.diag([np.exp(1j * half), np.exp(-1j * half)]).astype(np.complex128)

    def dagger(self) -> RZ:
        return RZ(self.q, -self.theta)


@dataclass(frozen=True)
class RZZ:
    """exp(-i theta sigma^z_1 sigma^z_2 / 2)."""

    q1: int
    q2: int
    theta: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q1, self.q2)

    def matrix(self) -> NDArray[np.complex128]:
        same = np.exp(-0.5j * self.theta)
        diff = np.exp(0.5j * self.theta)
        return np.diag([same, diff, diff, same]).astype(np.complex128)

    def dagger(self) -> RZZ:
        return RZZ(self.q1, self.q2, -self.theta)


@dataclass(frozen=True)
class XRot:
    """exp(-i beta sigma^x); one factor of the transverse-field mixer."""

    q: int
    beta: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> NDArray[np.complex128]:
        return math.cos(self.beta) * _I2 - 1j * math.sin(self.beta) * _PAULI_X

    def dagger(self) -> XRot:
        return XRot(self.q, -self.beta)


@dataclass(frozen=True)
class BlockXY:
    """exp(-i beta H_XY) with H_XY = sum over pairs of (XX + YY) / 2 on ``block``."""

    block: tuple[int, ...]
    beta: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.block

    def matrix(self) -> NDArray[np.complex128]:
        values, vectors = _xy_spectrum(len(self.block))
        phases = np.exp(-1j * self.beta * values)
        return (vectors * phases) @ vectors.T

    def dagger(self) -> BlockXY:
        return BlockXY(self.block, -self.beta)


@dataclass(frozen=True)
class GlobalPhase:
    """Multiplies the state by exp(i theta)."""

    theta: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return ()

    def matrix(self) -> NDArray[np.complex128]:
        return np.array([[np.exp(1j * self.theta)]], dtype=np.complex128)

    def dagger(self) -> GlobalPhase:
        return GlobalPhase(-self.theta)


@dataclass(frozen=True)
class NoiseEvent:
    """exp(i xi n.sigma) on one qubit; ``axis`` is drawn at application time when None."""

    q: int
    xi: float
    axis: tuple[float, float, float] | None = field(default=None, compare=False)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> NDArray[np.complex128]:
        if self.axis is None:
            raise ValueError("NoiseEvent has no drawn axis; apply it through apply_noise_event")
        nx_, ny, nz = self.axis
        n_sigma = nx_ * _PAULI_X + ny * _PAULI_Y + nz * _PAULI_Z
        return math.cos(self.xi) * _I2 + 1j * math.sin(self.xi) * n_sigma

    def dagger(self) -> NoiseEvent:
        raise ValueError("NoiseEvent is stochastic and has no inverse")


GateOp = Union[
    PauliX,
    Hadamard,
    RY,
    ControlledRY,
    CNOT,
    CSWAP,
    RZ,
    RZZ,
    XRot,
    BlockXY,
    GlobalPhase,
    NoiseEvent,
]

CLASSICAL_GATES = (PauliX, CNOT, CSWAP)


@lru_cache(maxsize=16)
def _xy_spectrum(size: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    dim = 1 << size
    h = np.zeros((dim, dim), dtype=np.float64)
    for x in range(dim):
        for j in range(size):
            for k in range(j + 1, size):
                if ((x >> j) & 1) != ((x >> k) & 1):
                    h[x ^ ((1 << j) | (1 << k)), x] += 1.0
    values, vectors = np.linalg.eigh(h)
    return values, vectors


def validate_gate(gate: GateOp, n_qubits: int) -> None:
    qubits = gate.qubits
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"Gate {gate!r} references a qubit twice")
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise ValueError(f"Qubit index {q} out of range for {n_qubits} qubits in {gate!r}")


@dataclass(frozen=True)
class Circuit:
    """Ordered gates plus the positions where a CS-QAOA layer measures.

    A mark ``k`` means the projection happens before ``gates[k]``.
    """

    gates: tuple[GateOp, ...] = ()
    layer_marks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        previous = -1
        for mark in self.layer_marks:
            if mark <= previous or mark > len(self.gates):
                raise ValueError(f"Invalid layer marks {self.layer_marks} for {len(self.gates)} gates")
            previous = mark

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.gates)

    def validate(self, n_qubits: int) -> None:
        for gate in self.gates:
            validate_gate(gate, n_qubits)

    def width(self) -> int:
        """Smallest register that holds every referenced qubit."""
        return max((max(g.qubits) + 1 for g in self.gates if g.qubits), default=0)

    def inverse(self) -> Circuit:
        return Circuit(tuple(g.dagger() for g in reversed(self.gates)))

    def then(self, other: Circuit) -> Circuit:
        offset = len(self.gates)
        return Circuit(
            self.gates + other.gates,
            self.layer_marks + tuple(offset + m for m in other.layer_marks),
        )

    def is_classical(self) -> bool:
        return all(isinstance(g, CLASSICAL_GATES) for g in self.gates)


def circuit_permutation(circuit: Circuit, n_qubits: int) -> NDArray[np.int64]:
    """Image of every basis index under a classical circuit."""
    return track_indices(circuit.gates, np.arange(1 << n_qubits, dtype=np.int64))


def track_indices(gates: tuple[GateOp, ...] | list[GateOp], indices: NDArray[np.int64]) -> NDArray[np.int64]:
    """Push basis indices through X / CNOT / CSWAP gates."""
    idx = indices.copy()
    for gate in gates:
        if isinstance(gate, PauliX):
            idx ^= 1 << gate.q
        elif isinstance(gate, CNOT):
            idx ^= ((idx >> gate.c) & 1) << gate.t
        elif isinstance(gate, CSWAP):
            ctrl = (idx >> gate.c) & 1
            diff = ((idx >> gate.a) ^ (idx >> gate.b)) & 1
            flip = ctrl & diff
            idx ^= (flip << gate.a) | (flip << gate.b)
        else:
            raise ValueError(f"Gate {gate!r} is not a basis permutation")
    return idx


def _t_gate(q: int, dagger: bool = False) -> list[GateOp]:
    # T = exp(i pi/8) RZ(-pi/4) under the sigma^z sign convention
    sign = -1.0 if dagger else 1.0
    return [RZ(q, -sign * math.pi / 4.0), GlobalPhase(sign * math.pi / 8.0)]


def decompose_toffoli(c1: int, c2: int, t: int) -> list[GateOp]:
    """Six-CNOT Toffoli network with H and T gates."""
    gates: list[GateOp] = [Hadamard(t), CNOT(c2, t)]
    gates += _t_gate(t, dagger=True)
    gates.append(CNOT(c1, t))
    gates += _t_gate(t)
    gates.append(CNOT(c2, t))
    gates += _t_gate(t, dagger=True)
    gates.append(CNOT(c1, t))
    gates += _t_gate(c2)
    gates += _t_gate(t)
    gates += [Hadamard(t), CNOT(c1, c2)]
    gates += _t_gate(c1)
    gates += _t_gate(c2, dagger=True)
    gates.append(CNOT(c1, c2))
    return gates


def decompose_cswap(c: int, a: int, b: int) -> list[GateOp]:
    """CSWAP as CNOT(b, a), Toffoli(c, a -> b), CNOT(b, a)."""
    return [CNOT(b, a), *decompose_toffoli(c, a, b), CNOT(b, a)]
