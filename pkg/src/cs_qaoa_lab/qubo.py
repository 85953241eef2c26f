"""QUBO and Ising representations, penalty assembly and conversion.

QUBO coefficients are stored upper-triangular: Q(x) = sum_{i<=j} Q_ij x_i x_j + Q_0.
Spins follow s_i = 2 x_i - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray


def bits_to_index(bits: Sequence[int]) -> int:
    index = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"Bit values must be 0 or 1, got {b!r} at position {i}")
        index |= int(b) << i
    return index


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> i) & 1 for i in range(n))


def bit_columns(n: int) -> NDArray[np.int64]:
    """Array of shape (n, 2**n); row i holds bit i of every basis index."""
    idx = np.arange(1 << n, dtype=np.int64)
    return (idx[None, :] >> np.arange(n, dtype=np.int64)[:, None]) & 1


def _coerce_bits(bits: Sequence[int] | int, n: int) -> tuple[int, ...]:
    if isinstance(bits, (int, np.integer)):
        return index_to_bits(int(bits), n)
    if len(bits) != n:
        raise ValueError(f"Bitstring length {len(bits)} does not match model size {n}")
    return tuple(int(b) for b in bits)


@dataclass(frozen=True, eq=False)
class Qubo:
    n: int
    coefficients: NDArray[np.float64]
    offset: float = 0.0
    normalization: float = 1.0
    unnormalized: bool = False

    def __post_init__(self) -> None:
        if self.coefficients.shape != (self.n, self.n):
            raise ValueError(f"QUBO coefficients must be {self.n}x{self.n}, got {self.coefficients.shape}")
        if np.any(np.tril(self.coefficients, -1) != 0.0):
            raise ValueError("QUBO coefficients must be upper-triangular")

    @classmethod
    def zeros(cls, n: int) -> Qubo:
        return cls(n, np.zeros((n, n), dtype=np.float64))

    @classmethod
    def from_matrix(cls, matrix: NDArray | Sequence[Sequence[float]], offset: float = 0.0) -> Qubo:
        """Fold a full matrix: Q_ij <- M_ij + M_ji for i < j."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"QUBO matrix must be square, got shape {m.shape}")
        upper = np.triu(m) + np.triu(m.T, 1)
        return cls(m.shape[0], upper, float(offset))

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[int, int, float]], offset: float = 0.0) -> Qubo:
        q = np.zeros((n, n), dtype=np.float64)
        for i, j, value in terms:
            a, b = (i, j) if i <= j else (j, i)
            q[a, b] += value
        return cls(n, q, float(offset))

    def is_zero(self) -> bool:
        return not np.any(self.coefficients) and self.offset == 0.0

    def evaluate(self, bits: Sequence[int] | int) -> float:
        x = np.asarray(_coerce_bits(bits, self.n), dtype=np.float64)
        return float(x @ self.coefficients @ x + self.offset)

    def values(self) -> NDArray[np.float64]:
        """Q(x) for every basis index x."""
        cols = bit_columns(self.n).astype(np.float64)
        out = np.full(1 << self.n, self.offset, dtype=np.float64)
        for i, j in zip(*np.nonzero(self.coefficients)):
            out += self.coefficients[i, j] * cols[i] * cols[j]
        return out

    def to_dict(self) -> dict[str, Any]:
        entries = [
            [int(i), int(j), float(self.coefficients[i, j])]
            for i, j in zip(*np.nonzero(self.coefficients))
        ]
        return {"n": self.n, "entries": entries, "offset": self.offset}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Qubo:
        return cls.from_terms(int(data["n"]), [tuple(e) for e in data.get("entries", [])], float(data.get("offset", 0.0)))


@dataclass(frozen=True, eq=False)
class IsingModel:
    """E(s) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i + H0."""

    n: int
    J: NDArray[np.float64]
    h: NDArray[np.float64]
    H0: float = 0.0

    def __post_init__(self) -> None:
        if self.J.shape != (self.n, self.n) or self.h.shape != (self.n,):
            raise ValueError(f"Ising arrays do not match n={self.n}")

    def max_coupling(self) -> float:
        return float(max(np.max(np.abs(self.J), initial=0.0), np.max(np.abs(self.h), initial=0.0)))

    def diagonal(self) -> NDArray[np.float64]:
        spins = 2.0 * bit_columns(self.n).astype(np.float64) - 1.0
        out = np.full(1 << self.n, self.H0, dtype=np.float64)
        out += self.h @ spins
        for i, j in zip(*np.nonzero(self.J)):
            out += self.J[i, j] * spins[i] * spins[j]
        return out

    def couplings(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(self.J[i, j])) for i, j in zip(*np.nonzero(self.J))]

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "J": [[i, j, v] for i, j, v in self.couplings()],
            "h": [float(v) for v in self.h],
            "H0": self.H0,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> IsingModel:
        n = int(data["n"])
        J = np.zeros((n, n), dtype=np.float64)
        for i, j, v in data.get("J", []):
            J[min(i, j), max(i, j)] += v
        return cls(n, J, np.asarray(data["h"], dtype=np.float64), float(data.get("H0", 0.0)))


def qubo_to_ising(qubo: Qubo) -> IsingModel:
    """Substitute x_i = (s_i + 1) / 2."""
    n = qubo.n
    J = np.zeros((n, n), dtype=np.float64)
    h = np.zeros(n, dtype=np.float64)
    H0 = qubo.offset
    for i, j in zip(*np.nonzero(qubo.coefficients)):
        q = qubo.coefficients[i, j]
        if i == j:
            h[i] += q / 2.0
            H0 += q / 2.0
        else:
            J[i, j] += q / 4.0
            h[i] += q / 4.0
            h[j] += q / 4.0
            H0 += q / 4.0
    return IsingModel(n, J, h, float(H0))


def assemble(qubo_obj: Qubo, qubo_cst: Qubo, penalty: float, normalize: bool = True) -> Qubo:
    """(Q_obj + A Q_cst) / N with N making the Ising max(|J|, |h|) equal 1.

    All-zero couplings leave the sum unscaled and set ``unnormalized``.
    """
    if penalty < 0:
        raise ValueError(f"Penalty coefficient must be non-negative, got {penalty}")
    if qubo_obj.n != qubo_cst.n:
        raise ValueError(f"Objective has {qubo_obj.n} variables but constraint has {qubo_cst.n}")

    coefficients = qubo_obj.coefficients + penalty * qubo_cst.coefficients
    offset = qubo_obj.offset + penalty * qubo_cst.offset
    raw = Qubo(qubo_obj.n, coefficients, offset)
    if not normalize:
        return raw

    scale = qubo_to_ising(raw).max_coupling()
    if scale == 0.0:
        return Qubo(raw.n, coefficients, offset, normalization=1.0, unnormalized=True)
    return Qubo(raw.n, coefficients / scale, offset / scale, normalization=scale)


def energy_of(model: IsingModel | Qubo, bits: Sequence[int] | int) -> float:
    """Exact classical energy of one bitstring (sequence of bits or basis index)."""
    if isinstance(model, Qubo):
        return model.evaluate(bits)
    x = np.asarray(_coerce_bits(bits, model.n), dtype=np.float64)
    s = 2.0 * x - 1.0
    return float(s @ model.J @ s + model.h @ s + model.H0)
