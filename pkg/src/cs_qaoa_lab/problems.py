"""Constrained combinatorial problem instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, ClassVar, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from cs_qaoa_lab.constraints import ConstraintSpec
from cs_qaoa_lab.qubo import Qubo


@dataclass(frozen=True)
class VariableLayout:
    """Qubit index <-> problem variable label.

    ``groups`` are the one-hot groups used for W-state preparation and
    blockwise XY mixing.
    """

    labels: tuple[tuple[int, ...], ...]
    groups: tuple[tuple[int, ...], ...] = ()
    fixed: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("Variable labels must be unique")

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def qubit(self, *label: int) -> int:
        try:
            return self.labels.index(tuple(label))
        except ValueError:
            raise ValueError(f"Unknown variable label {label}") from None


@dataclass(frozen=True)
class MaxKCut:
    """Partition vertices into k subsets; vertex 0 is fixed to subset 0."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    k: int

    kind: ClassVar[str] = "maxkcut"

    def __post_init__(self) -> None:
        if self.n_vertices < 2:
            raise ValueError(f"Max-k cut needs at least 2 vertices, got {self.n_vertices}")
        normalized = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"Self-loop on vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"Edge ({u}, {v}) references a vertex outside 0..{self.n_vertices - 1}")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    @property
    def n_qubits(self) -> int:
        return self.k * (self.n_vertices - 1)

    def qubit(self, vertex: int, subset: int) -> int:
        if not (1 <= vertex < self.n_vertices and 0 <= subset < self.k):
            raise ValueError(f"No variable for vertex {vertex}, subset {subset}")
        return (vertex - 1) * self.k + subset

    def groups(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(self.qubit(v, s) for s in range(self.k)) for v in range(1, self.n_vertices)
        )

    def constraints(self) -> list[ConstraintSpec]:
        return [ConstraintSpec.one_hot(group) for group in self.groups()]

    def cut_size(self, bits: Sequence[int]) -> int:
        subset = {0: 0}
        for v in range(1, self.n_vertices):
            chosen = [s for s in range(self.k) if bits[self.qubit(v, s)]]
            if len(chosen) != 1:
                raise ValueError(f"Vertex {v} is not assigned to exactly one subset")
            subset[v] = chosen[0]
        return sum(1 for u, v in self.edges if subset[u] != subset[v])

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "vertices": self.n_vertices, "edges": [list(e) for e in self.edges], "k": self.k}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> MaxKCut:
        return cls(int(data["vertices"]), tuple(tuple(e) for e in data["edges"]), int(data.get("k", 3)))


@dataclass(frozen=True, eq=False)
class Qap:
    """Assign n_f facilities to n_f locations; variable x_{i,a} is qubit i * n_f + a."""

    flow: NDArray[np.float64]
    distance: NDArray[np.float64]

    kind: ClassVar[str] = "qap"

    def __post_init__(self) -> None:
        f = np.asarray(self.flow, dtype=np.float64)
        d = np.asarray(self.distance, dtype=np.float64)
        if f.ndim != 2 or f.shape[0] != f.shape[1] or f.shape != d.shape:
            raise ValueError(f"Flow {f.shape} and distance {d.shape} must be equal square matrices")
        if f.shape[0] < 2:
            raise ValueError("QAP needs at least 2 facilities")
        object.__setattr__(self, "flow", f)
        object.__setattr__(self, "distance", d)

    @property
    def n_f(self) -> int:
        return self.flow.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.n_f * self.n_f

    def qubit(self, facility: int, location: int) -> int:
        return facility * self.n_f + location

    def location_groups(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.qubit(i, a) for i in range(self.n_f)) for a in range(self.n_f))

    def facility_groups(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.qubit(i, a) for a in range(self.n_f)) for i in range(self.n_f))

    def constraints(self) -> list[ConstraintSpec]:
        return [ConstraintSpec.one_hot(g) for g in (*self.location_groups(), *self.facility_groups())]

    def assignment_cost(self, permutation: Sequence[int]) -> float:
        """Cost of placing facility i at location permutation[i]."""
        total = 0.0
        for i in range(self.n_f):
            for j in range(self.n_f):
                if i != j:
                    total += self.flow[i, j] * self.distance[permutation[i], permutation[j]]
        return total

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "f": self.flow.tolist(), "d": self.distance.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Qap:
        return cls(np.asarray(data["f"], dtype=np.float64), np.asarray(data["d"], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Qkp:
    """Quadratic knapsack: profits p_ij (i <= j), weights w_i, capacity C."""

    profits: NDArray[np.float64]
    weights: NDArray[np.float64]
    capacity: float
    label: str = ""

    kind: ClassVar[str] = "qkp"

    def __post_init__(self) -> None:
        p = np.asarray(self.profits, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if p.ndim != 2 or p.shape != (w.size, w.size):
            raise ValueError(f"Profit matrix {p.shape} does not match {w.size} weights")
        if np.any(w <= 0):
            raise ValueError("QKP weights must be positive")
        object.__setattr__(self, "profits", np.triu(p))
        object.__setattr__(self, "weights", w)

    @property
    def n_items(self) -> int:
        return self.weights.size

    @property
    def n_qubits(self) -> int:
        return self.n_items

    def constraints(self) -> list[ConstraintSpec]:
        return [ConstraintSpec.at_most(range(self.n_items), self.capacity, tuple(float(w) for w in self.weights))]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "label": self.label,
            "profits": self.profits.tolist(),
            "weights": self.weights.tolist(),
            "capacity": self.capacity,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Qkp:
        return cls(
            np.asarray(data["profits"], dtype=np.float64),
            np.asarray(data["weights"], dtype=np.float64),
            float(data["capacity"]),
            str(data.get("label", "")),
        )


@dataclass(frozen=True, eq=False)
class LinearCop:
    """Explicit QUBO objective with linear equality constraints."""

    objective: Qubo
    equalities: tuple[ConstraintSpec, ...] = field(default_factory=tuple)
    name: str = ""

    kind: ClassVar[str] = "linear"

    def __post_init__(self) -> None:
        for spec in self.equalities:
            if spec.kind in ("parity-even", "parity-odd", "general") or spec.lower is None or spec.lower != spec.upper:
                raise ValueError(f"LinearCop accepts only linear equality constraints, got {spec.kind}")
            if max(spec.variables) >= self.objective.n:
                raise ValueError(f"Constraint variable outside {self.objective.n}-variable objective")

    @property
    def n_qubits(self) -> int:
        return self.objective.n

    def constraints(self) -> list[ConstraintSpec]:
        return list(self.equalities)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "name": self.name,
            "objective": self.objective.to_dict(),
            "constraints": [c.to_dict() for c in self.equalities],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> LinearCop:
        return cls(
            Qubo.from_dict(data["objective"]),
            tuple(ConstraintSpec.from_dict(c) for c in data.get("constraints", [])),
            str(data.get("name", "")),
        )


CopInstance = Union[MaxKCut, Qap, Qkp, LinearCop]


def instance_from_dict(data: dict[str, Any]) -> CopInstance:
    kinds = {cls.kind: cls for cls in (MaxKCut, Qap, Qkp, LinearCop)}
    kind = data.get("kind")
    if kind not in kinds:
        raise ValueError(f"Unknown instance kind {kind!r}. Supported: {', '.join(kinds)}")
    return kinds[kind].from_dict(data)


def feasible_mask(instance: CopInstance) -> NDArray[np.bool_]:
    """Feasibility of every basis index."""
    n = instance.n_qubits
    mask = np.ones(1 << n, dtype=bool)
    for spec in instance.constraints():
        mask &= spec.satisfied_mask(n)
    return mask


def check_feasible(instance: CopInstance, bits: Sequence[int]) -> bool:
    if len(bits) != instance.n_qubits:
        raise ValueError(f"Bitstring length {len(bits)} does not match {instance.n_qubits} variables")
    return all(spec.satisfied(bits) for spec in instance.constraints())
