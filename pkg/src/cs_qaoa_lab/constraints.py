"""Constraint descriptions and compressed-space Hamiltonians."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from numpy.typing import NDArray

from cs_qaoa_lab.errors import DegenerateSpectrumError
from cs_qaoa_lab.qubo import bit_columns

logger = logging.getLogger(__name__)

KINDS = ("one-hot", "parity-even", "parity-odd", "range", "lower-only", "upper-only", "general")

EPSILON_RANGE = 0.05
DEGENERACY_GAP = 1e-12
MAX_REDRAWS = 10


@dataclass(frozen=True)
class ConstraintSpec:
    """lower <= g(x_V) <= upper with g = sum a_i x_i + c, or a lookup table.

    ``table`` (general kind) lists g for every local assignment of
    ``variables``, least significant bit first.
    """

    variables: tuple[int, ...]
    kind: str = "range"
    coefficients: tuple[float, ...] | None = None
    constant: float = 0.0
    lower: float | None = None
    upper: float | None = None
    table: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.variables:
            raise ValueError("Constraint needs at least one variable")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"Constraint variables must be distinct: {self.variables}")
        if min(self.variables) < 0:
            raise ValueError(f"Negative variable index in {self.variables}")
        if self.kind not in KINDS:
            raise ValueError(f"Unknown constraint kind '{self.kind}'. Use one of {', '.join(KINDS)}")
        if self.coefficients is not None and len(self.coefficients) != len(self.variables):
            raise ValueError("Coefficient count must match variable count")
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ValueError(f"Lower bound {self.lower} exceeds upper bound {self.upper}")

        if self.kind == "one-hot":
            if any(a != 1 for a in self.weights) or self.constant != 0 or self.lower != 1 or self.upper != 1:
                raise ValueError("one-hot constraints are sum x_i with lower = upper = 1")
        elif self.kind == "range" and (self.lower is None or self.upper is None):
            raise ValueError("range constraints need both bounds")
        elif self.kind == "lower-only" and (self.lower is None or self.upper is not None):
            raise ValueError("lower-only constraints take only a lower bound")
        elif self.kind == "upper-only" and (self.upper is None or self.lower is not None):
            raise ValueError("upper-only constraints take only an upper bound")
        elif self.kind == "general":
            if self.table is None or len(self.table) != 1 << len(self.variables):
                raise ValueError("general constraints need a table with 2^|V| entries")

    @classmethod
    def one_hot(cls, variables: Sequence[int]) -> ConstraintSpec:
        return cls(tuple(variables), "one-hot", lower=1, upper=1)

    @classmethod
    def parity(cls, variables: Sequence[int], even: bool) -> ConstraintSpec:
        return cls(tuple(variables), "parity-even" if even else "parity-odd")

    @classmethod
    def between(
        cls,
        variables: Sequence[int],
        lower: float,
        upper: float,
        coefficients: Sequence[float] | None = None,
    ) -> ConstraintSpec:
        coeffs = tuple(coefficients) if coefficients is not None else None
        return cls(tuple(variables), "range", coeffs, lower=lower, upper=upper)

    @classmethod
    def at_most(
        cls,
        variables: Sequence[int],
        upper: float,
        coefficients: Sequence[float] | None = None,
    ) -> ConstraintSpec:
        coeffs = tuple(coefficients) if coefficients is not None else None
        return cls(tuple(variables), "upper-only", coeffs, upper=upper)

    @classmethod
    def at_least(
        cls,
        variables: Sequence[int],
        lower: float,
        coefficients: Sequence[float] | None = None,
    ) -> ConstraintSpec:
        coeffs = tuple(coefficients) if coefficients is not None else None
        return cls(tuple(variables), "lower-only", coeffs, lower=lower)

    @property
    def weights(self) -> tuple[float, ...]:
        if self.coefficients is None:
            return tuple(1 for _ in self.variables)
        return self.coefficients

    def is_integral(self) -> bool:
        values = [*self.weights, self.constant]
        if self.table is not None:
            values += list(self.table)
        return all(float(v).is_integer() for v in values)

    def g_values(self, n_qubits: int) -> NDArray:
        """g evaluated on every basis index of an ``n_qubits`` register."""
        if max(self.variables) >= n_qubits:
            raise ValueError(f"Constraint variable {max(self.variables)} outside {n_qubits}-qubit register")
        cols = bit_columns(n_qubits)
        if self.kind == "general":
            local = np.zeros(1 << n_qubits, dtype=np.int64)
            for t, v in enumerate(self.variables):
                local |= cols[v] << t
            return np.asarray(self.table)[local]
        dtype = np.int64 if self.is_integral() else np.float64
        g = np.full(1 << n_qubits, self.constant, dtype=dtype)
        for a, v in zip(self.weights, self.variables):
            g += np.asarray(a, dtype=dtype) * cols[v]
        return g

    def satisfied_mask(self, n_qubits: int) -> NDArray[np.bool_]:
        g = self.g_values(n_qubits)
        if self.kind == "parity-even":
            return (g % 2) == 0
        if self.kind == "parity-odd":
            return (g % 2) == 1
        tol = 0 if self.is_integral() else 1e-9
        ok = np.ones(g.shape, dtype=bool)
        if self.lower is not None:
            ok &= g >= self.lower - tol
        if self.upper is not None:
            ok &= g <= self.upper + tol
        return ok

    def satisfied(self, bits: Sequence[int]) -> bool:
        local = [int(bits[v]) for v in self.variables]
        if self.kind == "general":
            g = self.table[sum(b << t for t, b in enumerate(local))]  # type: ignore[index]
        else:
            g = self.constant + sum(a * b for a, b in zip(self.weights, local))
        if self.kind == "parity-even":
            return g % 2 == 0
        if self.kind == "parity-odd":
            return g % 2 == 1
        tol = 0 if self.is_integral() else 1e-9
        if self.lower is not None and g < self.lower - tol:
            return False
        if self.upper is not None and g > self.upper + tol:
            return False
        return True

    def signature(self) -> dict[str, Any]:
        """Variable-independent description used as a database key."""
        return {
            "kind": self.kind,
            "a": [float(a) for a in self.weights],
            "c": float(self.constant),
            "l": None if self.lower is None else float(self.lower),
            "u": None if self.upper is None else float(self.upper),
        }

    def to_dict(self) -> dict[str, Any]:
        data = {"variables": list(self.variables), **self.signature()}
        if self.table is not None:
            data["table"] = list(self.table)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ConstraintSpec:
        variables = tuple(int(v) for v in data["variables"])
        coeffs = data.get("a")
        table = data.get("table")
        return cls(
            variables,
            str(data.get("kind", "range")),
            tuple(coeffs) if coeffs is not None else None,
            float(data.get("c", 0.0)),
            data.get("l"),
            data.get("u"),
            tuple(table) if table is not None else None,
        )


@dataclass(frozen=True, eq=False)
class CompressedHamiltonian:
    """Diagonal operator ranking feasible states below infeasible ones."""

    n_qubits: int
    diagonal: NDArray[np.float64]
    epsilon: NDArray[np.float64]
    feasible: NDArray[np.bool_]
    variables: tuple[int, ...]

    def local_indices(self) -> NDArray[np.int64]:
        """Basis indices spanned by the constraint variables, others at 0."""
        return embed_local(self.variables, np.arange(1 << len(self.variables), dtype=np.int64))

    def lowest_eigenvalues(self, count: int) -> NDArray[np.float64]:
        return np.sort(self.diagonal)[:count]


def embed_local(qubits: Sequence[int], local: NDArray[np.int64]) -> NDArray[np.int64]:
    """Scatter bit t of each local index onto register qubit ``qubits[t]``."""
    out = np.zeros_like(local)
    for t, q in enumerate(qubits):
        out |= ((local >> t) & 1) << q
    return out


def _base_values(constraint: ConstraintSpec, n_qubits: int) -> NDArray[np.float64]:
    if constraint.kind in ("parity-even", "parity-odd", "general"):
        return np.where(constraint.satisfied_mask(n_qubits), 0.0, 1.0)
    g = constraint.g_values(n_qubits).astype(np.float64)
    if constraint.kind == "lower-only":
        return -(g - constraint.lower)
    if constraint.kind == "upper-only":
        return g - constraint.upper
    return (g - constraint.lower) * (g - constraint.upper)


def _min_gap(values: NDArray[np.float64]) -> float:
    if values.size < 2:
        return math.inf
    return float(np.min(np.diff(np.sort(values))))


def build_hcs(
    constraint: ConstraintSpec,
    rng: np.random.Generator | None = None,
    *,
    n_qubits: int | None = None,
    epsilon: Sequence[float] | None = None,
    epsilon_range: float = EPSILON_RANGE,
    max_redraws: int = MAX_REDRAWS,
) -> CompressedHamiltonian:
    """Build the diagonal of the compressed-space Hamiltonian.

    The tilt sum eps_i sigma^z_i runs over the constraint variables. Drawn
    tilts are rescaled to keep max|eps| below 1/(2|V|) and redrawn while the
    spectrum restricted to the variables is degenerate. An explicit
    ``epsilon`` is used as given.
    """
    n = n_qubits if n_qubits is not None else max(constraint.variables) + 1
    size = len(constraint.variables)
    base = _base_values(constraint, n)
    feasible = constraint.satisfied_mask(n)
    spins = 2.0 * bit_columns(n)[list(constraint.variables)].astype(np.float64) - 1.0
    local = embed_local(constraint.variables, np.arange(1 << size, dtype=np.int64))

    def assemble_with(eps: NDArray[np.float64]) -> CompressedHamiltonian:
        full_eps = np.zeros(n, dtype=np.float64)
        full_eps[list(constraint.variables)] = eps
        diag = base + eps @ spins
        return CompressedHamiltonian(n, diag, full_eps, feasible, constraint.variables)

    if epsilon is not None:
        eps = np.asarray(epsilon, dtype=np.float64)
        if eps.shape == (n,):
            eps = eps[list(constraint.variables)]
        if eps.shape != (size,):
            raise ValueError(f"Expected {size} tilt values, got {eps.size}")
        return assemble_with(eps)

    if rng is None:
        raise ValueError("build_hcs needs a generator when epsilon is not given")

    limit = 1.0 / (2.0 * size)
    for attempt in range(max_redraws + 1):
        eps = rng.uniform(-epsilon_range, epsilon_range, size=size)
        peak = float(np.max(np.abs(eps)))
        if peak >= limit:
            eps *= 0.99 * limit / peak
        hcs = assemble_with(eps)
        if _min_gap(hcs.diagonal[local]) > DEGENERACY_GAP:
            return hcs
        logger.debug("Degenerate H_cs spectrum on attempt %d, redrawing tilt", attempt + 1)
    raise DegenerateSpectrumError(
        f"H_cs spectrum stayed degenerate after {max_redraws} redraws for {constraint.kind} constraint"
    )


@dataclass(frozen=True)
class HcsAudit:
    diagonal: bool
    small_tilt: bool
    nondegenerate: bool
    separated: bool
    e_feasible_max: float
    e_infeasible_min: float

    @property
    def passed(self) -> bool:
        return self.diagonal and self.small_tilt and self.nondegenerate and self.separated


def audit_hcs(hcs: CompressedHamiltonian) -> HcsAudit:
    """Check the diagonal / small-tilt / separation / non-degeneracy conditions.

    Checks run on the constraint variables' subspace (other qubits at 0).
    """
    local = hcs.local_indices()
    values = hcs.diagonal[local]
    feasible = hcs.feasible[local]
    size = len(hcs.variables)
    tilt = float(np.max(np.abs(hcs.epsilon), initial=0.0))
    e_f = float(np.max(values[feasible], initial=-math.inf))
    e_if = float(np.min(values[~feasible], initial=math.inf))
    return HcsAudit(
        diagonal=bool(np.all(np.isfinite(hcs.diagonal))),
        small_tilt=tilt < 1.0 / (2.0 * size),
        nondegenerate=_min_gap(values) > DEGENERACY_GAP,
        separated=e_f < e_if,
        e_feasible_max=e_f,
        e_infeasible_min=e_if,
    )
