"""Instance generation, benchmark ingestion and exhaustive oracles."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import networkx as nx
import numpy as np
from numpy.typing import NDArray

from cs_qaoa_lab.constraints import ConstraintSpec
from cs_qaoa_lab.encoders import encode
from cs_qaoa_lab.errors import InstanceFormatError, SizeCapError
from cs_qaoa_lab.problems import CopInstance, LinearCop, MaxKCut, Qap, Qkp, feasible_mask, instance_from_dict
from cs_qaoa_lab.qubo import Qubo

logger = logging.getLogger(__name__)

MAX_ORACLE_QUBITS = 24
EDGE_PROBABILITY = 0.5
FLOW_RANGE = (1, 5)
DISTANCE_RANGE = (1, 10)


def toy_problem() -> LinearCop:
    """Minimize 2 x_A + x_B subject to x_A + x_B = 1."""
    objective = Qubo.from_terms(2, [(0, 0, 2.0), (1, 1, 1.0)])
    return LinearCop(objective, (ConstraintSpec.one_hot((0, 1)),), "toy")


def gen_maxkcut(n_vertices: int, k: int, seed: int, edge_probability: float = EDGE_PROBABILITY) -> MaxKCut:
    if n_vertices < 2:
        raise ValueError(f"Max-k cut instances need at least 2 vertices, got {n_vertices}")
    graph = nx.gnp_random_graph(n_vertices, edge_probability, seed=seed)
    return MaxKCut(n_vertices, tuple((int(u), int(v)) for u, v in graph.edges()), k)


def _symmetric_integers(rng: np.random.Generator, n: int, low: int, high: int) -> NDArray[np.float64]:
    upper = np.triu(rng.integers(low, high + 1, size=(n, n)), 1)
    return (upper + upper.T).astype(np.float64)


def gen_qap(n_f: int, seed: int) -> Qap:
    """Symmetric flows in 1..5 and distances in 1..10 off the diagonal."""
    if n_f < 2:
        raise ValueError(f"QAP instances need n_f >= 2, got {n_f}")
    rng = np.random.default_rng(seed)
    return Qap(_symmetric_integers(rng, n_f, *FLOW_RANGE), _symmetric_integers(rng, n_f, *DISTANCE_RANGE))


@dataclass(frozen=True, eq=False)
class QkpBenchmark:
    label: str
    capacity: int
    weights: NDArray[np.int64]
    profits: NDArray[np.int64]

    @property
    def n(self) -> int:
        return self.weights.size


def _parse_ints(text: str, line: int, expected: int | None = None) -> list[int]:
    try:
        values = [int(tok) for tok in text.split()]
    except ValueError:
        raise InstanceFormatError(f"expected integers, got {text.strip()!r}", line=line) from None
    if expected is not None and len(values) != expected:
        raise InstanceFormatError(f"expected {expected} values, got {len(values)}", line=line)
    return values


def load_qkp(path: str | Path) -> QkpBenchmark:
    """Read the plain-text QKP format.

    Line 1: n. Line 2: capacity. Line 3: n weights. Then n rows of the
    upper-triangular profit matrix, row i holding p_ii ... p_in. Blank
    lines are ignored.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"QKP file not found: {path}")
    lines = [(number, text) for number, text in enumerate(path.read_text(encoding="utf-8").splitlines(), 1) if text.strip()]
    if len(lines) < 3:
        raise InstanceFormatError("file ends before the weight line", line=len(lines) + 1)

    n_line, n_text = lines[0]
    (n,) = _parse_ints(n_text, n_line, 1)
    if n < 1:
        raise InstanceFormatError(f"item count must be positive, got {n}", line=n_line)
    (capacity,) = _parse_ints(lines[1][1], lines[1][0], 1)
    if capacity <= 0:
        raise InstanceFormatError(f"capacity must be positive, got {capacity}", line=lines[1][0])
    weights = _parse_ints(lines[2][1], lines[2][0], n)
    if any(w <= 0 for w in weights):
        raise InstanceFormatError("weights must be positive", line=lines[2][0])

    rows = lines[3:]
    if len(rows) != n:
        last = rows[-1][0] + 1 if rows else lines[2][0] + 1
        raise InstanceFormatError(f"expected {n} profit rows, found {len(rows)}", line=last)
    profits = np.zeros((n, n), dtype=np.int64)
    for i, (number, text) in enumerate(rows):
        profits[i, i:] = _parse_ints(text, number, n - i)
    return QkpBenchmark(path.stem, capacity, np.asarray(weights, dtype=np.int64), profits)


def write_qkp(benchmark: QkpBenchmark, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [str(benchmark.n), str(benchmark.capacity), " ".join(str(w) for w in benchmark.weights)]
    for i in range(benchmark.n):
        lines.append(" ".join(str(p) for p in benchmark.profits[i, i:]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def derive_qkp(benchmark: QkpBenchmark, n_items: int) -> Qkp:
    """First ``n_items`` items with capacity floor(n_items * C / n)."""
    if not 1 <= n_items <= benchmark.n:
        raise ValueError(f"n_items must lie in 1..{benchmark.n}, got {n_items}")
    capacity = (n_items * benchmark.capacity) // benchmark.n
    if capacity <= 0:
        raise ValueError(f"Derived capacity {capacity} is not positive")
    return Qkp(
        benchmark.profits[:n_items, :n_items].astype(np.float64),
        benchmark.weights[:n_items].astype(np.float64),
        float(capacity),
        f"{benchmark.label}[:{n_items}]",
    )


def gen_qkp_benchmark(n: int, seed: int, density: float = 0.5, label: str | None = None) -> QkpBenchmark:
    """Profits nonzero with probability ``density`` in 1..100, weights 1..50,
    capacity uniform in [50, sum w]."""
    if n < 1:
        raise ValueError(f"Benchmark needs at least one item, got {n}")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    present = rng.random((n, n)) < density
    profits = np.triu(np.where(present, rng.integers(1, 101, size=(n, n)), 0))
    weights = rng.integers(1, 51, size=n)
    total = int(weights.sum())
    capacity = int(rng.integers(min(50, total), total + 1))
    return QkpBenchmark(label or f"n_{n}_{seed}", capacity, weights, profits)


@dataclass(frozen=True)
class OracleReport:
    optima: tuple[int, ...]
    value: float
    n_feasible: int
    n_qubits: int

    @property
    def p_f(self) -> float:
        return self.n_feasible / (1 << self.n_qubits)

    def to_dict(self) -> dict[str, Any]:
        return {
            "optima": list(self.optima),
            "value": self.value,
            "n_feasible": self.n_feasible,
            "n_qubits": self.n_qubits,
            "p_f": self.p_f,
        }


def _check_size(instance: CopInstance) -> None:
    if instance.n_qubits > MAX_ORACLE_QUBITS:
        raise SizeCapError(
            f"Exhaustive search over {instance.n_qubits} qubits exceeds the {MAX_ORACLE_QUBITS}-qubit cap"
        )


def enumerate_feasible(instance: CopInstance) -> tuple[int, ...]:
    _check_size(instance)
    return tuple(int(i) for i in np.flatnonzero(feasible_mask(instance)))


def _is_integral(values: NDArray[np.float64]) -> bool:
    return bool(np.all(values == np.round(values)))


def brute_force(instance: CopInstance) -> OracleReport:
    """Minimum objective over the feasible set and every state attaining it."""
    _check_size(instance)
    mask = feasible_mask(instance)
    n_feasible = int(mask.sum())
    if n_feasible == 0:
        return OracleReport((), math.inf, 0, instance.n_qubits)
    values = encode(instance)[0].values()
    feasible_values = values[mask]
    best = float(feasible_values.min())
    tol = 0.0 if _is_integral(feasible_values) else 1e-9
    optima = np.flatnonzero(mask & (values <= best + tol))
    return OracleReport(tuple(int(i) for i in optima), best, n_feasible, instance.n_qubits)


def accept_instance(report: OracleReport, low: float = 0.1, high: float = 0.5) -> bool:
    return low <= report.p_f <= high


def save_instance(instance: CopInstance, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(instance.to_dict(), f, indent=2)
        f.write("\n")


def load_instance(path: str | Path, k: int = 3) -> CopInstance:
    """JSON instance; bare graphs ({vertices, edges}) and QAP matrices ({f, d}) are accepted."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Instance file not found: {path}")
    if path.suffix.lower() in (".txt", ".qkp"):
        benchmark = load_qkp(path)
        return derive_qkp(benchmark, benchmark.n)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(data, dict):
        raise InstanceFormatError("top level must be an object", line=1)
    if "kind" not in data:
        if "edges" in data:
            data = {"kind": "maxkcut", "k": k, **data}
        elif "f" in data and "d" in data:
            data = {"kind": "qap", **data}
    try:
        return instance_from_dict(data)
    except (KeyError, TypeError) as e:
        raise InstanceFormatError(f"missing or malformed field: {e}") from e
