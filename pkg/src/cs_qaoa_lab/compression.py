"""Compression unitaries and their evaluation.

A Compressor U_cs is an ordered list of stages acting on an ``n_qubits``
register plus the qubits it discards. Feasible basis states are mapped into
the sector where every discarded qubit is 0; the ``kept`` qubits carry the
compressed value, ``kept[0]`` being its least significant bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from cs_qaoa_lab.constraints import CompressedHamiltonian, ConstraintSpec, embed_local
from cs_qaoa_lab.errors import TrainingThresholdError
from cs_qaoa_lab.gates import CNOT, CSWAP, Circuit, GateOp, Hadamard, PauliX, track_indices
from cs_qaoa_lab.simulator import Statevector, apply_matrix, sample_basis, zero_sector_mask

logger = logging.getLogger(__name__)

_CHUNK = 64


def _local_indices(qubits: Sequence[int], indices: NDArray[np.int64]) -> NDArray[np.int64]:
    local = np.zeros_like(indices)
    for t, q in enumerate(qubits):
        local |= ((indices >> q) & 1) << t
    return local


@dataclass(frozen=True, eq=False)
class BasisPermutation:
    """Permutation of the local basis of ``qubits``: local x -> perm[x]."""

    qubits: tuple[int, ...]
    perm: NDArray[np.int64]
    _maps: dict[int, NDArray[np.int64]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        perm = np.asarray(self.perm, dtype=np.int64)
        size = 1 << len(self.qubits)
        if perm.shape != (size,):
            raise ValueError(f"Permutation over {len(self.qubits)} qubits needs {size} entries, got {perm.size}")
        seen = np.zeros(size, dtype=bool)
        seen[perm[(perm >= 0) & (perm < size)]] = True
        if not seen.all() or np.any((perm < 0) | (perm >= size)):
            raise ValueError("Basis permutation is not a bijection")
        object.__setattr__(self, "perm", perm)

    @property
    def is_classical(self) -> bool:
        return True

    def full_map(self, n_register: int) -> NDArray[np.int64]:
        if n_register not in self._maps:
            idx = np.arange(1 << n_register, dtype=np.int64)
            mask = sum(1 << q for q in self.qubits)
            image = self.perm[_local_indices(self.qubits, idx)]
            self._maps[n_register] = (idx & ~mask) | embed_local(self.qubits, image)
        return self._maps[n_register]

    def apply(self, amplitudes: NDArray[np.complex128], n_register: int) -> NDArray[np.complex128]:
        out = np.empty_like(amplitudes)
        out[self.full_map(n_register)] = amplitudes
        return out

    def apply_dagger(self, amplitudes: NDArray[np.complex128], n_register: int) -> NDArray[np.complex128]:
        return amplitudes[self.full_map(n_register)]


@dataclass(frozen=True, eq=False)
class GateForm:
    """Explicit circuit for U (not U dagger)."""

    circuit: Circuit

    @property
    def is_classical(self) -> bool:
        return self.circuit.is_classical()

    def full_map(self, n_register: int) -> NDArray[np.int64]:
        return track_indices(self.circuit.gates, np.arange(1 << n_register, dtype=np.int64))

    def apply(self, amplitudes: NDArray[np.complex128], n_register: int) -> NDArray[np.complex128]:
        for gate in self.circuit.gates:
            amplitudes = apply_matrix(amplitudes, n_register, gate.qubits, gate.matrix())
        return amplitudes

    def apply_dagger(self, amplitudes: NDArray[np.complex128], n_register: int) -> NDArray[np.complex128]:
        for gate in reversed(self.circuit.gates):
            amplitudes = apply_matrix(amplitudes, n_register, gate.qubits, gate.dagger().matrix())
        return amplitudes


Stage = Union[BasisPermutation, GateForm]


@dataclass(frozen=True, eq=False)
class Compressor:
    n_qubits: int
    discard: tuple[int, ...]
    kept: tuple[int, ...] = ()
    stages: tuple[Stage, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        discard = tuple(self.discard)
        kept = tuple(self.kept) or tuple(q for q in range(self.n_qubits) if q not in discard)
        if sorted(discard + kept) != list(range(self.n_qubits)):
            raise ValueError(
                f"Discarded {discard} and kept {kept} qubits must partition a {self.n_qubits}-qubit register"
            )
        object.__setattr__(self, "discard", discard)
        object.__setattr__(self, "kept", kept)
        object.__setattr__(self, "stages", tuple(self.stages))

    @property
    def m(self) -> int:
        return len(self.kept)

    def is_permutation(self) -> bool:
        return all(stage.is_classical for stage in self.stages)

    def has_gate_form(self) -> bool:
        return all(isinstance(stage, GateForm) for stage in self.stages)

    def touched_qubits(self) -> set[int]:
        """Qubits some stage acts on."""
        qubits: set[int] = set()
        for stage in self.stages:
            if isinstance(stage, BasisPermutation):
                qubits.update(stage.qubits)
            else:
                for gate in stage.circuit.gates:
                    qubits.update(gate.qubits)
        return qubits

    def embed(self, values: NDArray[np.int64] | Sequence[int]) -> NDArray[np.int64]:
        """Basis index of |0...0>|q> for each compressed value q."""
        return embed_local(self.kept, np.asarray(values, dtype=np.int64))

    def apply(self, amplitudes: NDArray[np.complex128], n_register: int | None = None) -> NDArray[np.complex128]:
        """U_cs on an amplitude array of a register at least ``n_qubits`` wide."""
        n = self._register(n_register)
        for stage in self.stages:
            amplitudes = stage.apply(amplitudes, n)
        return amplitudes

    def apply_dagger(self, amplitudes: NDArray[np.complex128], n_register: int | None = None) -> NDArray[np.complex128]:
        n = self._register(n_register)
        for stage in reversed(self.stages):
            amplitudes = stage.apply_dagger(amplitudes, n)
        return amplitudes

    def _register(self, n_register: int | None) -> int:
        n = self.n_qubits if n_register is None else n_register
        if n < self.n_qubits:
            raise ValueError(f"Register of {n} qubits is narrower than the {self.n_qubits}-qubit compressor")
        return n

    def permutation(self) -> NDArray[np.int64]:
        """perm[x] is the basis index U_cs maps |x> to."""
        if not self.is_permutation():
            raise ValueError(f"Compressor {self.name or '<unnamed>'} is not a basis permutation")
        perm = np.arange(1 << self.n_qubits, dtype=np.int64)
        for stage in self.stages:
            perm = stage.full_map(self.n_qubits)[perm]
        return perm

    def label(self) -> NDArray[np.int64]:
        """Original basis index for every compressed basis state."""
        inverse = np.argsort(self.permutation())
        return inverse[self.embed(np.arange(1 << self.m))]

    def circuit(self) -> Circuit:
        if not self.has_gate_form():
            raise ValueError(
                f"Compressor {self.name or '<unnamed>'} has permutation stages and no gate form; "
                "noisy runs need an explicit circuit"
            )
        gates: tuple[GateOp, ...] = ()
        for stage in self.stages:
            gates += stage.circuit.gates  # type: ignore[union-attr]
        return Circuit(gates)

    def matrix(self) -> NDArray[np.complex128]:
        return self.apply(np.eye(1 << self.n_qubits, dtype=np.complex128))

    def then(self, other: Compressor) -> Compressor:
        """U_other U_self; ``other`` may only discard qubits this one keeps."""
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"Cannot compose {self.n_qubits}- and {other.n_qubits}-qubit compressors")
        clash = set(other.discard) & set(self.discard)
        if clash:
            raise ValueError(f"Qubits {sorted(clash)} are already discarded")
        discard = self.discard + other.discard
        kept = tuple(q for q in other.kept if q not in self.discard)
        name = "*".join(n for n in (other.name, self.name) if n)
        return Compressor(self.n_qubits, discard, kept, self.stages + other.stages, name)


def identity(n_qubits: int) -> Compressor:
    return Compressor(n_qubits, (), tuple(range(n_qubits)), (), "identity")


def _register_width(variables: Sequence[int], n_qubits: int | None) -> int:
    n = max(variables) + 1 if n_qubits is None else n_qubits
    if max(variables) >= n:
        raise ValueError(f"Qubit {max(variables)} outside {n}-qubit register")
    return n


def onehot_width(size: int) -> int:
    return max(1, math.ceil(math.log2(size)))


def onehot_permutation(size: int) -> NDArray[np.int64]:
    """One-hot e_j -> binary(j - 1) on the top m local bits, lexicographic completion."""
    m = onehot_width(size)
    shift = size - m
    perm = np.full(1 << size, -1, dtype=np.int64)
    used = np.zeros(1 << size, dtype=bool)
    for j in range(size):
        perm[1 << j] = j << shift
        used[j << shift] = True
    free_targets = iter(np.flatnonzero(~used))
    for source in range(1 << size):
        if perm[source] < 0:
            perm[source] = next(free_targets)
    return perm


def onehot_gate_form(variables: Sequence[int]) -> list[GateOp]:
    """CNOT networks for |V| in {2, 3, 4}."""
    v = tuple(variables)
    if len(v) == 2:
        return [CNOT(v[1], v[0]), PauliX(v[0])]
    if len(v) == 3:
        return [CNOT(v[1], v[0]), CNOT(v[2], v[0]), PauliX(v[0])]
    if len(v) == 4:
        return [
            CNOT(v[3], v[1]),
            CNOT(v[2], v[3]),
            CSWAP(v[3], v[0], v[2]),
            CNOT(v[1], v[0]),
            PauliX(v[0]),
            CNOT(v[1], v[2]),
            CNOT(v[2], v[1]),
            CNOT(v[1], v[2]),
        ]
    raise ValueError(f"No one-hot gate form for a group of {len(v)} qubits; use the permutation form")


def build_onehot_binary(
    variables: Sequence[int],
    n_qubits: int | None = None,
    form: str = "permutation",
) -> Compressor:
    v = tuple(variables)
    if len(v) < 2:
        raise ValueError(f"One-hot compression needs at least 2 qubits, got {len(v)}")
    n = _register_width(v, n_qubits)
    m = onehot_width(len(v))
    discard, kept = v[: len(v) - m], v[len(v) - m :]
    kept_all = kept + tuple(q for q in range(n) if q not in v)
    if form == "permutation":
        stage: Stage = BasisPermutation(v, onehot_permutation(len(v)))
    elif form == "gate":
        stage = GateForm(Circuit(tuple(onehot_gate_form(v))))
    else:
        raise ValueError(f"Unknown compressor form '{form}'. Use 'permutation' or 'gate'")
    return Compressor(n, discard, kept_all, (stage,), f"onehot{len(v)}")


def build_parity(variables: Sequence[int], even: bool, n_qubits: int | None = None) -> Compressor:
    """CNOTs from every other qubit into the first; odd parity adds X on it."""
    v = tuple(variables)
    if not v:
        raise ValueError("Parity compression needs at least 1 qubit")
    n = _register_width(v, n_qubits)
    gates: list[GateOp] = [CNOT(q, v[0]) for q in v[1:]]
    if not even:
        gates.append(PauliX(v[0]))
    kept = v[1:] + tuple(q for q in range(n) if q not in v)
    name = "parity-even" if even else "parity-odd"
    return Compressor(n, (v[0],), kept, (GateForm(Circuit(tuple(gates))),), name)


def qap_bit_parities(n_f: int) -> list[bool]:
    """Even flag per bit position of binary(0), ..., binary(n_f - 1)."""
    width = onehot_width(n_f)
    return [sum((j >> t) & 1 for j in range(n_f)) % 2 == 0 for t in range(width)]


def build_qap_compressor(n_f: int, encoding: str = "binary-parity", form: str = "permutation") -> Compressor:
    """Per-location one-hot compressors, optionally followed by per-bit parity ones.

    Variable x_{i,a} is qubit i * n_f + a. In the binary stage, location a's
    facility index is written to the last ceil(log2 n_f) facility rows.
    """
    if n_f < 2:
        raise ValueError(f"QAP compression needs n_f >= 2, got {n_f}")
    if encoding not in ("binary", "binary-parity"):
        raise ValueError(f"Unknown QAP encoding '{encoding}'. Use 'binary' or 'binary-parity'")
    n = n_f * n_f
    width = onehot_width(n_f)
    compressor = identity(n)
    for a in range(n_f):
        group = [i * n_f + a for i in range(n_f)]
        compressor = compressor.then(build_onehot_binary(group, n, form))
    if encoding == "binary-parity":
        for t, even in enumerate(qap_bit_parities(n_f)):
            row = n_f - width + t
            compressor = compressor.then(build_parity([row * n_f + a for a in range(n_f)], even, n))
    return Compressor(compressor.n_qubits, compressor.discard, compressor.kept, compressor.stages, f"qap-{encoding}")


def _check_widths(compressor: Compressor, hcs: CompressedHamiltonian) -> None:
    if compressor.n_qubits != hcs.n_qubits:
        raise ValueError(f"Compressor acts on {compressor.n_qubits} qubits but H_cs on {hcs.n_qubits}")


def _compressed_columns(compressor: Compressor) -> Iterable[NDArray[np.complex128]]:
    """U_cs dagger |0 q> for chunks of compressed values q, as (2^N, chunk) arrays."""
    dim = 1 << compressor.n_qubits
    embedded = compressor.embed(np.arange(1 << compressor.m))
    for start in range(0, embedded.size, _CHUNK):
        part = embedded[start : start + _CHUNK]
        amps = np.zeros((dim, part.size), dtype=np.complex128)
        amps[part, np.arange(part.size)] = 1.0
        yield compressor.apply_dagger(amps)


def e_direct(compressor: Compressor, hcs: CompressedHamiltonian) -> float:
    """2^-m sum_q <0q| U H U^dagger |0q>."""
    _check_widths(compressor, hcs)
    if compressor.is_permutation():
        return float(np.mean(hcs.diagonal[compressor.label()]))
    total = 0.0
    for columns in _compressed_columns(compressor):
        total += float(np.sum(hcs.diagonal @ (np.abs(columns) ** 2)))
    return total / (1 << compressor.m)


def entangled_circuit(compressor: Compressor) -> Circuit:
    """Hadamards on m ancillas (qubits N..N+m-1) fanned out to the kept qubits."""
    n = compressor.n_qubits
    gates: list[GateOp] = []
    for t, q in enumerate(compressor.kept):
        gates.append(Hadamard(n + t))
        gates.append(CNOT(n + t, q))
    return Circuit(tuple(gates))


def e_entangled(
    compressor: Compressor,
    hcs: CompressedHamiltonian,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """sum_sigma <sigma|H|sigma> P(sigma; U) from the N + m register.

    ``shots=None`` uses the exact marginal; otherwise samples ``shots``
    outcomes with ``rng``.
    """
    _check_widths(compressor, hcs)
    n, m = compressor.n_qubits, compressor.m
    width = n + m
    amps = np.zeros(1 << width, dtype=np.complex128)
    amps[0] = 1.0
    for gate in entangled_circuit(compressor).gates:
        amps = apply_matrix(amps, width, gate.qubits, gate.matrix())
    amps = compressor.apply_dagger(amps, width)
    probs = np.abs(amps) ** 2
    marginal = probs.reshape(1 << m, 1 << n).sum(axis=0)
    if shots is None:
        return float(hcs.diagonal @ marginal)
    if rng is None:
        raise ValueError("Sampling mode needs a generator")
    outcomes = rng.choice(marginal.size, size=shots, p=marginal / marginal.sum())
    return float(np.mean(hcs.diagonal[outcomes]))


def _as_indices(feasible: NDArray[np.bool_] | Iterable[int], n_qubits: int) -> NDArray[np.int64]:
    arr = np.asarray(sorted(feasible) if isinstance(feasible, (set, frozenset)) else list(feasible))
    if arr.dtype == bool:
        if arr.shape != (1 << n_qubits,):
            raise ValueError(f"Feasibility mask needs {1 << n_qubits} entries, got {arr.size}")
        return np.flatnonzero(arr)
    return arr.astype(np.int64)


def survival_rate(compressor: Compressor, feasible: NDArray[np.bool_] | Iterable[int]) -> float:
    """Mean mass of U|x> in the all-discarded-zero sector over feasible x."""
    indices = _as_indices(feasible, compressor.n_qubits)
    if indices.size == 0:
        raise ValueError("survival_rate needs at least one feasible state")
    sector = zero_sector_mask(compressor.n_qubits, compressor.discard)
    if compressor.is_permutation():
        return float(np.mean(sector[compressor.permutation()[indices]]))
    dim = 1 << compressor.n_qubits
    total = 0.0
    for start in range(0, indices.size, _CHUNK):
        part = indices[start : start + _CHUNK]
        amps = np.zeros((dim, part.size), dtype=np.complex128)
        amps[part, np.arange(part.size)] = 1.0
        out = compressor.apply(amps)
        total += float(np.sum(np.abs(out[sector]) ** 2))
    return total / indices.size


def compressed_feasible_mass(compressor: Compressor, feasible_mask: NDArray[np.bool_]) -> NDArray[np.float64]:
    """Feasible probability of U^dagger |0q> for every compressed value q."""
    if compressor.is_permutation():
        return feasible_mask[compressor.label()].astype(np.float64)
    masses = [feasible_mask @ (np.abs(columns) ** 2) for columns in _compressed_columns(compressor)]
    return np.concatenate(masses)


def fs_ratio_compressed(compressor: Compressor, feasible_mask: NDArray[np.bool_]) -> float:
    return float(np.mean(compressed_feasible_mass(compressor, feasible_mask)))


def width_for_count(count: float, m: int) -> int:
    count = max(int(round(count)), 1)
    return min(max(math.ceil(math.log2(count)), 1), m)


def estimate_compressed_width(
    compressor: Compressor,
    constraint: ConstraintSpec,
    n_samples: int,
    rng: np.random.Generator,
) -> int:
    """Measure U^dagger |0>|q> for uniformly drawn compressed values q.

    The fraction of measured bitstrings satisfying ``constraint`` estimates
    the feasible share of the compressed register.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    n = compressor.n_qubits
    satisfied = constraint.satisfied_mask(n)
    values, counts = np.unique(rng.integers(0, 1 << compressor.m, size=n_samples), return_counts=True)
    hits = 0
    for q, shots in zip(values, counts):
        amplitudes = np.zeros(1 << n, dtype=np.complex128)
        amplitudes[compressor.embed([q])[0]] = 1.0
        state = Statevector(n, compressor.apply_dagger(amplitudes))
        hits += int(np.count_nonzero(satisfied[sample_basis(state, rng, shots=int(shots))]))
    fraction = hits / n_samples
    m = width_for_count(fraction * (1 << compressor.m), compressor.m)
    logger.debug("Estimated feasible fraction %.4f -> m=%d", fraction, m)
    return m


def exact_compressed_width(compressor: Compressor, constraint: ConstraintSpec) -> int:
    mass = compressed_feasible_mass(compressor, constraint.satisfied_mask(compressor.n_qubits))
    return width_for_count(float(np.sum(mass)), compressor.m)


StageBuilder = Callable[[ConstraintSpec, Compressor, np.random.Generator], Compressor]


def deterministic_stage(spec: ConstraintSpec, current: Compressor, strategy: str) -> Compressor:
    """One-hot or parity stage acting on the compressed coordinates ``spec`` names."""
    lost = [q for q in spec.variables if q not in current.kept]
    if lost:
        raise ValueError(f"Qubits {lost} are already discarded; this constraint needs a trained stage")
    n = current.n_qubits
    if strategy in ("onehot", "onehot-gate"):
        if spec.kind != "one-hot":
            raise ValueError(f"Strategy '{strategy}' needs a one-hot constraint, got {spec.kind}")
        return build_onehot_binary(spec.variables, n, "gate" if strategy == "onehot-gate" else "permutation")
    if strategy == "parity":
        if spec.kind not in ("parity-even", "parity-odd"):
            raise ValueError(f"Strategy 'parity' needs a parity constraint, got {spec.kind}")
        return build_parity(spec.variables, spec.kind == "parity-even", n)
    raise ValueError(f"Unknown compression strategy '{strategy}'")


def compose_constraints(
    constraints: Sequence[ConstraintSpec],
    strategies: Sequence[str | StageBuilder],
    n_qubits: int | None = None,
    rng: np.random.Generator | None = None,
) -> Compressor:
    """Fold per-constraint stages into one compressor, U^(k+1) = U' U^(k).

    String strategies build deterministic stages; callables receive the
    constraint, the frozen compressor so far and ``rng`` and return the
    stage to append.
    """
    if not constraints:
        raise ValueError("compose_constraints needs at least one constraint")
    if len(strategies) != len(constraints):
        raise ValueError(f"Got {len(strategies)} strategies for {len(constraints)} constraints")
    n = n_qubits if n_qubits is not None else max(max(c.variables) for c in constraints) + 1
    current = identity(n)
    for k, (spec, strategy) in enumerate(zip(constraints, strategies)):
        if isinstance(strategy, str):
            stage = deterministic_stage(spec, current, strategy)
        else:
            if rng is None:
                raise ValueError("Trained stages need a generator")
            try:
                stage = strategy(spec, current, rng)
            except TrainingThresholdError as exc:
                raise TrainingThresholdError(f"stage {k}: {exc}", stage=k, p_sur=exc.p_sur) from exc
        current = current.then(stage)
        logger.debug("Stage %d (%s) -> m=%d", k, spec.kind, current.m)
    return current
